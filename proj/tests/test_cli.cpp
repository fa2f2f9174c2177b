#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2g/geometry.hpp"
#include "c2g/hand.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
  const char* b = std::getenv("C2G_BIN");
  REQUIRE(b != nullptr);
  return b;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// FNV-1a over every file (sorted relative path + contents).
std::uint64_t hash_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  };
  for (const auto& f : files) {
    mix(fs::relative(f, dir).string());
    mix(slurp(f));
  }
  return h;
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / "c2g_cli_test";
    fs::remove_all(root);
    fs::create_directories(root);
  }
  std::string p(const std::string& rel) const { return (root / rel).string(); }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

const std::string kSynth =
    " --seed 11 --objects 5 --grasps-per-object 1 --cloud-points 96";

void ensure_dataset() {
  if (!fs::exists(ws().p("ds")))
    REQUIRE(run("synth-data --out " + ws().p("ds") + kSynth) == 0);
}

void ensure_checkpoints() {
  ensure_dataset();
  if (!fs::exists(ws().p("cvae.ckpt")))
    REQUIRE(run("train-contact --data " + ws().p("ds") + " --out " +
                ws().p("cvae.ckpt") + " --toy --epochs 2 --seed 7") == 0);
  if (!fs::exists(ws().p("grasp.ckpt")))
    REQUIRE(run("train-grasp --data " + ws().p("ds") + " --out " +
                ws().p("grasp.ckpt") + " --cvae " + ws().p("cvae.ckpt") +
                " --toy --epochs 1 --seed 7") == 0);
}

void ensure_generated() {
  ensure_checkpoints();
  if (!fs::exists(ws().p("gen")))
    REQUIRE(run("generate --data " + ws().p("ds") + " --cvae " +
                ws().p("cvae.ckpt") + " --grasp " + ws().p("grasp.ckpt") +
                " --out " + ws().p("gen") + " --seed 13 --seeds 2") == 0);
}

}  // namespace

TEST_CASE("config prints the pinned constants as JSON") {
  const std::string cmd = bin() + " config > " + ws().p("config.json");
  REQUIRE(std::system(cmd.c_str()) == 0);
  const auto j = json::parse(slurp(ws().p("config.json")));
  CHECK(j["train"]["batch_size"] == 32);
  CHECK(j["refine"]["steps"] == 200);
}

TEST_CASE("synth-data writes a dataset and is byte-identical under a seed") {
  ensure_dataset();
  CHECK(fs::exists(ws().p("ds") + "/split.json"));
  REQUIRE(run("synth-data --out " + ws().p("ds2") + kSynth) == 0);
  CHECK(hash_dir(ws().p("ds")) == hash_dir(ws().p("ds2")));
  fs::remove_all(ws().p("ds2"));
}

TEST_CASE("synth-data with an unwritable path fails without partial output") {
  CHECK(run("synth-data --out /proc/nope/ds" + kSynth) != 0);
  CHECK(!fs::exists("/proc/nope"));
}

TEST_CASE("unknown config keys are rejected; flags override config values") {
  ensure_dataset();
  {
    std::ofstream f(ws().p("bad.json"));
    f << R"({"bogus_key": 1})";
  }
  CHECK(run("synth-data --config " + ws().p("bad.json") + " --out " +
            ws().p("ds3") + kSynth) != 0);
  {
    std::ofstream f(ws().p("ok.json"));
    f << R"({"seed": 999, "objects": 5, "grasps-per-object": 1,)"
      << R"( "cloud-points": 96})";
  }
  // --seed beats the config's 999 -> identical to the plain seed-11 dataset.
  REQUIRE(run("synth-data --config " + ws().p("ok.json") + " --out " +
              ws().p("ds3") + " --seed 11") == 0);
  CHECK(hash_dir(ws().p("ds")) == hash_dir(ws().p("ds3")));
  fs::remove_all(ws().p("ds3"));
}

TEST_CASE("training writes checkpoint, loss curve, and config echo") {
  ensure_checkpoints();
  CHECK(fs::exists(ws().p("cvae.ckpt")));
  const auto csv = slurp(ws().p("cvae.ckpt.loss.csv"));
  CHECK(csv.starts_with("epoch,loss,bce,dice,kl\n"));
  CHECK(csv.find("\n0,") != std::string::npos);
  CHECK(csv.find("\n1,") != std::string::npos);
  const auto run_j = json::parse(slurp(ws().p("cvae.ckpt.run.json")));
  CHECK(run_j["command"] == "train-contact");
  CHECK(run_j["epochs_trained"] == 2);
  CHECK(run_j["seed"] == 7);
  CHECK(run_j["toy"] == true);
}

TEST_CASE("resume continues epoch numbering") {
  ensure_checkpoints();
  REQUIRE(run("train-contact --data " + ws().p("ds") + " --resume " +
              ws().p("cvae.ckpt") + " --out " + ws().p("cvae2.ckpt") +
              " --epochs 1 --seed 7") == 0);
  const auto csv = slurp(ws().p("cvae2.ckpt.loss.csv"));
  CHECK(csv.find("\n2,") != std::string::npos);  // epochs 0,1 then resumed 2
  const auto run_j = json::parse(slurp(ws().p("cvae2.ckpt.run.json")));
  CHECK(run_j["epochs_trained"] == 3);
}

TEST_CASE("missing dataset fails cleanly") {
  CHECK(run("train-contact --data " + ws().p("nowhere") + " --out " +
            ws().p("x.ckpt") + " --toy --epochs 1") != 0);
}

TEST_CASE("wrong checkpoint type is rejected via the manifest") {
  ensure_checkpoints();
  CHECK(run("generate --data " + ws().p("ds") + " --cvae " +
            ws().p("grasp.ckpt") + " --grasp " + ws().p("grasp.ckpt") +
            " --out " + ws().p("genx") + " --seeds 1") != 0);
}

TEST_CASE("generate emits k map/pose pairs per test sample, deterministically") {
  ensure_generated();
  int maps = 0, poses = 0;
  for (const auto& e : fs::directory_iterator(ws().p("gen"))) {
    maps += e.path().extension() == ".c2gpc";
    poses += e.path().extension() == ".json";
  }
  CHECK(maps == poses);
  CHECK(maps >= 2);
  CHECK(maps % 2 == 0);  // --seeds 2
  REQUIRE(run("generate --data " + ws().p("ds") + " --cvae " +
              ws().p("cvae.ckpt") + " --grasp " + ws().p("grasp.ckpt") +
              " --out " + ws().p("gen2") + " --seed 13 --seeds 2") == 0);
  CHECK(hash_dir(ws().p("gen")) == hash_dir(ws().p("gen2")));
  fs::remove_all(ws().p("gen2"));
}

TEST_CASE("refine mode=none copies poses; partial refines deterministically") {
  ensure_generated();
  REQUIRE(run("refine --data " + ws().p("ds") + " --in " + ws().p("gen") +
              " --out " + ws().p("refnone") + " --mode none") == 0);
  for (const auto& e : fs::directory_iterator(ws().p("refnone"))) {
    const auto j = json::parse(slurp(e.path()));
    CHECK(j["initial_pose"] == j["final_pose"]);
    CHECK(j["steps"] == 0);
    const auto stem =
        e.path().filename().string().substr(0, e.path().filename().string().find(".refined"));
    const auto src = json::parse(slurp(fs::path(ws().p("gen")) / (stem + ".json")));
    CHECK(j["final_pose"] == src["theta"]);
  }
  REQUIRE(run("refine --data " + ws().p("ds") + " --in " + ws().p("gen") +
              " --out " + ws().p("ref") + " --mode partial") == 0);
  REQUIRE(run("refine --data " + ws().p("ds") + " --in " + ws().p("gen") +
              " --out " + ws().p("ref2") + " --mode partial") == 0);
  CHECK(hash_dir(ws().p("ref")) == hash_dir(ws().p("ref2")));
  fs::remove_all(ws().p("ref2"));
}

TEST_CASE("eval writes metrics.csv and the summary table") {
  ensure_generated();
  REQUIRE(run("refine --data " + ws().p("ds") + " --in " + ws().p("gen") +
              " --out " + ws().p("ref") + " --mode partial") == 0);
  REQUIRE(run("eval --data " + ws().p("ds") + " --poses " + ws().p("ref") +
              " --out " + ws().p("ev")) == 0);
  const auto csv = slurp(ws().p("ev") + "/metrics.csv");
  CHECK(csv.starts_with("sample_id,dep_max,dep_mean,vol,sim_disp,contact,success\n"));
  const auto j = json::parse(slurp(ws().p("ev") + "/summary.json"));
  for (const char* key : {"Dep", "Vol", "Mean", "Var", "CR", "Div", "Sim-SR"})
    CHECK(j.contains(key));
  REQUIRE(run("eval --data " + ws().p("ds") + " --gt --out " + ws().p("evgt")) == 0);
  const auto g = json::parse(slurp(ws().p("evgt") + "/summary.json"));
  CHECK(g["CR"] == 100.0);
}

TEST_CASE("export writes OBJ pairs and a PLY whose scores round trip") {
  ensure_generated();
  REQUIRE(run("export --data " + ws().p("ds") + " --poses " + ws().p("gen") +
              " --out " + ws().p("exp")) == 0);
  bool checked = false;
  for (const auto& e : fs::directory_iterator(ws().p("exp"))) {
    if (e.path().extension() != ".ply") continue;
    const auto stem = e.path().filename().string();
    const auto base = stem.substr(0, stem.find("_contact.ply"));
    CHECK(fs::exists(fs::path(ws().p("exp")) / (base + "_hand.obj")));
    CHECK(fs::exists(fs::path(ws().p("exp")) / (base + "_object.obj")));
    const auto [pts, scores] = c2g::geometry::read_ply_points(e.path().string());
    const auto cloud = c2g::geometry::read_cloud(
        (fs::path(ws().p("gen")) / (base + ".c2gpc")).string());
    REQUIRE(pts.size() == cloud.points.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      CHECK(std::abs(scores[i] - (*cloud.contact)[i]) < 1e-6);
    checked = true;
  }
  CHECK(checked);

  // empty selection: a directory with no pose artifacts exports nothing
  fs::create_directories(ws().p("empty"));
  REQUIRE(run("export --data " + ws().p("ds") + " --poses " + ws().p("empty") +
              " --out " + ws().p("exp_empty")) == 0);
  CHECK(fs::is_empty(ws().p("exp_empty")));
}

TEST_CASE("bad C2G_THREADS is rejected") {
  const std::string cmd =
      "C2G_THREADS=abc " + bin() + " config > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) != 0);
  const std::string ok = "C2G_THREADS=2 " + bin() + " config > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(ok.c_str())) == 0);
}
