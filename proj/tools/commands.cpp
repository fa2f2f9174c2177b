#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "c2g/config.hpp"
#include "c2g/data.hpp"
#include "c2g/metrics.hpp"
#include "c2g/nets.hpp"
#include "c2g/refine.hpp"
#include "commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace c2g;

namespace {

// Worker cap from C2G_THREADS; the pipeline is single-threaded today, so
// this only validates the setting and bounds future parallel loops.
int worker_count() {
  const char* env = std::getenv("C2G_THREADS");
  if (!env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw std::runtime_error("bad C2G_THREADS value");
  return int(v);
}

// --config JSON: every key must map to a registered option; command-line
// flags win over config values.
struct ConfigBinder {
  CLI::App* cmd = nullptr;
  std::map<std::string, std::function<void(const json&)>> setters;

  template <class T>
  void bind(const std::string& key, T* target) {
    setters[key] = [target](const json& v) { *target = v.get<T>(); };
  }
  void apply(const std::string& path) const {
    if (path.empty()) return;
    std::ifstream f(path);
    if (!f.good()) throw std::runtime_error("cannot read config " + path);
    json j;
    f >> j;
    for (const auto& [key, value] : j.items()) {
      const auto it = setters.find(key);
      if (it == setters.end())
        throw std::runtime_error("unknown config key: " + key);
      const auto* opt = cmd->get_option_no_throw("--" + key);
      if (opt && opt->count() > 0) continue;  // flag override wins
      it->second(value);
    }
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f.good()) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f.good()) throw std::runtime_error("cannot read " + path.string());
  json j;
  f >> j;
  return j;
}

std::vector<const data::GraspSample*> pick(const data::Dataset& ds,
                                           const std::vector<std::size_t>& idx) {
  std::vector<const data::GraspSample*> out;
  for (auto i : idx) out.push_back(&ds.samples[i]);
  return out;
}

const data::GraspSample& sample_by_id(const data::Dataset& ds,
                                      const std::string& id) {
  for (const auto& s : ds.samples)
    if (s.id == id) return s;
  throw std::runtime_error("unknown sample id: " + id);
}

// Pose artifacts come in two shapes: generate output ("theta") and
// refinement reports ("final_pose").
std::vector<double> theta_from_artifact(const json& j) {
  if (j.contains("theta")) return j["theta"].get<std::vector<double>>();
  if (j.contains("final_pose"))
    return j["final_pose"].get<std::vector<double>>();
  throw std::runtime_error("pose artifact has neither theta nor final_pose");
}

std::vector<fs::path> sorted_json_files(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Epoch-numbered loss CSV plus a run manifest echoing the effective
// configuration; resume picks numbering up where the prior run stopped.
struct TrainLog {
  std::string csv = "epoch,loss,bce,dice,kl\n";
  int start_epoch = 0;
  json run;

  void load_resume(const std::string& ckpt) {
    const auto meta = fs::path(ckpt + ".run.json");
    if (fs::exists(meta))
      start_epoch = read_json(meta).value("epochs_trained", 0);
    std::ifstream f(ckpt + ".loss.csv");
    if (f.good()) {
      std::string all((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
      if (!all.empty()) csv = all;
    }
  }
  void finish(const std::string& ckpt, int epochs) {
    run["epochs_trained"] = start_epoch + epochs;
    write_text(ckpt + ".loss.csv", csv);
    write_text(ckpt + ".run.json", run.dump(2) + "\n");
  }
};

struct TrainOpts {
  std::string data, out, resume, config;
  std::uint64_t seed = 1;
  int epochs = 5;
  double lr = config::kTrainLr;
  bool toy = false;
  bool no_augment = false;
};

void add_train_flags(CLI::App* cmd, TrainOpts& o, ConfigBinder& cfg) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--data", o.data, "dataset directory")->required();
  cmd->add_option("--out", o.out, "checkpoint path")->required();
  cmd->add_option("--resume", o.resume, "checkpoint to continue from");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--epochs", o.epochs, "epochs this run");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_flag("--toy", o.toy, "small network widths");
  cmd->add_flag("--no-augment", o.no_augment, "disable pose augmentation");
  cfg.cmd = cmd;
  cfg.bind("data", &o.data);
  cfg.bind("out", &o.out);
  cfg.bind("resume", &o.resume);
  cfg.bind("seed", &o.seed);
  cfg.bind("epochs", &o.epochs);
  cfg.bind("lr", &o.lr);
  cfg.bind("toy", &o.toy);
  cfg.bind("no-augment", &o.no_augment);
}

json echo_train_config(const TrainOpts& o, const char* command) {
  json j;
  j["command"] = command;
  j["data"] = o.data;
  j["seed"] = o.seed;
  j["lr"] = o.lr;
  j["toy"] = o.toy;
  j["augment"] = !o.no_augment;
  return j;
}

int cmd_synth(const std::string& out, std::uint64_t seed, int objects,
              int grasps, int cloud_points) {
  // Build fully in memory first so a failure leaves no partial dataset.
  const auto ds = data::build_dataset(objects, grasps, seed, cloud_points);
  data::save_dataset(ds, out);
  std::printf("wrote %zu samples (%zu train / %zu test) to %s\n",
              ds.samples.size(), ds.train_indices.size(),
              ds.test_indices.size(), out.c_str());
  return 0;
}

int cmd_train_contact(const TrainOpts& o) {
  const auto ds = data::load_dataset(o.data);
  if (ds.train_indices.empty()) throw std::runtime_error("empty train split");
  const auto train = pick(ds, ds.train_indices);

  nets::ContactCVAE model = o.resume.empty()
                                ? nets::ContactCVAE(o.toy ? nets::CvaeWidths::toy()
                                                          : nets::CvaeWidths::defaults(),
                                                    o.seed)
                                : nets::ContactCVAE::load(o.resume);
  TrainLog log;
  if (!o.resume.empty()) log.load_resume(o.resume);
  log.run = echo_train_config(o, "train-contact");

  for (int e = 0; e < o.epochs; ++e) {
    const int epoch = log.start_epoch + e;
    const auto st = model.train_epoch(train, o.lr, o.seed + 977u * epoch,
                                      !o.no_augment);
    char row[160];
    std::snprintf(row, sizeof(row), "%d,%.9g,%.9g,%.9g,%.9g\n", epoch, st.loss,
                  st.bce, st.dice, st.kl);
    log.csv += row;
    std::printf("epoch %d loss %.6f\n", epoch, st.loss);
  }
  model.save(o.out);
  log.finish(o.out, o.epochs);
  return 0;
}

int cmd_train_grasp(const TrainOpts& o, const std::string& cvae_path) {
  const auto ds = data::load_dataset(o.data);
  if (ds.train_indices.empty()) throw std::runtime_error("empty train split");
  const auto train = pick(ds, ds.train_indices);

  nets::GraspNet model = o.resume.empty()
                             ? nets::GraspNet(o.toy ? nets::GraspWidths::toy()
                                                    : nets::GraspWidths::defaults(),
                                              o.seed)
                             : nets::GraspNet::load(o.resume);
  std::optional<nets::ContactCVAE> cvae;
  if (!cvae_path.empty()) cvae.emplace(nets::ContactCVAE::load(cvae_path));

  TrainLog log;
  if (!o.resume.empty()) log.load_resume(o.resume);
  log.run = echo_train_config(o, "train-grasp");
  log.run["cvae"] = cvae_path;
  log.csv = "epoch,loss\n";
  if (!o.resume.empty()) {
    std::ifstream f(o.resume + ".loss.csv");
    if (f.good())
      log.csv.assign((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
  }

  for (int e = 0; e < o.epochs; ++e) {
    const int epoch = log.start_epoch + e;
    const auto st = model.train_epoch(train, cvae ? &*cvae : nullptr, o.lr,
                                      o.seed + 977u * epoch);
    char row[80];
    std::snprintf(row, sizeof(row), "%d,%.9g\n", epoch, st.loss);
    log.csv += row;
    std::printf("epoch %d loss %.6f\n", epoch, st.loss);
  }
  model.save(o.out);
  log.finish(o.out, o.epochs);
  return 0;
}

int cmd_generate(const std::string& data, const std::string& cvae_path,
                 const std::string& grasp_path, const std::string& out,
                 std::uint64_t seed, int k) {
  const auto ds = data::load_dataset(data);
  const auto cvae = nets::ContactCVAE::load(cvae_path);
  const auto grasp = nets::GraspNet::load(grasp_path);
  fs::create_directories(out);

  int pairs = 0;
  for (std::size_t t = 0; t < ds.test_indices.size(); ++t) {
    const auto& s = ds.samples[ds.test_indices[t]];
    for (int i = 0; i < k; ++i) {
      const std::uint64_t z_seed = seed + 1000u * t + std::uint64_t(i);
      const auto map = cvae.generate(s.cloud, z_seed);
      const auto pred = grasp.predict(s.cloud, map);
      const std::string stem = s.id + "_g" + std::to_string(i);
      auto cloud = s.cloud;
      cloud.contact = map.scores;
      geometry::write_cloud(cloud, (fs::path(out) / (stem + ".c2gpc")).string());
      json j;
      j["sample_id"] = s.id;
      j["z_seed"] = z_seed;
      j["theta"] = pred.pose.theta();
      write_text(fs::path(out) / (stem + ".json"), j.dump(2) + "\n");
      ++pairs;
    }
  }
  std::printf("wrote %d map/pose pairs to %s\n", pairs, out.c_str());
  return 0;
}

int cmd_refine(const std::string& data, const std::string& in,
               const std::string& out, const std::string& mode) {
  const auto ds = data::load_dataset(data);
  fs::create_directories(out);
  const auto& model = hand::default_model();

  int n = 0;
  for (const auto& path : sorted_json_files(in)) {
    if (path.string().ends_with(".refined.json")) continue;
    const auto j = read_json(path);
    const auto& s = sample_by_id(ds, j.at("sample_id").get<std::string>());

    nets::GraspPrediction pred;
    pred.pose = hand::HandPose::from_theta(theta_from_artifact(j));
    pred.mesh = hand::forward(model, pred.pose);
    const auto map_path = path.parent_path() / (path.stem().string() + ".c2gpc");
    if (fs::exists(map_path)) {
      const auto cloud = geometry::read_cloud(map_path.string());
      pred.source_contact = losses::ContactMap::clamped(*cloud.contact);
    } else {
      pred.source_contact = s.gt_contact;
    }

    refine::RefinementReport report;
    if (mode == "none") {
      report.initial_pose = pred.pose;
      report.final_pose = pred.pose;
    } else if (mode == "partial") {
      report = refine::partial_optimize(pred, s.cloud, s.object_mesh);
    } else {
      report = refine::global_optimize(pred, s.cloud, s.object_mesh);
    }
    json rj = json::parse(report.to_json());
    rj["sample_id"] = s.id;
    rj["mode"] = mode;
    write_text(fs::path(out) / (path.stem().string() + ".refined.json"),
               rj.dump(2) + "\n");
    ++n;
  }
  std::printf("refined %d poses (mode=%s) into %s\n", n, mode.c_str(),
              out.c_str());
  return 0;
}

int cmd_eval(const std::string& data, const std::string& poses,
             const std::string& out, bool use_gt) {
  const auto ds = data::load_dataset(data);
  const auto& model = hand::default_model();
  fs::create_directories(out);

  std::vector<metrics::GraspEvaluation> evals;
  std::vector<hand::HandMesh> meshes;
  auto eval_one = [&](const std::string& id, const hand::HandPose& pose,
                      const geometry::TriMesh& object) {
    const auto mesh = hand::forward(model, pose);
    evals.push_back(metrics::evaluate_grasp(id, mesh, object));
    meshes.push_back(mesh);
  };

  if (use_gt) {
    for (auto i : ds.test_indices) {
      const auto& s = ds.samples[i];
      if (s.gt_pose) eval_one(s.id, *s.gt_pose, s.object_mesh);
    }
  } else {
    for (const auto& path : sorted_json_files(poses)) {
      const auto j = read_json(path);
      const auto& s = sample_by_id(ds, j.at("sample_id").get<std::string>());
      eval_one(path.stem().string(),
               hand::HandPose::from_theta(theta_from_artifact(j)),
               s.object_mesh);
    }
  }
  if (evals.empty()) throw std::runtime_error("nothing to evaluate");

  const double div = meshes.size() >= 2 ? metrics::diversity(meshes) : 0.0;
  write_text(fs::path(out) / "metrics.csv", metrics::to_csv(evals));
  write_text(fs::path(out) / "summary.json",
             metrics::summary_json(evals, div) + "\n");
  std::printf("evaluated %zu grasps; summary in %s\n", evals.size(),
              out.c_str());
  return 0;
}

int cmd_export(const std::string& data, const std::string& poses,
               const std::string& out) {
  const auto ds = data::load_dataset(data);
  const auto& model = hand::default_model();
  fs::create_directories(out);

  int n = 0;
  for (const auto& path : sorted_json_files(poses)) {
    const auto j = read_json(path);
    const auto& s = sample_by_id(ds, j.at("sample_id").get<std::string>());
    const auto pose = hand::HandPose::from_theta(theta_from_artifact(j));
    const auto mesh = hand::forward(model, pose);
    const std::string stem = path.stem().string();
    geometry::write_obj(mesh.as_mesh(),
                        (fs::path(out) / (stem + "_hand.obj")).string());
    geometry::write_obj(s.object_mesh,
                        (fs::path(out) / (stem + "_object.obj")).string());
    const auto map_path = path.parent_path() / (stem + ".c2gpc");
    if (fs::exists(map_path)) {
      const auto cloud = geometry::read_cloud(map_path.string());
      geometry::write_ply(cloud.points, *cloud.contact,
                          (fs::path(out) / (stem + "_contact.ply")).string());
    }
    ++n;
  }
  std::printf("exported %d pose(s) to %s\n", n, out.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  (void)worker_count();  // validate C2G_THREADS up front

  CLI::App app{"contact-driven grasp synthesis toolkit"};
  app.require_subcommand(1);

  // config
  auto* c_config = app.add_subcommand("config", "print pinned constants");

  // synth-data
  std::string sd_out, sd_config;
  std::uint64_t sd_seed = 1;
  int sd_objects = 8, sd_grasps = 2, sd_points = config::kCloudPoints;
  ConfigBinder sd_cfg;
  auto* c_synth = app.add_subcommand("synth-data", "build a synthetic dataset");
  c_synth->add_option("--config", sd_config, "JSON config file");
  c_synth->add_option("--out", sd_out, "dataset directory")->required();
  c_synth->add_option("--seed", sd_seed, "master seed");
  c_synth->add_option("--objects", sd_objects, "object count");
  c_synth->add_option("--grasps-per-object", sd_grasps, "grasps per object");
  c_synth->add_option("--cloud-points", sd_points, "points per cloud");
  sd_cfg.cmd = c_synth;
  sd_cfg.bind("out", &sd_out);
  sd_cfg.bind("seed", &sd_seed);
  sd_cfg.bind("objects", &sd_objects);
  sd_cfg.bind("grasps-per-object", &sd_grasps);
  sd_cfg.bind("cloud-points", &sd_points);

  // train-contact / train-grasp
  TrainOpts tc, tg;
  ConfigBinder tc_cfg, tg_cfg;
  auto* c_tc = app.add_subcommand("train-contact", "train the contact CVAE");
  add_train_flags(c_tc, tc, tc_cfg);
  auto* c_tg = app.add_subcommand("train-grasp", "train the pose regressor");
  add_train_flags(c_tg, tg, tg_cfg);
  std::string tg_cvae;
  c_tg->add_option("--cvae", tg_cvae, "contact checkpoint for the 50/50 mix");
  tg_cfg.bind("cvae", &tg_cvae);

  // generate
  std::string g_data, g_cvae, g_grasp, g_out, g_config;
  std::uint64_t g_seed = 1;
  int g_k = 1;
  ConfigBinder g_cfg;
  auto* c_gen = app.add_subcommand("generate", "sample contact maps + poses");
  c_gen->add_option("--config", g_config, "JSON config file");
  c_gen->add_option("--data", g_data, "dataset directory")->required();
  c_gen->add_option("--cvae", g_cvae, "contact checkpoint")->required();
  c_gen->add_option("--grasp", g_grasp, "pose checkpoint")->required();
  c_gen->add_option("--out", g_out, "output directory")->required();
  c_gen->add_option("--seed", g_seed, "master seed");
  c_gen->add_option("--seeds", g_k, "latent samples per object");
  g_cfg.cmd = c_gen;
  g_cfg.bind("data", &g_data);
  g_cfg.bind("cvae", &g_cvae);
  g_cfg.bind("grasp", &g_grasp);
  g_cfg.bind("out", &g_out);
  g_cfg.bind("seed", &g_seed);
  g_cfg.bind("seeds", &g_k);

  // refine
  std::string r_data, r_in, r_out, r_mode = "partial", r_config;
  ConfigBinder r_cfg;
  auto* c_ref = app.add_subcommand("refine", "penetration-aware refinement");
  c_ref->add_option("--config", r_config, "JSON config file");
  c_ref->add_option("--data", r_data, "dataset directory")->required();
  c_ref->add_option("--in", r_in, "generate output directory")->required();
  c_ref->add_option("--out", r_out, "report directory")->required();
  c_ref->add_option("--mode", r_mode, "none|partial|global")
      ->check(CLI::IsMember({"none", "partial", "global"}));
  r_cfg.cmd = c_ref;
  r_cfg.bind("data", &r_data);
  r_cfg.bind("in", &r_in);
  r_cfg.bind("out", &r_out);
  r_cfg.bind("mode", &r_mode);

  // eval
  std::string e_data, e_poses, e_out, e_config;
  bool e_gt = false;
  ConfigBinder e_cfg;
  auto* c_eval = app.add_subcommand("eval", "metric suite over grasps");
  c_eval->add_option("--config", e_config, "JSON config file");
  c_eval->add_option("--data", e_data, "dataset directory")->required();
  c_eval->add_option("--poses", e_poses, "pose artifact directory");
  c_eval->add_option("--out", e_out, "report directory")->required();
  c_eval->add_flag("--gt", e_gt, "evaluate ground-truth test grasps");
  e_cfg.cmd = c_eval;
  e_cfg.bind("data", &e_data);
  e_cfg.bind("poses", &e_poses);
  e_cfg.bind("out", &e_out);
  e_cfg.bind("gt", &e_gt);

  // export
  std::string x_data, x_poses, x_out, x_config;
  ConfigBinder x_cfg;
  auto* c_exp = app.add_subcommand("export", "OBJ/PLY viewer files");
  c_exp->add_option("--config", x_config, "JSON config file");
  c_exp->add_option("--data", x_data, "dataset directory")->required();
  c_exp->add_option("--poses", x_poses, "pose artifact directory")->required();
  c_exp->add_option("--out", x_out, "output directory")->required();
  x_cfg.cmd = c_exp;
  x_cfg.bind("data", &x_data);
  x_cfg.bind("poses", &x_poses);
  x_cfg.bind("out", &x_out);

  CLI11_PARSE(app, argc, argv);

  if (c_config->parsed()) {
    std::printf("%s\n", config::introspection().c_str());
    return 0;
  }
  if (c_synth->parsed()) {
    sd_cfg.apply(sd_config);
    return cmd_synth(sd_out, sd_seed, sd_objects, sd_grasps, sd_points);
  }
  if (c_tc->parsed()) {
    tc_cfg.apply(tc.config);
    return cmd_train_contact(tc);
  }
  if (c_tg->parsed()) {
    tg_cfg.apply(tg.config);
    return cmd_train_grasp(tg, tg_cvae);
  }
  if (c_gen->parsed()) {
    g_cfg.apply(g_config);
    return cmd_generate(g_data, g_cvae, g_grasp, g_out, g_seed, g_k);
  }
  if (c_ref->parsed()) {
    r_cfg.apply(r_config);
    return cmd_refine(r_data, r_in, r_out, r_mode);
  }
  if (c_eval->parsed()) {
    e_cfg.apply(e_config);
    if (!e_gt && e_poses.empty())
      throw std::runtime_error("eval needs --poses or --gt");
    return cmd_eval(e_data, e_poses, e_out, e_gt);
  }
  if (c_exp->parsed()) {
    x_cfg.apply(x_config);
    return cmd_export(x_data, x_poses, x_out);
  }
  return 0;
}
