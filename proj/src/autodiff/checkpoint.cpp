#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "c2g/autodiff.hpp"

namespace c2g::autodiff {

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  nlohmann::json manifest = ck.manifest_json.empty()
                                ? nlohmann::json::object()
                                : nlohmann::json::parse(ck.manifest_json);
  manifest["model_type"] = ck.model_type;
  auto layers = nlohmann::json::array();
  for (std::size_t i = 0; i < ck.names.size(); ++i)
    layers.push_back({{"name", ck.names[i]}, {"shape", ck.tensors[i].shape}});
  manifest["layers"] = layers;
  const std::string mstr = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw std::runtime_error("cannot open " + path);
  out.write("C2GCKPT1", 8);
  const std::uint32_t len = std::uint32_t(mstr.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(mstr.data(), mstr.size());
  for (const auto& t : ck.tensors)
    out.write(reinterpret_cast<const char*>(t.v.data()),
              std::streamsize(t.v.size() * sizeof(double)));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "C2GCKPT1", 8) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string mstr(len, '\0');
  in.read(mstr.data(), len);
  const auto manifest = nlohmann::json::parse(mstr);

  Checkpoint ck;
  ck.manifest_json = mstr;
  ck.model_type = manifest.value("model_type", "");
  for (const auto& layer : manifest.at("layers")) {
    const auto shape = layer.at("shape").get<std::vector<int>>();
    std::size_t n = 1;
    for (int d : shape) n *= std::size_t(d);
    std::vector<double> vals(n);
    in.read(reinterpret_cast<char*>(vals.data()),
            std::streamsize(n * sizeof(double)));
    ck.names.push_back(layer.at("name").get<std::string>());
    ck.tensors.emplace_back(shape, std::move(vals));
  }
  if (!in.good()) throw std::runtime_error("truncated checkpoint " + path);
  return ck;
}

}  // namespace c2g::autodiff
