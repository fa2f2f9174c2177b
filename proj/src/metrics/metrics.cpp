#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "c2g/metrics.hpp"

namespace c2g::metrics {

using geometry::TriMesh;
using geometry::Vec3;

std::pair<double, double> penetration_depth(const hand::HandMesh& hand_mesh,
                                            const TriMesh& object) {
  const auto sd = geometry::signed_distance(object, hand_mesh.vertices);
  double max_d = 0, sum_d = 0;
  int count = 0;
  for (double s : sd)
    if (s < 0) {
      max_d = std::max(max_d, -s);
      sum_d += -s;
      ++count;
    }
  if (count == 0) return {0.0, 0.0};
  return {max_d * 100.0, sum_d / count * 100.0};
}

double penetration_volume(const TriMesh& a, const TriMesh& b) {
  geometry::Aabb box = a.bounds().merged(b.bounds());
  box.pad(2 * config::kVoxelSize);
  const auto ga = geometry::voxelize(a, config::kVoxelSize, box);
  const auto gb = geometry::voxelize(b, config::kVoxelSize, box);
  return geometry::intersection_volume_cm3(ga, gb);
}

double penetration_volume(const hand::HandMesh& hand_mesh,
                          const TriMesh& object) {
  return penetration_volume(hand_mesh.as_mesh(), object);
}

double contact_rate(const std::vector<GraspEvaluation>& samples) {
  if (samples.empty()) throw std::runtime_error("contact_rate: empty list");
  int touching = 0;
  for (const auto& s : samples) touching += s.in_contact;
  return 100.0 * touching / double(samples.size());
}

double success_rate(const std::vector<GraspEvaluation>& samples) {
  if (samples.empty()) throw std::runtime_error("success_rate: empty list");
  int ok = 0;
  for (const auto& s : samples)
    ok += (s.volume < config::kSuccessMaxVol &&
           s.sim_disp < config::kSuccessMaxDisp);
  return 100.0 * ok / double(samples.size());
}

double diversity(const std::vector<hand::HandMesh>& meshes) {
  if (meshes.size() < 2)
    throw std::runtime_error("diversity: need at least 2 samples");
  const std::size_t nv = meshes.front().vertices.size();
  for (const auto& m : meshes)
    if (m.vertices.size() != nv)
      throw std::runtime_error("diversity: topology mismatch");
  const std::size_t n = meshes.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (i == k) continue;
      double sq = 0;
      for (std::size_t v = 0; v < nv; ++v) {
        const Vec3 d = meshes[i].vertices[v] - meshes[k].vertices[v];
        sq += d.dot(d);
      }
      acc += std::sqrt(sq);
    }
  return acc / double(n * (n - 1)) * 100.0;
}

GraspEvaluation evaluate_grasp(const std::string& id,
                               const hand::HandMesh& hand_mesh,
                               const TriMesh& object) {
  GraspEvaluation e;
  e.sample_id = id;
  const auto [dmax, dmean] = penetration_depth(hand_mesh, object);
  e.depth_max = dmax;
  e.depth_mean = dmean;
  e.volume = penetration_volume(hand_mesh, object);
  e.sim_disp = simulate_displacement(hand_mesh, object);
  const auto sd = geometry::signed_distance(object, hand_mesh.vertices);
  e.in_contact = std::any_of(sd.begin(), sd.end(),
                             [](double s) { return s <= 0; });
  e.success = e.volume < config::kSuccessMaxVol &&
              e.sim_disp < config::kSuccessMaxDisp;
  return e;
}

std::string to_csv(const std::vector<GraspEvaluation>& samples) {
  std::string out = "sample_id,dep_max,dep_mean,vol,sim_disp,contact,success\n";
  char row[256];
  for (const auto& s : samples) {
    std::snprintf(row, sizeof(row), "%s,%.6g,%.6g,%.6g,%.6g,%d,%d\n",
                  s.sample_id.c_str(), s.depth_max, s.depth_mean, s.volume,
                  s.sim_disp, int(s.in_contact), int(s.success));
    out += row;
  }
  return out;
}

std::string summary_json(const std::vector<GraspEvaluation>& samples,
                         double diversity_cm) {
  if (samples.empty()) throw std::runtime_error("summary: empty list");
  double dep = 0, vol = 0, mean_disp = 0;
  for (const auto& s : samples) {
    dep += s.depth_max;  // summary reports the max-depth variant
    vol += s.volume;
    mean_disp += s.sim_disp;
  }
  const double n = double(samples.size());
  dep /= n;
  vol /= n;
  mean_disp /= n;
  double var = 0;
  for (const auto& s : samples)
    var += (s.sim_disp - mean_disp) * (s.sim_disp - mean_disp);
  var /= n;

  nlohmann::json j;
  j["Dep"] = dep;
  j["Vol"] = vol;
  j["Mean"] = mean_disp;
  j["Var"] = var;
  j["CR"] = contact_rate(samples);
  j["Div"] = diversity_cm;
  j["Sim-SR"] = success_rate(samples);
  j["samples"] = samples.size();
  return j.dump(2);
}

}  // namespace c2g::metrics
