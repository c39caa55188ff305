#include "irnav/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace irnav {

VoxelFeatures row_features(const ProblemModel& model, const Structure& structure) {
  VoxelFeatures f;
  f.voxels = structure.voxel_indices;
  const int m = static_cast<int>(f.voxels.size());
  const double n = static_cast<double>(model.num_beamlets);
  f.mean = Vector::Zero(m);
  f.variance = Vector::Zero(m);
  for (int k = 0; k < m; ++k) {
    double sum = 0.0, sq = 0.0;
    for (SparseMatrix::InnerIterator it(model.dose_matrix, f.voxels[k]); it; ++it) {
      sum += it.value();
      sq += it.value() * it.value();
    }
    const double mean = sum / n;
    f.mean[k] = mean;
    f.variance[k] = std::max(0.0, sq / n - mean * mean);
  }
  return f;
}

namespace {

Matrix zscore(const VoxelFeatures& f) {
  const int m = static_cast<int>(f.mean.size());
  Matrix pts(m, 2);
  pts.col(0) = f.mean;
  pts.col(1) = f.variance;
  for (int c = 0; c < 2; ++c) {
    const double mu = pts.col(c).mean();
    const double sd = std::sqrt((pts.col(c).array() - mu).square().mean());
    if (sd > 0.0) {
      pts.col(c) = (pts.col(c).array() - mu) / sd;
    } else {
      pts.col(c).setZero();
    }
  }
  return pts;
}

}  // namespace

std::vector<int> kmeans(const VoxelFeatures& features, int K, std::uint64_t seed, int max_iterations) {
  const int m = static_cast<int>(features.mean.size());
  if (K < 1 || K > m) throw ValidationError("K: must lie in [1, " + std::to_string(m) + "]");
  std::vector<int> labels(m, 0);
  if (K == m) {
    std::iota(labels.begin(), labels.end(), 0);
    return labels;
  }
  if (K == 1) return labels;

  const Matrix pts = zscore(features);
  std::mt19937_64 rng(seed);
  Matrix centers(K, 2);
  std::vector<char> chosen(m, 0);
  const int first = std::uniform_int_distribution<int>(0, m - 1)(rng);
  centers.row(0) = pts.row(first);
  chosen[first] = 1;
  Vector d2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < K; ++c) {
    int pick = -1;
    const double total = d2.sum();
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (int i = 0; i < m; ++i) {
        u -= d2[i];
        if (u <= 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = static_cast<int>(std::max_element(d2.data(), d2.data() + m) - d2.data());
    } else {
      std::vector<int> free;
      for (int i = 0; i < m; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
    }
    chosen[pick] = 1;
    centers.row(c) = pts.row(pick);
    d2 = d2.cwiseMin((pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> prev(m, -1);
  for (int it = 0; it < max_iterations; ++it) {
    for (int i = 0; i < m; ++i) {
      int best = 0;
      double bd = kInf;
      for (int c = 0; c < K; ++c) {
        const double dd = (pts.row(i) - centers.row(c)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      labels[i] = best;
    }
    // Empty clusters take the point farthest from its own center.
    std::vector<int> size(K, 0);
    for (int l : labels) ++size[l];
    for (int c = 0; c < K; ++c) {
      if (size[c] > 0) continue;
      int far = -1;
      double fd = -1.0;
      for (int i = 0; i < m; ++i) {
        if (size[labels[i]] <= 1) continue;
        const double dd = (pts.row(i) - centers.row(labels[i])).squaredNorm();
        if (dd > fd) {
          fd = dd;
          far = i;
        }
      }
      --size[labels[far]];
      labels[far] = c;
      size[c] = 1;
    }
    for (int c = 0; c < K; ++c) centers.row(c).setZero();
    for (int i = 0; i < m; ++i) centers.row(labels[i]) += pts.row(i);
    for (int c = 0; c < K; ++c) centers.row(c) /= size[c];
    if (labels == prev) break;
    prev = labels;
  }
  return labels;
}

const StructureClusters* ClusterMap::find(const std::string& name) const {
  for (const auto& s : structures) {
    if (s.structure == name) return &s;
  }
  return nullptr;
}

ClusterMap cluster_model(const ProblemModel& model, const ClusterRequest& request) {
  if (request.k.has_value() == request.fraction.has_value()) {
    throw ValidationError("cluster request: give exactly one of k and fraction");
  }
  if (request.k && *request.k < 1) throw ValidationError("k: must be at least 1");
  if (request.fraction && !(*request.fraction > 0.0 && *request.fraction <= 1.0)) {
    throw ValidationError("fraction: must lie in (0, 1]");
  }
  ClusterMap cmap;
  cmap.seed = request.seed;
  for (const auto& s : model.structures) {
    if (!s.is_constrained) continue;
    const int m = static_cast<int>(s.voxel_indices.size());
    int k = request.k ? std::min(*request.k, m)
                      : static_cast<int>(std::lround(*request.fraction * static_cast<double>(m)));
    k = std::clamp(k, 1, m);
    StructureClusters sc;
    sc.structure = s.name;
    sc.voxels = s.voxel_indices;
    sc.k = k;
    sc.labels = kmeans(row_features(model, s), k, request.seed);
    cmap.structures.push_back(std::move(sc));
  }
  return cmap;
}

ClusterMap identity_clusters(const ProblemModel& model) {
  ClusterMap cmap;
  for (const auto& s : model.structures) {
    if (!s.is_constrained) continue;
    StructureClusters sc;
    sc.structure = s.name;
    sc.voxels = s.voxel_indices;
    sc.k = static_cast<int>(s.voxel_indices.size());
    sc.labels.resize(sc.voxels.size());
    std::iota(sc.labels.begin(), sc.labels.end(), 0);
    cmap.structures.push_back(std::move(sc));
  }
  return cmap;
}

ClusteredModel aggregate(const ProblemModel& model, const ClusterMap& cmap) {
  model.validate();
  ClusteredModel out;
  ProblemModel& cm = out.model;
  cm.num_beamlets = model.num_beamlets;
  cm.fluence_lower = model.fluence_lower;
  cm.fluence_upper = model.fluence_upper;
  cm.objectives = model.objectives;
  for (auto& obj : cm.objectives) obj.mean_of_structure.reset();

  std::vector<Triplet> trip;
  int next = 0;
  auto add_row = [&](const std::vector<int>& members) {
    std::map<int, double> acc;
    for (int v : members) {
      for (SparseMatrix::InnerIterator it(model.dose_matrix, v); it; ++it) acc[static_cast<int>(it.col())] += it.value();
    }
    for (const auto& [col, sum] : acc) trip.emplace_back(next, col, sum / static_cast<double>(members.size()));
    out.lineage.push_back(members);
    return next++;
  };

  for (const auto& s : model.structures) {
    Structure ns = s;
    ns.voxel_indices.clear();
    const StructureClusters* sc = s.is_constrained ? cmap.find(s.name) : nullptr;
    if (s.is_constrained && !sc) throw ValidationError("cluster map: missing constrained structure '" + s.name + "'");
    if (sc) {
      if (sc->voxels.size() != sc->labels.size()) throw ValidationError("cluster map: label count mismatch for '" + s.name + "'");
      std::vector<std::vector<int>> groups(sc->k);
      for (std::size_t i = 0; i < sc->voxels.size(); ++i) {
        const int l = sc->labels[i];
        if (l < 0 || l >= sc->k) throw ValidationError("cluster map: label out of range for '" + s.name + "'");
        groups[l].push_back(sc->voxels[i]);
      }
      for (const auto& g : groups) {
        if (!g.empty()) ns.voxel_indices.push_back(add_row(g));
      }
    } else {
      for (int v : s.voxel_indices) ns.voxel_indices.push_back(add_row({v}));
    }
    cm.structures.push_back(std::move(ns));
  }
  cm.num_voxels = next;
  cm.dose_matrix = SparseMatrix(next, model.num_beamlets);
  cm.dose_matrix.setFromTriplets(trip.begin(), trip.end());
  cm.dose_matrix.makeCompressed();
  cm.validate();
  return out;
}

nlohmann::json cluster_map_to_json(const ClusterMap& cmap) {
  nlohmann::json doc;
  doc["seed"] = cmap.seed;
  doc["structures"] = nlohmann::json::array();
  for (const auto& s : cmap.structures) {
    doc["structures"].push_back({{"name", s.structure}, {"k", s.k}, {"voxels", s.voxels}, {"labels", s.labels}});
  }
  return doc;
}

ClusterMap cluster_map_from_json(const nlohmann::json& doc) {
  ClusterMap cmap;
  try {
    cmap.seed = doc.value("seed", std::uint64_t{42});
    for (const auto& e : doc.at("structures")) {
      StructureClusters s;
      s.structure = e.at("name").get<std::string>();
      s.k = e.at("k").get<int>();
      s.voxels = e.at("voxels").get<std::vector<int>>();
      s.labels = e.at("labels").get<std::vector<int>>();
      cmap.structures.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("cluster map: ") + e.what());
  }
  return cmap;
}

}  // namespace irnav
