#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "irnav/problem.hpp"

namespace irnav {

/// Per-voxel mean and population variance of its dose-matrix row, over all beamlets.
struct VoxelFeatures {
  std::vector<int> voxels;
  Vector mean;
  Vector variance;
};

VoxelFeatures row_features(const ProblemModel& model, const Structure& structure);

/// k-means++ seeding followed by Lloyd iterations on z-scored features. Labels lie in [0, K).
std::vector<int> kmeans(const VoxelFeatures& features, int K, std::uint64_t seed = 42, int max_iterations = 100);

struct StructureClusters {
  std::string structure;
  std::vector<int> voxels;
  std::vector<int> labels;
  int k = 0;
};

struct ClusterMap {
  std::vector<StructureClusters> structures;
  std::uint64_t seed = 42;

  const StructureClusters* find(const std::string& name) const;
};

/// Either a fixed cluster count per structure or a fraction of each structure's voxel count.
struct ClusterRequest {
  std::optional<int> k;
  std::optional<double> fraction;
  std::uint64_t seed = 42;
};

/// Clusters every constrained structure independently.
ClusterMap cluster_model(const ProblemModel& model, const ClusterRequest& request);

/// Map with one cluster per voxel.
ClusterMap identity_clusters(const ProblemModel& model);

struct ClusteredModel {
  ProblemModel model;
  /// lineage[v] lists the original voxels merged into voxel v of `model`.
  std::vector<std::vector<int>> lineage;
};

/// Super-voxel rows are member means; bounds are unchanged; objectives keep their unclustered coefficients.
ClusteredModel aggregate(const ProblemModel& model, const ClusterMap& cmap);

nlohmann::json cluster_map_to_json(const ClusterMap& cmap);
ClusterMap cluster_map_from_json(const nlohmann::json& doc);

}  // namespace irnav
