#include "irnav/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace irnav {

namespace {

constexpr double kPtvRadius = 0.4;
constexpr double kRingRadius = 0.7;
constexpr double kSkinRadius = 0.85;
constexpr double kAttenuation = 0.35;

}  // namespace

ProblemModel generate_phantom(const PhantomSpec& spec) {
  if (spec.grid < 2) throw ValidationError("grid: must be at least 2");
  if (spec.beamlets < 1) throw ValidationError("beamlets: must be positive");
  if (spec.angles < 0) throw ValidationError("angles: must be non-negative");
  const int N = spec.grid;
  const int B = spec.beamlets;
  const int A = spec.angles > 0 ? std::min(spec.angles, B) : std::min(B, std::max(1, B / 2));
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);

  std::vector<double> px(N * N), py(N * N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      px[i * N + j] = -1.0 + (2.0 * j + 1.0) / N;
      py[i * N + j] = 1.0 - (2.0 * i + 1.0) / N;
    }
  }

  std::vector<Triplet> trip;
  int b = 0;
  for (int a = 0; a < A; ++a) {
    const int count = B / A + (a < B % A ? 1 : 0);
    const double theta = std::numbers::pi * a / A + 0.1;
    const double dx = std::cos(theta), dy = std::sin(theta);
    const double sigma = std::max(0.12, 0.9 * kPtvRadius / count);
    for (int c = 0; c < count; ++c, ++b) {
      const double offset = count == 1 ? 0.0 : -kPtvRadius + 2.0 * kPtvRadius * c / (count - 1);
      const double amp = jitter(rng);
      for (int v = 0; v < N * N; ++v) {
        const double lateral = -dy * px[v] + dx * py[v] - offset;
        if (std::abs(lateral) > 3.0 * sigma) continue;
        const double depth = dx * px[v] + dy * py[v] + std::sqrt(2.0);
        const double val = amp * std::exp(-lateral * lateral / (2.0 * sigma * sigma)) * std::exp(-kAttenuation * depth);
        if (val > 1e-6) trip.emplace_back(v, b, val);
      }
    }
  }

  ProblemModel model;
  model.num_voxels = N * N;
  model.num_beamlets = B;
  model.dose_matrix = SparseMatrix(N * N, B);
  model.dose_matrix.setFromTriplets(trip.begin(), trip.end());
  model.fluence_lower = Vector::Zero(B);
  model.fluence_upper = Vector::Ones(B);

  Structure ptv{"PTV", {}, -kInf, kInf, true, true, {}};
  Structure ring{"Ring", {}, -kInf, kInf, true, false, {}};
  Structure skin{"Skin", {}, -kInf, kInf, true, true, {}};
  Structure body{"Body", {}, -kInf, kInf, false, false, {}};
  for (int v = 0; v < N * N; ++v) {
    const double rho = std::hypot(px[v], py[v]);
    if (rho <= kPtvRadius) {
      ptv.voxel_indices.push_back(v);
    } else if (rho <= kRingRadius) {
      ring.voxel_indices.push_back(v);
    } else if (rho > kSkinRadius) {
      skin.voxel_indices.push_back(v);
    }
    body.voxel_indices.push_back(v);
  }
  if (ptv.voxel_indices.empty()) {
    // Coarse grids: the voxel nearest to the center is the target.
    int best = 0;
    for (int v = 1; v < N * N; ++v) {
      if (std::hypot(px[v], py[v]) < std::hypot(px[best], py[best])) best = v;
    }
    ptv.voxel_indices.push_back(best);
    std::erase(ring.voxel_indices, best);
    std::erase(skin.voxel_indices, best);
  }

  // Reference plan: half fluence everywhere; scale so its worst-case PTV maximum sits just under P.
  const Vector ref = Vector::Constant(B, 0.5);
  Vector d = model.dose_matrix * ref;
  const double P = spec.prescription;
  const double up = 1.0 + spec.uncertainty;
  const double down = 1.0 - spec.uncertainty;
  double ptv_max = 0.0;
  for (int v : ptv.voxel_indices) ptv_max = std::max(ptv_max, d[v]);
  if (ptv_max <= 0.0) throw ValidationError("phantom: target receives no dose; increase beamlets");
  const double scale = 0.98 * P / (up * ptv_max);
  model.dose_matrix *= scale;
  model.dose_matrix.makeCompressed();
  d *= scale;

  double ptv_min = kInf, ring_max = 0.0, skin_max = 0.0;
  for (int v : ptv.voxel_indices) ptv_min = std::min(ptv_min, d[v]);
  for (int v : ring.voxel_indices) ring_max = std::max(ring_max, d[v]);
  for (int v : skin.voxel_indices) skin_max = std::max(skin_max, d[v]);
  ptv.upper_bound = P;
  ptv.lower_bound = std::min(0.8 * P, std::floor(0.99 * down * ptv_min * 100.0) / 100.0);
  ring.upper_bound = std::max(0.9 * P, std::ceil(1.01 * up * ring_max * 100.0) / 100.0);
  skin.upper_bound = std::max(0.8 * P, std::ceil(1.01 * up * skin_max * 100.0) / 100.0);

  model.structures.push_back(ptv);
  if (!ring.voxel_indices.empty()) model.structures.push_back(ring);
  if (!skin.voxel_indices.empty()) model.structures.push_back(skin);
  model.structures.push_back(body);

  model.objectives.push_back(mean_objective(model, "PTV", -1));
  model.objectives.back().name = "PTV_mean";
  const std::string second = skin.voxel_indices.empty() ? "Body" : "Skin";
  model.objectives.push_back(mean_objective(model, second, 1));
  model.objectives.back().name = second + "_mean";
  model.validate();
  return model;
}

}  // namespace irnav
