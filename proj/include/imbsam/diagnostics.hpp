#pragma once

#include "imbsam/data.hpp"
#include "imbsam/mlp.hpp"
#include "imbsam/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace imbsam {

// Which part of the training loss a diagnostic is restricted to. Losses are
// evaluated as sums over the restricted sample set so head/tail magnitudes
// stay comparable to the training objective.
enum class Restriction { kAll, kHead, kTail };

const char* restriction_name(Restriction r);

struct SharpnessReport {
  Restriction restriction = Restriction::kAll;
  double lambda_max = 0.0;
  double trace = 0.0;
  double trace_std_error = 0.0;
  int probes_used = 0;
  int power_iters = 0;
  bool converged = false;
};

struct PowerIterResult {
  double lambda_max = 0.0;  // |dominant eigenvalue|
  int iters = 0;
  bool converged = false;
};

// Power iteration on Hessian-vector products from a seeded start vector.
// Convergence when successive Rayleigh estimates differ by < tol relative.
PowerIterResult power_iteration_lambda_max(const Objective& objective, const Vector& theta,
                                           std::uint64_t seed, int max_iters = 100,
                                           double tol = 1e-4);

struct TraceEstimate {
  double trace = 0.0;
  double std_error = 0.0;  // of the mean; 0 when only one probe
  int probes = 0;
};

// Hutchinson estimator: mean of v' H v over seeded Rademacher probes.
// Probes are accumulated in index order, so results are seed-deterministic.
TraceEstimate hutchinson_trace(const Objective& objective, const Vector& theta,
                               std::uint64_t seed, int n_probes = 64);

// Sum-of-losses objective over the samples of a restriction (unit weights).
Objective restricted_objective(const Mlp& model, const LongTailedDataset& dataset,
                               const ClassSplit& split, Restriction restriction);

SharpnessReport sharpness_report(const Mlp& model, const Vector& theta,
                                 const LongTailedDataset& dataset, const ClassSplit& split,
                                 Restriction restriction, std::uint64_t seed, int n_probes = 64,
                                 int max_power_iters = 100, double power_tol = 1e-4);

// Loss values on a symmetric grid along 1 or 2 unit directions through theta.
// grid_points must be odd so the center point is theta itself.
struct LandscapeSlice {
  std::vector<Vector> directions;
  std::vector<double> offsets;
  RowMatrix losses;  // 1 x g for one direction, g x g for two
};

LandscapeSlice landscape_slice(const Objective& objective, const Vector& theta,
                               std::vector<Vector> directions, double half_width,
                               int grid_points);

// Central-difference check of the analytic gradient. Coordinates above
// max_coords are subsampled with coord_seed. The error metric is
// |analytic - fd| / (1 + max(|analytic|, |fd|)).
struct GradCheckReport {
  double max_rel_error = 0.0;
  Index worst_coordinate = -1;
  Index coords_checked = 0;
  bool pass = false;
};

GradCheckReport grad_check(const Mlp& model, const Vector& theta, const SampleBatch& batch,
                           std::span<const double> weights, double tol,
                           std::uint64_t coord_seed = 0, Index max_coords = 2000);

}  // namespace imbsam
