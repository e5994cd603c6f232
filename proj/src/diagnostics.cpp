#include "imbsam/diagnostics.hpp"

#include "imbsam/hvp.hpp"
#include "imbsam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace imbsam {

const char* restriction_name(Restriction r) {
  switch (r) {
    case Restriction::kAll: return "all";
    case Restriction::kHead: return "head";
    case Restriction::kTail: return "tail";
  }
  return "?";
}

PowerIterResult power_iteration_lambda_max(const Objective& objective, const Vector& theta,
                                           std::uint64_t seed, int max_iters, double tol) {
  if (max_iters < 1) throw std::invalid_argument("power_iteration_lambda_max: max_iters >= 1");
  RngEngine eng = make_engine(derive_seed(seed, 0x706f77ULL));
  Vector v(theta.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = gaussian(eng);
  v.normalize();

  PowerIterResult result;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= max_iters; ++it) {
    const Vector w = hessian_vector_product(objective, theta, v);
    const double rayleigh = v.dot(w);
    result.lambda_max = std::abs(rayleigh);
    result.iters = it;
    const double wnorm = w.norm();
    if (wnorm <= 1e-30) {  // (numerically) zero Hessian along every probe
      result.lambda_max = 0.0;
      result.converged = true;
      return result;
    }
    if (it > 1) {
      const double denom = std::max(result.lambda_max, 1e-12);
      if (std::abs(result.lambda_max - prev) < tol * denom) {
        result.converged = true;
        return result;
      }
    }
    prev = result.lambda_max;
    v = w / wnorm;
  }
  return result;
}

TraceEstimate hutchinson_trace(const Objective& objective, const Vector& theta,
                               std::uint64_t seed, int n_probes) {
  if (n_probes < 1) throw std::invalid_argument("hutchinson_trace: n_probes must be >= 1");
  RngEngine eng = make_engine(derive_seed(seed, 0x747261ULL));
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(n_probes));
  Vector v(theta.size());
  for (int p = 0; p < n_probes; ++p) {
    for (Index i = 0; i < v.size(); ++i) v[i] = rademacher(eng);
    const Vector hv = hessian_vector_product(objective, theta, v);
    samples.push_back(v.dot(hv));
  }
  TraceEstimate est;
  est.probes = n_probes;
  est.trace = std::accumulate(samples.begin(), samples.end(), 0.0) / n_probes;
  if (n_probes > 1) {
    double ss = 0.0;
    for (double s : samples) ss += (s - est.trace) * (s - est.trace);
    est.std_error = std::sqrt(ss / (n_probes - 1)) / std::sqrt(static_cast<double>(n_probes));
  }
  return est;
}

Objective restricted_objective(const Mlp& model, const LongTailedDataset& dataset,
                               const ClassSplit& split, Restriction restriction) {
  std::vector<Index> rows;
  for (Index i = 0; i < dataset.size(); ++i) {
    const bool tail = split.is_tail(dataset.labels[static_cast<std::size_t>(i)]);
    if (restriction == Restriction::kAll || (restriction == Restriction::kTail) == tail) {
      rows.push_back(i);
    }
  }
  if (rows.empty()) {
    throw std::invalid_argument(std::string("restricted_objective: no samples in restriction ") +
                                restriction_name(restriction));
  }
  SampleBatch batch = gather(dataset, rows);
  std::vector<double> weights(rows.size(), 1.0);
  return make_objective(model, std::move(batch), std::move(weights));
}

SharpnessReport sharpness_report(const Mlp& model, const Vector& theta,
                                 const LongTailedDataset& dataset, const ClassSplit& split,
                                 Restriction restriction, std::uint64_t seed, int n_probes,
                                 int max_power_iters, double power_tol) {
  const Objective obj = restricted_objective(model, dataset, split, restriction);
  const PowerIterResult power =
      power_iteration_lambda_max(obj, theta, seed, max_power_iters, power_tol);
  const TraceEstimate trace = hutchinson_trace(obj, theta, seed, n_probes);
  SharpnessReport report;
  report.restriction = restriction;
  report.lambda_max = power.lambda_max;
  report.power_iters = power.iters;
  report.converged = power.converged;
  report.trace = trace.trace;
  report.trace_std_error = trace.std_error;
  report.probes_used = trace.probes;
  return report;
}

LandscapeSlice landscape_slice(const Objective& objective, const Vector& theta,
                               std::vector<Vector> directions, double half_width,
                               int grid_points) {
  if (directions.empty() || directions.size() > 2) {
    throw std::invalid_argument("landscape_slice: need 1 or 2 directions");
  }
  if (grid_points < 1 || grid_points % 2 == 0) {
    throw std::invalid_argument("landscape_slice: grid_points must be odd");
  }
  for (auto& d : directions) {
    const double n = d.norm();
    if (n == 0.0) throw std::invalid_argument("landscape_slice: zero direction");
    d /= n;
  }

  LandscapeSlice slice;
  slice.offsets.resize(static_cast<std::size_t>(grid_points));
  for (int g = 0; g < grid_points; ++g) {
    slice.offsets[static_cast<std::size_t>(g)] =
        grid_points == 1 ? 0.0
                         : -half_width + 2.0 * half_width * g / (grid_points - 1);
  }
  if (directions.size() == 1) {
    slice.losses.resize(1, grid_points);
    for (int g = 0; g < grid_points; ++g) {
      slice.losses(0, g) = objective(theta + slice.offsets[static_cast<std::size_t>(g)] *
                                                 directions[0]).loss;
    }
  } else {
    slice.losses.resize(grid_points, grid_points);
    for (int g1 = 0; g1 < grid_points; ++g1) {
      for (int g2 = 0; g2 < grid_points; ++g2) {
        slice.losses(g1, g2) =
            objective(theta + slice.offsets[static_cast<std::size_t>(g1)] * directions[0] +
                      slice.offsets[static_cast<std::size_t>(g2)] * directions[1]).loss;
      }
    }
  }
  slice.directions = std::move(directions);
  return slice;
}

GradCheckReport grad_check(const Mlp& model, const Vector& theta, const SampleBatch& batch,
                           std::span<const double> weights, double tol,
                           std::uint64_t coord_seed, Index max_coords) {
  if (tol <= 0.0) throw std::invalid_argument("grad_check: tol must be > 0");
  std::vector<double> w(weights.begin(), weights.end());
  const LossGrad analytic = loss_and_grad(model, theta, batch, w);

  std::vector<Index> coords(static_cast<std::size_t>(theta.size()));
  std::iota(coords.begin(), coords.end(), Index{0});
  if (theta.size() > max_coords) {
    RngEngine eng = make_engine(derive_seed(coord_seed, 0x636f6fULL));
    shuffle_indices(coords, eng);
    coords.resize(static_cast<std::size_t>(max_coords));
    std::sort(coords.begin(), coords.end());
  }

  const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  GradCheckReport report;
  Vector probe = theta;
  for (Index j : coords) {
    const double h = h0 * (std::abs(theta[j]) + 1.0);
    probe[j] = theta[j] + h;
    const double up = loss_and_grad(model, probe, batch, w).loss;
    probe[j] = theta[j] - h;
    const double down = loss_and_grad(model, probe, batch, w).loss;
    probe[j] = theta[j];
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic.grad[j];
    const double err = std::abs(a - fd) / (1.0 + std::max(std::abs(a), std::abs(fd)));
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_coordinate = j;
    }
  }
  report.coords_checked = static_cast<Index>(coords.size());
  report.pass = report.max_rel_error < tol;
  return report;
}

}  // namespace imbsam
