#pragma once

#include "imbsam/config.hpp"
#include "imbsam/data.hpp"
#include "imbsam/diagnostics.hpp"
#include "imbsam/metrics.hpp"
#include "imbsam/mlp.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace imbsam {

// Everything one training run produces. Deterministic given (config, seed)
// except wall_seconds.
struct RunResult {
  std::string config_hash;
  std::uint64_t master_seed = 0;
  std::string optimizer;
  int num_classes = 0;
  std::vector<Index> train_class_counts;
  long long eta = 0;
  long long many_min = 100;
  long long few_max = 20;

  std::vector<double> epoch_loss_all;   // unweighted sums over the train set
  std::vector<double> epoch_loss_head;
  std::vector<double> epoch_loss_tail;
  // Mean |eps_head|/|eps_tail| over the batches of each instrumented epoch
  // (batches with an empty part are skipped as degenerate).
  std::vector<double> epoch_perturbation_ratio;

  AccuracyReport accuracy;
  double aucroc;        // K == 2 only, NaN otherwise
  double aucpr_tail;
  double aucpr_head;
  std::vector<SharpnessReport> sharpness;  // all/head/tail when enabled

  double wall_seconds = 0.0;
  std::uint64_t test_set_hash = 0;
  Vector final_params;
};

// Named seed streams derived from (config base seeds, master seed); every
// optimizer sees the same data, init, shuffle and probe streams for a given
// master seed.
struct SeedBundle {
  std::uint64_t data;
  std::uint64_t test;
  std::uint64_t init;
  std::uint64_t shuffle;
  std::uint64_t probe;
};

SeedBundle derive_seeds(const ExperimentConfig& config, std::uint64_t master_seed);

MlpSpec model_spec(const ExperimentConfig& config, std::uint64_t init_seed);

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t master_seed);

// First seed of config.seeds.
RunResult run_experiment(const ExperimentConfig& config);

struct GridCell {
  double rho = 0.0;
  long long eta = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunResult result;
};

// One run per (rho, eta, seed); cells share dataset and init seeds. Failures
// are recorded in the cell and do not stop the grid.
std::vector<GridCell> ablation_grid(const ExperimentConfig& base, std::span<const double> rhos,
                                    std::span<const long long> etas);

// Per-class accuracy deltas result_b - result_a plus split aggregates.
struct GainReport {
  std::vector<double> delta_per_class;
  double delta_all = 0.0;
  double delta_many = 0.0;
  double delta_medium = 0.0;
  double delta_few = 0.0;
  EvalSplits splits;
};

GainReport accuracy_gain_report(const RunResult& a, const RunResult& b);

}  // namespace imbsam
