#include "imbsam/runner.hpp"

#include "imbsam/optim.hpp"
#include "imbsam/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace imbsam {

namespace {

constexpr std::uint64_t kDataTag = 1;
constexpr std::uint64_t kTestTag = 2;
constexpr std::uint64_t kInitTag = 3;
constexpr std::uint64_t kShuffleTag = 4;
constexpr std::uint64_t kProbeTag = 5;

Activation activation_from(const std::string& name) {
  return name == "relu" ? Activation::kRelu : Activation::kTanh;
}

std::vector<double> sample_weights(const ExperimentConfig& cfg, const LongTailedDataset& data,
                                   std::span<const Index> rows) {
  std::vector<double> w(rows.size(), 1.0);
  if (!cfg.class_weights.empty()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      w[i] = cfg.class_weights[static_cast<std::size_t>(
          data.labels[static_cast<std::size_t>(rows[i])] - 1)];
    }
  }
  return w;
}

Objective part_objective(const Mlp& model, const ExperimentConfig& cfg,
                         const LongTailedDataset& data, std::span<const Index> rows) {
  if (rows.empty()) return {};
  return make_objective(model, gather(data, rows), sample_weights(cfg, data, rows));
}

double restricted_loss(const Mlp& model, const Vector& theta, const LongTailedDataset& data,
                       const ClassSplit& split, Restriction restriction) {
  std::vector<Index> rows;
  for (Index i = 0; i < data.size(); ++i) {
    const bool tail = split.is_tail(data.labels[static_cast<std::size_t>(i)]);
    if (restriction == Restriction::kAll || (restriction == Restriction::kTail) == tail) {
      rows.push_back(i);
    }
  }
  if (rows.empty()) return 0.0;
  const SampleBatch batch = gather(data, rows);
  const std::vector<double> w(rows.size(), 1.0);
  return loss_and_grad(model, theta, batch, w).loss;
}

double scheduled_lr(const ExperimentConfig& cfg, int epoch) {
  if (cfg.lr_schedule == "cosine") {
    return 0.5 * cfg.learning_rate *
           (1.0 + std::cos(3.141592653589793238462643383280 * epoch / cfg.epochs));
  }
  return cfg.learning_rate;
}

}  // namespace

SeedBundle derive_seeds(const ExperimentConfig& config, std::uint64_t master_seed) {
  SeedBundle s;
  s.data = derive_seed(derive_seed(config.data_seed, kDataTag), master_seed);
  s.test = derive_seed(derive_seed(config.data_seed, kTestTag), master_seed);
  s.init = derive_seed(derive_seed(config.init_seed, kInitTag), master_seed);
  s.shuffle = derive_seed(derive_seed(config.shuffle_seed, kShuffleTag), master_seed);
  s.probe = derive_seed(derive_seed(config.probe_seed, kProbeTag), master_seed);
  return s;
}

MlpSpec model_spec(const ExperimentConfig& config, std::uint64_t init_seed) {
  MlpSpec spec;
  spec.input_dim = config.feature_dim;
  spec.hidden_dims = config.hidden_dims;
  spec.num_classes = config.num_classes;
  spec.activation = activation_from(config.activation);
  spec.init_seed = init_seed;
  return spec;
}

RunResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, config.seeds.front());
}

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t master_seed) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();
  const SeedBundle seeds = derive_seeds(config, master_seed);
  const ClassGeometry geometry{config.mean_radius, config.noise_sigma};

  const LongTailedDataset train =
      generate_longtailed(seeds.data, config.num_classes, config.feature_dim, config.n_max,
                          config.imbalance_factor, geometry);
  const LongTailedDataset test =
      generate_longtailed(seeds.test, config.num_classes, config.feature_dim,
                          config.test_per_class, 1.0, geometry);
  const ClassSplit split = split_classes(train, config.eta);

  const Mlp model(model_spec(config, seeds.init));
  Vector theta = init_params(model.spec());

  OptimConfig ocfg;
  ocfg.learning_rate = config.learning_rate;
  ocfg.weight_decay = config.weight_decay;
  ocfg.momentum = config.momentum;
  ocfg.rho = config.rho;
  ocfg.class_weights = config.class_weights;
  OptimState state = make_optim_state(model.param_count());

  RunResult result;
  result.config_hash = config_hash(config);
  result.master_seed = master_seed;
  result.optimizer = config.optimizer;
  result.num_classes = config.num_classes;
  result.train_class_counts = train.class_counts;
  result.eta = config.eta;
  result.many_min = config.many_min;
  result.few_max = config.few_max;
  result.test_set_hash = dataset_hash(test);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    ocfg.learning_rate = scheduled_lr(config, epoch);
    const bool track_ratio = epoch < config.ratio_epochs;
    double ratio_sum = 0.0;
    long ratio_batches = 0;

    long step_in_epoch = 0;
    for (const Batch& batch :
         batches(train, split, config.batch_size, seeds.shuffle, static_cast<std::uint64_t>(epoch))) {
      // One canonical whole-batch objective shared by every optimizer (and by
      // ImbSAM's degenerate fallbacks); it does not depend on the eta split.
      const Objective combined = part_objective(model, config, train, batch.indices);
      const bool need_parts = config.optimizer == "imbsam" || track_ratio;
      const Objective head =
          need_parts ? part_objective(model, config, train, batch.head_part) : Objective{};
      const Objective tail =
          need_parts ? part_objective(model, config, train, batch.tail_part) : Objective{};

      if (track_ratio && head && tail) {
        const PerturbationSplit ps =
            perturbation_decomposition(head(theta).grad, tail(theta).grad, ocfg.rho);
        if (std::isfinite(ps.norm_ratio)) {
          ratio_sum += ps.norm_ratio;
          ++ratio_batches;
        }
      }

      try {
        if (config.optimizer == "sgd") {
          sgd_step(state, ocfg, theta, combined);
        } else if (config.optimizer == "sam") {
          sam_step(state, ocfg, theta, combined);
        } else {
          imbsam_step(state, ocfg, theta, head, tail, combined);
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("run_experiment: epoch " + std::to_string(epoch) + " step " +
                                 std::to_string(step_in_epoch) + ": " + e.what());
      }
      ++step_in_epoch;
    }

    if (track_ratio) {
      result.epoch_perturbation_ratio.push_back(
          ratio_batches > 0 ? ratio_sum / static_cast<double>(ratio_batches)
                            : std::numeric_limits<double>::quiet_NaN());
    }
    const double loss_head = restricted_loss(model, theta, train, split, Restriction::kHead);
    const double loss_tail = restricted_loss(model, theta, train, split, Restriction::kTail);
    const double loss_all = loss_head + loss_tail;
    if (!std::isfinite(loss_all)) {
      throw std::runtime_error("run_experiment: non-finite training loss after epoch " +
                               std::to_string(epoch));
    }
    result.epoch_loss_all.push_back(loss_all);
    result.epoch_loss_head.push_back(loss_head);
    result.epoch_loss_tail.push_back(loss_tail);
  }

  result.accuracy = per_class_accuracy(model, theta, test, train.class_counts, config.many_min,
                                       config.few_max);

  result.aucroc = std::numeric_limits<double>::quiet_NaN();
  result.aucpr_tail = std::numeric_limits<double>::quiet_NaN();
  result.aucpr_head = std::numeric_limits<double>::quiet_NaN();
  if (config.num_classes == 2) {
    const RowMatrix proba = predict_proba(model, theta, test.features.mat());
    std::vector<double> scores(static_cast<std::size_t>(test.size()));
    std::vector<int> binary(static_cast<std::size_t>(test.size()));
    for (Index i = 0; i < test.size(); ++i) {
      scores[static_cast<std::size_t>(i)] = proba(i, 1);  // tail-class probability
      binary[static_cast<std::size_t>(i)] = test.labels[static_cast<std::size_t>(i)] == 2 ? 1 : 0;
    }
    const BinaryRankMetrics m = binary_rank_metrics(scores, binary);
    result.aucroc = m.aucroc;
    result.aucpr_tail = m.aucpr_anomaly;
    result.aucpr_head = m.aucpr_normal;
  }

  if (config.sharpness) {
    for (Restriction r : {Restriction::kAll, Restriction::kHead, Restriction::kTail}) {
      const bool empty = (r == Restriction::kHead && split.head_classes.empty()) ||
                         (r == Restriction::kTail && split.tail_classes.empty());
      if (empty) continue;
      result.sharpness.push_back(sharpness_report(model, theta, train, split, r, seeds.probe,
                                                  config.probes, config.power_iters,
                                                  config.power_tol));
    }
  }

  result.final_params = std::move(theta);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<GridCell> ablation_grid(const ExperimentConfig& base, std::span<const double> rhos,
                                    std::span<const long long> etas) {
  if (rhos.empty() || etas.empty()) {
    throw std::invalid_argument("ablation_grid: rho and eta lists must be nonempty");
  }
  std::vector<GridCell> cells;
  for (double rho : rhos) {
    for (long long eta : etas) {
      ExperimentConfig cfg = base;
      cfg.rho = rho;
      cfg.eta = eta;
      for (std::uint64_t seed : base.seeds) {
        GridCell cell;
        cell.rho = rho;
        cell.eta = eta;
        cell.seed = seed;
        try {
          cell.result = run_experiment(cfg, seed);
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

GainReport accuracy_gain_report(const RunResult& a, const RunResult& b) {
  if (a.num_classes != b.num_classes) {
    throw std::invalid_argument("accuracy_gain_report: class counts differ");
  }
  if (a.test_set_hash != b.test_set_hash) {
    throw std::invalid_argument("accuracy_gain_report: results use different test sets");
  }
  if (a.train_class_counts != b.train_class_counts || a.many_min != b.many_min ||
      a.few_max != b.few_max) {
    throw std::invalid_argument("accuracy_gain_report: evaluation protocols differ");
  }
  GainReport report;
  const std::size_t K = a.accuracy.per_class.size();
  report.delta_per_class.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    report.delta_per_class[k] = b.accuracy.per_class[k] - a.accuracy.per_class[k];
  }
  report.delta_all =
      std::accumulate(report.delta_per_class.begin(), report.delta_per_class.end(), 0.0) /
      static_cast<double>(K);
  report.splits = evaluation_splits(a.train_class_counts, a.many_min, a.few_max);
  auto split_delta = [&](const std::vector<int>& classes) {
    if (classes.empty()) return std::numeric_limits<double>::quiet_NaN();
    double sum = 0.0;
    for (int cls : classes) sum += report.delta_per_class[static_cast<std::size_t>(cls - 1)];
    return sum / static_cast<double>(classes.size());
  };
  report.delta_many = split_delta(report.splits.many);
  report.delta_medium = split_delta(report.splits.medium);
  report.delta_few = split_delta(report.splits.few);
  return report;
}

}  // namespace imbsam
