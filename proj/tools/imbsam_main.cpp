#include <CLI11.hpp>

#include "imbsam/io.hpp"
#include "imbsam/optim.hpp"
#include "imbsam/rng.hpp"
#include "imbsam/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace imbsam;

namespace {

std::string out_dir(const ExperimentConfig& cfg, const std::string& override_dir) {
  const std::string dir = override_dir.empty() ? cfg.output_dir : override_dir;
  fs::create_directories(dir);
  return dir;
}

std::string run_stem(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.optimizer + "_seed" + std::to_string(seed);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<long long> parse_int_list(const std::string& s) {
  std::vector<long long> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoll(item));
  }
  return out;
}

int cmd_generate(const std::string& config_path, const std::string& dir_override) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::string dir = out_dir(cfg, dir_override);
  const SeedBundle seeds = derive_seeds(cfg, cfg.seeds.front());
  const ClassGeometry geometry{cfg.mean_radius, cfg.noise_sigma};
  const auto train = generate_longtailed(seeds.data, cfg.num_classes, cfg.feature_dim, cfg.n_max,
                                         cfg.imbalance_factor, geometry);
  const auto test = generate_longtailed(seeds.test, cfg.num_classes, cfg.feature_dim,
                                        cfg.test_per_class, 1.0, geometry);
  write_dataset_csv(train, dir + "/train.csv");
  write_dataset_csv(test, dir + "/test.csv");
  std::cout << "wrote " << dir << "/train.csv (" << train.size() << " rows, IF="
            << imbalance_factor(train) << ") and " << dir << "/test.csv (" << test.size()
            << " rows)\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& dir_override) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::string dir = out_dir(cfg, dir_override);
  const Mlp model(model_spec(cfg, 0));
  std::vector<RunResult> results;
  for (std::uint64_t seed : cfg.seeds) {
    RunResult r = run_experiment(cfg, seed);
    const std::string stem = run_stem(cfg, seed);
    write_result_json(r, dir + "/result_" + stem + ".json");
    write_checkpoint(model.layout(), r.final_params, dir + "/params_" + stem + ".txt");
    std::printf("%s seed=%llu acc_all=%.4f acc_few=%.4f wall=%.2fs\n", cfg.optimizer.c_str(),
                static_cast<unsigned long long>(seed), r.accuracy.all, r.accuracy.few,
                r.wall_seconds);
    results.push_back(std::move(r));
  }
  write_metrics_csv(results, dir + "/metrics.csv");
  std::cout << "wrote " << dir << "/metrics.csv and per-seed result/params files\n";
  return 0;
}

int cmd_diagnose(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& dir_override, std::uint64_t seed_opt, int n_directions,
                 double half_width, int grid_points, const std::string& direction_kind) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::string dir = out_dir(cfg, dir_override);
  const std::uint64_t seed = seed_opt != 0 ? seed_opt : cfg.seeds.front();
  const SeedBundle seeds = derive_seeds(cfg, seed);
  const ClassGeometry geometry{cfg.mean_radius, cfg.noise_sigma};
  const auto train = generate_longtailed(seeds.data, cfg.num_classes, cfg.feature_dim, cfg.n_max,
                                         cfg.imbalance_factor, geometry);
  const ClassSplit split = split_classes(train, cfg.eta);
  const Mlp model(model_spec(cfg, seeds.init));

  const ParamVector checkpoint = read_checkpoint(checkpoint_path);
  if (!(checkpoint.layout == model.layout())) {
    throw std::runtime_error("diagnose: checkpoint layout does not match the configured model");
  }
  const Vector& theta = checkpoint.values;

  std::vector<SharpnessReport> reports;
  for (Restriction r : {Restriction::kAll, Restriction::kHead, Restriction::kTail}) {
    if ((r == Restriction::kHead && split.head_classes.empty()) ||
        (r == Restriction::kTail && split.tail_classes.empty())) {
      continue;
    }
    reports.push_back(sharpness_report(model, theta, train, split, r, seeds.probe, cfg.probes,
                                       cfg.power_iters, cfg.power_tol));
  }
  const std::string hash = config_hash(cfg);
  write_sharpness_csv(reports, hash, cfg.optimizer, seed, dir + "/sharpness.csv");

  for (Restriction r : {Restriction::kAll, Restriction::kHead, Restriction::kTail}) {
    if ((r == Restriction::kHead && split.head_classes.empty()) ||
        (r == Restriction::kTail && split.tail_classes.empty())) {
      continue;
    }
    const Objective obj = restricted_objective(model, train, split, r);
    std::vector<Vector> directions;
    RngEngine eng = make_engine(derive_seed(seeds.probe, 0x736c69ULL));
    if (direction_kind == "grad") {
      directions.push_back(obj(theta).grad);
    } else {
      Vector d(theta.size());
      for (Index i = 0; i < d.size(); ++i) d[i] = gaussian(eng);
      directions.push_back(std::move(d));
    }
    if (n_directions == 2) {
      Vector d(theta.size());
      for (Index i = 0; i < d.size(); ++i) d[i] = gaussian(eng);
      directions.push_back(std::move(d));
    }
    const LandscapeSlice slice = landscape_slice(obj, theta, std::move(directions), half_width,
                                                 grid_points);
    const std::string name = std::string(restriction_name(r));
    write_landscape_csv(slice, hash + "_seed" + std::to_string(seed), name,
                        dir + "/landscape_" + name + ".csv");
  }
  std::cout << "wrote " << dir << "/sharpness.csv and landscape CSVs\n";
  return 0;
}

int cmd_grid(const std::string& config_path, const std::string& rho_csv,
             const std::string& eta_csv, const std::string& dir_override) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::string dir = out_dir(cfg, dir_override);
  const auto rhos = parse_double_list(rho_csv);
  const auto etas = parse_int_list(eta_csv);
  const auto cells = ablation_grid(cfg, rhos, etas);
  write_grid_csv(cells, dir + "/grid.csv");
  int failed = 0;
  for (const auto& c : cells) failed += c.ok ? 0 : 1;
  std::cout << "wrote " << dir << "/grid.csv (" << cells.size() << " cells, " << failed
            << " failed)\n";
  return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, const std::string& out) {
  const RunResult a = read_result_json(path_a);
  const RunResult b = read_result_json(path_b);
  const GainReport report = accuracy_gain_report(a, b);
  const std::string run_a = a.optimizer + "_seed" + std::to_string(a.master_seed);
  const std::string run_b = b.optimizer + "_seed" + std::to_string(b.master_seed);
  write_gain_csv(report, run_a, run_b, out);
  std::printf("delta acc: all=%+.4f many=%+.4f medium=%+.4f few=%+.4f\n", report.delta_all,
              report.delta_many, report.delta_medium, report.delta_few);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale training laboratory for class-aware sharpness-aware minimization"};
  app.require_subcommand(1);

  std::string config_path, dir_override, checkpoint_path;
  std::string rho_csv = "0.05", eta_csv = "100";
  std::string path_a, path_b, gain_out = "gains.csv";
  std::string direction_kind = "random";
  std::uint64_t seed_opt = 0;
  int n_directions = 1, grid_points = 41;
  double half_width = 1.0;

  auto* gen = app.add_subcommand("generate", "Write the train/test datasets as CSV");
  gen->add_option("--config", config_path, "experiment config file")->required();
  gen->add_option("--out", dir_override, "output directory (defaults to output.dir)");

  auto* train = app.add_subcommand("train", "Train one run per seed; write results and params");
  train->add_option("--config", config_path)->required();
  train->add_option("--out", dir_override);

  auto* diag = app.add_subcommand("diagnose", "Sharpness and loss-landscape reports for a checkpoint");
  diag->add_option("--config", config_path)->required();
  diag->add_option("--checkpoint", checkpoint_path, "params file written by train")->required();
  diag->add_option("--out", dir_override);
  diag->add_option("--seed", seed_opt, "master seed (defaults to first of run.seeds)");
  diag->add_option("--directions", n_directions, "1 or 2 slice directions")
      ->check(CLI::Range(1, 2));
  diag->add_option("--half-width", half_width, "slice half width");
  diag->add_option("--grid-points", grid_points, "odd number of grid points per axis");
  diag->add_option("--direction-kind", direction_kind, "random | grad")
      ->check(CLI::IsMember({"random", "grad"}));

  auto* grid = app.add_subcommand("grid", "Run the rho x eta ablation grid");
  grid->add_option("--config", config_path)->required();
  grid->add_option("--rho", rho_csv, "comma-separated rho values");
  grid->add_option("--eta", eta_csv, "comma-separated eta values");
  grid->add_option("--out", dir_override);

  auto* cmp = app.add_subcommand("compare", "Per-class accuracy gains of result B over result A");
  cmp->add_option("--a", path_a, "baseline result JSON")->required();
  cmp->add_option("--b", path_b, "comparison result JSON")->required();
  cmp->add_option("--out", gain_out, "gain report CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(config_path, dir_override);
    if (train->parsed()) return cmd_train(config_path, dir_override);
    if (diag->parsed()) {
      return cmd_diagnose(config_path, checkpoint_path, dir_override, seed_opt, n_directions,
                          half_width, grid_points, direction_kind);
    }
    if (grid->parsed()) return cmd_grid(config_path, rho_csv, eta_csv, dir_override);
    if (cmp->parsed()) return cmd_compare(path_a, path_b, gain_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
