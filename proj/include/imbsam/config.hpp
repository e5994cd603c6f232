#pragma once

#include "imbsam/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace imbsam {

// Experiment description, loaded from a flat `key = value` file with dotted
// section keys (see serialize_config for the full schema). Every field has a
// default, unknown keys are rejected, and the canonical serialization is
// hashed into each output for provenance.
struct ExperimentConfig {
  int schema_version = 1;

  // data.*
  std::uint64_t data_seed = 1;
  int num_classes = 10;
  Index feature_dim = 8;
  Index n_max = 500;
  double imbalance_factor = 100.0;
  double mean_radius = 3.0;
  double noise_sigma = 1.0;
  Index test_per_class = 200;

  // model.*
  std::vector<Index> hidden_dims = {32};
  std::string activation = "tanh";  // tanh | relu
  std::uint64_t init_seed = 7;

  // optim.*
  std::string optimizer = "sgd";  // sgd | sam | imbsam
  double learning_rate = 0.1;
  std::string lr_schedule = "constant";  // constant | cosine
  double weight_decay = 0.0;
  double momentum = 0.9;
  double rho = 0.05;
  long long eta = 100;
  std::vector<double> class_weights;  // empty = all classes weighted 1

  // train.*
  int epochs = 50;
  Index batch_size = 64;
  std::uint64_t shuffle_seed = 3;

  // eval.*
  long long many_min = 100;
  long long few_max = 20;

  // diag.*
  bool sharpness = false;
  std::uint64_t probe_seed = 99;
  int probes = 64;
  int power_iters = 100;
  double power_tol = 1e-4;
  int ratio_epochs = 0;  // epochs with head/tail perturbation-ratio tracking

  // output.*
  std::string output_dir = "runs/out";

  // run.*
  std::vector<std::uint64_t> seeds = {1};
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical form: every key in fixed order, doubles printed with %.17g.
std::string serialize_config(const ExperimentConfig& config);

// FNV-1a over the canonical serialization, as a fixed-width hex string.
std::string config_hash(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

}  // namespace imbsam
