#pragma once

#include "imbsam/mlp.hpp"
#include "imbsam/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace imbsam {

// Labeled sample set with per-class counts. Labels are 1-based in [1..K];
// class_counts[k-1] is the number of samples carrying label k, and every
// class holds at least one sample.
struct LongTailedDataset {
  Tensor features;               // n x feature_dim, row-major
  std::vector<int> labels;       // size n
  std::vector<Index> class_counts;
  int num_classes = 0;
  Index feature_dim = 0;

  Index size() const { return static_cast<Index>(labels.size()); }
};

// Placement of per-class Gaussian means: evenly spaced on a circle of radius
// mean_radius embedded in the first two feature coordinates (a line for 1-D
// features); isotropic noise_sigma noise in all coordinates.
struct ClassGeometry {
  double mean_radius = 3.0;
  double noise_sigma = 1.0;
};

// Head/tail partition of the classes induced by the split threshold eta:
// a class is tail iff its training count is <= eta.
struct ClassSplit {
  long long eta = 0;
  std::vector<int> head_classes;  // ascending 1-based ids
  std::vector<int> tail_classes;
  std::vector<char> tail_mask;    // indexed by class id - 1

  bool is_tail(int cls) const { return tail_mask[static_cast<std::size_t>(cls - 1)] != 0; }
};

// One mini-batch: dataset row indices plus the head/tail partition of those
// rows (both parts preserve the order of `indices`).
struct Batch {
  std::vector<Index> indices;
  std::vector<Index> head_part;
  std::vector<Index> tail_part;
};

// Class k of K receives round(n_max * IF^-((k-1)/(K-1))) samples drawn from a
// seeded Gaussian around its class mean. IF = 1 yields a balanced set.
LongTailedDataset generate_longtailed(std::uint64_t seed, int num_classes, Index feature_dim,
                                      Index n_max, double imbalance_factor,
                                      const ClassGeometry& geometry = {});

// max_k |S^k| / min_k |S^k|
double imbalance_factor(const LongTailedDataset& dataset);

ClassSplit split_classes(const LongTailedDataset& dataset, long long eta);

// One epoch of seeded shuffled mini-batches; the last partial batch is kept.
std::vector<Batch> batches(const LongTailedDataset& dataset, const ClassSplit& split,
                           Index batch_size, std::uint64_t seed, std::uint64_t epoch);

// Evaluation protocol groups: Many (count > many_min), Medium
// (few_max <= count <= many_min), Few (count < few_max). 1-based class ids.
struct EvalSplits {
  std::vector<int> many;
  std::vector<int> medium;
  std::vector<int> few;
};

EvalSplits evaluation_splits(std::span<const Index> train_counts, long long many_min = 100,
                             long long few_max = 20);

SampleBatch gather(const LongTailedDataset& dataset, std::span<const Index> indices);

void write_dataset_csv(const LongTailedDataset& dataset, const std::string& path);
LongTailedDataset read_dataset_csv(const std::string& path);

std::uint64_t dataset_hash(const LongTailedDataset& dataset);

}  // namespace imbsam
