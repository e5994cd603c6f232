#pragma once

#include "imbsam/data.hpp"
#include "imbsam/mlp.hpp"

#include <span>
#include <vector>

namespace imbsam {

// Top-1 accuracy per class plus the Many/Medium/Few protocol aggregates.
// Split values are unweighted means over the classes in the split and NaN for
// empty splits; `all` is the unweighted mean over every class.
struct AccuracyReport {
  std::vector<double> per_class;  // indexed by class - 1
  double all = 0.0;
  double many = 0.0;
  double medium = 0.0;
  double few = 0.0;
  EvalSplits splits;
};

AccuracyReport per_class_accuracy(const Mlp& model, const Vector& theta,
                                  const LongTailedDataset& test_set,
                                  std::span<const Index> train_counts, long long many_min = 100,
                                  long long few_max = 20);

// Threshold-free ranking metrics for the binary (head/tail) setting. `scores`
// are tail-class probabilities, `labels` are 0 (normal/head) or 1
// (anomaly/tail). AUCROC uses the Mann-Whitney statistic with tie midranks;
// AUCPR integrates the precision-recall steps at each distinct threshold.
// The normal-side AUCPR ranks by 1 - score.
struct BinaryRankMetrics {
  double aucroc = 0.0;
  double aucpr_anomaly = 0.0;
  double aucpr_normal = 0.0;
};

BinaryRankMetrics binary_rank_metrics(std::span<const double> scores, std::span<const int> labels);

}  // namespace imbsam
