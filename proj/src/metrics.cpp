#include "imbsam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace imbsam {

namespace {

double split_mean(const std::vector<double>& per_class, const std::vector<int>& classes) {
  if (classes.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (int cls : classes) sum += per_class[static_cast<std::size_t>(cls - 1)];
  return sum / static_cast<double>(classes.size());
}

double average_precision(std::span<const double> scores, std::span<const int> labels,
                         int positive_label, bool flip_scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) { return flip_scores ? -scores[i] : scores[i]; };
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return key(a) > key(b); });

  long long total_pos = 0;
  for (int y : labels) total_pos += (y == positive_label);

  double ap = 0.0;
  double prev_recall = 0.0;
  long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {  // process tied scores as one threshold
    std::size_t j = i;
    while (j < n && key(order[j]) == key(order[i])) {
      if (labels[order[j]] == positive_label) ++tp; else ++fp;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace

AccuracyReport per_class_accuracy(const Mlp& model, const Vector& theta,
                                  const LongTailedDataset& test_set,
                                  std::span<const Index> train_counts, long long many_min,
                                  long long few_max) {
  const int K = model.spec().num_classes;
  if (static_cast<int>(train_counts.size()) != K) {
    throw std::invalid_argument("per_class_accuracy: train count vector length mismatch");
  }
  for (int k = 1; k <= K; ++k) {
    if (test_set.class_counts[static_cast<std::size_t>(k - 1)] == 0) {
      throw std::invalid_argument("per_class_accuracy: class " + std::to_string(k) +
                                  " missing from test set");
    }
  }
  const std::vector<int> predicted = predict_batch(model, theta, test_set.features.mat());
  std::vector<long long> correct(static_cast<std::size_t>(K), 0);
  for (Index i = 0; i < test_set.size(); ++i) {
    const int y = test_set.labels[static_cast<std::size_t>(i)];
    if (predicted[static_cast<std::size_t>(i)] == y) ++correct[static_cast<std::size_t>(y - 1)];
  }

  AccuracyReport report;
  report.per_class.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    report.per_class[static_cast<std::size_t>(k)] =
        static_cast<double>(correct[static_cast<std::size_t>(k)]) /
        static_cast<double>(test_set.class_counts[static_cast<std::size_t>(k)]);
  }
  report.all = std::accumulate(report.per_class.begin(), report.per_class.end(), 0.0) /
               static_cast<double>(K);
  report.splits = evaluation_splits(train_counts, many_min, few_max);
  report.many = split_mean(report.per_class, report.splits.many);
  report.medium = split_mean(report.per_class, report.splits.medium);
  report.few = split_mean(report.per_class, report.splits.few);
  return report;
}

BinaryRankMetrics binary_rank_metrics(std::span<const double> scores,
                                      std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("binary_rank_metrics: scores/labels length mismatch");
  }
  long long n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1) ++n_pos;
    else if (y == 0) ++n_neg;
    else throw std::invalid_argument("binary_rank_metrics: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("binary_rank_metrics: both labels must be present");
  }

  // Mann-Whitney with midranks for ties.
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = midrank;
    i = j;
  }
  double rank_sum_pos = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1) rank_sum_pos += rank[k];
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);

  BinaryRankMetrics m;
  m.aucroc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
  m.aucpr_anomaly = average_precision(scores, labels, 1, false);
  m.aucpr_normal = average_precision(scores, labels, 0, true);
  return m;
}

}  // namespace imbsam
