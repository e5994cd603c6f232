#include "imbsam/data.hpp"

#include "imbsam/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace imbsam {

namespace {

std::vector<Index> longtail_counts(int num_classes, Index n_max, double imbalance_factor) {
  std::vector<Index> counts(static_cast<std::size_t>(num_classes));
  for (int k = 1; k <= num_classes; ++k) {
    const double expo = -static_cast<double>(k - 1) / static_cast<double>(num_classes - 1);
    const double nk = static_cast<double>(n_max) * std::pow(imbalance_factor, expo);
    counts[static_cast<std::size_t>(k - 1)] = static_cast<Index>(std::llround(nk));
  }
  return counts;
}

// Slot of class k among the K evenly spaced positions. Low class indices
// carry the large counts, so interleaving the first and second half keeps
// every small class flanked by data-rich neighbors instead of clustering the
// sparse classes on one arc.
int placement_slot(int k, int num_classes) {
  const int half = (num_classes + 1) / 2;
  return k <= half ? 2 * (k - 1) : 2 * (k - half) - 1;
}

// Mean of class k: evenly spaced on a circle in the first two coordinates,
// or on a line segment for 1-D features.
Vector class_mean(int k, int num_classes, Index feature_dim, double radius) {
  const int slot = placement_slot(k, num_classes);
  Vector mean = Vector::Zero(feature_dim);
  if (feature_dim == 1) {
    mean[0] = -radius + 2.0 * radius * static_cast<double>(slot) /
                            static_cast<double>(num_classes - 1);
  } else {
    const double angle =
        6.283185307179586476925286766559 * static_cast<double>(slot) / num_classes;
    mean[0] = radius * std::cos(angle);
    mean[1] = radius * std::sin(angle);
  }
  return mean;
}

}  // namespace

LongTailedDataset generate_longtailed(std::uint64_t seed, int num_classes, Index feature_dim,
                                      Index n_max, double imbalance_factor,
                                      const ClassGeometry& geometry) {
  if (num_classes < 2) throw std::invalid_argument("generate_longtailed: need at least 2 classes");
  if (feature_dim < 1) throw std::invalid_argument("generate_longtailed: feature_dim must be >= 1");
  if (imbalance_factor < 1.0) {
    throw std::invalid_argument("generate_longtailed: imbalance factor must be >= 1");
  }
  if (static_cast<double>(n_max) < imbalance_factor) {
    throw std::invalid_argument("generate_longtailed: n_max must be >= imbalance factor");
  }

  const std::vector<Index> counts = longtail_counts(num_classes, n_max, imbalance_factor);
  const Index n = std::accumulate(counts.begin(), counts.end(), Index{0});

  LongTailedDataset ds;
  ds.num_classes = num_classes;
  ds.feature_dim = feature_dim;
  ds.class_counts = counts;
  ds.features = Tensor({n, feature_dim});
  ds.labels.resize(static_cast<std::size_t>(n));

  RngEngine eng = make_engine(derive_seed(seed, 0x64617461ULL));
  Index row = 0;
  for (int k = 1; k <= num_classes; ++k) {
    const Vector mean = class_mean(k, num_classes, feature_dim, geometry.mean_radius);
    for (Index i = 0; i < counts[static_cast<std::size_t>(k - 1)]; ++i, ++row) {
      for (Index j = 0; j < feature_dim; ++j) {
        ds.features(row, j) = mean[j] + geometry.noise_sigma * gaussian(eng);
      }
      ds.labels[static_cast<std::size_t>(row)] = k;
    }
  }
  return ds;
}

double imbalance_factor(const LongTailedDataset& dataset) {
  const auto [mn, mx] = std::minmax_element(dataset.class_counts.begin(),
                                            dataset.class_counts.end());
  return static_cast<double>(*mx) / static_cast<double>(*mn);
}

ClassSplit split_classes(const LongTailedDataset& dataset, long long eta) {
  if (eta < 0) throw std::invalid_argument("split_classes: eta must be >= 0");
  ClassSplit split;
  split.eta = eta;
  split.tail_mask.resize(dataset.class_counts.size(), 0);
  for (int k = 1; k <= dataset.num_classes; ++k) {
    const long long count = dataset.class_counts[static_cast<std::size_t>(k - 1)];
    if (count > eta) {
      split.head_classes.push_back(k);
    } else {  // boundary count == eta is tail
      split.tail_classes.push_back(k);
      split.tail_mask[static_cast<std::size_t>(k - 1)] = 1;
    }
  }
  return split;
}

std::vector<Batch> batches(const LongTailedDataset& dataset, const ClassSplit& split,
                           Index batch_size, std::uint64_t seed, std::uint64_t epoch) {
  if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
  std::vector<Index> perm(static_cast<std::size_t>(dataset.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  RngEngine eng = make_engine(derive_seed(seed, epoch));
  shuffle_indices(perm, eng);

  std::vector<Batch> out;
  for (Index start = 0; start < dataset.size(); start += batch_size) {
    const Index stop = std::min(start + batch_size, dataset.size());
    Batch b;
    b.indices.assign(perm.begin() + start, perm.begin() + stop);
    for (Index idx : b.indices) {
      if (split.is_tail(dataset.labels[static_cast<std::size_t>(idx)])) {
        b.tail_part.push_back(idx);
      } else {
        b.head_part.push_back(idx);
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

EvalSplits evaluation_splits(std::span<const Index> train_counts, long long many_min,
                             long long few_max) {
  EvalSplits splits;
  for (std::size_t i = 0; i < train_counts.size(); ++i) {
    const long long c = train_counts[i];
    const int cls = static_cast<int>(i) + 1;
    if (c > many_min) {
      splits.many.push_back(cls);
    } else if (c < few_max) {
      splits.few.push_back(cls);
    } else {
      splits.medium.push_back(cls);
    }
  }
  return splits;
}

SampleBatch gather(const LongTailedDataset& dataset, std::span<const Index> indices) {
  SampleBatch batch;
  batch.x.resize(static_cast<Index>(indices.size()), dataset.feature_dim);
  batch.y.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    batch.x.row(static_cast<Index>(i)) = dataset.features.row(indices[i]).transpose();
    batch.y[i] = dataset.labels[static_cast<std::size_t>(indices[i])];
  }
  return batch;
}

void write_dataset_csv(const LongTailedDataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  for (Index j = 0; j < dataset.feature_dim; ++j) out << "f" << j << ",";
  out << "y\n";
  char buf[64];
  for (Index i = 0; i < dataset.size(); ++i) {
    for (Index j = 0; j < dataset.feature_dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, j));
      out << buf << ",";
    }
    out << dataset.labels[static_cast<std::size_t>(i)] << "\n";
  }
  if (!out) throw std::runtime_error("write_dataset_csv: write failed for " + path);
}

LongTailedDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_dataset_csv: empty file " + path);

  Index feature_dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      if (cell == "y") break;
      ++feature_dim;
    }
  }
  if (feature_dim < 1) throw std::runtime_error("read_dataset_csv: no feature columns in " + path);

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    for (Index j = 0; j < feature_dim; ++j) {
      if (!std::getline(row, cell, ',')) {
        throw std::runtime_error("read_dataset_csv: short row in " + path);
      }
      values.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell, ',')) {
      throw std::runtime_error("read_dataset_csv: missing label in " + path);
    }
    labels.push_back(std::stoi(cell));
  }
  if (labels.empty()) throw std::runtime_error("read_dataset_csv: no rows in " + path);

  const Index n = static_cast<Index>(labels.size());
  const int num_classes = *std::max_element(labels.begin(), labels.end());
  LongTailedDataset ds;
  ds.num_classes = num_classes;
  ds.feature_dim = feature_dim;
  ds.labels = std::move(labels);
  ds.features = Tensor({n, feature_dim});
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < feature_dim; ++j) {
      ds.features(i, j) = values[static_cast<std::size_t>(i * feature_dim + j)];
    }
  }
  ds.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (int y : ds.labels) {
    if (y < 1 || y > num_classes) throw std::runtime_error("read_dataset_csv: label out of range");
    ++ds.class_counts[static_cast<std::size_t>(y - 1)];
  }
  for (Index c : ds.class_counts) {
    if (c == 0) throw std::runtime_error("read_dataset_csv: a class has no samples");
  }
  return ds;
}

std::uint64_t dataset_hash(const LongTailedDataset& dataset) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](const unsigned char* p, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  const auto& v = dataset.features.data();
  mix(reinterpret_cast<const unsigned char*>(v.data()), sizeof(double) * v.size());
  mix(reinterpret_cast<const unsigned char*>(dataset.labels.data()),
      sizeof(int) * dataset.labels.size());
  return h;
}

}  // namespace imbsam
