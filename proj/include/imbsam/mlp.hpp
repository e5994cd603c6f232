#pragma once

#include "imbsam/param_vector.hpp"
#include "imbsam/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace imbsam {

enum class Activation { kTanh, kRelu };

struct MlpSpec {
  Index input_dim = 0;
  std::vector<Index> hidden_dims;
  int num_classes = 0;  // K >= 2
  Activation activation = Activation::kTanh;
  std::uint64_t init_seed = 0;
};

// Fully connected classifier f(x; theta) with linear output logits.
// Parameters live in a flat vector addressed through the ParamLayout.
class Mlp {
 public:
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  Index param_count() const { return layout_.total(); }

 private:
  MlpSpec spec_;
  ParamLayout layout_;
};

// A materialized mini-batch: gathered features plus 1-based labels.
struct SampleBatch {
  RowMatrix x;
  std::vector<int> y;
  Index size() const { return x.rows(); }
};

// Seeded init: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
Vector init_params(const MlpSpec& spec);

RowMatrix logits(const Mlp& model, const Vector& theta, const RowMatrix& x);
RowMatrix predict_proba(const Mlp& model, const Vector& theta, const RowMatrix& x);

// Argmax over logits, ties broken toward the smaller class index. Returns 1..K.
int predict(const Mlp& model, const Vector& theta, const Tensor& x);
std::vector<int> predict_batch(const Mlp& model, const Vector& theta, const RowMatrix& x);

// Weighted sum of softmax cross-entropy terms and its exact analytic gradient.
LossGrad loss_and_grad(const Mlp& model, const Vector& theta, const SampleBatch& batch,
                       std::span<const double> weights);

// Closure over a fixed batch, re-entrant; weights are captured by value.
Objective make_objective(const Mlp& model, SampleBatch batch, std::vector<double> weights);

}  // namespace imbsam
