#include "imbsam/mlp.hpp"

#include "imbsam/rng.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace imbsam {

namespace {

std::vector<LayerDims> layer_dims(const MlpSpec& spec) {
  std::vector<LayerDims> dims;
  Index in = spec.input_dim;
  for (Index h : spec.hidden_dims) {
    dims.push_back({in, h});
    in = h;
  }
  dims.push_back({in, static_cast<Index>(spec.num_classes)});
  return dims;
}

void validate(const MlpSpec& spec) {
  if (spec.input_dim < 1) throw std::invalid_argument("MlpSpec: input_dim must be >= 1");
  if (spec.num_classes < 2) throw std::invalid_argument("MlpSpec: num_classes must be >= 2");
  for (Index h : spec.hidden_dims) {
    if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
  }
}

RowMatrix activate(const RowMatrix& z, Activation act) {
  if (act == Activation::kTanh) return z.array().tanh();
  return z.cwiseMax(0.0);
}

// Derivative of the activation expressed through pre- and post-activation.
RowMatrix activate_grad(const RowMatrix& z, const RowMatrix& a, Activation act) {
  if (act == Activation::kTanh) return 1.0 - a.array().square();
  return (z.array() > 0.0).cast<double>();
}

}  // namespace

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  layout_ = ParamLayout(layer_dims(spec_));
}

Vector init_params(const MlpSpec& spec) {
  validate(spec);
  ParamLayout layout{layer_dims(spec)};
  Vector theta = Vector::Zero(layout.total());
  RngEngine eng = make_engine(spec.init_seed);
  for (Index l = 0; l < layout.layer_count(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layout.dims(l).in));
    auto w = layout.weight(theta, l);
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = scale * uniform_pm1(eng);
    }
    // biases stay zero
  }
  return theta;
}

RowMatrix logits(const Mlp& model, const Vector& theta, const RowMatrix& x) {
  if (x.cols() != model.spec().input_dim) {
    throw std::invalid_argument("logits: feature dimension mismatch");
  }
  if (theta.size() != model.param_count()) {
    throw std::invalid_argument("logits: parameter length mismatch");
  }
  const ParamLayout& L = model.layout();
  RowMatrix a = x;
  for (Index l = 0; l < L.layer_count(); ++l) {
    RowMatrix z = (a * L.weight(theta, l).transpose()).rowwise() + L.bias(theta, l).transpose();
    if (l + 1 == L.layer_count()) return z;
    a = activate(z, model.spec().activation);
  }
  return a;  // unreachable: layer_count() >= 1
}

RowMatrix predict_proba(const Mlp& model, const Vector& theta, const RowMatrix& x) {
  RowMatrix z = logits(model, theta, x);
  const Vector m = z.rowwise().maxCoeff();
  RowMatrix e = (z.colwise() - m).array().exp();
  const Vector s = e.rowwise().sum();
  return e.array().colwise() / s.array();
}

std::vector<int> predict_batch(const Mlp& model, const Vector& theta, const RowMatrix& x) {
  RowMatrix z = logits(model, theta, x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Index i = 0; i < z.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < z.cols(); ++j) {
      if (z(i, j) > z(i, best)) best = j;  // strict: ties keep the smaller index
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return out;
}

int predict(const Mlp& model, const Vector& theta, const Tensor& x) {
  if (x.size() != model.spec().input_dim) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  RowMatrix row{1, x.size()};
  row.row(0) = x.data().transpose();
  return predict_batch(model, theta, row)[0];
}

LossGrad loss_and_grad(const Mlp& model, const Vector& theta, const SampleBatch& batch,
                       std::span<const double> weights) {
  const Index b = batch.size();
  if (b == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (static_cast<Index>(weights.size()) != b) {
    throw std::invalid_argument("loss_and_grad: weights length must equal batch size");
  }
  if (batch.x.cols() != model.spec().input_dim) {
    throw std::invalid_argument("loss_and_grad: feature dimension mismatch");
  }
  if (theta.size() != model.param_count()) {
    throw std::invalid_argument("loss_and_grad: parameter length mismatch");
  }
  const ParamLayout& L = model.layout();
  const Index layers = L.layer_count();
  const int K = model.spec().num_classes;

  // Forward pass, keeping pre- and post-activations per layer.
  std::vector<RowMatrix> zs(static_cast<std::size_t>(layers));
  std::vector<RowMatrix> as(static_cast<std::size_t>(layers));
  const RowMatrix* prev = &batch.x;
  for (Index l = 0; l < layers; ++l) {
    zs[l] = (*prev * L.weight(theta, l).transpose()).rowwise() + L.bias(theta, l).transpose();
    if (l + 1 < layers) {
      as[l] = activate(zs[l], model.spec().activation);
      prev = &as[l];
    }
  }

  // Softmax cross-entropy, log-sum-exp stabilized; loss is the weighted sum.
  const RowMatrix& z = zs[static_cast<std::size_t>(layers - 1)];
  double loss = 0.0;
  RowMatrix dz(b, K);
  for (Index i = 0; i < b; ++i) {
    const int label = batch.y[static_cast<std::size_t>(i)];
    if (label < 1 || label > K) throw std::invalid_argument("loss_and_grad: label out of range");
    const double w = weights[static_cast<std::size_t>(i)];
    const double m = z.row(i).maxCoeff();
    const Eigen::ArrayXd e = (z.row(i).array() - m).exp();
    const double sum = e.sum();
    loss += w * (std::log(sum) + m - z(i, label - 1));
    dz.row(i) = (w / sum) * e.matrix();
    dz(i, label - 1) -= w;
  }

  // Backward pass.
  Vector grad = Vector::Zero(theta.size());
  for (Index l = layers - 1; l >= 0; --l) {
    const RowMatrix& input = (l == 0) ? batch.x : as[static_cast<std::size_t>(l - 1)];
    L.weight(grad, l) = dz.transpose() * input;
    L.bias(grad, l) = dz.colwise().sum().transpose();
    if (l > 0) {
      RowMatrix da = dz * L.weight(theta, l);
      dz = da.cwiseProduct(
          activate_grad(zs[static_cast<std::size_t>(l - 1)], as[static_cast<std::size_t>(l - 1)],
                        model.spec().activation));
    }
  }
  return {loss, std::move(grad)};
}

Objective make_objective(const Mlp& model, SampleBatch batch, std::vector<double> weights) {
  struct State {
    Mlp model;
    SampleBatch batch;
    std::vector<double> weights;
  };
  auto shared = std::make_shared<State>(State{model, std::move(batch), std::move(weights)});
  return [shared](const Vector& theta) {
    return loss_and_grad(shared->model, theta, shared->batch, shared->weights);
  };
}

}  // namespace imbsam
