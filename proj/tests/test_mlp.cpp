#include <doctest.h>

#include "imbsam/mlp.hpp"
#include "imbsam/quadratic.hpp"
#include "imbsam/rng.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace imbsam;

namespace {

MlpSpec small_spec(std::uint64_t seed, Index in = 3, std::vector<Index> hidden = {5},
                   int classes = 4, Activation act = Activation::kTanh) {
  MlpSpec spec;
  spec.input_dim = in;
  spec.hidden_dims = std::move(hidden);
  spec.num_classes = classes;
  spec.activation = act;
  spec.init_seed = seed;
  return spec;
}

SampleBatch random_batch(RngEngine& eng, Index n, Index dim, int classes) {
  SampleBatch batch;
  batch.x.resize(n, dim);
  batch.y.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) batch.x(i, j) = gaussian(eng);
    batch.y[static_cast<std::size_t>(i)] =
        1 + static_cast<int>(uniform_below(eng, static_cast<std::uint64_t>(classes)));
  }
  return batch;
}

}  // namespace

TEST_CASE("init_params is deterministic and zero-biased") {
  const MlpSpec spec = small_spec(123);
  const Vector a = init_params(spec);
  const Vector b = init_params(spec);
  CHECK(a == b);

  const Mlp model(spec);
  for (Index l = 0; l < model.layout().layer_count(); ++l) {
    CHECK(model.layout().bias(a, l).isZero(0.0));
  }
}

TEST_CASE("init_params respects the 1/sqrt(fan_in) magnitude bound") {
  MlpSpec spec = small_spec(7, 2, {4}, 2);
  const Vector theta = init_params(spec);
  const Mlp model(spec);
  const auto w0 = model.layout().weight(theta, 0);
  const double bound = 1.0 / std::sqrt(2.0);
  CHECK(w0.cwiseAbs().maxCoeff() <= bound);
  CHECK(w0.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("uniform logits give loss ln K") {
  // zero-weight final layer forces equal logits
  const MlpSpec spec = small_spec(5);
  const Mlp model(spec);
  Vector theta = init_params(spec);
  const Index last = model.layout().layer_count() - 1;
  model.layout().weight(theta, last).setZero();
  model.layout().bias(theta, last).setZero();

  RngEngine eng = make_engine(99);
  const SampleBatch batch = random_batch(eng, 1, 3, 4);
  const std::vector<double> w{1.0};
  const LossGrad lg = loss_and_grad(model, theta, batch, w);
  CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("all-zero weights produce zero loss and zero gradient") {
  const MlpSpec spec = small_spec(17);
  const Mlp model(spec);
  const Vector theta = init_params(spec);
  RngEngine eng = make_engine(5);
  const SampleBatch batch = random_batch(eng, 6, 3, 4);
  const std::vector<double> w(6, 0.0);
  const LossGrad lg = loss_and_grad(model, theta, batch, w);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grad.isZero(0.0));
}

TEST_CASE("loss_and_grad rejects empty batches and bad weight lengths") {
  const MlpSpec spec = small_spec(1);
  const Mlp model(spec);
  const Vector theta = init_params(spec);
  SampleBatch empty;
  empty.x.resize(0, 3);
  CHECK_THROWS_AS((void)loss_and_grad(model, theta, empty, {}), std::invalid_argument);

  RngEngine eng = make_engine(2);
  const SampleBatch batch = random_batch(eng, 4, 3, 4);
  const std::vector<double> w(3, 1.0);
  CHECK_THROWS_AS((void)loss_and_grad(model, theta, batch, w), std::invalid_argument);
}

TEST_CASE("analytic gradient matches finite differences on random models") {
  RngEngine eng = make_engine(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const Activation act = trial % 2 == 0 ? Activation::kTanh : Activation::kRelu;
    const MlpSpec spec = small_spec(1000 + trial, 4, {6, 5}, 3, act);
    const Mlp model(spec);
    const Vector theta = init_params(spec);
    const SampleBatch batch = random_batch(eng, 8, 4, 3);
    std::vector<double> w(8);
    for (auto& wi : w) wi = uniform01(eng) + 0.25;

    const LossGrad analytic = loss_and_grad(model, theta, batch, w);
    const Vector fd = oracles::finite_difference_gradient(
        [&](const Vector& point) { return loss_and_grad(model, point, batch, w).loss; }, theta);
    CHECK(oracles::max_scaled_rel_error(analytic.grad, fd) < 1e-5);
  }
}

TEST_CASE("loss and gradient are linear in the sample weights") {
  const MlpSpec spec = small_spec(31);
  const Mlp model(spec);
  const Vector theta = init_params(spec);
  RngEngine eng = make_engine(8);
  const SampleBatch batch = random_batch(eng, 7, 3, 4);

  std::vector<double> w1(7), w2(7), sum(7);
  for (std::size_t i = 0; i < 7; ++i) {
    w1[i] = uniform01(eng);
    w2[i] = uniform01(eng);
    sum[i] = w1[i] + w2[i];
  }
  const LossGrad a = loss_and_grad(model, theta, batch, w1);
  const LossGrad b = loss_and_grad(model, theta, batch, w2);
  const LossGrad c = loss_and_grad(model, theta, batch, sum);
  CHECK(c.loss == doctest::Approx(a.loss + b.loss).epsilon(1e-12));
  CHECK((c.grad - (a.grad + b.grad)).lpNorm<Eigen::Infinity>() < 1e-12);

  // doubling the weights doubles everything exactly
  std::vector<double> twice(7);
  for (std::size_t i = 0; i < 7; ++i) twice[i] = 2.0 * w1[i];
  const LossGrad d = loss_and_grad(model, theta, batch, twice);
  CHECK(d.loss == 2.0 * a.loss);
  CHECK(d.grad == Vector(2.0 * a.grad));
}

TEST_CASE("predict breaks logit ties toward the smaller class index") {
  MlpSpec spec = small_spec(3, 2, {}, 3);
  const Mlp model(spec);
  const Vector theta = Vector::Zero(model.param_count());  // all logits equal
  Tensor x = Tensor::from_vector(Vector::Constant(2, 1.5));
  CHECK(predict(model, theta, x) == 1);
}

TEST_CASE("predict equals the argmax of its own logits") {
  const MlpSpec spec = small_spec(77);
  const Mlp model(spec);
  const Vector theta = init_params(spec);
  RngEngine eng = make_engine(6);
  const SampleBatch batch = random_batch(eng, 10, 3, 4);
  const RowMatrix z = logits(model, theta, batch.x);
  const auto labels = predict_batch(model, theta, batch.x);
  for (Index i = 0; i < 10; ++i) {
    Index argmax = 0;
    z.row(i).maxCoeff(&argmax);
    CHECK(labels[static_cast<std::size_t>(i)] == static_cast<int>(argmax) + 1);
  }
}

TEST_CASE("hand-built linear model classifies (3,1) as class 1") {
  MlpSpec spec = small_spec(0, 2, {}, 2);
  const Mlp model(spec);
  Vector theta = Vector::Zero(model.param_count());
  auto w = model.layout().weight(theta, 0);
  w(0, 0) = 1.0;  // class 1 scores x_0
  w(1, 1) = 1.0;  // class 2 scores x_1
  Tensor x({2});
  x(0) = 3.0;
  x(1) = 1.0;
  CHECK(predict(model, theta, x) == 1);
}

TEST_CASE("predict is invariant to a constant shift of all logits") {
  const MlpSpec spec = small_spec(55);
  const Mlp model(spec);
  Vector theta = init_params(spec);
  Vector shifted = theta;
  const Mlp m(spec);
  const Index last = m.layout().layer_count() - 1;
  m.layout().bias(shifted, last).array() += 3.75;

  RngEngine eng = make_engine(11);
  const SampleBatch batch = random_batch(eng, 12, 3, 4);
  CHECK(predict_batch(model, theta, batch.x) == predict_batch(model, shifted, batch.x));
}

TEST_CASE("softmax cross-entropy stays finite for extreme logits") {
  MlpSpec spec = small_spec(0, 2, {}, 2);
  const Mlp model(spec);
  Vector theta = Vector::Zero(model.param_count());
  model.layout().weight(theta, 0)(0, 0) = 500.0;  // would overflow exp without the max shift
  SampleBatch batch;
  batch.x.resize(1, 2);
  batch.x << 3.0, 0.0;
  batch.y = {2};
  const std::vector<double> w{1.0};
  const LossGrad lg = loss_and_grad(model, theta, batch, w);
  CHECK(std::isfinite(lg.loss));
  CHECK(lg.grad.allFinite());
}

TEST_CASE("quadratic fixture closed forms") {
  const QuadraticFixture q = make_quadratic(Vector::Constant(1, 2.0), Vector::Zero(1));

  SUBCASE("optimum has zero loss and gradient") {
    const QuadraticFixture q2 =
        make_quadratic((Vector(3) << 1.0, 2.0, 3.0).finished(),
                       (Vector(3) << -1.0, 0.5, 2.0).finished());
    const LossGrad lg = quadratic_loss_and_grad(q2, q2.offset);
    CHECK(lg.loss == 0.0);
    CHECK(lg.grad.isZero(0.0));
  }

  SUBCASE("diag=(2,), theta=3 gives loss 9 and gradient 6") {
    const LossGrad lg = quadratic_loss_and_grad(q, Vector::Constant(1, 3.0));
    CHECK(lg.loss == doctest::Approx(9.0).epsilon(1e-15));
    CHECK(lg.grad[0] == doctest::Approx(6.0).epsilon(1e-15));
  }

  SUBCASE("gradient matches finite differences") {
    const QuadraticFixture q3 =
        make_quadratic((Vector(4) << 0.5, 1.5, 2.5, 4.0).finished(),
                       (Vector(4) << 1.0, -2.0, 0.0, 3.0).finished());
    RngEngine eng = make_engine(4);
    Vector theta(4);
    for (Index i = 0; i < 4; ++i) theta[i] = 2.0 * uniform_pm1(eng);
    const LossGrad lg = quadratic_loss_and_grad(q3, theta);
    const Vector fd = oracles::finite_difference_gradient(
        [&](const Vector& p) { return quadratic_loss_and_grad(q3, p).loss; }, theta);
    CHECK((lg.grad - fd).lpNorm<Eigen::Infinity>() < 1e-8);
  }

  SUBCASE("length mismatch raises") {
    CHECK_THROWS_AS((void)quadratic_loss_and_grad(q, Vector::Zero(2)), std::invalid_argument);
  }
}
