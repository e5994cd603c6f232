#include <doctest.h>

#include "imbsam/data.hpp"
#include "imbsam/mlp.hpp"
#include "imbsam/optim.hpp"
#include "imbsam/quadratic.hpp"
#include "imbsam/rng.hpp"

#include <cmath>

using namespace imbsam;

namespace {

// 2-D quadratic with coordinate 1 acting as the head loss (1/2 * 2 t1^2) and
// coordinate 2 as the tail loss (1/2 * 5 t2^2), each exposed as its own
// objective.
Objective axis_objective(double coeff, Index axis) {
  return [coeff, axis](const Vector& theta) {
    Vector grad = Vector::Zero(theta.size());
    grad[axis] = coeff * theta[axis];
    return LossGrad{0.5 * coeff * theta[axis] * theta[axis], std::move(grad)};
  };
}

Objective counting(const Objective& inner, int* counter) {
  return [inner, counter](const Vector& theta) {
    ++*counter;
    return inner(theta);
  };
}

}  // namespace

TEST_CASE("sgd_step on the 1-D quadratic: theta 3 -> 2.4") {
  const QuadraticFixture q = make_quadratic(Vector::Constant(1, 2.0), Vector::Zero(1));
  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.0;
  OptimState state = make_optim_state(1);
  Vector theta = Vector::Constant(1, 3.0);
  sgd_step(state, cfg, theta, make_objective(q));
  CHECK(theta[0] == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(state.step == 1);
}

TEST_CASE("sgd_step is a fixed point at zero gradient") {
  const Objective flat = [](const Vector& t) { return LossGrad{1.0, Vector::Zero(t.size())}; };
  OptimConfig cfg;
  cfg.learning_rate = 0.5;
  OptimState state = make_optim_state(3);
  Vector theta = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector before = theta;
  sgd_step(state, cfg, theta, flat);
  CHECK(theta == before);
}

TEST_CASE("two momentum steps match the hand-unrolled heavy-ball recursion") {
  const QuadraticFixture q = make_quadratic(Vector::Constant(1, 2.0), Vector::Zero(1));
  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.momentum = 0.9;
  OptimState state = make_optim_state(1);
  Vector theta = Vector::Constant(1, 3.0);
  const Objective obj = make_objective(q);

  double t = 3.0, buf = 0.0;
  for (int s = 0; s < 2; ++s) {
    buf = 0.9 * buf + 2.0 * t;
    t -= 0.1 * buf;
  }
  sgd_step(state, cfg, theta, obj);
  sgd_step(state, cfg, theta, obj);
  CHECK(theta[0] == doctest::Approx(t).epsilon(1e-12));
  CHECK(t == doctest::Approx(1.38).epsilon(1e-12));
}

TEST_CASE("sgd_step reports non-finite gradients with the step index") {
  const Objective bad = [](const Vector& t) {
    return LossGrad{0.0, Vector::Constant(t.size(), std::nan(""))};
  };
  OptimConfig cfg;
  OptimState state = make_optim_state(2);
  state.step = 7;
  Vector theta = Vector::Zero(2);
  CHECK_THROWS_WITH_AS(sgd_step(state, cfg, theta, bad),
                       "sgd_step: non-finite gradient at optimizer step 7", std::runtime_error);
}

TEST_CASE("sam_perturbation normalizes to radius rho") {
  SUBCASE("grad (3,4) with rho 0.05 gives (0.03, 0.04)") {
    const Vector eps = sam_perturbation((Vector(2) << 3.0, 4.0).finished(), 0.05);
    CHECK(eps[0] == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(eps[1] == doctest::Approx(0.04).epsilon(1e-14));
  }
  SUBCASE("zero gradient gives zero perturbation") {
    const Vector eps = sam_perturbation(Vector::Zero(4), 0.05);
    CHECK(eps.isZero(0.0));
  }
  SUBCASE("norm and direction over random gradients") {
    RngEngine eng = make_engine(314);
    for (int trial = 0; trial < 200; ++trial) {
      const Index dim = 1 + static_cast<Index>(uniform_below(eng, 40));
      Vector g(dim);
      for (Index i = 0; i < dim; ++i) g[i] = 3.0 * uniform_pm1(eng);
      if (g.norm() <= 1e-12) continue;
      const double rho = 0.001 + uniform01(eng);
      const Vector eps = sam_perturbation(g, rho);
      CHECK(std::abs(eps.norm() - rho) <= 1e-12 * rho);
      const double cosine = eps.dot(g) / (eps.norm() * g.norm());
      CHECK(std::abs(cosine - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("sam_step on the 1-D quadratic: theta 3 -> 2.39") {
  const QuadraticFixture q = make_quadratic(Vector::Constant(1, 2.0), Vector::Zero(1));
  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.rho = 0.05;
  OptimState state = make_optim_state(1);
  Vector theta = Vector::Constant(1, 3.0);
  sam_step(state, cfg, theta, make_objective(q));
  CHECK(theta[0] == doctest::Approx(2.39).epsilon(1e-12));
}

TEST_CASE("sam_step with rho 0 is bit-identical to sgd_step") {
  const MlpSpec spec{3, {5}, 4, Activation::kTanh, 9001};
  const Mlp model(spec);
  RngEngine eng = make_engine(12);
  SampleBatch batch;
  batch.x.resize(6, 3);
  batch.y.resize(6);
  for (Index i = 0; i < 6; ++i) {
    for (Index j = 0; j < 3; ++j) batch.x(i, j) = gaussian(eng);
    batch.y[static_cast<std::size_t>(i)] = 1 + static_cast<int>(uniform_below(eng, 4));
  }
  const Objective obj = make_objective(model, batch, std::vector<double>(6, 1.0));

  OptimConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-3;
  cfg.rho = 0.0;

  Vector theta_sam = init_params(spec);
  Vector theta_sgd = theta_sam;
  OptimState s1 = make_optim_state(model.param_count());
  OptimState s2 = make_optim_state(model.param_count());
  for (int step = 0; step < 5; ++step) {
    sam_step(s1, cfg, theta_sam, obj);
    sgd_step(s2, cfg, theta_sgd, obj);
  }
  CHECK(theta_sam == theta_sgd);
}

TEST_CASE("sam_step contracts toward the optimum of strictly convex quadratics") {
  RngEngine eng = make_engine(555);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = 0.5 + 4.5 * uniform01(eng);
    const double c = 2.0 * uniform_pm1(eng);
    const double start = c + (uniform01(eng) < 0.5 ? -1.0 : 1.0) * (0.5 + 2.5 * uniform01(eng));
    const QuadraticFixture q = make_quadratic(Vector::Constant(1, a), Vector::Constant(1, c));
    OptimConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.rho = 0.05;
    OptimState state = make_optim_state(1);
    Vector theta = Vector::Constant(1, start);
    sam_step(state, cfg, theta, make_objective(q));
    CHECK(std::abs(theta[0] - c) < std::abs(start - c));
  }
}

TEST_CASE("imbsam_step on the 2-D head/tail quadratic: (1,1) -> (0.8, 0.475)") {
  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.rho = 0.05;
  OptimState state = make_optim_state(2);
  Vector theta = Vector::Constant(2, 1.0);
  imbsam_step(state, cfg, theta, axis_objective(2.0, 0), axis_objective(5.0, 1));
  CHECK(theta[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(theta[1] == doctest::Approx(0.475).epsilon(1e-12));
}

TEST_CASE("imbsam_step gradient-call budget and reductions") {
  const Objective head = axis_objective(2.0, 0);
  const Objective tail = axis_objective(5.0, 1);
  OptimConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.rho = 0.05;

  SUBCASE("head closure is called exactly once, tail twice") {
    int head_calls = 0, tail_calls = 0;
    OptimState state = make_optim_state(2);
    Vector theta = Vector::Constant(2, 1.0);
    imbsam_step(state, cfg, theta, counting(head, &head_calls), counting(tail, &tail_calls));
    CHECK(head_calls == 1);
    CHECK(tail_calls == 2);
  }

  SUBCASE("empty tail part reduces to sgd_step on the head") {
    OptimState s1 = make_optim_state(2);
    OptimState s2 = make_optim_state(2);
    Vector a = Vector::Constant(2, 1.0);
    Vector b = a;
    int calls = 0;
    imbsam_step(s1, cfg, a, counting(head, &calls), Objective{});
    sgd_step(s2, cfg, b, head);
    CHECK(a == b);
    CHECK(calls == 1);
  }

  SUBCASE("empty head part reduces to sam_step on the tail") {
    OptimState s1 = make_optim_state(2);
    OptimState s2 = make_optim_state(2);
    Vector a = Vector::Constant(2, 1.0);
    Vector b = a;
    int calls = 0;
    imbsam_step(s1, cfg, a, Objective{}, counting(tail, &calls));
    sam_step(s2, cfg, b, tail);
    CHECK(a == b);
    CHECK(calls == 2);
  }

  SUBCASE("both parts empty is an error") {
    OptimState state = make_optim_state(2);
    Vector theta = Vector::Constant(2, 1.0);
    CHECK_THROWS_AS(imbsam_step(state, cfg, theta, Objective{}, Objective{}),
                    std::invalid_argument);
  }
}

TEST_CASE("imbsam_step with rho 0 degrades to sgd_step on the whole batch bit for bit") {
  const MlpSpec spec{4, {6}, 3, Activation::kTanh, 424242};
  const Mlp model(spec);
  const auto ds = generate_longtailed(77, 3, 4, 30, 6.0);  // counts (30, 12, 5)
  const ClassSplit split = split_classes(ds, 12);          // classes 2,3 tail

  OptimConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.momentum = 0.9;
  cfg.weight_decay = 1e-4;
  cfg.rho = 0.0;

  Vector theta_imb = init_params(spec);
  Vector theta_sgd = theta_imb;
  OptimState s1 = make_optim_state(model.param_count());
  OptimState s2 = make_optim_state(model.param_count());

  for (const Batch& batch : batches(ds, split, 16, 5, 0)) {
    REQUIRE(!batch.head_part.empty());
    REQUIRE(!batch.tail_part.empty());
    auto obj_for = [&](const std::vector<Index>& rows) {
      return make_objective(model, gather(ds, rows), std::vector<double>(rows.size(), 1.0));
    };
    const Objective combined = obj_for(batch.indices);
    imbsam_step(s1, cfg, theta_imb, obj_for(batch.head_part), obj_for(batch.tail_part), combined);
    sgd_step(s2, cfg, theta_sgd, combined);
  }
  CHECK(theta_imb == theta_sgd);
}

TEST_CASE("degenerate perturbations skip the perturbed re-evaluation") {
  OptimConfig cfg;
  cfg.learning_rate = 0.1;

  SUBCASE("sam with rho 0 evaluates once") {
    cfg.rho = 0.0;
    int calls = 0;
    OptimState state = make_optim_state(2);
    Vector theta = Vector::Constant(2, 1.0);
    sam_step(state, cfg, theta, counting(axis_objective(2.0, 0), &calls));
    CHECK(calls == 1);
  }

  SUBCASE("imbsam with rho 0 evaluates only the whole-batch objective") {
    cfg.rho = 0.0;
    int head_calls = 0, tail_calls = 0, combined_calls = 0;
    OptimState state = make_optim_state(2);
    Vector theta = Vector::Constant(2, 1.0);
    const Objective combined = [](const Vector& t) {
      return LossGrad{0.5 * (2.0 * t[0] * t[0] + 5.0 * t[1] * t[1]),
                      Vector((Vector(2) << 2.0 * t[0], 5.0 * t[1]).finished())};
    };
    imbsam_step(state, cfg, theta, counting(axis_objective(2.0, 0), &head_calls),
                counting(axis_objective(5.0, 1), &tail_calls),
                counting(combined, &combined_calls));
    CHECK(head_calls == 0);
    CHECK(tail_calls == 0);
    CHECK(combined_calls == 1);
  }

  SUBCASE("imbsam with a vanished tail gradient degrades to SGD on the batch") {
    cfg.rho = 0.05;
    int tail_calls = 0, combined_calls = 0;
    OptimState state = make_optim_state(2);
    Vector theta = (Vector(2) << 1.0, 0.0).finished();  // tail gradient is exactly zero
    const Objective combined = axis_objective(2.0, 0);
    imbsam_step(state, cfg, theta, axis_objective(2.0, 0),
                counting(axis_objective(5.0, 1), &tail_calls),
                counting(combined, &combined_calls));
    CHECK(tail_calls == 1);
    CHECK(combined_calls == 1);
    CHECK(theta[0] == doctest::Approx(0.8).epsilon(1e-12));
  }
}

TEST_CASE("perturbation_decomposition") {
  SUBCASE("dominant head: ratio 100") {
    const Vector gh = (Vector(2) << 10.0, 0.0).finished();
    const Vector gt = (Vector(2) << 0.0, 0.1).finished();
    const PerturbationSplit ps = perturbation_decomposition(gh, gt, 0.05);
    CHECK(ps.norm_ratio == doctest::Approx(100.0).epsilon(1e-9));
  }
  SUBCASE("equal gradients: ratio 1") {
    const Vector g = (Vector(3) << 1.0, -2.0, 0.5).finished();
    const PerturbationSplit ps = perturbation_decomposition(g, g, 0.05);
    CHECK(ps.norm_ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("sum-norm identity |eps_head + eps_tail| = rho") {
    RngEngine eng = make_engine(2718);
    for (int trial = 0; trial < 100; ++trial) {
      const Index dim = 2 + static_cast<Index>(uniform_below(eng, 20));
      Vector gh(dim), gt(dim);
      for (Index i = 0; i < dim; ++i) {
        gh[i] = 5.0 * uniform_pm1(eng);
        gt[i] = 0.5 * uniform_pm1(eng);
      }
      const double rho = 0.01 + uniform01(eng);
      const PerturbationSplit ps = perturbation_decomposition(gh, gt, rho);
      CHECK(std::abs((ps.eps_head + ps.eps_tail).norm() - rho) <= 1e-12 * rho);
    }
  }
  SUBCASE("vanishing combined gradient reports NaN") {
    const PerturbationSplit ps =
        perturbation_decomposition(Vector::Zero(3), Vector::Zero(3), 0.05);
    CHECK(std::isnan(ps.norm_ratio));
    CHECK(ps.eps_head.isZero(0.0));
  }
}
