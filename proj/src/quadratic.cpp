#include "imbsam/quadratic.hpp"

#include <stdexcept>

namespace imbsam {

QuadraticFixture make_quadratic(Vector diag, Vector offset) {
  if (diag.size() != offset.size()) {
    throw std::invalid_argument("make_quadratic: diag and offset lengths differ");
  }
  if ((diag.array() <= 0.0).any()) {
    throw std::invalid_argument("make_quadratic: diag entries must be positive");
  }
  return {std::move(diag), std::move(offset)};
}

LossGrad quadratic_loss_and_grad(const QuadraticFixture& fixture, const Vector& theta) {
  if (theta.size() != fixture.dim()) {
    throw std::invalid_argument("quadratic_loss_and_grad: parameter length mismatch");
  }
  const Vector d = theta - fixture.offset;
  const double loss = 0.5 * (fixture.diag.array() * d.array().square()).sum();
  return {loss, fixture.diag.cwiseProduct(d)};
}

Objective make_objective(const QuadraticFixture& fixture) {
  return [fixture](const Vector& theta) { return quadratic_loss_and_grad(fixture, theta); };
}

}  // namespace imbsam
