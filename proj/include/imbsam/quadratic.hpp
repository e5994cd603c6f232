#pragma once

#include "imbsam/types.hpp"

namespace imbsam {

// Strictly convex diagonal quadratic L(theta) = 1/2 * sum_j diag_j (theta_j - offset_j)^2.
// Closed-form loss, gradient, Hessian and eigenvalues make it the oracle model
// for optimizer-step and curvature tests.
struct QuadraticFixture {
  Vector diag;    // all entries > 0
  Vector offset;  // optimum location

  Index dim() const { return diag.size(); }
};

QuadraticFixture make_quadratic(Vector diag, Vector offset);

LossGrad quadratic_loss_and_grad(const QuadraticFixture& fixture, const Vector& theta);

Objective make_objective(const QuadraticFixture& fixture);

}  // namespace imbsam
