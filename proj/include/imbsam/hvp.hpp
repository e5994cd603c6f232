#pragma once

#include "imbsam/mlp.hpp"
#include "imbsam/types.hpp"

#include <span>

namespace imbsam {

// Hessian-vector product H v by central differencing of gradients:
//   (grad(theta + r v_hat) - grad(theta - r v_hat)) * |v| / (2 r)
// with v_hat = v / |v| and r = cbrt(machine epsilon) * (1 + |theta|_inf).
// Exact for quadratics up to roundoff; accurate enough for power iteration
// and Hutchinson probes on twice-differentiable losses.
Vector hessian_vector_product(const Objective& objective, const Vector& theta, const Vector& v);

Vector hessian_vector_product(const Mlp& model, const Vector& theta, const SampleBatch& batch,
                              std::span<const double> weights, const Vector& v);

}  // namespace imbsam
