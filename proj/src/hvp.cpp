#include "imbsam/hvp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace imbsam {

Vector hessian_vector_product(const Objective& objective, const Vector& theta, const Vector& v) {
  const double norm = v.norm();
  if (v.size() == 0 || norm == 0.0) {
    throw std::invalid_argument("hessian_vector_product: direction vector must be nonzero");
  }
  if (v.size() != theta.size()) {
    throw std::invalid_argument("hessian_vector_product: direction length mismatch");
  }
  const double r = std::cbrt(std::numeric_limits<double>::epsilon()) *
                   (1.0 + theta.lpNorm<Eigen::Infinity>());
  const Vector unit = v / norm;
  const LossGrad plus = objective(theta + r * unit);
  const LossGrad minus = objective(theta - r * unit);
  return (plus.grad - minus.grad) * (norm / (2.0 * r));
}

Vector hessian_vector_product(const Mlp& model, const Vector& theta, const SampleBatch& batch,
                              std::span<const double> weights, const Vector& v) {
  std::vector<double> w(weights.begin(), weights.end());
  const Objective obj = [&](const Vector& point) { return loss_and_grad(model, point, batch, w); };
  return hessian_vector_product(obj, theta, v);
}

}  // namespace imbsam
