#include "imbsam/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace imbsam {

namespace {

constexpr double kDegenerateGradNorm = 1e-12;

// Shared descent: weight decay at the unperturbed theta, heavy-ball momentum
// on the combined direction. All three optimizers funnel through here so the
// reduction identities hold bit for bit.
void apply_descent(OptimState& state, const OptimConfig& config, Vector& theta,
                   const Vector& grad, const char* step_name) {
  if (!grad.allFinite()) {
    throw std::runtime_error(std::string(step_name) + ": non-finite gradient at optimizer step " +
                             std::to_string(state.step));
  }
  Vector descend = grad;
  if (config.weight_decay != 0.0) descend += config.weight_decay * theta;
  state.momentum_buffer = config.momentum * state.momentum_buffer + descend;
  theta -= config.learning_rate * state.momentum_buffer;
  ++state.step;
}

}  // namespace

OptimState make_optim_state(Index param_count) {
  return {Vector::Zero(param_count), 0};
}

void validate(const OptimConfig& config) {
  if (config.learning_rate <= 0.0) throw std::invalid_argument("OptimConfig: learning_rate must be > 0");
  if (config.weight_decay < 0.0) throw std::invalid_argument("OptimConfig: weight_decay must be >= 0");
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw std::invalid_argument("OptimConfig: momentum must lie in [0, 1)");
  }
  if (config.rho < 0.0) throw std::invalid_argument("OptimConfig: rho must be >= 0");
}

void sgd_step(OptimState& state, const OptimConfig& config, Vector& theta,
              const Objective& objective) {
  const LossGrad lg = objective(theta);
  apply_descent(state, config, theta, lg.grad, "sgd_step");
}

Vector sam_perturbation(const Vector& grad, double rho) {
  if (rho < 0.0) throw std::invalid_argument("sam_perturbation: rho must be >= 0");
  const double norm = grad.norm();
  if (norm <= kDegenerateGradNorm) return Vector::Zero(grad.size());
  return (rho / norm) * grad;
}

void sam_step(OptimState& state, const OptimConfig& config, Vector& theta,
              const Objective& objective) {
  const LossGrad first = objective(theta);
  if (config.rho == 0.0 || first.grad.norm() <= kDegenerateGradNorm) {
    // zero perturbation: degrade to SGD on the same evaluation
    apply_descent(state, config, theta, first.grad, "sam_step");
    return;
  }
  const Vector eps = sam_perturbation(first.grad, config.rho);
  const LossGrad second = objective(theta + eps);  // perturbed point is transient
  apply_descent(state, config, theta, second.grad, "sam_step");
}

void imbsam_step(OptimState& state, const OptimConfig& config, Vector& theta,
                 const Objective& head, const Objective& tail, const Objective& combined) {
  if (!head && !tail) throw std::invalid_argument("imbsam_step: both batch parts are empty");
  if (!tail) return sgd_step(state, config, theta, combined ? combined : head);
  if (!head) return sam_step(state, config, theta, combined ? combined : tail);

  const Objective whole = combined ? combined : Objective([&head, &tail](const Vector& point) {
    LossGrad t = tail(point);
    const LossGrad h = head(point);
    return LossGrad{t.loss + h.loss, Vector(t.grad + h.grad)};
  });
  if (config.rho == 0.0) return sgd_step(state, config, theta, whole);

  const LossGrad tail_at_theta = tail(theta);
  const Vector eps = sam_perturbation(tail_at_theta.grad, config.rho);
  if (eps.isZero(0.0)) return sgd_step(state, config, theta, whole);

  const LossGrad head_at_theta = head(theta);  // head is never evaluated perturbed
  const LossGrad tail_perturbed = tail(theta + eps);
  const Vector direction = tail_perturbed.grad + head_at_theta.grad;
  apply_descent(state, config, theta, direction, "imbsam_step");
}

PerturbationSplit perturbation_decomposition(const Vector& head_grad, const Vector& tail_grad,
                                             double rho) {
  if (rho < 0.0) throw std::invalid_argument("perturbation_decomposition: rho must be >= 0");
  if (head_grad.size() != tail_grad.size()) {
    throw std::invalid_argument("perturbation_decomposition: gradient lengths differ");
  }
  PerturbationSplit split;
  const double combined_norm = (head_grad + tail_grad).norm();
  if (combined_norm <= kDegenerateGradNorm) {
    split.eps_head = Vector::Zero(head_grad.size());
    split.eps_tail = Vector::Zero(tail_grad.size());
    split.norm_ratio = std::numeric_limits<double>::quiet_NaN();
    return split;
  }
  split.eps_head = (rho / combined_norm) * head_grad;
  split.eps_tail = (rho / combined_norm) * tail_grad;
  split.norm_ratio =
      split.eps_head.norm() / (split.eps_tail.norm() + std::numeric_limits<double>::epsilon());
  return split;
}

}  // namespace imbsam
