#pragma once

#include "imbsam/types.hpp"

#include <vector>

namespace imbsam {

// ---------------------------------------------------------------------------
// Three update rules behind one interface.
//
//   sgd_step     theta <- theta - alpha * M[grad(theta) + lambda*theta]
//   sam_step     two-pass: eps = rho * g/|g|_2 from the batch gradient, then
//                descend with grad(theta + eps) + lambda*theta
//   imbsam_step  sharpness-aware minimization restricted to the tail part:
//                eps is computed from the tail gradient only, the tail
//                gradient is re-evaluated at theta + eps, the head gradient
//                stays at theta. Exactly three gradient evaluations when both
//                parts are present and the perturbation is nonzero.
//
// M[.] is the shared heavy-ball momentum filter. Weight decay is always taken
// at the unperturbed theta.
//
// Reduction identities (bit-exact, relied on by tests):
//   - a degenerate perturbation (rho = 0, or gradient norm <= 1e-12) degrades
//     the step to SGD on the batch objective, with no perturbed re-evaluation;
//   - an empty tail part degrades ImbSAM to SGD, an empty head part to SAM.
// imbsam_step therefore also receives the whole-batch objective: partitioned
// gradient sums can never match a whole-batch evaluation bit for bit, so the
// degenerate paths fall back to the same canonical objective SGD and SAM use.
// ---------------------------------------------------------------------------

struct OptimConfig {
  double learning_rate = 0.1;
  double weight_decay = 0.0;
  double momentum = 0.0;               // in [0, 1)
  double rho = 0.05;                   // SAM/ImbSAM neighborhood size
  std::vector<double> class_weights;   // optional per-class loss weights, all 1 when empty
};

struct OptimState {
  Vector momentum_buffer;  // zero-initialized, layout-compatible with theta
  long step = 0;
};

OptimState make_optim_state(Index param_count);
void validate(const OptimConfig& config);

void sgd_step(OptimState& state, const OptimConfig& config, Vector& theta,
              const Objective& objective);

// eps = rho * grad / |grad|_2, or zero when |grad|_2 <= 1e-12.
Vector sam_perturbation(const Vector& grad, double rho);

void sam_step(OptimState& state, const OptimConfig& config, Vector& theta,
              const Objective& objective);

// Empty (default-constructed) objectives mark empty batch parts; passing two
// empty parts is an error. `combined` is the whole-batch objective used by
// the degenerate fallbacks; when omitted it is synthesized as the part-wise
// sum (adequate for fixtures, but the training loop always supplies it).
void imbsam_step(OptimState& state, const OptimConfig& config, Vector& theta,
                 const Objective& head, const Objective& tail,
                 const Objective& combined = {});

// Decomposition of the SAM perturbation into head and tail components sharing
// the combined-gradient denominator. norm_ratio = |eps_head| / (|eps_tail| +
// machine epsilon); NaN when the combined gradient vanishes.
struct PerturbationSplit {
  Vector eps_head;
  Vector eps_tail;
  double norm_ratio = 0.0;
};

PerturbationSplit perturbation_decomposition(const Vector& head_grad, const Vector& tail_grad,
                                             double rho);

}  // namespace imbsam
