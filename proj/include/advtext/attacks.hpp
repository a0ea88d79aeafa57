/**
 * @file attacks.hpp
 * @brief Latent-space perturbations: single-step FGSM and iterative PGD with
 *        l-infinity projection.
 *
 * Exactness matters here: the perturbation delta is the source of truth.
 * FGSM builds delta = epsilon * sign(grad), whose coordinates are exactly
 * -epsilon, 0, or +epsilon. PGD accumulates and clamps delta directly and
 * forms each iterate as z0 + delta, so the recorded delta always satisfies
 * the l-infinity bound bitwise, with no dependence on floating-point
 * cancellation in z* - z0.
 */
#pragma once

#include <functional>

#include "advtext/common.hpp"
#include "advtext/config.hpp"
#include "advtext/models.hpp"

namespace advtext {

/// sign with sign(0) = 0.
inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline Vector sign_vector(const Vector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sign_of(v[i]);
  return out;
}

/// The FGSM perturbation epsilon * sign(grad); every coordinate is exactly
/// -epsilon, 0, or +epsilon.
inline Vector fgsm_delta(const Vector& grad, double epsilon) {
  if (!std::isfinite(epsilon) || epsilon < 0.0)
    throw ConfigError("epsilon must be finite and nonnegative");
  if (!grad.allFinite()) throw NumericalError("fgsm: gradient contains non-finite values");
  return epsilon * sign_vector(grad);
}

inline Vector fgsm_step(const Vector& z, const Vector& grad, double epsilon) {
  if (z.size() != grad.size())
    throw ConfigError("fgsm: gradient dimension " + std::to_string(grad.size()) +
                      " does not match latent dimension " + std::to_string(z.size()));
  if (!z.allFinite()) throw NumericalError("fgsm: latent vector contains non-finite values");
  return z + fgsm_delta(grad, epsilon);
}

/// Coordinate-wise clamp of z into [center - epsilon, center + epsilon].
/// A point already inside the ball is returned bit-identically.
inline Vector project_linf_ball(const Vector& z, const Vector& center, double epsilon) {
  if (z.size() != center.size()) throw ConfigError("project_linf_ball: dimension mismatch");
  if (!std::isfinite(epsilon) || epsilon < 0.0)
    throw ConfigError("epsilon must be finite and nonnegative");
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    out[i] = std::clamp(z[i], center[i] - epsilon, center[i] + epsilon);
  return out;
}

struct PgdOutcome {
  Vector z_star;
  Vector delta;  // recorded perturbation; z_star = z0 + delta
  int iterations_used = 0;
  bool success = false;
};

using LatentGradFn = std::function<Vector(const Vector&)>;
using LatentPredicate = std::function<bool(const Vector&)>;
/// Called after every iteration with (iteration, delta, iterate).
using PgdObserver = std::function<void(int, const Vector&, const Vector&)>;

/// PGD driven by an arbitrary gradient callback:
///   delta_i = clamp(delta_{i-1} + eta * sign(grad(z_{i-1})), -eps, +eps)
///   z_i     = z0 + delta_i
/// Stops at the first iterate passing success_test or after max_iters.
inline PgdOutcome pgd_attack_core(const Vector& z0, const LatentGradFn& grad_fn, AttackConfig cfg,
                                  const LatentPredicate& success_test,
                                  const PgdObserver& observer = {}) {
  cfg.resolve_defaults();
  cfg.validate();
  if (!z0.allFinite()) throw NumericalError("pgd: latent vector contains non-finite values");
  PgdOutcome out;
  out.delta = Vector::Zero(z0.size());
  out.z_star = z0;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Vector grad = grad_fn(out.z_star);
    if (grad.size() != z0.size()) throw ConfigError("pgd: gradient dimension mismatch");
    if (!grad.allFinite()) throw NumericalError("pgd: gradient contains non-finite values");
    out.delta = (out.delta + cfg.eta * sign_vector(grad)).cwiseMax(-cfg.epsilon).cwiseMin(cfg.epsilon);
    out.z_star = z0 + out.delta;
    out.iterations_used = iter;
    if (observer) observer(iter, out.delta, out.z_star);
    if (success_test && success_test(out.z_star)) {
      out.success = true;
      break;
    }
  }
  return out;
}

/// PGD on the real pipeline: the gradient comes from the configured mode
/// (soft decoder relaxation or the latent-classifier surrogate).
inline PgdOutcome pgd_attack(const Vector& z0, int label, Decoder& dec, TargetClassifier& target,
                             LatentClassifier* lat, const AttackConfig& cfg,
                             const LatentPredicate& success_test, const PgdObserver& observer = {}) {
  LatentGradFn grad_fn = [&](const Vector& z) {
    return latent_gradient(z, label, dec, target, lat, cfg.gradient_mode);
  };
  return pgd_attack_core(z0, grad_fn, cfg, success_test, observer);
}

}  // namespace advtext
