#pragma once

// Uniform box skill distribution, its reparameterization and entropy, and the
// fixed-variance Gaussian variational log-density.

#include "hiemp/nnet.hpp"
#include "hiemp/rng.hpp"

namespace hiemp {

/// Raw log half-width outputs are clamped to this range before exponentiation.
inline constexpr double kLogHalfwidthMin = -10.0;
inline constexpr double kLogHalfwidthMax = 10.0;

/// Uniform distribution over center +/- exp(log_halfwidth), expressed as an
/// offset from the start state's goal projection.
struct BoxParams {
  Vec center;
  Vec log_halfwidth;

  int dim() const { return static_cast<int>(center.size()); }
  Vec halfwidth() const { return log_halfwidth.array().exp().matrix(); }

  /// Splits a goal-space policy output (centers then log half-widths) and
  /// clamps the log half-widths.
  static BoxParams from_raw(const Vec& raw);
  Vec to_raw() const;
};

/// Exogenous noise of the reparameterization, uniform on [-1, 1]^d.
struct Epsilon {
  Vec eps;
};

Epsilon sample_eps(Rng& rng, int d);

/// z = center + eps * halfwidth: the desired change from h(s0).
Vec reparam(const Epsilon& eps, const BoxParams& box);

/// -log p(z) for z inside the box, i.e. its differential entropy sum_i log(2 w_i).
double neg_log_prob(const BoxParams& box);

/// log N(target; achieved, sigma0^2 I).
double var_logpdf(const Vec& target, const Vec& achieved, double sigma0);

/// Gradient of var_logpdf with respect to `achieved`.
Vec var_logpdf_grad_achieved(const Vec& target, const Vec& achieved, double sigma0);

/// Peak value of var_logpdf, reached when target == achieved.
double var_logpdf_peak(int d, double sigma0);

}  // namespace hiemp
