#include "hiemp/goalspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hiemp/error.hpp"

namespace hiemp {

BoxParams BoxParams::from_raw(const Vec& raw) {
  if (raw.size() % 2 != 0 || raw.size() == 0) throw InvalidInput("goal-space output must have even length 2d");
  const Eigen::Index d = raw.size() / 2;
  BoxParams box{raw.head(d), raw.tail(d)};
  box.log_halfwidth = box.log_halfwidth.cwiseMax(kLogHalfwidthMin).cwiseMin(kLogHalfwidthMax);
  return box;
}

Vec BoxParams::to_raw() const {
  Vec raw(2 * center.size());
  raw << center, log_halfwidth;
  return raw;
}

Epsilon sample_eps(Rng& rng, int d) {
  if (d < 1) throw InvalidInput("epsilon dimension must be >= 1");
  Epsilon e{Vec(d)};
  for (int i = 0; i < d; ++i) e.eps(i) = rng.uniform(-1.0, 1.0);
  return e;
}

Vec reparam(const Epsilon& eps, const BoxParams& box) {
  if (eps.eps.size() != box.center.size() || box.log_halfwidth.size() != box.center.size()) {
    throw InvalidInput("reparam: dimension mismatch");
  }
  return box.center + eps.eps.cwiseProduct(box.halfwidth());
}

double neg_log_prob(const BoxParams& box) {
  return static_cast<double>(box.dim()) * std::numbers::ln2 + box.log_halfwidth.sum();
}

double var_logpdf_peak(int d, double sigma0) {
  return -static_cast<double>(d) * (std::log(sigma0) + 0.5 * std::log(2.0 * std::numbers::pi));
}

double var_logpdf(const Vec& target, const Vec& achieved, double sigma0) {
  if (!(sigma0 > 0.0)) throw InvalidInput("sigma0 must be positive");
  if (target.size() != achieved.size()) throw InvalidInput("var_logpdf: dimension mismatch");
  return var_logpdf_peak(static_cast<int>(target.size()), sigma0) -
         (target - achieved).squaredNorm() / (2.0 * sigma0 * sigma0);
}

Vec var_logpdf_grad_achieved(const Vec& target, const Vec& achieved, double sigma0) {
  if (!(sigma0 > 0.0)) throw InvalidInput("sigma0 must be positive");
  if (target.size() != achieved.size()) throw InvalidInput("var_logpdf: dimension mismatch");
  return (target - achieved) / (sigma0 * sigma0);
}

}  // namespace hiemp
