#include "hiemp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_set>

#include "hiemp/error.hpp"
#include "hiemp/hierarchy.hpp"

namespace hiemp {

ReachableSet::ReachableSet(int goal_dim, double cell)
    : cell_(cell),
      lo_(Vec::Constant(goal_dim, std::numeric_limits<double>::infinity())),
      hi_(Vec::Constant(goal_dim, -std::numeric_limits<double>::infinity())) {
  if (goal_dim < 1 || goal_dim > 3) throw InvalidInput("reachable sets support 1 to 3 dimensions");
  if (!(cell > 0.0)) throw InvalidInput("reachable set cell size must be positive");
}

std::size_t ReachableSet::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 0;
  for (long long v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
  return static_cast<std::size_t>(h);
}

ReachableSet::Key ReachableSet::key(const Vec& p) const {
  Key k{0, 0, 0};
  for (Eigen::Index i = 0; i < p.size(); ++i) k[static_cast<std::size_t>(i)] = std::llround(p(i) / cell_);
  return k;
}

void ReachableSet::add(const Vec& p) {
  if (p.size() != lo_.size()) throw InvalidInput("reachable set point has the wrong dimension");
  buckets_[key(p)].push_back(points_.size());
  points_.push_back(p);
  lo_ = lo_.cwiseMin(p);
  hi_ = hi_.cwiseMax(p);
}

bool ReachableSet::contains_near(const Vec& p, double tol) const {
  const Key center = key(p);
  const long long reach = static_cast<long long>(std::ceil(tol / cell_)) + 1;
  const auto d = static_cast<std::size_t>(p.size());
  Key k = center;
  std::array<long long, 3> off{-reach, d > 1 ? -reach : 0, d > 2 ? -reach : 0};
  const std::array<long long, 3> top{reach, d > 1 ? reach : 0, d > 2 ? reach : 0};
  while (true) {
    for (std::size_t i = 0; i < 3; ++i) k[i] = center[i] + off[i];
    if (auto it = buckets_.find(k); it != buckets_.end()) {
      for (std::size_t idx : it->second) {
        if ((points_[idx] - p).cwiseAbs().maxCoeff() <= tol) return true;
      }
    }
    std::size_t i = 0;
    while (i < 3 && off[i] == top[i]) {
      off[i] = -top[i];
      ++i;
    }
    if (i == 3) return false;
    ++off[i];
  }
}

namespace {

using CellKey = std::array<long long, 3>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 0;
    for (long long v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

ReachableSet reachable_bruteforce(const EnvModel& env, const State& s0, int n, int actions_per_dim,
                                  std::size_t node_budget) {
  if (!env.noiseless()) throw InvalidInput("reachable_bruteforce needs a noiseless environment");
  if (actions_per_dim < 3) throw InvalidInput("reachable_bruteforce needs at least 3 actions per dimension");
  if (n < 0) throw InvalidInput("reachable_bruteforce needs n >= 0");

  std::vector<Vec> actions;
  const int ad = env.action_dim;
  std::vector<int> digits(static_cast<std::size_t>(ad), 0);
  while (true) {
    Vec a(ad);
    for (int i = 0; i < ad; ++i) {
      a(i) = -1.0 + 2.0 * digits[static_cast<std::size_t>(i)] / (actions_per_dim - 1);
    }
    actions.push_back(a);
    int i = 0;
    while (i < ad && ++digits[static_cast<std::size_t>(i)] == actions_per_dim) digits[static_cast<std::size_t>(i++)] = 0;
    if (i == ad) break;
  }

  const double cell = env.v_max / 2.0;
  ReachableSet out(env.goal_dim(), cell);
  std::unordered_set<CellKey, CellKeyHash> seen;
  auto state_key = [cell](const State& s) {
    CellKey k{0, 0, 0};
    for (Eigen::Index i = 0; i < s.size(); ++i) k[static_cast<std::size_t>(i)] = std::llround(s(i) / cell);
    return k;
  };
  Rng unused(0);

  std::vector<State> frontier{s0};
  seen.insert(state_key(s0));
  out.add(project_goal(env, s0));
  std::size_t generated = 0;
  for (int t = 0; t < n && !frontier.empty(); ++t) {
    std::vector<State> next;
    for (const State& s : frontier) {
      for (const Vec& a : actions) {
        if (++generated > node_budget) {
          throw RuntimeAbort("reachable_bruteforce exceeded its node budget of " + std::to_string(node_budget) +
                             " at depth " + std::to_string(t) + " with " + std::to_string(frontier.size()) +
                             " frontier states; lower n or actions_per_dim, or raise the budget");
        }
        State s2 = step(env, s, a, unused);
        if (seen.insert(state_key(s2)).second) {
          out.add(project_goal(env, s2));
          next.push_back(std::move(s2));
        }
      }
    }
    frontier = std::move(next);
  }
  return out;
}

namespace {

double log_normal_pdf(double x, double mean, double sigma) {
  const double u = (x - mean) / sigma;
  return -0.5 * u * u - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Trapezoid weights for `count` equally spaced points with spacing h.
std::vector<double> trapezoid(int count, double h) {
  std::vector<double> w(static_cast<std::size_t>(count), h);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

double mi_on_grid(const std::vector<double>& shifts, double z_halfwidth, double s_lo, double s_hi, int s_points,
                  double sigma, Exec exec) {
  const int nz = static_cast<int>(shifts.size());
  const double pz = 1.0 / (2.0 * z_halfwidth);
  const auto wz = trapezoid(nz, 2.0 * z_halfwidth / (nz - 1));
  const double hs = (s_hi - s_lo) / (s_points - 1);
  const auto ws = trapezoid(s_points, hs);
  std::vector<double> row(static_cast<std::size_t>(s_points), 0.0);

  for_each_index(exec, s_points, [&](std::ptrdiff_t j) {
    const double s = s_lo + hs * static_cast<double>(j);
    std::vector<double> logp(static_cast<std::size_t>(nz));
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nz; ++i) {
      logp[static_cast<std::size_t>(i)] = log_normal_pdf(s, shifts[static_cast<std::size_t>(i)], sigma);
      peak = std::max(peak, logp[static_cast<std::size_t>(i)]);
    }
    double marg = 0.0;
    for (int i = 0; i < nz; ++i) marg += wz[static_cast<std::size_t>(i)] * pz * std::exp(logp[static_cast<std::size_t>(i)] - peak);
    const double log_marg = peak + std::log(marg);
    double acc = 0.0;
    for (int i = 0; i < nz; ++i) {
      const double lp = logp[static_cast<std::size_t>(i)];
      acc += wz[static_cast<std::size_t>(i)] * pz * std::exp(lp) * (lp - log_marg);
    }
    row[static_cast<std::size_t>(j)] = ws[static_cast<std::size_t>(j)] * acc;
  });

  double total = 0.0;
  for (double v : row) total += v;
  return total;
}

}  // namespace

MiResult exact_mi_quadrature(const MiChannel& channel, const QuadratureGrid& grid, Exec exec) {
  if (channel.box.dim() != 1) throw InvalidInput("exact_mi_quadrature is one-dimensional");
  if (!(channel.sigma > 0.0)) throw InvalidInput("channel noise must be positive");
  if (grid.z_points < 5 || grid.s_points < 5 || grid.z_points % 2 == 0 || grid.s_points % 2 == 0) {
    throw InvalidInput("quadrature grids need an odd number of points, at least 5");
  }
  const double c = channel.box.center(0);
  const double w = channel.box.halfwidth()(0);
  std::vector<double> shifts(static_cast<std::size_t>(grid.z_points));
  for (int i = 0; i < grid.z_points; ++i) {
    const double z = c - w + 2.0 * w * i / (grid.z_points - 1);
    shifts[static_cast<std::size_t>(i)] = channel.shift(z);
    if (!std::isfinite(shifts[static_cast<std::size_t>(i)])) throw RuntimeAbort("channel shift is not finite");
  }
  const auto [mn, mx] = std::minmax_element(shifts.begin(), shifts.end());
  const double s_lo = *mn - grid.s_margin * channel.sigma;
  const double s_hi = *mx + grid.s_margin * channel.sigma;

  const double fine = mi_on_grid(shifts, w, s_lo, s_hi, grid.s_points, channel.sigma, exec);
  std::vector<double> coarse_shifts;
  for (std::size_t i = 0; i < shifts.size(); i += 2) coarse_shifts.push_back(shifts[i]);
  const double coarse = mi_on_grid(coarse_shifts, w, s_lo, s_hi, (grid.s_points + 1) / 2, channel.sigma, exec);

  MiResult out;
  out.mi = fine;
  out.error_estimate = std::abs(fine - coarse) / 3.0;
  double mean = 0.0;
  const auto wz = trapezoid(grid.z_points, 1.0 / (grid.z_points - 1));
  for (std::size_t i = 0; i < shifts.size(); ++i) mean += wz[i] * shifts[i];
  double var = 0.0;
  for (std::size_t i = 0; i < shifts.size(); ++i) var += wz[i] * (shifts[i] - mean) * (shifts[i] - mean);
  out.capacity_cap = 0.5 * std::log1p(var / (channel.sigma * channel.sigma));
  if (out.error_estimate > grid.tolerance) {
    throw RuntimeAbort("quadrature error estimate " + std::to_string(out.error_estimate) + " exceeds tolerance " +
                       std::to_string(grid.tolerance) + "; refine the grids (e.g. z_points=" +
                       std::to_string(2 * grid.z_points - 1) + ", s_points=" + std::to_string(2 * grid.s_points - 1) +
                       ")");
  }
  return out;
}

std::vector<Vec> open_loop_plan(const Agent& agent, const State& s0, const Vec& z) {
  EnvModel quiet = agent.env;
  quiet.noise_std = Vec::Zero(quiet.state_dim);
  const Vec goal = project_goal(agent.env, s0) + z;
  Rng rng(0);
  RolloutContext ctx{rng, nullptr, nullptr, nullptr};
  std::vector<Vec> plan;
  State s = s0;
  for (int t = 0; t < agent.specs.front().n; ++t) {
    Vec a = select_action(agent, 0, s, goal, false, ctx);
    s = step(quiet, s, a, rng);
    plan.push_back(std::move(a));
  }
  return plan;
}

MiChannel open_loop_channel(const Agent& agent, const State& s0) {
  if (agent.skill_levels() != 1 || agent.env.state_dim != 1) {
    throw InvalidInput("open_loop_channel needs a one-level agent on a 1-D environment");
  }
  if (!agent.env.barriers.empty() || agent.env.cage) throw InvalidInput("open_loop_channel needs an open environment");
  MiChannel ch;
  ch.box = goal_space(agent, 0, s0);
  ch.sigma = agent.env.noise_std(0) * std::sqrt(static_cast<double>(agent.specs.front().n));
  const double v = agent.env.v_max;
  ch.shift = [&agent, s0, v](double z) {
    double sum = 0.0;
    for (const Vec& a : open_loop_plan(agent, s0, Vec::Constant(1, z))) sum += a(0);
    return v * sum;
  };
  return ch;
}

BoundEstimate variational_bound_estimate(const Agent& agent, int level, const State& s0, int samples, Rng& rng,
                                         Execution mode, Exec exec) {
  if (samples < 1) throw InvalidInput("variational_bound_estimate needs samples >= 1");
  if (mode == Execution::open_loop && level != 0) throw InvalidInput("open-loop execution is level-0 only");
  const BoxParams box = goal_space(agent, level, s0);
  const double sigma = agent.specs.at(static_cast<std::size_t>(level)).sigma0_gs;
  const std::uint64_t base = rng.next();
  std::vector<double> terms(static_cast<std::size_t>(samples));
  for_each_index(exec, samples, [&](std::ptrdiff_t i) {
    Rng local = stream_rng(base, static_cast<std::uint64_t>(i));
    const Vec z = reparam(sample_eps(local, box.dim()), box);
    const Vec goal = project_goal(agent.env, s0) + z;
    State sn = s0;
    if (mode == Execution::open_loop) {
      for (const Vec& a : open_loop_plan(agent, s0, z)) sn = step(agent.env, sn, a, local);
    } else {
      RolloutContext ctx{local, nullptr, nullptr, nullptr};
      sn = pursue_goal(agent, level, s0, goal, ctx).state;
    }
    terms[static_cast<std::size_t>(i)] = var_logpdf(goal, project_goal(agent.env, sn), sigma);
  });
  double mean = 0.0;
  for (double t : terms) mean += t;
  mean /= samples;
  double var = 0.0;
  for (double t : terms) var += (t - mean) * (t - mean);
  BoundEstimate out;
  out.mean = neg_log_prob(box) + mean;
  out.std_error = samples > 1 ? std::sqrt(var / (samples - 1) / samples) : 0.0;
  return out;
}

}  // namespace hiemp
