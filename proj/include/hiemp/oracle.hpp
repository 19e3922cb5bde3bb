#pragma once

// Ground truth used by tests and acceptance runs: brute-force reachable sets
// on noiseless environments, and exact skill-channel mutual information on
// the 1-D noisy channel.

#include <array>
#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "hiemp/agent.hpp"

namespace hiemp {

/// Point cloud of reachable goal projections with its bounding box. Supports
/// up to three dimensions.
class ReachableSet {
 public:
  ReachableSet(int goal_dim, double cell);

  void add(const Vec& p);
  const std::vector<Vec>& points() const { return points_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  double cell() const { return cell_; }
  bool empty() const { return points_.empty(); }

  /// True when some stored point lies within `tol` of p in every coordinate.
  bool contains_near(const Vec& p, double tol) const;

 private:
  using Key = std::array<long long, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  Key key(const Vec& p) const;

  double cell_;
  std::vector<Vec> points_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
  Vec lo_;
  Vec hi_;
};

/// Breadth-first frontier search over action sequences on the grid
/// linspace(-1, 1, actions_per_dim)^action_dim, merging states that round to the same
/// point of a lattice with spacing v_max / 2. Throws RuntimeAbort once more than node_budget
/// successor states have been generated.
ReachableSet reachable_bruteforce(const EnvModel& env, const State& s0, int n, int actions_per_dim,
                                  std::size_t node_budget = 5'000'000);

/// 1-D additive Gaussian skill channel: z ~ U(box), s_n | z ~ N(s0 + shift(z), sigma^2).
struct MiChannel {
  BoxParams box;
  std::function<double(double z)> shift;
  double sigma = 1.0;
};

struct QuadratureGrid {
  int z_points = 257;  // odd, so the halved grid shares its endpoints
  int s_points = 513;
  double s_margin = 8.0;    // s range extends this many sigmas past the extreme shifts
  double tolerance = 1e-3;  // largest accepted Richardson error estimate, nats
};

struct MiResult {
  double mi = 0.0;
  double error_estimate = 0.0;  // |I_h - I_2h| / 3
  double capacity_cap = 0.0;    // 0.5 log(1 + Var[shift(Z)] / sigma^2)
};

/// Trapezoidal double integral of p(z) p(s|z) log(p(s|z) / p(s)). Throws
/// RuntimeAbort when the Richardson error estimate exceeds the tolerance.
MiResult exact_mi_quadrature(const MiChannel& channel, const QuadratureGrid& grid = {}, Exec exec = Exec::parallel);

/// Level-0 actions of a noiseless rollout toward h(s0) + z for the full n
/// steps, without early stopping.
std::vector<Vec> open_loop_plan(const Agent& agent, const State& s0, const Vec& z);

/// The channel induced by replaying open_loop_plan on the 1-D noisy channel
/// environment (no walls). Requires a one-level agent.
MiChannel open_loop_channel(const Agent& agent, const State& s0);

enum class Execution { closed_loop, open_loop };

struct BoundEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// neg_log_prob(box) + mean of var_logpdf(h(s0) + z, h(s_n), sigma0_gs) over
/// samples, with z drawn from the level's noiseless goal space at s0. Closed
/// loop executes the level greedily with early stopping; open loop replays
/// open_loop_plan through the noisy dynamics.
BoundEstimate variational_bound_estimate(const Agent& agent, int level, const State& s0, int samples, Rng& rng,
                                         Execution mode = Execution::closed_loop, Exec exec = Exec::parallel);

}  // namespace hiemp
