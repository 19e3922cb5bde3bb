#pragma once

// Goal-conditioned actor-critic: deterministic policy gradient through a
// bootstrapped critic, with a per-step Gaussian log-density reward and
// discount truncation inside the goal threshold.

#include <functional>
#include <span>
#include <vector>

#include "hiemp/agent.hpp"

namespace hiemp {

/// Produces the absolute goal for a rollout starting at s0.
using GoalSampler = std::function<Vec(const State& s0, Rng& rng)>;

/// h(s0) + reparam(eps, box(mu(s0) + noise)), noise of std goal_noise on every raw output.
GoalSampler noisy_goal_space_sampler(const Agent& agent, int level);

/// Uniform over the axis box center +/- length / 2.
GoalSampler uniform_box_sampler(Vec center, Vec length);

/// One exploratory rollout per start state. Each rollout draws from its own
/// stream seeded from `rng`, so the serial and parallel kernels agree exactly.
std::vector<GCTransition> collect_gc_rollouts(const Agent& agent, int level, std::span<const State> s0_batch,
                                              const GoalSampler& sampler, Rng& rng, NestingAudit* audit = nullptr,
                                              Exec exec = Exec::parallel);

/// One step on mean (Q(s,g,a) - (r + gamma Q(s', g, pi(s', g))))^2 using the
/// current parameters for the target. Returns the loss before the step.
double update_gc_critic(Agent& agent, int level, std::span<const GCTransition> batch);

/// One step on -mean Q(s, g, pi(s, g)) + gc_action_l2 * mean |tanh f(s, g)|^2 with the critic frozen. Returns the mean Q before the step.
double update_gc_actor(Agent& agent, int level, std::span<const GCTransition> batch);

struct GCUpdateStats {
  double reward_sum = 0.0;
  std::size_t transitions = 0;
  double critic_loss = 0.0;
};

/// Collects gc_rollouts rollouts from the level's start buffer into the
/// level's replay buffer, then runs S interleaved critic and actor steps.
GCUpdateStats run_gc_update(Agent& agent, int level, int S, Rng& rng);

/// Shared driver behind run_gc_update and phase-2 training.
GCUpdateStats gc_update_with(Agent& agent, int level, int S, std::span<const State> starts,
                             const GoalSampler& sampler, bool keep_buffer, std::size_t capacity, Rng& rng);

}  // namespace hiemp
