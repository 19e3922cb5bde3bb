#pragma once

// Goal-space actor-critic: a maximum-entropy bandit over uniform goal boxes.
// The critic regresses single-sample rewards; the policy ascends the critic
// through its action input (stochastic value gradient).

#include <span>
#include <vector>

#include "hiemp/agent.hpp"

namespace hiemp {

/// One transition per start state: sample eps and a noisy raw action, run the
/// level's goal-conditioned policy greedily toward h(s0) + z, and score
/// var_logpdf(h(s0) + z, h(s_n), sigma0_gs) + entropy_coef * neg_log_prob(box).
std::vector<GSTransition> collect_gs_transitions(const Agent& agent, int level, std::span<const State> s0_batch,
                                                 Rng& rng, NestingAudit* audit = nullptr,
                                                 Exec exec = Exec::parallel);

/// One step on mean (R(s0, eps, a) - c r)^2 with c = gs_reward_scale. Returns the
/// loss before the step.
double update_gs_critic(Agent& agent, int level, std::span<const GSTransition> batch);

/// One ascent step on mean R(s0, eps, mu(s0)) with the critic frozen. Raw
/// log half-width outputs outside the clamp range receive no gradient.
/// Returns the mean critic value before the step.
double update_gs_actor(Agent& agent, int level, std::span<const GSTransition> batch);

struct GSUpdateStats {
  double reward_sum = 0.0;
  std::size_t transitions = 0;
  double critic_loss = 0.0;
};

/// Fresh buffer of gs_transitions samples from the level's start buffer, then
/// S interleaved critic and actor steps.
GSUpdateStats run_gs_update(Agent& agent, int level, int S, Rng& rng);

}  // namespace hiemp
