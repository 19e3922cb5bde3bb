#pragma once

// k-level composition: action scaling into the level-below goal space, nested
// skill execution, start-state buffers, and the phase-1 training loop.

#include <functional>
#include <vector>

#include "hiemp/agent.hpp"

namespace hiemp {

/// tanh(raw) * bounds + shifts, elementwise.
Vec scale_action(const Vec& raw, const Vec& bounds, const Vec& shifts);

/// Execution context threaded through nested skill rollouts.
struct RolloutContext {
  Rng& rng;
  NestingAudit* audit = nullptr;
  std::vector<StartBuffer>* record = nullptr;  // start states are pushed here when set
  const std::function<void(const State&)>* on_primitive = nullptr;
};

struct SkillOutcome {
  State state;
  int actions = 0;           // actions taken at the executing level
  long primitive_steps = 0;  // environment steps consumed
};

/// Level `level`'s action at s for absolute goal `goal`. With `explore`, adds
/// Gaussian noise of std action_noise * bounds and clips back into the bounds.
Vec select_action(const Agent& agent, int level, const State& s, const Vec& goal, bool explore,
                  RolloutContext& ctx);

/// T_level: one primitive step at level 0, otherwise a full greedy execution
/// of the subgoal by the level below.
SkillOutcome level_transition(const Agent& agent, int level, const State& s, const Vec& action,
                              RolloutContext& ctx);

/// Greedily runs level `level` toward `goal` for at most n actions, stopping
/// once within the level's goal threshold (checked before every action).
SkillOutcome pursue_goal(const Agent& agent, int level, const State& s, const Vec& goal, RolloutContext& ctx);

/// Executes a level-`level` subgoal (an offset from h(s)) with level-1's policy.
/// SkillOutcome::actions counts level-1 actions.
SkillOutcome execute_subgoal(const Agent& agent, int level, const State& s, const Vec& subgoal,
                             RolloutContext& ctx);

/// Chains `iterations` greedy top-level skills from a task-initial state,
/// recording every level's start states into the agent's buffers.
void refresh_start_states(Agent& agent, int iterations, Rng& rng);

struct EpochMetrics {
  int epoch = 0;
  int level = 0;
  BoxParams box;  // goal space at the nominal start state
  double halfwidth_mean = 0.0;
  double gc_reward_mean = 0.0;
  double gs_reward_mean = 0.0;
};

using MetricsSink = std::function<void(const EpochMetrics&)>;

/// Phase-1 loop. Emits epoch-0 rows for the initial agent, then per epoch and
/// level (bottom-up): gc_iterations gc updates, gs_iterations gs updates, and a
/// start-buffer refresh every refresh_every epochs.
void train_phase1(Agent& agent, int epochs, Rng& rng, const MetricsSink& sink = {});

}  // namespace hiemp
