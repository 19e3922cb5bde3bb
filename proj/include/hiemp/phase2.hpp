#pragma once

// Downstream goal reaching over frozen phase-1 skills.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hiemp/agent.hpp"

namespace hiemp {

/// Appends a goal-conditioned task level acting in the top skill level's goal
/// space. Returns a warning when the skill levels have not been trained.
std::optional<std::string> attach_task_level(Agent& agent, const TaskSpec& task, Rng& rng);

/// Index of the attached task level, or throws if none is attached.
int task_level(const Agent& agent);

struct EvalRow {
  std::uint64_t seed = 0;
  int episode = 0;
  Vec goal;
  double min_dist = 0.0;
};

struct EvalReport {
  std::vector<std::uint64_t> seeds;
  std::vector<EvalRow> rows;
  std::vector<double> seed_means;
  double mean = 0.0;
  double std = 0.0;  // population std of the per-seed means
};

/// Greedy task-level episodes. Each episode samples a start state and a goal
/// from the task box, and records the minimum over all visited primitive
/// states (including the start) of the goal distance.
EvalReport evaluate(const Agent& agent, int n_episodes, const std::vector<std::uint64_t>& seeds,
                    Exec exec = Exec::parallel);

struct Phase2Metrics {
  int episode = 0;  // training episodes completed
  double gc_reward_mean = 0.0;
  double min_dist_mean = 0.0;  // NaN when no evaluation ran at this point
};

using Phase2Sink = std::function<void(const Phase2Metrics&)>;

/// Trains only the task level in chunks of phase2_episodes_per_update
/// exploratory episodes with phase2_steps gradient steps each, keeping a
/// persistent replay buffer. Emits a row before training and after each
/// chunk; rows every phase2_eval_every episodes carry a greedy evaluation.
void train_phase2(Agent& agent, int episodes, Rng& rng, const Phase2Sink& sink = {});

}  // namespace hiemp
