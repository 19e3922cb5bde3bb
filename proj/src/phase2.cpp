#include "hiemp/phase2.hpp"

#include <cmath>
#include <limits>

#include "hiemp/error.hpp"
#include "hiemp/gc_actor_critic.hpp"
#include "hiemp/hierarchy.hpp"

namespace hiemp {

std::optional<std::string> attach_task_level(Agent& agent, const TaskSpec& task, Rng& rng) {
  if (agent.task) throw InvalidInput("a task level is already attached");
  task.validate(agent.goal_dim());
  const int k = agent.skill_levels();
  LevelSpec spec;
  spec.n = task.n_task;
  spec.sigma0_gc = agent.specs.at(static_cast<std::size_t>(k - 1)).sigma0_gc;
  spec.sigma0_gs = agent.specs.at(static_cast<std::size_t>(k - 1)).sigma0_gs;
  spec.eps_threshold = task.eps_task;
  spec.gamma = agent.specs.at(static_cast<std::size_t>(k - 1)).gamma;
  spec.validate();
  agent.specs.push_back(spec);
  agent.task = task;
  agent.gc.push_back(make_gc_actor_critic(agent, k, rng));
  agent.replay.resize(agent.gc.size());
  if (agent.phase1_epochs == 0) {
    return std::string("attaching a task level to an agent with no phase-1 training; skill boxes are at their initial size");
  }
  return std::nullopt;
}

int task_level(const Agent& agent) {
  if (!agent.task || agent.gc.size() != agent.gs.size() + 1) throw InvalidInput("no task level is attached");
  return agent.skill_levels();
}

EvalReport evaluate(const Agent& agent, int n_episodes, const std::vector<std::uint64_t>& seeds, Exec exec) {
  if (n_episodes < 1) throw InvalidInput("evaluation needs at least one episode");
  if (seeds.empty()) throw InvalidInput("evaluation needs at least one seed");
  const int level = task_level(agent);
  const GoalSampler goals = uniform_box_sampler(agent.task->goal_center, agent.task->goal_length);

  EvalReport report;
  report.seeds = seeds;
  for (std::uint64_t seed : seeds) {
    std::vector<EvalRow> rows(static_cast<std::size_t>(n_episodes));
    for_each_index(exec, n_episodes, [&](std::ptrdiff_t i) {
      Rng local = stream_rng(seed, static_cast<std::uint64_t>(i));
      const State s0 = sample_start(agent.env, local);
      const Vec goal = goals(s0, local);
      double best = goal_distance(project_goal(agent.env, s0), goal, agent.params.distance);
      const std::function<void(const State&)> track = [&](const State& s) {
        best = std::min(best, goal_distance(project_goal(agent.env, s), goal, agent.params.distance));
      };
      RolloutContext ctx{local, nullptr, nullptr, &track};
      pursue_goal(agent, level, s0, goal, ctx);
      rows[static_cast<std::size_t>(i)] = EvalRow{seed, static_cast<int>(i), goal, best};
    });
    double sum = 0.0;
    for (const auto& r : rows) sum += r.min_dist;
    report.seed_means.push_back(sum / n_episodes);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  // Offsets from the first seed's mean keep identical seeds exactly at zero spread.
  const double first = report.seed_means.front();
  double offset = 0.0;
  for (double m : report.seed_means) offset += m - first;
  report.mean = first + offset / static_cast<double>(report.seed_means.size());
  double var = 0.0;
  for (double m : report.seed_means) var += (m - report.mean) * (m - report.mean);
  report.std = std::sqrt(var / static_cast<double>(report.seed_means.size()));
  return report;
}

void train_phase2(Agent& agent, int episodes, Rng& rng, const Phase2Sink& sink) {
  if (episodes < 1) throw InvalidInput("phase-2 training needs at least one episode");
  const int level = task_level(agent);
  const auto& p = agent.params;
  const GoalSampler goals = uniform_box_sampler(agent.task->goal_center, agent.task->goal_length);
  const std::uint64_t eval_seed = rng.next();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto curve_point = [&]() { return evaluate(agent, p.phase2_eval_episodes, {eval_seed}, p.exec).mean; };

  if (sink) sink({0, nan, curve_point()});
  int done = 0;
  int next_eval = p.phase2_eval_every;
  while (done < episodes) {
    const int chunk = std::min(p.phase2_episodes_per_update, episodes - done);
    std::vector<State> starts;
    starts.reserve(static_cast<std::size_t>(chunk));
    for (int i = 0; i < chunk; ++i) starts.push_back(sample_start(agent.env, rng));
    const auto stats = gc_update_with(agent, level, p.phase2_steps, starts, goals, true, p.phase2_replay_capacity, rng);
    done += chunk;
    double dist = nan;
    if (done >= next_eval || done == episodes) {
      dist = curve_point();
      while (next_eval <= done) next_eval += p.phase2_eval_every;
    }
    if (sink) {
      sink({done, stats.transitions ? stats.reward_sum / static_cast<double>(stats.transitions) : nan, dist});
    }
  }
}

}  // namespace hiemp
