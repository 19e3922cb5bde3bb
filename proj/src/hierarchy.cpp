#include "hiemp/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hiemp/error.hpp"
#include "hiemp/gc_actor_critic.hpp"
#include "hiemp/gs_actor_critic.hpp"

namespace hiemp {

Vec scale_action(const Vec& raw, const Vec& bounds, const Vec& shifts) {
  if (raw.size() != bounds.size() || raw.size() != shifts.size()) throw InvalidInput("scale_action: dims differ");
  return raw.array().tanh().matrix().cwiseProduct(bounds) + shifts;
}

Vec select_action(const Agent& agent, int level, const State& s, const Vec& goal, bool explore,
                  RolloutContext& ctx) {
  const auto& ac = agent.gc.at(static_cast<std::size_t>(level));
  const Vec raw = forward(ac.policy, gc_policy_input(agent, s, goal));
  const ActionScale sc = action_scale(agent, level, s);
  Vec a = scale_action(raw, sc.bounds, sc.shifts);
  if (explore && agent.params.action_noise > 0.0) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) += ctx.rng.normal(0.0, agent.params.action_noise * sc.bounds(i));
    }
  }
  a = a.cwiseMax(sc.shifts - sc.bounds).cwiseMin(sc.shifts + sc.bounds);
  if (level > 0 && ctx.audit) {
    ctx.audit->subgoals += 1;
    const Vec lo = sc.shifts - sc.bounds;
    const Vec hi = sc.shifts + sc.bounds;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double tol = 1e-12 * (1.0 + std::abs(lo(i)) + std::abs(hi(i)));
      if (a(i) < lo(i) - tol || a(i) > hi(i) + tol) {
        ctx.audit->subgoal_violations += 1;
        break;
      }
    }
  }
  return a;
}

SkillOutcome level_transition(const Agent& agent, int level, const State& s, const Vec& action,
                              RolloutContext& ctx) {
  if (level == 0) {
    State next = step(agent.env, s, action, ctx.rng);
    if (ctx.on_primitive) (*ctx.on_primitive)(next);
    return {std::move(next), 1, 1};
  }
  SkillOutcome out = execute_subgoal(agent, level, s, action, ctx);
  out.actions = 1;
  return out;
}

SkillOutcome pursue_goal(const Agent& agent, int level, const State& s, const Vec& goal, RolloutContext& ctx) {
  const auto& spec = agent.specs.at(static_cast<std::size_t>(level));
  if (ctx.record && static_cast<std::size_t>(level) < ctx.record->size()) {
    (*ctx.record)[static_cast<std::size_t>(level)].push(s);
  }
  SkillOutcome out{s, 0, 0};
  for (int t = 0; t < spec.n; ++t) {
    if (goal_distance(project_goal(agent.env, out.state), goal, agent.params.distance) < spec.eps_threshold) break;
    const Vec a = select_action(agent, level, out.state, goal, false, ctx);
    SkillOutcome inner = level_transition(agent, level, out.state, a, ctx);
    out.state = std::move(inner.state);
    out.primitive_steps += inner.primitive_steps;
    out.actions += 1;
  }
  if (ctx.audit) {
    ctx.audit->skills += 1;
    if (out.primitive_steps > horizon_bound(agent, level)) ctx.audit->horizon_violations += 1;
  }
  return out;
}

SkillOutcome execute_subgoal(const Agent& agent, int level, const State& s, const Vec& subgoal,
                             RolloutContext& ctx) {
  if (level < 1) throw InvalidInput("execute_subgoal needs level >= 1");
  return pursue_goal(agent, level - 1, s, project_goal(agent.env, s) + subgoal, ctx);
}

void refresh_start_states(Agent& agent, int iterations, Rng& rng) {
  const int top = agent.skill_levels() - 1;
  NestingAudit audit;
  RolloutContext ctx{rng, &audit, &agent.start_buffers, nullptr};
  State s = sample_start(agent.env, rng);
  for (int i = 0; i < iterations; ++i) {
    const BoxParams box = goal_space(agent, top, s);
    const Vec goal = project_goal(agent.env, s) + reparam(sample_eps(rng, agent.goal_dim()), box);
    s = pursue_goal(agent, top, s, goal, ctx).state;
  }
  agent.audit.merge(audit);
}

namespace {

EpochMetrics snapshot(const Agent& agent, int epoch, int level, double gc_reward, double gs_reward) {
  EpochMetrics m;
  m.epoch = epoch;
  m.level = level;
  m.box = goal_space(agent, level, nominal_start(agent.env));
  m.halfwidth_mean = m.box.halfwidth().mean();
  m.gc_reward_mean = gc_reward;
  m.gs_reward_mean = gs_reward;
  return m;
}

}  // namespace

void train_phase1(Agent& agent, int epochs, Rng& rng, const MetricsSink& sink) {
  if (epochs < 0) throw InvalidInput("epochs must be >= 0");
  const int k = agent.skill_levels();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (sink) {
    for (int level = 0; level < k; ++level) sink(snapshot(agent, 0, level, nan, nan));
  }
  const auto& p = agent.params;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    for (int level = 0; level < k; ++level) {
      double gc_sum = 0.0;
      std::size_t gc_count = 0;
      double gs_sum = 0.0;
      std::size_t gs_count = 0;
      try {
        for (int it = 0; it < p.gc_iterations; ++it) {
          const auto stats = run_gc_update(agent, level, p.gc_steps, rng);
          gc_sum += stats.reward_sum;
          gc_count += stats.transitions;
        }
        for (int it = 0; it < p.gs_iterations; ++it) {
          const auto stats = run_gs_update(agent, level, p.gs_steps, rng);
          gs_sum += stats.reward_sum;
          gs_count += stats.transitions;
        }
      } catch (const RuntimeAbort& e) {
        throw RuntimeAbort("epoch " + std::to_string(epoch) + ", level " + std::to_string(level) + ": " + e.what());
      }
      if (sink) {
        sink(snapshot(agent, epoch, level, gc_count ? gc_sum / static_cast<double>(gc_count) : nan,
                      gs_count ? gs_sum / static_cast<double>(gs_count) : nan));
      }
    }
    agent.phase1_epochs += 1;
    if (p.refresh_skills > 0 && epoch % p.refresh_every == 0) refresh_start_states(agent, p.refresh_skills, rng);
  }
}

}  // namespace hiemp
