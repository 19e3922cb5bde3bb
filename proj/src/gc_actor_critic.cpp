#include "hiemp/gc_actor_critic.hpp"

#include <cmath>
#include <string>

#include "hiemp/error.hpp"
#include "hiemp/hierarchy.hpp"

namespace hiemp {

GoalSampler noisy_goal_space_sampler(const Agent& agent, int level) {
  return [&agent, level](const State& s0, Rng& rng) {
    Vec raw = forward(agent.gs.at(static_cast<std::size_t>(level)).policy, net_state(agent, s0));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += rng.normal(0.0, agent.params.goal_noise);
    const BoxParams box = BoxParams::from_raw(raw);
    return Vec(project_goal(agent.env, s0) + reparam(sample_eps(rng, box.dim()), box));
  };
}

GoalSampler uniform_box_sampler(Vec center, Vec length) {
  return [center = std::move(center), length = std::move(length)](const State&, Rng& rng) {
    Vec g(center.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      g(i) = rng.uniform(center(i) - 0.5 * length(i), center(i) + 0.5 * length(i));
    }
    return g;
  };
}

std::vector<GCTransition> collect_gc_rollouts(const Agent& agent, int level, std::span<const State> s0_batch,
                                              const GoalSampler& sampler, Rng& rng, NestingAudit* audit,
                                              Exec exec) {
  const auto& spec = agent.specs.at(static_cast<std::size_t>(level));
  const std::uint64_t base = rng.next();
  const auto count = static_cast<std::ptrdiff_t>(s0_batch.size());
  std::vector<std::vector<GCTransition>> per_rollout(s0_batch.size());
  std::vector<NestingAudit> audits(s0_batch.size());

  for_each_index(exec, count, [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    Rng local = stream_rng(base, idx);
    RolloutContext ctx{local, &audits[idx], nullptr, nullptr};
    const State& s0 = s0_batch[idx];
    const Vec goal = sampler(s0, local);
    State s = s0;
    long primitive = 0;
    auto& out = per_rollout[idx];
    for (int t = 0; t < spec.n; ++t) {
      Vec a = select_action(agent, level, s, goal, true, ctx);
      SkillOutcome next = level_transition(agent, level, s, a, ctx);
      primitive += next.primitive_steps;
      const Vec achieved = project_goal(agent.env, next.state);
      const double r = var_logpdf(goal, achieved, spec.sigma0_gc);
      if (!std::isfinite(r)) {
        throw RuntimeAbort("non-finite gc reward at level " + std::to_string(level) + ", step " +
                           std::to_string(t));
      }
      const bool reached = goal_distance(achieved, goal, agent.params.distance) < spec.eps_threshold;
      out.push_back({s, goal, std::move(a), r, next.state, reached ? 0.0 : spec.gamma});
      s = std::move(next.state);
      if (reached) break;
    }
    audits[idx].skills += 1;
    if (primitive > horizon_bound(agent, level)) audits[idx].horizon_violations += 1;
  });

  std::vector<GCTransition> all;
  for (std::size_t i = 0; i < per_rollout.size(); ++i) {
    all.insert(all.end(), std::make_move_iterator(per_rollout[i].begin()),
               std::make_move_iterator(per_rollout[i].end()));
    if (audit) audit->merge(audits[i]);
  }
  return all;
}

namespace {

struct GCBatch {
  Mat states;       // s_t
  Mat in_states;    // s_t as net input
  Mat rel_goals;    // g - h(s_t)
  Mat actions;
  Vec rewards;
  Mat next_states;
  Mat in_next_states;
  Mat next_rel_goals;
  Vec gammas;
};

GCBatch assemble(const Agent& agent, std::span<const GCTransition> batch) {
  if (batch.empty()) throw InvalidInput("gc update needs a nonempty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  const int sd = agent.env.state_dim;
  const int gd = agent.goal_dim();
  const auto ad = batch.front().a_t.size();
  GCBatch out{Mat(sd, b), Mat(), Mat(gd, b), Mat(ad, b), Vec(b), Mat(sd, b), Mat(), Mat(gd, b), Vec(b)};
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& tr = batch[static_cast<std::size_t>(j)];
    out.states.col(j) = tr.s_t;
    out.rel_goals.col(j) = tr.goal - project_goal(agent.env, tr.s_t);
    out.actions.col(j) = tr.a_t;
    out.rewards(j) = tr.r;
    out.next_states.col(j) = tr.s_next;
    out.next_rel_goals.col(j) = tr.goal - project_goal(agent.env, tr.s_next);
    out.gammas(j) = tr.gamma;
  }
  out.in_states = net_states(agent, out.states);
  out.in_next_states = net_states(agent, out.next_states);
  return out;
}

Mat vstack(std::initializer_list<const Mat*> parts) {
  Eigen::Index rows = 0;
  const Eigen::Index cols = (*parts.begin())->cols();
  for (const Mat* p : parts) rows += p->rows();
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Mat* p : parts) {
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

/// Greedy scaled actions of level `level` for a batch of (state, relative goal) columns.
Mat greedy_actions(const Agent& agent, int level, const Mat& states, const Mat& rel_goals, BatchTrace* trace,
                   Mat* tanh_out, Mat* bounds_out) {
  const auto& ac = agent.gc.at(static_cast<std::size_t>(level));
  const Mat in_states = net_states(agent, states);
  const Mat raw = forward_batch(ac.policy, vstack({&in_states, &rel_goals}), trace);
  ActionScaleBatch sc = action_scale_batch(agent, level, states);
  Mat t = raw.array().tanh().matrix();
  Mat a = t.cwiseProduct(sc.bounds) + sc.shifts;
  if (tanh_out) *tanh_out = std::move(t);
  if (bounds_out) *bounds_out = std::move(sc.bounds);
  return a;
}

}  // namespace

double update_gc_critic(Agent& agent, int level, std::span<const GCTransition> batch) {
  const GCBatch b = assemble(agent, batch);
  auto& ac = agent.gc.at(static_cast<std::size_t>(level));
  const Mat next_actions = greedy_actions(agent, level, b.next_states, b.next_rel_goals, nullptr, nullptr, nullptr);
  const Mat next_q = forward_batch(ac.critic, vstack({&b.in_next_states, &b.next_rel_goals, &next_actions}));
  const Vec target = b.rewards + b.gammas.cwiseProduct(next_q.row(0).transpose());

  BatchTrace trace;
  const Mat q = forward_batch(ac.critic, vstack({&b.in_states, &b.rel_goals, &b.actions}), &trace);
  const Vec diff = q.row(0).transpose() - target;
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  const Mat upstream = (2.0 / n) * diff.transpose();
  const auto bp = backward_batch(ac.critic, trace, upstream);
  adam_update(ac.critic, bp.params, ac.critic_opt, agent.params.lr_gc_critic);
  return loss;
}

double update_gc_actor(Agent& agent, int level, std::span<const GCTransition> batch) {
  const GCBatch b = assemble(agent, batch);
  auto& ac = agent.gc.at(static_cast<std::size_t>(level));
  BatchTrace policy_trace;
  Mat t;
  Mat bounds;
  const Mat actions = greedy_actions(agent, level, b.states, b.rel_goals, &policy_trace, &t, &bounds);

  BatchTrace critic_trace;
  const Mat q = forward_batch(ac.critic, vstack({&b.in_states, &b.rel_goals, &actions}), &critic_trace);
  const double n = static_cast<double>(q.cols());
  const Mat upstream = Mat::Constant(1, q.cols(), -1.0 / n);
  const auto critic_bp = backward_batch(ac.critic, critic_trace, upstream);
  const Mat d_actions = critic_bp.inputs.bottomRows(actions.rows());
  const double l2 = agent.params.gc_action_l2;
  const Mat d_raw =
      ((d_actions.array() * bounds.array() + (2.0 * l2 / n) * t.array()) * (1.0 - t.array().square())).matrix();
  const auto policy_bp = backward_batch(ac.policy, policy_trace, d_raw);
  adam_update(ac.policy, policy_bp.params, ac.policy_opt, agent.params.lr_gc_actor);
  return q.mean();
}

GCUpdateStats gc_update_with(Agent& agent, int level, int S, std::span<const State> starts,
                             const GoalSampler& sampler, bool keep_buffer, std::size_t capacity, Rng& rng) {
  if (S < 1) throw InvalidInput("gradient steps S must be >= 1");
  if (agent.replay.size() < agent.gc.size()) agent.replay.resize(agent.gc.size());
  auto& buffer = agent.replay[static_cast<std::size_t>(level)];
  if (!keep_buffer) buffer.clear();

  NestingAudit audit;
  auto fresh = collect_gc_rollouts(agent, level, starts, sampler, rng, &audit, agent.params.exec);
  agent.audit.merge(audit);
  GCUpdateStats stats;
  stats.transitions = fresh.size();
  for (const auto& tr : fresh) stats.reward_sum += tr.r;
  for (auto& tr : fresh) {
    if (buffer.size() == capacity) buffer.pop_front();
    buffer.push_back(std::move(tr));
  }
  if (buffer.empty()) throw RuntimeAbort("gc replay buffer is empty after collection");

  std::vector<GCTransition> batch(static_cast<std::size_t>(agent.params.batch_size));
  for (int step = 0; step < S; ++step) {
    for (auto& slot : batch) slot = buffer[rng.index(buffer.size())];
    stats.critic_loss = update_gc_critic(agent, level, batch);
    update_gc_actor(agent, level, batch);
  }
  return stats;
}

GCUpdateStats run_gc_update(Agent& agent, int level, int S, Rng& rng) {
  const auto& buffer = agent.start_buffers.at(static_cast<std::size_t>(level));
  std::vector<State> starts;
  starts.reserve(static_cast<std::size_t>(agent.params.gc_rollouts));
  for (int i = 0; i < agent.params.gc_rollouts; ++i) starts.push_back(buffer.sample(rng));
  const GoalSampler sampler = noisy_goal_space_sampler(agent, level);
  return gc_update_with(agent, level, S, starts, sampler, agent.params.persistent_gc_buffer,
                        agent.params.persistent_gc_buffer ? agent.params.persistent_capacity
                                                          : std::numeric_limits<std::size_t>::max(),
                        rng);
}

}  // namespace hiemp
