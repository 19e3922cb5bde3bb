#include "hiemp/gs_actor_critic.hpp"

#include <cmath>
#include <sstream>

#include "hiemp/error.hpp"
#include "hiemp/hierarchy.hpp"

namespace hiemp {

namespace {

std::string describe(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v(i);
  os << ']';
  return os.str();
}

Mat stack_inputs(const Agent& agent, std::span<const GSTransition> batch, const Mat* actions_override) {
  const auto b = static_cast<Eigen::Index>(batch.size());
  const int sd = agent.env.state_dim;
  const int gd = agent.goal_dim();
  Mat x(sd + gd + 2 * gd, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& tr = batch[static_cast<std::size_t>(j)];
    x.col(j).head(sd) = net_state(agent, tr.s0);
    x.col(j).segment(sd, gd) = tr.eps;
    x.col(j).tail(2 * gd) = actions_override ? Vec(actions_override->col(j)) : tr.a;
  }
  return x;
}

}  // namespace

std::vector<GSTransition> collect_gs_transitions(const Agent& agent, int level, std::span<const State> s0_batch,
                                                 Rng& rng, NestingAudit* audit, Exec exec) {
  const auto& spec = agent.specs.at(static_cast<std::size_t>(level));
  const auto& gs = agent.gs.at(static_cast<std::size_t>(level));
  const int gd = agent.goal_dim();
  const std::uint64_t base = rng.next();
  std::vector<GSTransition> out(s0_batch.size());
  std::vector<NestingAudit> audits(s0_batch.size());

  for_each_index(exec, static_cast<std::ptrdiff_t>(s0_batch.size()), [&](std::ptrdiff_t i) {
    const auto idx = static_cast<std::size_t>(i);
    Rng local = stream_rng(base, idx);
    RolloutContext ctx{local, &audits[idx], nullptr, nullptr};
    const State& s0 = s0_batch[idx];
    const Epsilon eps = sample_eps(local, gd);
    Vec raw = forward(gs.policy, net_state(agent, s0));
    for (Eigen::Index j = 0; j < raw.size(); ++j) raw(j) += local.normal(0.0, agent.params.gs_action_noise);
    const BoxParams box = BoxParams::from_raw(raw);
    const Vec goal = project_goal(agent.env, s0) + reparam(eps, box);
    const State sn = pursue_goal(agent, level, s0, goal, ctx).state;
    const double r = var_logpdf(goal, project_goal(agent.env, sn), spec.sigma0_gs) +
                     agent.params.entropy_coef * neg_log_prob(box);
    if (!std::isfinite(r)) {
      throw RuntimeAbort("non-finite gs reward at level " + std::to_string(level) + ": s0=" + describe(s0) +
                         " eps=" + describe(eps.eps) + " a=" + describe(raw) + " s_n=" + describe(sn));
    }
    out[idx] = GSTransition{s0, eps.eps, box.to_raw(), r};
  });

  if (audit) {
    for (const auto& a : audits) audit->merge(a);
  }
  return out;
}

double update_gs_critic(Agent& agent, int level, std::span<const GSTransition> batch) {
  if (batch.empty()) throw InvalidInput("gs update needs a nonempty batch");
  auto& ac = agent.gs.at(static_cast<std::size_t>(level));
  BatchTrace trace;
  const Mat q = forward_batch(ac.critic, stack_inputs(agent, batch, nullptr), &trace);
  // A positive scale leaves the critic's maximizer, and so the actor's ascent
  // direction, unchanged.
  const double scale = agent.params.gs_reward_scale;
  Vec diff(q.cols());
  for (Eigen::Index j = 0; j < q.cols(); ++j) diff(j) = q(0, j) - scale * batch[static_cast<std::size_t>(j)].r;
  const double n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  const auto bp = backward_batch(ac.critic, trace, (2.0 / n) * diff.transpose());
  adam_update(ac.critic, bp.params, ac.critic_opt, agent.params.lr_gs_critic);
  return loss;
}

double update_gs_actor(Agent& agent, int level, std::span<const GSTransition> batch) {
  if (batch.empty()) throw InvalidInput("gs update needs a nonempty batch");
  auto& ac = agent.gs.at(static_cast<std::size_t>(level));
  const auto b = static_cast<Eigen::Index>(batch.size());
  const int gd = agent.goal_dim();
  Mat s0(agent.env.state_dim, b);
  for (Eigen::Index j = 0; j < b; ++j) s0.col(j) = batch[static_cast<std::size_t>(j)].s0;

  BatchTrace policy_trace;
  const Mat raw = forward_batch(ac.policy, net_states(agent, s0), &policy_trace);
  Mat used = raw;
  used.bottomRows(gd) = raw.bottomRows(gd).cwiseMax(kLogHalfwidthMin).cwiseMin(kLogHalfwidthMax);

  BatchTrace critic_trace;
  const Mat q = forward_batch(ac.critic, stack_inputs(agent, batch, &used), &critic_trace);
  const double n = static_cast<double>(b);
  const auto critic_bp = backward_batch(ac.critic, critic_trace, Mat::Constant(1, b, -1.0 / n));
  Mat d_raw = critic_bp.inputs.bottomRows(2 * gd);
  for (Eigen::Index j = 0; j < b; ++j) {
    for (int i = 0; i < gd; ++i) {
      const double v = raw(gd + i, j);
      if (v < kLogHalfwidthMin || v > kLogHalfwidthMax) d_raw(gd + i, j) = 0.0;
    }
  }
  const auto policy_bp = backward_batch(ac.policy, policy_trace, d_raw);
  adam_update(ac.policy, policy_bp.params, ac.policy_opt, agent.params.lr_gs_actor);
  return q.mean();
}

GSUpdateStats run_gs_update(Agent& agent, int level, int S, Rng& rng) {
  if (S < 1) throw InvalidInput("gradient steps S must be >= 1");
  const auto& starts_buf = agent.start_buffers.at(static_cast<std::size_t>(level));
  std::vector<State> starts;
  starts.reserve(static_cast<std::size_t>(agent.params.gs_transitions));
  for (int i = 0; i < agent.params.gs_transitions; ++i) starts.push_back(starts_buf.sample(rng));

  NestingAudit audit;
  const auto buffer = collect_gs_transitions(agent, level, starts, rng, &audit, agent.params.exec);
  agent.audit.merge(audit);
  if (buffer.empty()) throw RuntimeAbort("gs buffer is empty after collection");

  GSUpdateStats stats;
  stats.transitions = buffer.size();
  for (const auto& tr : buffer) stats.reward_sum += tr.r;
  std::vector<GSTransition> batch(static_cast<std::size_t>(agent.params.batch_size));
  for (int step = 0; step < S; ++step) {
    for (auto& slot : batch) slot = buffer[rng.index(buffer.size())];
    stats.critic_loss = update_gs_critic(agent, level, batch);
    update_gs_actor(agent, level, batch);
  }
  return stats;
}

}  // namespace hiemp
