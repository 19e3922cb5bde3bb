#include "hiemp/agent.hpp"

#include <cmath>
#include <string>

#include "hiemp/error.hpp"

namespace hiemp {

void LevelSpec::validate() const {
  if (n < 1) throw InvalidInput("level n must be >= 1");
  if (!(sigma0_gc > 0.0) || !(sigma0_gs > 0.0)) throw InvalidInput("level sigma0 values must be positive");
  if (!(eps_threshold > 0.0)) throw InvalidInput("level goal threshold must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("level gamma must lie in (0, 1]");
}

void TaskSpec::validate(int goal_dim) const {
  if (goal_center.size() != goal_dim || goal_length.size() != goal_dim) {
    throw InvalidInput("task goal box dimension does not match the goal space");
  }
  if ((goal_length.array() <= 0.0).any()) throw InvalidInput("task goal lengths must be positive");
  if (n_task < 1) throw InvalidInput("task n must be >= 1");
  if (!(eps_task > 0.0)) throw InvalidInput("task goal threshold must be positive");
}

void TrainParams::validate() const {
  if (hidden.empty()) throw InvalidInput("at least one hidden layer is required");
  for (int h : hidden) {
    if (h <= 0) throw InvalidInput("hidden sizes must be positive");
  }
  for (double lr : {lr_gc_actor, lr_gc_critic, lr_gs_actor, lr_gs_critic}) {
    if (lr < 0.0 || !std::isfinite(lr)) throw InvalidInput("learning rates must be finite and non-negative");
  }
  if (goal_noise < 0 || action_noise < 0 || gs_action_noise < 0) throw InvalidInput("noise stds must be >= 0");
  if (gc_rollouts < 1 || gs_transitions < 1 || batch_size < 1) throw InvalidInput("batch sizes must be >= 1");
  if (gc_iterations < 0 || gc_steps < 1 || gs_iterations < 0 || gs_steps < 1) {
    throw InvalidInput("update schedule counts are out of range");
  }
  if (refresh_every < 1 || refresh_skills < 0) throw InvalidInput("refresh cadence is out of range");
  if (buffer_capacity < 1 || initial_start_states < 1) throw InvalidInput("start buffers need capacity");
  if (!(state_input_scale > 0.0) || !std::isfinite(state_input_scale)) {
    throw InvalidInput("state_input_scale must be positive and finite");
  }
  if (!(gc_action_l2 >= 0.0) || !std::isfinite(gc_action_l2)) throw InvalidInput("gc_action_l2 must be >= 0");
  if (!(gs_reward_scale > 0.0) || !std::isfinite(gs_reward_scale)) {
    throw InvalidInput("gs_reward_scale must be positive and finite");
  }
  if (phase2_episodes_per_update < 1 || phase2_steps < 1 || phase2_eval_every < 1 || phase2_eval_episodes < 1) {
    throw InvalidInput("phase-2 schedule is out of range");
  }
}

void StartBuffer::push(State s) {
  if (states_.size() == capacity_) states_.pop_front();
  states_.push_back(std::move(s));
}

const State& StartBuffer::sample(Rng& rng) const {
  if (states_.empty()) throw RuntimeAbort("start buffer is empty");
  return states_[rng.index(states_.size())];
}

void NestingAudit::merge(const NestingAudit& o) {
  subgoals += o.subgoals;
  subgoal_violations += o.subgoal_violations;
  skills += o.skills;
  horizon_violations += o.horizon_violations;
}

namespace {

std::vector<int> dims_with_hidden(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

}  // namespace

GCActorCritic make_gc_actor_critic(const Agent& agent, int level, Rng& rng) {
  const int sd = agent.env.state_dim;
  const int gd = agent.goal_dim();
  const int ad = agent.action_dim(level);
  GCActorCritic ac;
  ac.policy = make_net(dims_with_hidden(sd + gd, agent.params.hidden, ad), rng, 0.01);
  ac.critic = make_net(dims_with_hidden(sd + gd + ad, agent.params.hidden, 1), rng);
  ac.policy_opt = make_opt_state(ac.policy);
  ac.critic_opt = make_opt_state(ac.critic);
  return ac;
}

GSActorCritic make_gs_actor_critic(const Agent& agent, Rng& rng) {
  const int sd = agent.env.state_dim;
  const int gd = agent.goal_dim();
  GSActorCritic ac;
  ac.policy = make_net(dims_with_hidden(sd, agent.params.hidden, 2 * gd), rng, 0.01);
  ac.policy.biases.back().tail(gd).setConstant(agent.params.init_log_halfwidth);
  ac.critic = make_net(dims_with_hidden(sd + gd + 2 * gd, agent.params.hidden, 1), rng);
  ac.policy_opt = make_opt_state(ac.policy);
  ac.critic_opt = make_opt_state(ac.critic);
  return ac;
}

Agent make_agent(EnvModel env, std::vector<LevelSpec> specs, TrainParams params, Rng& rng) {
  if (specs.empty()) throw InvalidInput("an agent needs at least one level");
  if (specs.size() > 3) throw InvalidInput("at most 3 skill levels are supported");
  for (const auto& s : specs) s.validate();
  params.validate();
  Agent agent;
  agent.env = std::move(env);
  agent.params = std::move(params);
  agent.specs = std::move(specs);
  const int k = static_cast<int>(agent.specs.size());
  for (int level = 0; level < k; ++level) {
    agent.gc.push_back(make_gc_actor_critic(agent, level, rng));
    agent.gs.push_back(make_gs_actor_critic(agent, rng));
    StartBuffer buffer(agent.params.buffer_capacity);
    for (int i = 0; i < agent.params.initial_start_states; ++i) buffer.push(sample_start(agent.env, rng));
    agent.start_buffers.push_back(std::move(buffer));
  }
  return agent;
}

BoxParams goal_space(const Agent& agent, int level, const State& s) {
  return BoxParams::from_raw(forward(agent.gs.at(static_cast<std::size_t>(level)).policy, net_state(agent, s)));
}

ActionScale action_scale(const Agent& agent, int level, const State& s) {
  if (level == 0) return {Vec::Ones(agent.env.action_dim), Vec::Zero(agent.env.action_dim)};
  const BoxParams box = goal_space(agent, level - 1, s);
  return {box.halfwidth(), box.center};
}

ActionScaleBatch action_scale_batch(const Agent& agent, int level, const Mat& states) {
  const Eigen::Index b = states.cols();
  if (level == 0) {
    return {Mat::Ones(agent.env.action_dim, b), Mat::Zero(agent.env.action_dim, b)};
  }
  const int d = agent.goal_dim();
  const Mat raw = forward_batch(agent.gs.at(static_cast<std::size_t>(level - 1)).policy, net_states(agent, states));
  Mat lhw = raw.bottomRows(d).cwiseMax(kLogHalfwidthMin).cwiseMin(kLogHalfwidthMax);
  return {lhw.array().exp().matrix(), raw.topRows(d)};
}

Vec net_state(const Agent& agent, const State& s) { return agent.params.state_input_scale * s; }

Mat net_states(const Agent& agent, const Mat& states) { return agent.params.state_input_scale * states; }

Vec gc_policy_input(const Agent& agent, const State& s, const Vec& goal) {
  Vec in(s.size() + goal.size());
  in << net_state(agent, s), goal - project_goal(agent.env, s);
  return in;
}

long horizon_bound(const Agent& agent, int level) {
  long bound = 1;
  for (int j = 0; j <= level; ++j) bound *= agent.specs.at(static_cast<std::size_t>(j)).n;
  return bound;
}

}  // namespace hiemp
