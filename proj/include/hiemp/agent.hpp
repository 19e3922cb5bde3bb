#pragma once

// Agent state shared by the goal-conditioned actor-critics, the goal-space
// actor-critics and the hierarchy that nests them.

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "hiemp/env.hpp"
#include "hiemp/goalspace.hpp"
#include "hiemp/nnet.hpp"
#include "hiemp/parallel.hpp"
#include "hiemp/rng.hpp"

namespace hiemp {

/// Per-level hyperparameters.
struct LevelSpec {
  int n = 20;                  // max actions per skill at this level
  double sigma0_gc = 0.4;      // variational std for the goal-conditioned reward
  double sigma0_gs = 1.75;     // variational std for the goal-space reward
  double eps_threshold = 0.6;  // goal-achievement radius
  double gamma = 0.95;

  void validate() const;
};

/// Downstream goal-reaching task for the phase-2 level.
struct TaskSpec {
  Vec goal_center;  // absolute goal-space coordinates
  Vec goal_length;  // full side length per dimension
  int n_task = 10;
  double eps_task = 0.6;

  void validate(int goal_dim) const;
};

struct TrainParams {
  std::vector<int> hidden{64, 64};

  double lr_gc_actor = 1e-4;
  double lr_gc_critic = 1e-3;
  double lr_gs_actor = 1e-4;
  double lr_gs_critic = 1e-3;

  double goal_noise = 0.2;       // std on raw goal-space outputs when sampling gc goals
  double action_noise = 0.1;     // exploration std as a fraction of the action half-range
  double gs_action_noise = 0.1;  // std on raw goal-space actions during gs collection
  double entropy_coef = 1.0;
  double init_log_halfwidth = -2.302585092994046;  // ln 0.1
  double state_input_scale = 1.0;  // states are multiplied by this before entering any net
  double gs_reward_scale = 1.0;    // the gs critic regresses onto this multiple of the reward
  double gc_action_l2 = 0.0;       // penalty on the squared tanh output of gc actors

  int gc_rollouts = 32;    // M start states per gc update
  int gs_transitions = 32; // start states per gs update
  int batch_size = 64;
  int gc_iterations = 10;  // gc updates per epoch
  int gc_steps = 50;       // S for the gc update
  int gs_iterations = 1;
  int gs_steps = 10;       // S for the gs update
  int refresh_every = 5;   // epochs between start-buffer refreshes
  int refresh_skills = 16; // top-level skills per refresh
  std::size_t buffer_capacity = 4096;
  int initial_start_states = 16;
  bool persistent_gc_buffer = false;
  std::size_t persistent_capacity = 100000;

  int phase2_episodes_per_update = 8;
  int phase2_steps = 50;
  std::size_t phase2_replay_capacity = 100000;
  int phase2_eval_every = 80;     // training episodes between curve evaluations
  int phase2_eval_episodes = 50;  // greedy episodes per curve evaluation

  DistanceKind distance = DistanceKind::l2;
  Exec exec = Exec::parallel;

  void validate() const;
};

struct GCTransition {
  State s_t;
  Vec goal;  // absolute goal point h(s0) + z
  Vec a_t;   // action in the level's (scaled) action space
  double r = 0.0;
  State s_next;
  double gamma = 0.0;
};

struct GSTransition {
  State s0;
  Vec eps;
  Vec a;  // raw goal-space action: centers then log half-widths
  double r = 0.0;
};

/// Deterministic goal-conditioned policy pi(s, g - h(s)) -> raw action, and critic Q(s, g - h(s), a).
struct GCActorCritic {
  Net policy;
  Net critic;
  OptState policy_opt;
  OptState critic_opt;
};

/// Goal-space policy mu(s0) -> (centers, log half-widths), and bandit critic R(s0, eps, a).
struct GSActorCritic {
  Net policy;
  Net critic;
  OptState policy_opt;
  OptState critic_opt;
};

/// Bounded FIFO of skill start states.
class StartBuffer {
 public:
  explicit StartBuffer(std::size_t capacity = 4096) : capacity_(capacity) {}

  void push(State s);
  const State& sample(Rng& rng) const;
  std::size_t size() const { return states_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return states_.empty(); }
  const std::deque<State>& states() const { return states_; }

 private:
  std::size_t capacity_;
  std::deque<State> states_;
};

/// Counts of nesting and horizon checks made while executing skills.
struct NestingAudit {
  std::size_t subgoals = 0;
  std::size_t subgoal_violations = 0;
  std::size_t skills = 0;
  std::size_t horizon_violations = 0;

  void merge(const NestingAudit& other);
  bool clean() const { return subgoal_violations == 0 && horizon_violations == 0; }
};

struct Agent {
  EnvModel env;
  TrainParams params;
  std::vector<LevelSpec> specs;       // one per goal-conditioned level
  std::vector<GCActorCritic> gc;      // k skill levels, plus the task level after phase 2 attaches it
  std::vector<GSActorCritic> gs;      // k
  std::vector<StartBuffer> start_buffers;  // k
  std::optional<TaskSpec> task;
  // Per gc level. Cleared before each update unless persistent_gc_buffer is
  // set; the phase-2 task level always keeps its buffer.
  std::vector<std::deque<GCTransition>> replay;
  NestingAudit audit;
  int phase1_epochs = 0;  // completed phase-1 epochs

  int skill_levels() const { return static_cast<int>(gs.size()); }
  int goal_dim() const { return env.goal_dim(); }
  /// Action dimension of goal-conditioned level `level`.
  int action_dim(int level) const { return level == 0 ? env.action_dim : env.goal_dim(); }
};

/// Builds k levels with freshly initialized nets and seeds every start buffer
/// with task-initial states.
Agent make_agent(EnvModel env, std::vector<LevelSpec> specs, TrainParams params, Rng& rng);

GCActorCritic make_gc_actor_critic(const Agent& agent, int level, Rng& rng);
GSActorCritic make_gs_actor_critic(const Agent& agent, Rng& rng);

/// Noiseless goal space of skill level `level` at state s.
BoxParams goal_space(const Agent& agent, int level, const State& s);

/// Half-widths and centers bounding level `level`'s actions at s: the unit box
/// for level 0, otherwise the goal space of the level below.
struct ActionScale {
  Vec bounds;
  Vec shifts;
};
ActionScale action_scale(const Agent& agent, int level, const State& s);

/// Column-wise action_scale for a batch of states.
struct ActionScaleBatch {
  Mat bounds;
  Mat shifts;
};
ActionScaleBatch action_scale_batch(const Agent& agent, int level, const Mat& states);

/// A state (or one state per column) as the nets see it.
Vec net_state(const Agent& agent, const State& s);
Mat net_states(const Agent& agent, const Mat& states);

/// Input of the goal-conditioned nets: the net state followed by g - h(s).
Vec gc_policy_input(const Agent& agent, const State& s, const Vec& goal);

/// Product of n over levels 0..level: the primitive-step budget of one level skill.
long horizon_bound(const Agent& agent, int level);

}  // namespace hiemp
