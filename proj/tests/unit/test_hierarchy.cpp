#include <doctest.h>

#include <cmath>

#include "hiemp/error.hpp"
#include "hiemp/hierarchy.hpp"

using namespace hiemp;

namespace {

Agent two_level(TrainParams p = {}, std::uint64_t seed = 1) {
  p.hidden = {16, 16};
  Rng rng(seed);
  const LevelSpec l0{.n = 20, .sigma0_gc = 0.4, .sigma0_gs = 1.75, .eps_threshold = 0.15};
  const LevelSpec l1{.n = 10, .sigma0_gc = 0.8, .sigma0_gs = 3.5, .eps_threshold = 0.3};
  return make_agent(make_preset("point_field_2d"), {l0, l1}, std::move(p), rng);
}

}  // namespace

TEST_CASE("scale_action: zero, saturation and bounds") {
  const Vec bounds = Vec(Eigen::Vector2d(0.5, 2.0));
  const Vec shifts = Vec(Eigen::Vector2d(-1.0, 3.0));
  CHECK(scale_action(Vec::Zero(2), bounds, shifts) == shifts);
  CHECK(scale_action(Vec::Constant(2, 50.0), bounds, shifts) == shifts + bounds);
  CHECK(scale_action(Vec::Constant(2, -50.0), bounds, shifts) == shifts - bounds);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec raw = Vec(Eigen::Vector2d(rng.normal(0, 5), rng.normal(0, 5)));
    const Vec a = scale_action(raw, bounds, shifts);
    CHECK(((a - shifts).cwiseAbs().array() <= bounds.array()).all());
  }
  CHECK_THROWS_AS(scale_action(Vec::Zero(3), bounds, shifts), InvalidInput);
}

TEST_CASE("level-0 actions use the unit box; higher levels use the goal space below") {
  Agent agent = two_level();
  const State s = Vec(Eigen::Vector2d(0.3, -0.1));
  const ActionScale a0 = action_scale(agent, 0, s);
  CHECK(a0.bounds == Vec::Ones(2));
  CHECK(a0.shifts == Vec::Zero(2));
  const ActionScale a1 = action_scale(agent, 1, s);
  const BoxParams below = goal_space(agent, 0, s);
  CHECK(a1.bounds == below.halfwidth());
  CHECK(a1.shifts == below.center);
  const ActionScaleBatch batch = action_scale_batch(agent, 1, Mat(s));
  CHECK(Vec(batch.bounds.col(0)).isApprox(a1.bounds, 1e-15));
  CHECK(Vec(batch.shifts.col(0)).isApprox(a1.shifts, 1e-15));
}

TEST_CASE("execute_subgoal: a zero subgoal from inside the threshold takes no steps") {
  Agent agent = two_level();
  Rng rng(2);
  RolloutContext ctx{rng};
  const State s = Vec(Eigen::Vector2d(0.2, 0.4));
  const SkillOutcome out = execute_subgoal(agent, 1, s, Vec::Zero(2), ctx);
  CHECK(out.actions == 0);
  CHECK(out.primitive_steps == 0);
  CHECK(out.state == s);
  CHECK_THROWS_AS(execute_subgoal(agent, 0, s, Vec::Zero(2), ctx), InvalidInput);
}

TEST_CASE("n = [20, 10]: top-level skills stay within 200 primitive steps and subgoals nest") {
  Agent agent = two_level();
  // A wide level-0 box makes the top level's subgoals land far apart.
  agent.gs[0].policy.biases.back().tail(2).setConstant(std::log(3.0));
  agent.gc[1].policy.biases.back() << 2.0, -1.0;
  CHECK(horizon_bound(agent, 0) == 20);
  CHECK(horizon_bound(agent, 1) == 200);
  Rng rng(3);
  NestingAudit audit;
  RolloutContext ctx{rng, &audit};
  long longest = 0;
  for (int i = 0; i < 20; ++i) {
    const Vec goal = Vec(Eigen::Vector2d(rng.uniform(-30, 30), rng.uniform(-30, 30)));
    const SkillOutcome out = pursue_goal(agent, 1, nominal_start(agent.env), goal, ctx);
    longest = std::max(longest, out.primitive_steps);
    CHECK(out.actions <= 10);
  }
  CHECK(longest <= 200);
  CHECK(longest > 20);
  CHECK(audit.subgoals > 0);
  CHECK(audit.clean());
}

TEST_CASE("refresh: untrained agents stay near the start, and buffers respect capacity") {
  TrainParams p;
  p.buffer_capacity = 10;
  p.initial_start_states = 3;
  Agent agent = two_level(p);
  CHECK(agent.start_buffers[0].size() == 3);
  Rng rng(4);
  refresh_start_states(agent, 16, rng);
  for (const auto& buffer : agent.start_buffers) {
    CHECK(buffer.size() <= 10);
    CHECK(!buffer.empty());
    for (const auto& s : buffer.states()) CHECK(s.cwiseAbs().maxCoeff() < 1.0);
  }
  // The top level records one state per skill.
  CHECK(agent.start_buffers[1].size() == 10);
  CHECK(agent.audit.clean());
}

TEST_CASE("train_phase1: zero learning rates leave every net unchanged") {
  TrainParams p;
  p.lr_gc_actor = p.lr_gc_critic = p.lr_gs_actor = p.lr_gs_critic = 0.0;
  p.gc_iterations = 1;
  p.gc_steps = 2;
  p.gs_steps = 2;
  p.gc_rollouts = 4;
  p.gs_transitions = 4;
  Agent agent = two_level(p);
  const auto gc = agent.gc;
  const auto gs = agent.gs;
  Rng rng(5);
  train_phase1(agent, 2, rng);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(agent.gc[l].policy == gc[l].policy);
    CHECK(agent.gc[l].critic == gc[l].critic);
    CHECK(agent.gs[l].policy == gs[l].policy);
    CHECK(agent.gs[l].critic == gs[l].critic);
  }
  CHECK(agent.phase1_epochs == 2);
}

TEST_CASE("train_phase1: metric rows come bottom-up per epoch, starting at epoch 0") {
  TrainParams p;
  p.gc_iterations = 1;
  p.gc_steps = 2;
  p.gs_steps = 2;
  p.gc_rollouts = 4;
  p.gs_transitions = 4;
  auto run = [&] {
    Agent agent = two_level(p, 6);
    Rng rng(7);
    std::vector<EpochMetrics> rows;
    train_phase1(agent, 3, rng, [&](const EpochMetrics& m) { rows.push_back(m); });
    return rows;
  };
  const auto rows = run();
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].epoch == static_cast<int>(i / 2));
    CHECK(rows[i].level == static_cast<int>(i % 2));
  }
  CHECK(std::isnan(rows[0].gc_reward_mean));
  CHECK(std::isfinite(rows[2].gc_reward_mean));
  CHECK(rows[0].halfwidth_mean == doctest::Approx(0.1).epsilon(1e-12));
  const auto again = run();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].halfwidth_mean == rows[i].halfwidth_mean);
    if (i >= 2) CHECK(again[i].gs_reward_mean == rows[i].gs_reward_mean);
  }
}

TEST_CASE("train_phase1 rejects negative epochs") {
  Agent agent = two_level();
  Rng rng(8);
  CHECK_THROWS_AS(train_phase1(agent, -1, rng), InvalidInput);
}
