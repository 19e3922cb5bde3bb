#include <doctest.h>

#include <cmath>

#include "hiemp/env.hpp"
#include "hiemp/error.hpp"

using namespace hiemp;

namespace {

Vec v2(double x, double y) { return Vec(Eigen::Vector2d(x, y)); }

bool in_h_maze_region(const State& s) {
  const auto& g = kHMaze;
  const double ax = std::abs(s(0));
  const double ay = std::abs(s(1));
  const bool corridor = ax <= g.corridor_half_length && ay < g.corridor_half_width;
  const bool hall = ax > g.corridor_half_length && ax < g.corridor_half_length + g.hall_width &&
                    ay < g.hall_half_height;
  return corridor || hall;
}

}  // namespace

TEST_CASE("full action moves by v_max") {
  const EnvModel env = make_preset("point_field_2d");
  Rng rng(1);
  const State s = step(env, v2(0, 0), v2(1, 0), rng);
  CHECK(s(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s(1) == 0.0);
}

TEST_CASE("a wall across the path clamps at the contact margin") {
  PointFieldConfig cfg;
  cfg.dims = 2;
  cfg.barriers = {Wall{0, 0.05, -1.0, 1.0}};
  cfg.start_region = {Vec::Zero(2), Vec::Zero(2)};
  const EnvModel env = make_point_field(cfg);
  Rng rng(2);
  const State s = step(env, v2(0, 0), v2(1, 0), rng);
  CHECK(s(0) == 0.05 - kContactMargin);
  CHECK(s(1) == 0.0);
  // Moving away from the wall is unobstructed.
  const State back = step(env, s, v2(-1, 0), rng);
  CHECK(back(0) == doctest::Approx(0.05 - kContactMargin - 0.1));
  // Outside the wall's span the path is free.
  const State past = step(env, v2(0, 1.5), v2(1, 0), rng);
  CHECK(past(0) == doctest::Approx(0.1));
}

TEST_CASE("1-D point barrier blocks motion") {
  PointFieldConfig cfg;
  cfg.dims = 1;
  cfg.barriers = {Wall{0, -0.05}};
  cfg.start_region = {Vec::Zero(1), Vec::Zero(1)};
  const EnvModel env = make_point_field(cfg);
  Rng rng(3);
  CHECK(step(env, Vec::Zero(1), Vec::Constant(1, -1.0), rng)(0) == -0.05 + kContactMargin);
}

TEST_CASE("noisy step mean matches the deterministic next state") {
  const EnvModel env = make_preset("point_field_2d", {.noise_std = 0.01});
  Rng rng(4);
  const int N = 100000;
  Vec sum = Vec::Zero(2);
  for (int i = 0; i < N; ++i) sum += step(env, v2(0.3, -0.2), v2(0.5, -1.0), rng);
  const Vec mean = sum / N;
  const double tol = 3 * 0.01 / std::sqrt(double(N));
  CHECK(std::abs(mean(0) - 0.35) < tol);
  CHECK(std::abs(mean(1) - (-0.3)) < tol);
}

TEST_CASE("out-of-range actions and bad shapes are rejected") {
  const EnvModel env = make_preset("point_field_2d");
  Rng rng(5);
  CHECK_THROWS_AS(step(env, v2(0, 0), v2(1.01, 0), rng), InvalidInput);
  CHECK_THROWS_AS(step(env, v2(0, 0), v2(0, -2), rng), InvalidInput);
  CHECK_THROWS_AS(step(env, v2(0, 0), Vec::Zero(1), rng), InvalidInput);
  CHECK_THROWS_AS(step(env, Vec::Zero(3), v2(0, 0), rng), InvalidInput);
  CHECK_THROWS_AS(step(env, v2(0, 0), v2(std::nan(""), 0), rng), InvalidInput);
}

TEST_CASE("goal projection selects and orders the goal dimensions") {
  EnvModel env = make_preset("point_field_2d");
  CHECK(project_goal(env, v2(3, 4)) == v2(3, 4));
  env.goal_dims = {0};
  CHECK(project_goal(env, v2(7, 1)) == Vec::Constant(1, 7.0));
  env.goal_dims = {1, 0};
  CHECK(project_goal(env, v2(3, 4)) == v2(4, 3));
}

TEST_CASE("zero action is a fixed point of the noiseless dynamics") {
  for (const auto& name : {"point_field_1d", "point_field_2d", "point_cage_2d", "h_maze_2d"}) {
    const EnvModel env = make_preset(name);
    Rng rng(6);
    const State s = State::Constant(env.state_dim, 0.37);
    CHECK(project_goal(env, step(env, s, Vec::Zero(env.action_dim), rng)) == project_goal(env, s));
  }
}

TEST_CASE("noiseless step is a pure function") {
  const EnvModel env = make_preset("h_maze_2d");
  Rng a(7), b(8);
  CHECK(step(env, v2(1.4, 0.9), v2(1, 1), a) == step(env, v2(1.4, 0.9), v2(1, 1), b));
}

TEST_CASE("channel environment: mean and variance of s_n") {
  const int n = 20;
  const double sigma = 0.05;
  const EnvModel env = make_channel_env_1d(sigma, n);
  CHECK(env.channel_steps == n);
  Rng rng(9);
  const int N = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < N; ++i) {
    State s = Vec::Zero(1);
    for (int t = 0; t < n; ++t) s = step(env, s, Vec::Constant(1, 0.5), rng);
    sum += s(0);
    sq += s(0) * s(0);
  }
  const double mean = sum / N;
  const double var = sq / N - mean * mean;
  CHECK(mean == doctest::Approx(n * 0.5 * env.v_max).epsilon(1e-3));
  CHECK(std::abs(var - n * sigma * sigma) < 0.05 * n * sigma * sigma);
}

TEST_CASE("channel environment with n = 1 is a single step") {
  const EnvModel env = make_channel_env_1d(0.2, 1);
  Rng a(10), b(10);
  const State one = step(env, Vec::Zero(1), Vec::Constant(1, 1.0), a);
  CHECK(one(0) == doctest::Approx(0.1 + b.normal(0.0, 0.2)));
}

TEST_CASE("channel environment requires positive noise and steps") {
  CHECK_THROWS_AS(make_channel_env_1d(0.0, 5), InvalidInput);
  CHECK_THROWS_AS(make_channel_env_1d(-1.0, 5), InvalidInput);
  CHECK_THROWS_AS(make_channel_env_1d(0.1, 0), InvalidInput);
}

TEST_CASE("presets are named and unknown names are rejected") {
  for (const auto& name : preset_names()) CHECK(make_preset(name).name == name);
  CHECK_THROWS_AS(make_preset("ant_field"), InvalidInput);
}

TEST_CASE("the cage confines every state") {
  const EnvModel env = make_preset("point_cage_2d");
  Rng rng(11);
  State s = nominal_start(env);
  for (int t = 0; t < 20000; ++t) {
    s = step(env, s, v2(rng.uniform(-1, 1) * 0.3 + 0.7, rng.uniform(-1, 1)), rng);
    REQUIRE(env.cage->contains(s));
  }
  CHECK(s(0) == doctest::Approx(1.0 - kContactMargin));
}

TEST_CASE("h-maze walls are never crossed by a random walk") {
  const EnvModel env = make_preset("h_maze_2d");
  Rng rng(12);
  State s = nominal_start(env);
  int visits_in_halls = 0;
  for (int t = 0; t < 200000; ++t) {
    s = step(env, s, v2(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng);
    REQUIRE(in_h_maze_region(s));
    REQUIRE(in_free_space(env, s));
    if (std::abs(s(0)) > kHMaze.corridor_half_length) ++visits_in_halls;
  }
  CHECK(visits_in_halls > 0);
}

TEST_CASE("start region must be in free space") {
  PointFieldConfig cfg;
  cfg.dims = 2;
  cfg.cage = AxisBox{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  cfg.start_region = {Vec::Constant(2, 2.0), Vec::Constant(2, 2.0)};
  CHECK_THROWS_AS(make_point_field(cfg), InvalidInput);
  cfg.start_region = {Vec::Zero(2), Vec::Zero(2)};
  cfg.barriers = {Wall{0, 0.0, -1.0, 1.0}};
  CHECK_THROWS_AS(make_point_field(cfg), InvalidInput);
  cfg.barriers = {};
  cfg.v_max = 0.0;
  CHECK_THROWS_AS(make_point_field(cfg), InvalidInput);
}

TEST_CASE("seeded rollouts are reproducible") {
  const EnvModel env = make_preset("point_field_2d", {.noise_std = 0.1});
  Rng a(13), b(13);
  State sa = v2(0, 0), sb = v2(0, 0);
  for (int t = 0; t < 100; ++t) {
    sa = step(env, sa, v2(0.2, -0.3), a);
    sb = step(env, sb, v2(0.2, -0.3), b);
  }
  CHECK(sa == sb);
}

TEST_CASE("goal distance kinds") {
  CHECK(goal_distance(v2(0, 0), v2(3, 4)) == 5.0);
  CHECK(goal_distance(v2(0, 0), v2(3, -4), DistanceKind::linf) == 4.0);
  CHECK_THROWS_AS(goal_distance(v2(0, 0), Vec::Zero(1)), InvalidInput);
}
