#include "hiemp/env.hpp"

#include <algorithm>
#include <cmath>

#include "hiemp/error.hpp"

namespace hiemp {

bool AxisBox::contains(const Vec& p, double slack) const {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) < lo(i) - slack || p(i) > hi(i) + slack) return false;
  }
  return true;
}

EnvModel make_point_field(const PointFieldConfig& cfg, std::string name) {
  if (cfg.dims != 1 && cfg.dims != 2) throw InvalidInput("point fields are 1-D or 2-D");
  if (!(cfg.v_max > 0.0)) throw InvalidInput("v_max must be positive");
  if (cfg.noise_std < 0.0) throw InvalidInput("noise_std must be non-negative");
  if (cfg.start_region.lo.size() != cfg.dims || cfg.start_region.hi.size() != cfg.dims) {
    throw InvalidInput("start region dimension mismatch");
  }
  EnvModel env;
  env.name = std::move(name);
  env.state_dim = cfg.dims;
  env.action_dim = cfg.dims;
  for (int i = 0; i < cfg.dims; ++i) env.goal_dims.push_back(i);
  env.v_max = cfg.v_max;
  env.noise_std = Vec::Constant(cfg.dims, cfg.noise_std);
  env.barriers = cfg.barriers;
  env.cage = cfg.cage;
  env.start_region = cfg.start_region;
  for (const auto& w : env.barriers) {
    if (w.axis < 0 || w.axis >= cfg.dims) throw InvalidInput("wall axis out of range");
  }
  if (!in_free_space(env, cfg.start_region.lo) || !in_free_space(env, cfg.start_region.hi)) {
    throw InvalidInput("start region must lie strictly inside free space");
  }
  return env;
}

EnvModel make_channel_env_1d(double noise_std, int n) {
  if (!(noise_std > 0.0)) throw InvalidInput("the channel environment needs noise_std > 0");
  if (n < 1) throw InvalidInput("the channel environment needs n >= 1");
  PointFieldConfig cfg;
  cfg.dims = 1;
  cfg.v_max = 0.1;
  cfg.noise_std = noise_std;
  cfg.start_region = {Vec::Zero(1), Vec::Zero(1)};
  EnvModel env = make_point_field(cfg, "channel_1d");
  env.channel_steps = n;
  return env;
}

std::vector<std::string> preset_names() {
  return {"point_field_1d", "point_field_2d", "point_cage_2d", "h_maze_2d", "channel_1d"};
}

namespace {

std::vector<Wall> h_maze_walls(const HMazeGeometry& g) {
  const double L = g.corridor_half_length;
  const double W = g.corridor_half_width;
  const double H = g.hall_half_height;
  return {
      {1, W, -L, L},    // hallway ceiling
      {1, -W, -L, L},   // hallway floor
      {0, L, W, H},     // inner sides of the vertical hallways
      {0, L, -H, -W},
      {0, -L, W, H},
      {0, -L, -H, -W},
  };
}

}  // namespace

EnvModel make_preset(std::string_view name, const PresetOverrides& o) {
  const double v_max = o.v_max.value_or(0.1);
  PointFieldConfig cfg;
  cfg.v_max = v_max;
  cfg.noise_std = o.noise_std.value_or(0.0);
  if (name == "point_field_1d") {
    cfg.dims = 1;
  } else if (name == "point_field_2d") {
    cfg.dims = 2;
  } else if (name == "point_cage_2d") {
    cfg.dims = 2;
    cfg.cage = AxisBox{Vec::Constant(2, -1.0), Vec::Constant(2, 1.0)};
  } else if (name == "h_maze_2d") {
    cfg.dims = 2;
    const auto& g = kHMaze;
    const double x_extent = g.corridor_half_length + g.hall_width;
    cfg.cage = AxisBox{Vec(Eigen::Vector2d(-x_extent, -g.hall_half_height)),
                       Vec(Eigen::Vector2d(x_extent, g.hall_half_height))};
    cfg.barriers = h_maze_walls(g);
  } else if (name == "channel_1d") {
    EnvModel env = make_channel_env_1d(o.noise_std.value_or(0.05), o.channel_steps.value_or(20));
    env.v_max = v_max;
    return env;
  } else {
    throw InvalidInput("unknown environment preset '" + std::string(name) + "'");
  }
  cfg.start_region = {Vec::Zero(cfg.dims), Vec::Zero(cfg.dims)};
  return make_point_field(cfg, std::string(name));
}

State sample_start(const EnvModel& env, Rng& rng) {
  State s(env.state_dim);
  for (int i = 0; i < env.state_dim; ++i) s(i) = rng.uniform(env.start_region.lo(i), env.start_region.hi(i));
  return s;
}

State nominal_start(const EnvModel& env) { return 0.5 * (env.start_region.lo + env.start_region.hi); }

State step(const EnvModel& env, const State& s, const Vec& action, Rng& rng) {
  if (s.size() != env.state_dim) throw InvalidInput("state dimension mismatch");
  if (action.size() != env.action_dim) throw InvalidInput("action dimension mismatch");
  for (Eigen::Index i = 0; i < action.size(); ++i) {
    if (!(std::abs(action(i)) <= 1.0 + 1e-12)) {
      throw InvalidInput("action component " + std::to_string(i) + " = " + std::to_string(action(i)) +
                         " is outside [-1, 1]");
    }
  }
  State cur = s;
  for (int axis = 0; axis < env.state_dim; ++axis) {
    const double from = cur(axis);
    double to = from + action(axis) * env.v_max;
    if (env.noise_std.size() > 0 && env.noise_std(axis) > 0.0) to += rng.normal(0.0, env.noise_std(axis));
    for (const auto& w : env.barriers) {
      if (w.axis != axis) continue;
      if (env.state_dim == 2) {
        const double other = cur(1 - axis);
        if (other < w.span_lo || other > w.span_hi) continue;
      }
      if (from < w.coord && to >= w.coord) {
        to = std::min(to, w.coord - kContactMargin);
      } else if (from > w.coord && to <= w.coord) {
        to = std::max(to, w.coord + kContactMargin);
      }
    }
    if (env.cage) to = std::clamp(to, env.cage->lo(axis) + kContactMargin, env.cage->hi(axis) - kContactMargin);
    cur(axis) = to;
  }
  return cur;
}

Vec project_goal(const EnvModel& env, const State& s) {
  Vec g(env.goal_dims.size());
  for (std::size_t i = 0; i < env.goal_dims.size(); ++i) g(static_cast<Eigen::Index>(i)) = s(env.goal_dims[i]);
  return g;
}

double goal_distance(const Vec& a, const Vec& b, DistanceKind kind) {
  if (a.size() != b.size()) throw InvalidInput("goal distance dimension mismatch");
  if (kind == DistanceKind::linf) return (a - b).cwiseAbs().maxCoeff();
  return (a - b).norm();
}

bool in_free_space(const EnvModel& env, const State& p) {
  if (env.cage && !env.cage->contains(p)) return false;
  if (env.state_dim != 2) return true;
  for (const auto& w : env.barriers) {
    const double other = p(1 - w.axis);
    if (other >= w.span_lo && other <= w.span_hi && std::abs(p(w.axis) - w.coord) < kContactMargin * 0.5) {
      return false;
    }
  }
  return true;
}

}  // namespace hiemp
