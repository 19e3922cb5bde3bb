#pragma once

// Point-mass environments with explicit transition access.
//
// Actions are per-dimension velocity commands in [-1, 1]; one step moves the
// mass by action * v_max plus optional Gaussian noise. Motion is resolved one
// axis at a time so walls (zero-thickness axis-aligned segments) and the
// optional cage can clamp it without tunnelling through corners.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiemp/nnet.hpp"
#include "hiemp/rng.hpp"

namespace hiemp {

using State = Vec;

inline constexpr double kContactMargin = 1e-6;

struct AxisBox {
  Vec lo;
  Vec hi;

  bool contains(const Vec& p, double slack = 0.0) const;
};

/// Wall on the hyperplane x[axis] == coord. In 2-D it spans [span_lo, span_hi]
/// along the other axis; in 1-D it is a point barrier.
struct Wall {
  int axis = 0;
  double coord = 0.0;
  double span_lo = -1e300;
  double span_hi = 1e300;
};

struct PointFieldConfig {
  int dims = 2;
  double v_max = 0.1;
  double noise_std = 0.0;
  std::vector<Wall> barriers;
  std::optional<AxisBox> cage;
  AxisBox start_region;
};

enum class DistanceKind { l2, linf };

struct EnvModel {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<int> goal_dims;
  double v_max = 0.1;
  Vec noise_std;
  std::vector<Wall> barriers;
  std::optional<AxisBox> cage;
  AxisBox start_region;
  int channel_steps = 0;  // > 0 only for the noisy channel environment

  int goal_dim() const { return static_cast<int>(goal_dims.size()); }
  bool noiseless() const { return noise_std.size() == 0 || noise_std.isZero(0.0); }
};

EnvModel make_point_field(const PointFieldConfig& cfg, std::string name = "point_field");

/// 1-D point mass with per-step Gaussian noise. With n open-loop actions and no
/// walls, s_n | s_0, a_{0..n-1} ~ N(s_0 + v_max * sum(a), n * noise_std^2).
EnvModel make_channel_env_1d(double noise_std, int n);

struct PresetOverrides {
  std::optional<double> v_max;
  std::optional<double> noise_std;
  std::optional<int> channel_steps;
};

/// Named presets: point_field_1d, point_field_2d, point_cage_2d, h_maze_2d, channel_1d.
EnvModel make_preset(std::string_view name, const PresetOverrides& overrides = {});
std::vector<std::string> preset_names();

/// Geometry of the h_maze_2d preset, exposed for tests and acceptance checks.
struct HMazeGeometry {
  double corridor_half_length = 1.5;  // horizontal hallway spans |x| <= this
  double corridor_half_width = 1.0;   // horizontal hallway spans |y| <= this
  double hall_width = 1.0;            // vertical hallways occupy corridor_half_length <= |x| <= +hall_width
  double hall_half_height = 3.0;      // vertical hallways span |y| <= this
};
inline constexpr HMazeGeometry kHMaze{};

State sample_start(const EnvModel& env, Rng& rng);

/// Center of the start region; the reference point for reporting goal spaces.
State nominal_start(const EnvModel& env);

/// One transition. Rejects actions outside [-1, 1]^action_dim.
State step(const EnvModel& env, const State& s, const Vec& action, Rng& rng);

/// h(s): the goal-space coordinates of a state.
Vec project_goal(const EnvModel& env, const State& s);

double goal_distance(const Vec& a, const Vec& b, DistanceKind kind = DistanceKind::l2);

/// True when p is inside the cage and not lying on a wall.
bool in_free_space(const EnvModel& env, const State& p);

}  // namespace hiemp
