#include "hiemp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hiemp/error.hpp"

namespace hiemp {

namespace {

using nlohmann::json;

/// Reads one JSON object, tracking the field path and rejecting unknown keys.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  const json& at(const std::string& key) {
    if (!has(key)) fail("missing required field '" + key + "'");
    return j_.at(key);
  }

  Reader object(const std::string& key) { return Reader(at(key), field(key)); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail("missing required field '" + key + "'");
    }
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail("missing required field '" + key + "'");
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail("missing required field '" + key + "'");
    }
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  Vec vector(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(field(key) + ": expected a nonempty array of numbers");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  /// Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int as_int(Reader& r, const std::string& key, long long lo, std::optional<long long> fallback = std::nullopt) {
  const long long v = r.integer(key, fallback);
  if (v < lo || v > std::numeric_limits<int>::max()) {
    throw ConfigError(r.field(key) + ": must be an integer >= " + std::to_string(lo));
  }
  return static_cast<int>(v);
}

double positive(Reader& r, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const double v = r.number(key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(r.field(key) + ": must be a positive number");
  return v;
}

double non_negative(Reader& r, const std::string& key, double fallback) {
  const double v = r.number(key, fallback);
  if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(r.field(key) + ": must be a non-negative number");
  return v;
}

LevelSpec read_level(Reader r) {
  LevelSpec s;
  s.n = as_int(r, "n", 1);
  s.sigma0_gc = positive(r, "sigma0_gc");
  s.sigma0_gs = positive(r, "sigma0_gs");
  s.eps_threshold = positive(r, "eps");
  s.gamma = r.number("gamma", s.gamma);
  if (!(s.gamma > 0.0 && s.gamma <= 1.0)) throw ConfigError(r.field("gamma") + ": must lie in (0, 1]");
  r.finish();
  return s;
}

TrainParams read_train(Reader r) {
  TrainParams p;
  if (r.has("hidden")) {
    const json& h = r.at("hidden");
    if (!h.is_array() || h.empty()) throw ConfigError(r.field("hidden") + ": expected a nonempty array of integers");
    p.hidden.clear();
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (!h[i].is_number_integer() || h[i].get<long long>() < 1) {
        throw ConfigError(r.field("hidden") + "[" + std::to_string(i) + "]: expected a positive integer");
      }
      p.hidden.push_back(h[i].get<int>());
    }
  }
  p.lr_gc_actor = non_negative(r, "lr_gc_actor", p.lr_gc_actor);
  p.lr_gc_critic = non_negative(r, "lr_gc_critic", p.lr_gc_critic);
  p.lr_gs_actor = non_negative(r, "lr_gs_actor", p.lr_gs_actor);
  p.lr_gs_critic = non_negative(r, "lr_gs_critic", p.lr_gs_critic);
  p.goal_noise = non_negative(r, "goal_noise", p.goal_noise);
  p.state_input_scale = positive(r, "state_input_scale", p.state_input_scale);
  p.gs_reward_scale = positive(r, "gs_reward_scale", p.gs_reward_scale);
  p.gc_action_l2 = non_negative(r, "gc_action_l2", p.gc_action_l2);
  p.action_noise = non_negative(r, "action_noise", p.action_noise);
  p.gs_action_noise = non_negative(r, "gs_action_noise", p.gs_action_noise);
  p.entropy_coef = non_negative(r, "entropy_coef", p.entropy_coef);
  p.init_log_halfwidth = r.number("init_log_halfwidth", p.init_log_halfwidth);
  if (p.init_log_halfwidth < kLogHalfwidthMin || p.init_log_halfwidth > kLogHalfwidthMax) {
    throw ConfigError(r.field("init_log_halfwidth") + ": must lie in [-10, 10]");
  }
  p.gc_rollouts = as_int(r, "gc_rollouts", 1, p.gc_rollouts);
  p.gs_transitions = as_int(r, "gs_transitions", 1, p.gs_transitions);
  p.batch_size = as_int(r, "batch_size", 1, p.batch_size);
  p.gc_iterations = as_int(r, "gc_iterations", 0, p.gc_iterations);
  p.gc_steps = as_int(r, "gc_steps", 1, p.gc_steps);
  p.gs_iterations = as_int(r, "gs_iterations", 0, p.gs_iterations);
  p.gs_steps = as_int(r, "gs_steps", 1, p.gs_steps);
  p.refresh_every = as_int(r, "refresh_every", 1, p.refresh_every);
  p.refresh_skills = as_int(r, "refresh_skills", 0, p.refresh_skills);
  p.buffer_capacity = static_cast<std::size_t>(as_int(r, "buffer_capacity", 1, static_cast<long long>(p.buffer_capacity)));
  p.initial_start_states = as_int(r, "initial_start_states", 1, p.initial_start_states);
  p.persistent_gc_buffer = r.boolean("persistent_gc_buffer", p.persistent_gc_buffer);
  p.persistent_capacity =
      static_cast<std::size_t>(as_int(r, "persistent_capacity", 1, static_cast<long long>(p.persistent_capacity)));
  p.phase2_episodes_per_update = as_int(r, "phase2_episodes_per_update", 1, p.phase2_episodes_per_update);
  p.phase2_steps = as_int(r, "phase2_steps", 1, p.phase2_steps);
  p.phase2_replay_capacity = static_cast<std::size_t>(
      as_int(r, "phase2_replay_capacity", 1, static_cast<long long>(p.phase2_replay_capacity)));
  p.phase2_eval_every = as_int(r, "phase2_eval_every", 1, p.phase2_eval_every);
  p.phase2_eval_episodes = as_int(r, "phase2_eval_episodes", 1, p.phase2_eval_episodes);
  const std::string dist = r.string("distance", std::string("l2"));
  if (dist == "l2") {
    p.distance = DistanceKind::l2;
  } else if (dist == "linf") {
    p.distance = DistanceKind::linf;
  } else {
    throw ConfigError(r.field("distance") + ": expected \"l2\" or \"linf\"");
  }
  p.exec = r.boolean("parallel", true) ? Exec::parallel : Exec::serial;
  r.finish();
  return p;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t* column) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  *column = col;
  return line;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t col = 0;
    const std::size_t line = line_of(text, e.byte > 0 ? e.byte - 1 : 0, &col);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": JSON syntax error (" +
                      e.what() + ")");
  }
  Reader r(root, "config");
  RunConfig cfg;

  Reader env = r.object("env");
  cfg.preset = env.string("preset");
  if (env.has("v_max")) cfg.env_overrides.v_max = positive(env, "v_max");
  if (env.has("noise_std")) cfg.env_overrides.noise_std = non_negative(env, "noise_std", 0.0);
  if (env.has("channel_steps")) cfg.env_overrides.channel_steps = as_int(env, "channel_steps", 1);
  env.finish();
  try {
    (void)cfg.make_env();
  } catch (const InvalidInput& e) {
    throw ConfigError(env.field("preset") + ": " + e.what());
  }

  const json& levels = r.at("levels");
  if (!levels.is_array() || levels.empty() || levels.size() > 3) {
    throw ConfigError("config.levels: expected an array of 1 to 3 level objects");
  }
  for (std::size_t i = 0; i < levels.size(); ++i) {
    cfg.levels.push_back(read_level(Reader(levels[i], "config.levels[" + std::to_string(i) + "]")));
  }
  if (r.has("k") && r.integer("k") != static_cast<long long>(cfg.levels.size())) {
    throw ConfigError("config.k: must equal the number of entries in config.levels");
  }

  if (r.has("phase1")) {
    Reader p1 = r.object("phase1");
    cfg.phase1_epochs = as_int(p1, "epochs", 0);
    p1.finish();
  }

  if (r.has("phase2")) {
    Reader p2 = r.object("phase2");
    cfg.phase2_episodes = as_int(p2, "episodes", 0, 0);
    Reader t = p2.object("task");
    TaskSpec task;
    task.goal_center = t.vector("goal_center");
    task.goal_length = t.vector("goal_length");
    task.n_task = as_int(t, "n", 1);
    task.eps_task = positive(t, "eps");
    t.finish();
    try {
      task.validate(cfg.make_env().goal_dim());
    } catch (const InvalidInput& e) {
      throw ConfigError(p2.field("task") + ": " + e.what());
    }
    cfg.task = task;
    if (p2.has("eval")) {
      Reader ev = p2.object("eval");
      cfg.eval.episodes = as_int(ev, "episodes", 1, cfg.eval.episodes);
      if (ev.has("seeds")) {
        const json& s = ev.at("seeds");
        if (!s.is_array() || s.empty()) throw ConfigError(ev.field("seeds") + ": expected a nonempty array");
        cfg.eval.seeds.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (!s[i].is_number_unsigned()) {
            throw ConfigError(ev.field("seeds") + "[" + std::to_string(i) + "]: expected a non-negative integer");
          }
          cfg.eval.seeds.push_back(s[i].get<std::uint64_t>());
        }
      }
      ev.finish();
    }
    p2.finish();
  }

  if (r.has("train")) cfg.train = read_train(r.object("train"));
  if (r.has("seed")) {
    const json& s = r.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  cfg.out_dir = r.string("out", cfg.out_dir);
  r.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const RunConfig& cfg) {
  json j = json::object();
  json env = {{"preset", cfg.preset}};
  if (cfg.env_overrides.v_max) env["v_max"] = *cfg.env_overrides.v_max;
  if (cfg.env_overrides.noise_std) env["noise_std"] = *cfg.env_overrides.noise_std;
  if (cfg.env_overrides.channel_steps) env["channel_steps"] = *cfg.env_overrides.channel_steps;
  j["env"] = env;
  json levels = json::array();
  for (const auto& l : cfg.levels) {
    levels.push_back({{"n", l.n}, {"sigma0_gc", l.sigma0_gc}, {"sigma0_gs", l.sigma0_gs}, {"eps", l.eps_threshold},
                      {"gamma", l.gamma}});
  }
  j["levels"] = levels;
  j["phase1"] = {{"epochs", cfg.phase1_epochs}};
  if (cfg.task) {
    auto vec = [](const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    j["phase2"] = {{"episodes", cfg.phase2_episodes},
                   {"task",
                    {{"goal_center", vec(cfg.task->goal_center)},
                     {"goal_length", vec(cfg.task->goal_length)},
                     {"n", cfg.task->n_task},
                     {"eps", cfg.task->eps_task}}},
                   {"eval", {{"episodes", cfg.eval.episodes}, {"seeds", cfg.eval.seeds}}}};
  }
  const auto& p = cfg.train;
  j["train"] = {{"hidden", p.hidden},
                {"lr_gc_actor", p.lr_gc_actor},
                {"lr_gc_critic", p.lr_gc_critic},
                {"lr_gs_actor", p.lr_gs_actor},
                {"lr_gs_critic", p.lr_gs_critic},
                {"goal_noise", p.goal_noise},
                {"state_input_scale", p.state_input_scale},
                {"gs_reward_scale", p.gs_reward_scale},
                {"gc_action_l2", p.gc_action_l2},
                {"action_noise", p.action_noise},
                {"gs_action_noise", p.gs_action_noise},
                {"entropy_coef", p.entropy_coef},
                {"init_log_halfwidth", p.init_log_halfwidth},
                {"gc_rollouts", p.gc_rollouts},
                {"gs_transitions", p.gs_transitions},
                {"batch_size", p.batch_size},
                {"gc_iterations", p.gc_iterations},
                {"gc_steps", p.gc_steps},
                {"gs_iterations", p.gs_iterations},
                {"gs_steps", p.gs_steps},
                {"refresh_every", p.refresh_every},
                {"refresh_skills", p.refresh_skills},
                {"buffer_capacity", p.buffer_capacity},
                {"initial_start_states", p.initial_start_states},
                {"persistent_gc_buffer", p.persistent_gc_buffer},
                {"persistent_capacity", p.persistent_capacity},
                {"phase2_episodes_per_update", p.phase2_episodes_per_update},
                {"phase2_steps", p.phase2_steps},
                {"phase2_replay_capacity", p.phase2_replay_capacity},
                {"phase2_eval_every", p.phase2_eval_every},
                {"phase2_eval_episodes", p.phase2_eval_episodes},
                {"distance", p.distance == DistanceKind::l2 ? "l2" : "linf"},
                {"parallel", p.exec == Exec::parallel}};
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  return j.dump(2);
}

}  // namespace hiemp
