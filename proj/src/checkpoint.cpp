#include "hiemp/checkpoint.hpp"

#include <fstream>
#include <string_view>

#include "hiemp/binary_io.hpp"
#include "hiemp/error.hpp"

namespace hiemp {

namespace {

constexpr std::string_view kMagic = "HIEMP1";

void put_vec(std::ostream& os, const Vec& v) {
  io::put_u32(os, static_cast<std::uint32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) io::put_f64(os, v(i));
}

Vec get_vec(std::istream& is, Eigen::Index expected = -1) {
  const auto n = static_cast<Eigen::Index>(io::get_u32(is));
  if (expected >= 0 && n != expected) throw RuntimeAbort("checkpoint vector has the wrong length");
  if (n > (1 << 20)) throw RuntimeAbort("checkpoint vector length is implausible");
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = io::get_f64(is);
  return v;
}

void put_spec(std::ostream& os, const LevelSpec& s) {
  io::put_u32(os, static_cast<std::uint32_t>(s.n));
  io::put_f64(os, s.sigma0_gc);
  io::put_f64(os, s.sigma0_gs);
  io::put_f64(os, s.eps_threshold);
  io::put_f64(os, s.gamma);
}

LevelSpec get_spec(std::istream& is) {
  LevelSpec s;
  s.n = static_cast<int>(io::get_u32(is));
  s.sigma0_gc = io::get_f64(is);
  s.sigma0_gs = io::get_f64(is);
  s.eps_threshold = io::get_f64(is);
  s.gamma = io::get_f64(is);
  return s;
}

void check_net(const Net& net, int in, int out, const char* what) {
  if (net.input_dim() != in || net.output_dim() != out) {
    throw RuntimeAbort(std::string("checkpoint ") + what + " net has dimensions inconsistent with the environment");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Agent& agent) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeAbort("cannot write checkpoint " + path.string());
  os.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  io::put_u32(os, kCheckpointVersion);
  io::put_string(os, config_to_json(config));

  io::put_u32(os, static_cast<std::uint32_t>(agent.specs.size()));
  for (const auto& s : agent.specs) put_spec(os, s);
  io::put_u32(os, static_cast<std::uint32_t>(agent.skill_levels()));
  io::put_u32(os, agent.task ? 1u : 0u);
  if (agent.task) {
    put_vec(os, agent.task->goal_center);
    put_vec(os, agent.task->goal_length);
    io::put_u32(os, static_cast<std::uint32_t>(agent.task->n_task));
    io::put_f64(os, agent.task->eps_task);
  }
  io::put_u32(os, static_cast<std::uint32_t>(agent.phase1_epochs));
  for (const auto& ac : agent.gc) {
    write_net(os, ac.policy);
    write_net(os, ac.critic);
  }
  for (const auto& ac : agent.gs) {
    write_net(os, ac.policy);
    write_net(os, ac.critic);
  }
  for (const auto& buffer : agent.start_buffers) {
    io::put_u64(os, buffer.capacity());
    io::put_u64(os, buffer.size());
    for (const auto& s : buffer.states()) put_vec(os, s);
  }
  if (!os) throw RuntimeAbort("failed while writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeAbort("cannot open checkpoint " + path.string());
  std::string magic(kMagic.size(), '\0');
  if (!is.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kMagic) {
    throw RuntimeAbort(path.string() + " is not a checkpoint (bad magic)");
  }
  const std::uint32_t version = io::get_u32(is);
  if (version != kCheckpointVersion) {
    throw RuntimeAbort("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint out;
  try {
    out.config = parse_config(io::get_string(is));
  } catch (const ConfigError& e) {
    throw RuntimeAbort(std::string("checkpoint carries an invalid config: ") + e.what());
  }
  Agent& agent = out.agent;
  agent.env = out.config.make_env();
  agent.params = out.config.train;

  const std::uint32_t n_specs = io::get_u32(is);
  if (n_specs < 1 || n_specs > 4) throw RuntimeAbort("checkpoint level count is out of range");
  for (std::uint32_t i = 0; i < n_specs; ++i) agent.specs.push_back(get_spec(is));
  const std::uint32_t k = io::get_u32(is);
  const bool has_task = io::get_u32(is) != 0;
  if (k < 1 || k > 3 || n_specs != k + (has_task ? 1u : 0u)) throw RuntimeAbort("checkpoint level layout is inconsistent");
  if (has_task) {
    TaskSpec task;
    task.goal_center = get_vec(is, agent.goal_dim());
    task.goal_length = get_vec(is, agent.goal_dim());
    task.n_task = static_cast<int>(io::get_u32(is));
    task.eps_task = io::get_f64(is);
    agent.task = task;
  }
  agent.phase1_epochs = static_cast<int>(io::get_u32(is));

  const int sd = agent.env.state_dim;
  const int gd = agent.goal_dim();
  for (std::uint32_t level = 0; level < n_specs; ++level) {
    GCActorCritic ac;
    ac.policy = read_net(is);
    ac.critic = read_net(is);
    const int ad = agent.action_dim(static_cast<int>(level));
    check_net(ac.policy, sd + gd, ad, "goal-conditioned policy");
    check_net(ac.critic, sd + gd + ad, 1, "goal-conditioned critic");
    ac.policy_opt = make_opt_state(ac.policy);
    ac.critic_opt = make_opt_state(ac.critic);
    agent.gc.push_back(std::move(ac));
  }
  for (std::uint32_t level = 0; level < k; ++level) {
    GSActorCritic ac;
    ac.policy = read_net(is);
    ac.critic = read_net(is);
    check_net(ac.policy, sd, 2 * gd, "goal-space policy");
    check_net(ac.critic, sd + 3 * gd, 1, "goal-space critic");
    ac.policy_opt = make_opt_state(ac.policy);
    ac.critic_opt = make_opt_state(ac.critic);
    agent.gs.push_back(std::move(ac));
  }
  for (std::uint32_t level = 0; level < k; ++level) {
    const std::uint64_t capacity = io::get_u64(is);
    const std::uint64_t count = io::get_u64(is);
    if (capacity < 1 || count > capacity) throw RuntimeAbort("checkpoint start buffer is inconsistent");
    StartBuffer buffer(capacity);
    for (std::uint64_t i = 0; i < count; ++i) buffer.push(get_vec(is, sd));
    agent.start_buffers.push_back(std::move(buffer));
  }
  agent.replay.resize(agent.gc.size());
  if (is.peek() != std::char_traits<char>::eof()) throw RuntimeAbort("checkpoint has trailing bytes");
  return out;
}

}  // namespace hiemp
