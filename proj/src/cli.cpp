#include "hiemp/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "hiemp/checkpoint.hpp"
#include "hiemp/config.hpp"
#include "hiemp/error.hpp"
#include "hiemp/hierarchy.hpp"
#include "hiemp/oracle.hpp"
#include "hiemp/phase2.hpp"
#include "hiemp/report.hpp"

namespace hiemp {

namespace fs = std::filesystem;

namespace {

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeAbort("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig resolve_config(const CommandOptions& opts) {
  if (!opts.config) throw ConfigError("--config is required");
  RunConfig cfg = load_config(*opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.out_dir = opts.out->string();
  return cfg;
}

void write_manifest(const fs::path& path, const RunConfig& cfg, const std::string& command, int phase,
                    const std::vector<fs::path>& inputs) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["phase"] = phase;
  j["seed"] = cfg.seed;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  nlohmann::ordered_json hashes = nlohmann::ordered_json::array();
  for (const auto& in : inputs) {
    hashes.push_back({{"path", in.string()}, {"blob_sha1", blob_hash(read_bytes(in))}});
  }
  j["inputs"] = hashes;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void report_audit(const Agent& agent) {
  const auto& a = agent.audit;
  std::fprintf(stderr, "nesting audit: %zu subgoals (%zu outside the level-below box), %zu skills (%zu over budget)\n",
               a.subgoals, a.subgoal_violations, a.skills, a.horizon_violations);
}

int train_phase1_cmd(const CommandOptions& opts, const RunConfig& cfg) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  Rng rng(cfg.seed);
  Agent agent = make_agent(cfg.make_env(), cfg.levels, cfg.train, rng);
  const Vec origin = project_goal(agent.env, nominal_start(agent.env));
  CsvWriter csv(out / "metrics_phase1.csv", phase1_header(agent.goal_dim()));
  const int top = agent.skill_levels() - 1;
  train_phase1(agent, cfg.phase1_epochs, rng, [&](const EpochMetrics& m) {
    write_phase1_row(csv, m, origin);
    if (opts.log_every > 0 && m.level == top && m.epoch % opts.log_every == 0) {
      std::fprintf(stderr, "epoch %d: top half-width %.4f, gc reward %.4f, gs reward %.4f\n", m.epoch,
                   m.halfwidth_mean, m.gc_reward_mean, m.gs_reward_mean);
    }
  });
  csv.flush();
  save_checkpoint(out / "checkpoint_phase1.bin", cfg, agent);
  write_manifest(out / "manifest_phase1.json", cfg, "train", 1, {*opts.config});
  report_audit(agent);
  return kExitOk;
}

int train_phase2_cmd(const CommandOptions& opts, const RunConfig& cfg) {
  if (!opts.checkpoint) throw ConfigError("--checkpoint is required for phase 2");
  if (!cfg.task) throw ConfigError(opts.config->string() + ": config.phase2: required for phase 2");
  if (cfg.phase2_episodes < 1) throw ConfigError(opts.config->string() + ": config.phase2.episodes: must be >= 1");
  Checkpoint ck = load_checkpoint(*opts.checkpoint);
  Agent& agent = ck.agent;
  if (agent.task) throw RuntimeAbort("checkpoint already has a task level");
  if (agent.env.name != cfg.make_env().name) {
    throw ConfigError("config preset '" + cfg.preset + "' does not match the checkpoint's '" + agent.env.name + "'");
  }
  // Phase-2 schedule and evaluation knobs come from the config; the frozen
  // levels keep the parameters they were trained with.
  agent.params.phase2_episodes_per_update = cfg.train.phase2_episodes_per_update;
  agent.params.phase2_steps = cfg.train.phase2_steps;
  agent.params.phase2_replay_capacity = cfg.train.phase2_replay_capacity;
  agent.params.phase2_eval_every = cfg.train.phase2_eval_every;
  agent.params.phase2_eval_episodes = cfg.train.phase2_eval_episodes;
  agent.params.lr_gc_actor = cfg.train.lr_gc_actor;
  agent.params.lr_gc_critic = cfg.train.lr_gc_critic;
  agent.params.exec = cfg.train.exec;

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  Rng rng = stream_rng(cfg.seed, 2);
  if (auto warning = attach_task_level(agent, *cfg.task, rng)) std::fprintf(stderr, "warning: %s\n", warning->c_str());
  CsvWriter csv(out / "metrics_phase2.csv", phase2_header());
  int chunk = 0;
  train_phase2(agent, cfg.phase2_episodes, rng, [&](const Phase2Metrics& m) {
    write_phase2_row(csv, m);
    if (opts.log_every > 0 && !std::isnan(m.min_dist_mean) && chunk++ % opts.log_every == 0) {
      std::fprintf(stderr, "episode %d: mean min-distance %.4f\n", m.episode, m.min_dist_mean);
    }
  });
  csv.flush();
  RunConfig saved = ck.config;
  saved.task = cfg.task;
  saved.phase2_episodes = cfg.phase2_episodes;
  saved.eval = cfg.eval;
  save_checkpoint(out / "checkpoint_phase2.bin", saved, agent);
  write_manifest(out / "manifest_phase2.json", cfg, "train", 2, {*opts.config, *opts.checkpoint});
  report_audit(agent);
  return kExitOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitConfig;
  } catch (const RuntimeAbort& e) {
    std::fprintf(stderr, "aborted: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "aborted: %s\n", e.what());
    return kExitRuntime;
  }
}

}  // namespace

std::string blob_hash(const std::string& bytes) {
  const std::string prefix = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw RuntimeAbort("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, prefix.data(), prefix.size()) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw RuntimeAbort("SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

int cmd_train(const CommandOptions& opts) {
  return guarded([&] {
    const RunConfig cfg = resolve_config(opts);
    if (opts.phase == 1) return train_phase1_cmd(opts, cfg);
    if (opts.phase == 2) return train_phase2_cmd(opts, cfg);
    throw ConfigError("--phase must be 1 or 2");
  });
}

int cmd_eval(const CommandOptions& opts) {
  return guarded([&] {
    if (!opts.checkpoint) throw ConfigError("--checkpoint is required");
    Checkpoint ck = load_checkpoint(*opts.checkpoint);
    RunConfig cfg = opts.config ? resolve_config(opts) : ck.config;
    if (opts.out) cfg.out_dir = opts.out->string();
    if (!ck.agent.task) throw RuntimeAbort("checkpoint has no task level; run phase 2 first");
    std::vector<std::uint64_t> seeds = cfg.eval.seeds;
    if (opts.seed) seeds = {*opts.seed};
    const EvalReport report = evaluate(ck.agent, cfg.eval.episodes, seeds, cfg.train.exec);
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    write_eval_csv(out / "eval.csv", report, ck.agent.goal_dim());
    write_eval_summary(out / "eval_summary.csv", report, cfg.eval.episodes);
    std::printf("min-distance: mean %s, std %s over %zu seeds x %d episodes\n", format_number(report.mean).c_str(),
                format_number(report.std).c_str(), seeds.size(), cfg.eval.episodes);
    return kExitOk;
  });
}

int cmd_plot(const CommandOptions& opts) {
  return guarded([&] {
    if (!opts.out) throw ConfigError("--out (the run directory) is required");
    const fs::path dir(*opts.out);
    const fs::path p1 = dir / "metrics_phase1.csv";
    const fs::path p2 = dir / "metrics_phase2.csv";
    if (!fs::exists(p1) && !fs::exists(p2)) throw RuntimeAbort("no metrics CSVs in " + dir.string());
    if (fs::exists(p1)) plot_goal_spaces(p1, dir / "oracle_bbox.csv", dir / "goal_space.svg");
    if (fs::exists(p2)) plot_phase2_curve(p2, dir / "phase2_curve.svg");
    return kExitOk;
  });
}

int cmd_oracle(const CommandOptions& opts) {
  return guarded([&] {
    const RunConfig cfg = resolve_config(opts);
    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    Agent agent;
    if (opts.checkpoint) {
      agent = load_checkpoint(*opts.checkpoint).agent;
    } else {
      Rng rng(cfg.seed);
      agent = make_agent(cfg.make_env(), cfg.levels, cfg.train, rng);
    }
    const State s0 = nominal_start(agent.env);
    if (agent.env.noiseless()) {
      const int n = opts.oracle_n.value_or(static_cast<int>(horizon_bound(agent, agent.skill_levels() - 1)));
      const ReachableSet set = reachable_bruteforce(agent.env, s0, n, opts.oracle_actions);
      write_reachable_csv(out / "oracle_points.csv", out / "oracle_bbox.csv", set);
      std::printf("reachable within %d steps: %zu cells\n", n, set.points().size());
    } else {
      const MiResult mi = exact_mi_quadrature(open_loop_channel(agent, s0), {}, cfg.train.exec);
      Rng rng = stream_rng(cfg.seed, 3);
      const BoundEstimate bound =
          variational_bound_estimate(agent, 0, s0, 4000, rng, Execution::open_loop, cfg.train.exec);
      CsvWriter csv(out / "oracle_mi.csv", {"quantity", "value"});
      const std::pair<const char*, double> rows[] = {{"exact_mi", mi.mi},
                                                    {"quadrature_error", mi.error_estimate},
                                                    {"capacity_cap", mi.capacity_cap},
                                                    {"variational_bound", bound.mean},
                                                    {"variational_bound_std_error", bound.std_error}};
      for (const auto& [name, value] : rows) {
        csv << std::string(name) << value;
        csv.end_row();
      }
      std::printf("exact MI %s nats, variational bound %s +/- %s\n", format_number(mi.mi).c_str(),
                  format_number(bound.mean).c_str(), format_number(bound.std_error).c_str());
    }
    return kExitOk;
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Hierarchical empowerment: skill learning and evaluation on point-mass environments"};
  app.require_subcommand(1);
  CommandOptions opts;
  std::string config, checkpoint, out;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (JSON)");
    sub->add_option("--checkpoint", checkpoint, "Checkpoint file");
    sub->add_option("--seed", seed, "Seed (overrides the config)");
    sub->add_option("--out", out, "Output directory");
  };
  CLI::App* train = app.add_subcommand("train", "Run phase 1 or phase 2 training");
  add_common(train);
  train->add_option("--phase", opts.phase, "1 (skills) or 2 (task level)")->check(CLI::IsMember({1, 2}));
  train->add_option("--log-every", opts.log_every, "Progress line cadence; 0 disables");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a phase-2 checkpoint");
  add_common(eval);
  CLI::App* plot = app.add_subcommand("plot", "Write SVG figures for a run directory");
  plot->add_option("--out", out, "Run directory")->required();
  CLI::App* oracle = app.add_subcommand("oracle", "Reachable sets or exact mutual information");
  add_common(oracle);
  oracle->add_option("--actions", opts.oracle_actions, "Action grid points per dimension")->check(CLI::Range(3, 101));
  int oracle_n = 0;
  oracle->add_option("--n", oracle_n, "Search horizon in primitive steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  CLI::App* active = app.get_subcommands().front();
  if (active->count("--config")) opts.config = config;
  if (active->count("--checkpoint")) opts.checkpoint = checkpoint;
  if (active->count("--seed")) opts.seed = seed;
  if (active->count("--out")) opts.out = out;
  if (active == oracle && oracle->count("--n")) opts.oracle_n = oracle_n;

  if (active == train) return cmd_train(opts);
  if (active == eval) return cmd_eval(opts);
  if (active == plot) return cmd_plot(opts);
  return cmd_oracle(opts);
}

}  // namespace hiemp
