#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hiemp/checkpoint.hpp"
#include "hiemp/cli.hpp"
#include "hiemp/config.hpp"
#include "hiemp/error.hpp"
#include "hiemp/report.hpp"

using namespace hiemp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hiemp_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string tiny_config(const fs::path& out, int epochs, int phase2_episodes = 0) {
  std::string cfg = R"({
  "env": {"preset": "point_field_2d"},
  "levels": [{"n": 5, "sigma0_gc": 0.4, "sigma0_gs": 0.5, "eps": 0.15}],
  "phase1": {"epochs": )" + std::to_string(epochs) + "},\n";
  if (phase2_episodes > 0) {
    cfg += R"(  "phase2": {"episodes": )" + std::to_string(phase2_episodes) +
           R"(, "task": {"goal_center": [0, 0], "goal_length": [1, 1], "n": 3, "eps": 0.3},
             "eval": {"episodes": 6, "seeds": [0, 1]}},
)";
  }
  cfg += R"(  "train": {"hidden": [8, 8], "gc_steps": 2, "gs_steps": 2, "gc_rollouts": 4, "gs_transitions": 4,
            "gs_reward_scale": 0.25, "gc_action_l2": 0.5,
            "phase2_episodes_per_update": 4, "phase2_steps": 2, "phase2_eval_every": 4, "phase2_eval_episodes": 3},
  "seed": 5,
  "out": ")" + out.generic_string() + "\"\n}\n";
  return cfg;
}

}  // namespace

TEST_CASE("config: minimal documents parse and defaults apply") {
  const RunConfig cfg = parse_config(R"({"env": {"preset": "point_field_1d"},
    "levels": [{"n": 20, "sigma0_gc": 0.4, "sigma0_gs": 1.75, "eps": 0.15}]})");
  CHECK(cfg.preset == "point_field_1d");
  CHECK(cfg.k() == 1);
  CHECK(cfg.levels[0].gamma == 0.95);
  CHECK(cfg.phase1_epochs == 0);
  CHECK_FALSE(cfg.task.has_value());
  CHECK(cfg.train.hidden == TrainParams{}.hidden);
  CHECK(cfg.seed == 0);
}

TEST_CASE("config: canonical JSON round-trips") {
  const fs::path dir = scratch("roundtrip");
  const RunConfig a = parse_config(tiny_config(dir, 3, 8));
  const std::string text = config_to_json(a);
  const RunConfig b = parse_config(text);
  CHECK(config_to_json(b) == text);
  REQUIRE(b.task.has_value());
  CHECK(b.task->n_task == 3);
  CHECK(b.eval.seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(b.train.gs_transitions == 4);
  CHECK(b.train.gs_reward_scale == 0.25);
  CHECK(b.train.gc_action_l2 == 0.5);
}

TEST_CASE("config: every shipped config loads and builds its agent") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(HIEMP_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const RunConfig cfg = load_config(entry.path());
    Rng rng(cfg.seed);
    CHECK_NOTHROW(make_agent(cfg.make_env(), cfg.levels, cfg.train, rng));
    ++seen;
  }
  CHECK(seen >= 6);
}

TEST_CASE("config: errors name the line or the field path") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string level = R"({"n": 5, "sigma0_gc": 0.4, "sigma0_gs": 0.5, "eps": 0.15})";
  CHECK(message("{\n  \"env\": {\"preset\": \"point_field_1d\"},\n  \"levels\": [,]\n}").find("line 3") !=
        std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": [)" + level + R"(], "colour": 1})")
            .find("config.colour: unknown field") != std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": [{"n": 5, "sigma0_gc": 0.4, "sigma0_gs": 0.5,
            "eps": 0.15, "gama": 0.9}]})")
            .find("config.levels[0].gama") != std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": [{"n": 5, "sigma0_gc": -1, "sigma0_gs": 0.5,
            "eps": 0.15}]})")
            .find("config.levels[0].sigma0_gc") != std::string::npos);
  CHECK(message(R"({"env": {"preset": "nowhere"}, "levels": [)" + level + "]}").find("config.env.preset") !=
        std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": [)" + level + R"(], "k": 2})")
            .find("config.k") != std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": [)" + level + R"(], "phase1": {"epochs": -1}})")
            .find("config.phase1.epochs") != std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": []})").find("config.levels") != std::string::npos);
  CHECK(message(R"({"env": {"preset": "point_field_1d"}, "levels": [)" + level +
                R"(], "train": {"distance": "l3"}})")
            .find("config.train.distance") != std::string::npos);
}

TEST_CASE("blob_hash matches git's object hash") {
  CHECK(blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("train: zero epochs logs the initial goal spaces and writes a checkpoint") {
  const fs::path dir = scratch("zero_epochs");
  write(dir / "cfg.json", tiny_config(dir / "run", 0));
  CommandOptions opts;
  opts.config = dir / "cfg.json";
  opts.log_every = 0;
  REQUIRE(cmd_train(opts) == kExitOk);
  const CsvTable t = read_csv(dir / "run" / "metrics_phase1.csv");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.number(0, "epoch") == 0.0);
  CHECK(t.number(0, "halfwidth_mean") == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fs::exists(dir / "run" / "checkpoint_phase1.bin"));
  const std::string manifest = slurp(dir / "run" / "manifest_phase1.json");
  CHECK(manifest.find(blob_hash(slurp(dir / "cfg.json"))) != std::string::npos);
}

TEST_CASE("train: repeated runs write byte-identical logs, and --seed overrides the config") {
  const fs::path dir = scratch("identical");
  write(dir / "cfg.json", tiny_config(dir / "unused", 2));
  auto run = [&](const std::string& name, std::optional<std::uint64_t> seed) {
    CommandOptions opts;
    opts.config = dir / "cfg.json";
    opts.out = dir / name;
    opts.seed = seed;
    opts.log_every = 0;
    REQUIRE(cmd_train(opts) == kExitOk);
    return slurp(dir / name / "metrics_phase1.csv");
  };
  const std::string a = run("a", std::nullopt);
  CHECK(!a.empty());
  CHECK(run("b", std::nullopt) == a);
  CHECK(run("c", 99) != a);
  CHECK_FALSE(fs::exists(dir / "unused"));
}

TEST_CASE("checkpoints round-trip every net and reject damaged files") {
  const fs::path dir = scratch("checkpoint");
  const RunConfig cfg = parse_config(tiny_config(dir, 1));
  Rng rng(3);
  Agent agent = make_agent(cfg.make_env(), cfg.levels, cfg.train, rng);
  train_phase1(agent, 1, rng);
  save_checkpoint(dir / "ck.bin", cfg, agent);
  const Checkpoint ck = load_checkpoint(dir / "ck.bin");
  CHECK(config_to_json(ck.config) == config_to_json(cfg));
  CHECK(ck.agent.phase1_epochs == 1);
  CHECK(ck.agent.gc[0].policy == agent.gc[0].policy);
  CHECK(ck.agent.gc[0].critic == agent.gc[0].critic);
  CHECK(ck.agent.gs[0].policy == agent.gs[0].policy);
  CHECK(ck.agent.gs[0].critic == agent.gs[0].critic);
  CHECK(ck.agent.start_buffers[0].states() == agent.start_buffers[0].states());

  const std::string bytes = slurp(dir / "ck.bin");
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  write(dir / "magic.bin", bad_magic);
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.bin"), RuntimeAbort);
  std::string bad_version = bytes;
  bad_version[6] = static_cast<char>(kCheckpointVersion + 1);
  write(dir / "version.bin", bad_version);
  CHECK_THROWS_AS(load_checkpoint(dir / "version.bin"), RuntimeAbort);
  write(dir / "short.bin", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "short.bin"), RuntimeAbort);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), RuntimeAbort);
}

TEST_CASE("exit codes: 2 for configuration errors, 3 for runtime aborts") {
  const fs::path dir = scratch("exit_codes");
  CommandOptions none;
  none.log_every = 0;
  CHECK(cmd_train(none) == kExitConfig);
  CommandOptions missing = none;
  missing.config = dir / "absent.json";
  CHECK(cmd_train(missing) == kExitConfig);
  write(dir / "broken.json", "{\"env\": ");
  CommandOptions broken = none;
  broken.config = dir / "broken.json";
  CHECK(cmd_train(broken) == kExitConfig);

  write(dir / "cfg.json", tiny_config(dir / "run", 1, 8));
  CommandOptions p2 = none;
  p2.config = dir / "cfg.json";
  p2.phase = 2;
  CHECK(cmd_train(p2) == kExitConfig);
  write(dir / "junk.bin", "not a checkpoint");
  p2.checkpoint = dir / "junk.bin";
  CHECK(cmd_train(p2) == kExitRuntime);
  CommandOptions ev = none;
  ev.checkpoint = dir / "junk.bin";
  CHECK(cmd_eval(ev) == kExitRuntime);
  CommandOptions plot = none;
  plot.out = dir / "empty";
  CHECK(cmd_plot(plot) == kExitRuntime);
  CHECK(cmd_plot(none) == kExitConfig);

  char prog[] = "hiemp";
  char sub[] = "train";
  char flag[] = "--phase";
  char three[] = "3";
  char* argv[] = {prog, sub, flag, three};
  CHECK(run_cli(4, argv) == kExitConfig);
}

TEST_CASE("phase 2 and eval: the summary mean is the mean of the per-seed means") {
  const fs::path dir = scratch("phase2");
  write(dir / "cfg.json", tiny_config(dir / "run", 1, 8));
  CommandOptions opts;
  opts.config = dir / "cfg.json";
  opts.log_every = 0;
  REQUIRE(cmd_train(opts) == kExitOk);
  opts.phase = 2;
  opts.checkpoint = dir / "run" / "checkpoint_phase1.bin";
  REQUIRE(cmd_train(opts) == kExitOk);
  const CsvTable curve = read_csv(dir / "run" / "metrics_phase2.csv");
  CHECK(curve.header == phase2_header());
  CHECK(curve.rows.size() == 3);

  CommandOptions ev;
  ev.checkpoint = dir / "run" / "checkpoint_phase2.bin";
  REQUIRE(cmd_eval(ev) == kExitOk);
  const CsvTable rows = read_csv(dir / "run" / "eval.csv");
  const CsvTable summary = read_csv(dir / "run" / "eval_summary.csv");
  REQUIRE(rows.rows.size() == 12);
  double seed_mean[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    seed_mean[static_cast<int>(rows.number(i, "seed"))] += rows.number(i, "min_dist") / 6.0;
  }
  CHECK(summary.number(0, "mean") == doctest::Approx(0.5 * (seed_mean[0] + seed_mean[1])).epsilon(1e-12));
  CHECK(summary.number(0, "episodes") == 6.0);
  CHECK(summary.number(0, "seeds") == 2.0);
}

TEST_CASE("plot: the oracle overlay matches the oracle CSV extents") {
  const fs::path dir = scratch("plot");
  write(dir / "cfg.json", tiny_config(dir / "run", 2));
  CommandOptions opts;
  opts.config = dir / "cfg.json";
  opts.log_every = 0;
  REQUIRE(cmd_train(opts) == kExitOk);
  opts.oracle_n = 4;
  REQUIRE(cmd_oracle(opts) == kExitOk);
  CommandOptions plot;
  plot.out = dir / "run";
  REQUIRE(cmd_plot(plot) == kExitOk);
  const std::string svg = slurp(dir / "run" / "goal_space.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  const CsvTable bbox = read_csv(dir / "run" / "oracle_bbox.csv");
  const std::string overlay = "class=\"oracle\" data-x0=\"" + format_number(bbox.number(0, "lo")) + "\" data-x1=\"" +
                              format_number(bbox.number(0, "hi")) + "\" data-y0=\"" +
                              format_number(bbox.number(1, "lo")) + "\" data-y1=\"" +
                              format_number(bbox.number(1, "hi")) + "\"";
  CHECK(svg.find(overlay) != std::string::npos);
  CHECK(bbox.number(0, "hi") == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(svg.find("goal-space first") != std::string::npos);
  CHECK(svg.find("goal-space last") != std::string::npos);
}
