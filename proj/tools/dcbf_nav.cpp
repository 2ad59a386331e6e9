// dcbf_nav: run scenarios, compare planner variants, validate configs.
//
//   dcbf_nav run      --scenario F --planner K [--seed N] [--out DIR] [--set k=v]...
//   dcbf_nav compare  --scenario F [--planner K,...] [--seed N,...] [--out DIR] [--set k=v]...
//   dcbf_nav validate --scenario F [--set k=v]... [--print]
//
// Exit codes: 0 ok, 1 bad config or usage, 2 collision, 3 timeout.
// DCBF_LOG_LEVEL selects the stderr log level (trace..off, default info).

#include <dcbf/sim/log.hpp>
#include <dcbf/sim/run.hpp>
#include <dcbf/sim/scenario.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace dcbf;
using namespace dcbf::sim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;

struct Options {
  std::string scenario;
  std::vector<std::string> planners;
  std::vector<std::string> seeds;
  bool seed_given = false;
  std::string out;
  std::vector<std::string> overrides;
  bool print = false;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("dcbf_nav");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("DCBF_LOG_LEVEL")) {
    const auto lvl = spdlog::level::from_str(env);
    if (lvl == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("DCBF_LOG_LEVEL={} not recognized, using info", env);
    else
      spdlog::set_level(lvl);
  }
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const std::string& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ','))
      if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::uint64_t parse_seed(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s.front() == '-') throw ConfigError("seed '" + s + "' is not a non-negative integer");
  return v;
}

PlannerKind parse_kind(const std::string& s) {
  if (auto k = parse_planner_kind(s)) return *k;
  throw ConfigError("unknown planner '" + s + "'; valid kinds: " + planner_kind_list());
}

void log_run(const ScenarioRun& r) {
  const RunMetrics& m = r.metrics;
  spdlog::info("{} seed {}: {} min_dist={} cons_time={} reac_time={} speed_var={} optimal {}/{} ({:.1f} s)",
               to_string(r.kind), r.seed, to_string(r.outcome), fmt_num(m.min_dist), fmt_num(m.cons_time),
               fmt_num(m.reac_time), fmt_num(m.speed_var), r.optimal_solves, r.solves, r.wall_seconds);
  for (const TickRecord& t : r.ticks)
    if (t.status != SolveStatus::kOptimal)
      spdlog::debug("t={} status={} min_residual={}", fmt_num(t.t), to_string(t.status), fmt_num(t.min_residual));
}

int cmd_validate(const Options& o) {
  const Scenario s = load_scenario(o.scenario, o.overrides);
  s.validate();
  if (o.print) std::cout << scenario_to_json(s).dump(2) << "\n";
  spdlog::info("{}: ok ({} obstacles)", o.scenario, s.obstacles.size());
  return kExitOk;
}

int cmd_run(const Options& o) {
  if (o.planners.size() != 1) throw ConfigError("run takes exactly one --planner; valid kinds: " + planner_kind_list());
  const PlannerKind kind = parse_kind(o.planners.front());
  Scenario s = load_scenario(o.scenario, o.overrides);
  const std::vector<std::string> seeds = split_list(o.seeds);
  if (o.seed_given && seeds.size() != 1) throw ConfigError("run takes exactly one --seed");
  if (o.seed_given) s.seed = parse_seed(seeds.front());
  s.validate();

  const fs::path dir = o.out.empty()
                           ? fs::path("runs") / s.name / std::string(to_string(kind)) / ("seed_" + std::to_string(s.seed))
                           : fs::path(o.out);
  spdlog::info("running {} with {} (seed {})", s.name, to_string(kind), s.seed);
  const ScenarioRun r = run(s, kind);
  write_run_logs(dir, s, r);
  log_run(r);
  spdlog::info("logs written to {}", dir.string());
  std::cout << metrics_text(r) << std::flush;
  return exit_code(r.outcome);
}

int cmd_compare(const Options& o) {
  std::vector<PlannerKind> kinds;
  for (const std::string& p : split_list(o.planners)) kinds.push_back(parse_kind(p));
  if (o.planners.empty())
    kinds.assign(kAllPlannerKinds.begin(), kAllPlannerKinds.end());
  else if (kinds.empty())
    throw ConfigError("empty planner list; valid kinds: " + planner_kind_list());

  const Scenario base = load_scenario(o.scenario, o.overrides);
  base.validate();
  std::vector<std::uint64_t> seeds;
  for (const std::string& v : split_list(o.seeds)) seeds.push_back(parse_seed(v));
  if (!o.seed_given) seeds.push_back(base.seed);
  if (seeds.empty()) throw ConfigError("empty seed list");

  const fs::path dir = o.out.empty() ? fs::path("runs") / base.name / "compare" : fs::path(o.out);
  std::vector<CompareRow> rows;
  for (PlannerKind kind : kinds) {
    std::vector<RunMetrics> metrics;
    std::vector<std::string> failures;
    int timeouts = 0;
    for (std::uint64_t seed : seeds) {
      try {
        Scenario s = base;
        s.seed = seed;
        const ScenarioRun r = run(s, kind);
        write_run_logs(dir / std::string(to_string(kind)) / ("seed_" + std::to_string(seed)), s, r);
        log_run(r);
        metrics.push_back(r.metrics);
        if (r.outcome == Outcome::kTimeout) ++timeouts;
      } catch (const std::exception& e) {
        spdlog::error("{} seed {}: {}", to_string(kind), seed, e.what());
        failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
      }
    }
    rows.push_back(aggregate(kind, metrics, std::move(failures), timeouts));
  }
  write_atomic(dir / "table.csv", compare_csv(rows));
  write_atomic(dir / "table.json", compare_json(base.name, seeds, rows));
  const std::string text = compare_text(rows);
  write_atomic(dir / "table.txt", text);
  std::cout << text;
  spdlog::info("table written to {}", dir.string());
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "scenario file (JSON)")->required();
  cmd->add_option("--set", o.overrides, "override a scenario key, e.g. planner.gamma_cbf=0.15");
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"D-CBF navigation: perception, tracking and MPC over simulated scenarios"};
  app.require_subcommand(1);
  Options o;

  CLI::App* run_cmd = app.add_subcommand("run", "run one scenario with one planner");
  add_common(run_cmd, o);
  run_cmd->add_option("--planner", o.planners, "planner kind: " + planner_kind_list())->required();
  run_cmd->add_option("--seed", o.seeds, "random seed (default: from scenario)");
  run_cmd->add_option("--out", o.out, "output directory");

  CLI::App* cmp_cmd = app.add_subcommand("compare", "run planner variants over seeds and tabulate");
  add_common(cmp_cmd, o);
  cmp_cmd->add_option("--planner", o.planners, "planner kinds, repeated or comma separated (default: all)");
  cmp_cmd->add_option("--seed", o.seeds, "seeds, repeated or comma separated (default: from scenario)");
  cmp_cmd->add_option("--out", o.out, "output directory");

  CLI::App* val_cmd = app.add_subcommand("validate", "check a scenario file and overrides");
  add_common(val_cmd, o);
  val_cmd->add_flag("--print", o.print, "print the normalized scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  o.seed_given = app.got_subcommand("run") ? run_cmd->count("--seed") > 0 : cmp_cmd->count("--seed") > 0;

  try {
    if (app.got_subcommand("run")) return cmd_run(o);
    if (app.got_subcommand("compare")) return cmd_compare(o);
    return cmd_validate(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }
}
