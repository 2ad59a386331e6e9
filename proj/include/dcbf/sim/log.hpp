#pragma once

// Run artifacts: an ndjson record stream, flat per-signal CSV tables, and
// metrics summaries. Every file is written to a temporary name and renamed
// into place. Wall-clock timings go to timing.csv only, so the remaining
// files are byte-identical for identical inputs.

#include <dcbf/sim/run.hpp>
#include <dcbf/sim/scenario.hpp>

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dcbf::sim {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline constexpr int kLogSchemaVersion = 1;

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Writes content to path via a sibling temporary file and rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : columns_(header.size()) { row(header); }

  template <typename... Cells>
  void add(const Cells&... cells) {
    std::vector<std::string> r;
    (r.push_back(cell(cells)), ...);
    if (r.size() != columns_) throw Error("csv row width mismatch");
    row(r);
  }

  const std::string& str() const { return text_; }

 private:
  static std::string cell(double v) { return fmt_num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::uint64_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  static std::string cell(const std::string& v) { return cell(std::string_view(v)); }
  static std::string cell(const char* v) { return cell(std::string_view(v)); }

  void row(const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) text_ += (i ? "," : "") + r[i];
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

namespace detail {

/// JSON number, null when non-finite.
inline ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline ojson ellipse_json(const Ellipse& e) {
  return ojson::array({e.cx(), e.cy(), e.a(), e.b(), e.theta()});
}

inline ojson tick_json(const TickRecord& r) {
  ojson j;
  j["type"] = "tick";
  j["t"] = r.t;
  j["robot"] = {{"x", r.robot.x}, {"y", r.robot.y}, {"heading", r.robot.heading}};
  j["control"] = {{"v", r.control.v}, {"omega", r.control.omega}};
  j["solver"] = {{"status", std::string(to_string(r.status))},
                 {"iterations", r.iterations},
                 {"cost", num(r.cost)},
                 {"min_residual", num(r.min_residual)},
                 {"slack", num(r.slack)}};
  ojson obs = ojson::array();
  for (const ObstacleState& o : r.truth)
    obs.push_back({{"id", o.id},
                   {"dynamic", o.dynamic},
                   {"x", o.position.x()},
                   {"y", o.position.y()},
                   {"vx", o.velocity.x()},
                   {"vy", o.velocity.y()}});
  j["obstacles"] = std::move(obs);
  ojson ell = ojson::array();
  for (const LabeledEllipse& le : r.ellipses)
    ell.push_back({{"label", le.label}, {"ellipse", ellipse_json(le.ellipse)}});
  j["ellipses"] = std::move(ell);
  ojson pred = ojson::array();
  for (const PredictedObstacle& p : r.predictions) {
    ojson steps = ojson::array();
    for (const Ellipse& e : p.steps) steps.push_back(ellipse_json(e));
    ojson radius = ojson::array();
    for (double x : p.radius) radius.push_back(num(x));
    pred.push_back({{"label", p.label},
                    {"current", ellipse_json(p.current)},
                    {"current_radius", num(p.current_radius)},
                    {"steps", std::move(steps)},
                    {"radius", std::move(radius)}});
  }
  j["predictions"] = std::move(pred);
  ojson audit = ojson::array();
  for (const AuditSample& a : r.audit) audit.push_back({{"id", a.id}, {"h", num(a.h)}});
  j["audit"] = std::move(audit);
  if (r.free_control)
    j["free_control"] = {{"v", r.free_control->v}, {"omega", r.free_control->omega}};
  return j;
}

inline ojson grid_json(double t, const ElevationGrid& g) {
  ojson elev = ojson::array();
  for (double z : g.elevation_data()) elev.push_back(num(z));
  ojson mask = ojson::array();
  for (std::uint8_t m : g.mask_data()) mask.push_back(static_cast<int>(m));
  return {{"type", "grid"},
          {"t", t},
          {"origin", {g.origin().x(), g.origin().y()}},
          {"resolution", g.resolution()},
          {"width", g.width()},
          {"height", g.height()},
          {"elevation", std::move(elev)},
          {"mask", std::move(mask)}};
}

}  // namespace detail

inline ojson metrics_json(const ScenarioRun& run) {
  const RunMetrics& m = run.metrics;
  return {{"scenario", run.scenario},
          {"planner", std::string(to_string(run.kind))},
          {"seed", run.seed},
          {"outcome", std::string(to_string(run.outcome))},
          {"min_dist", detail::num(m.min_dist)},
          {"cons_time", detail::num(m.cons_time)},
          {"reac_time", detail::num(m.reac_time)},
          {"speed_var", detail::num(m.speed_var)},
          {"collided", m.collided},
          {"complete", m.complete},
          {"enter_time", detail::num(run.enter_time)},
          {"solves", run.solves},
          {"optimal_solves", run.optimal_solves},
          {"min_cbf_residual", detail::num(run.min_cbf_residual)},
          {"min_audit_h", detail::num(run.min_audit_h)}};
}

inline std::string metrics_csv(const ScenarioRun& run) {
  const RunMetrics& m = run.metrics;
  CsvTable t({"min_dist", "cons_time", "reac_time", "speed_var", "collided"});
  t.add(m.min_dist, m.cons_time, m.reac_time, m.speed_var, m.collided);
  return t.str();
}

inline std::string metrics_text(const ScenarioRun& run) {
  const RunMetrics& m = run.metrics;
  std::ostringstream o;
  o << "scenario   " << run.scenario << "\n"
    << "planner    " << to_string(run.kind) << "\n"
    << "seed       " << run.seed << "\n"
    << "outcome    " << to_string(run.outcome) << "\n"
    << "min_dist   " << (m.collided ? "0(collided)" : fmt_num(m.min_dist)) << " m\n"
    << "cons_time  " << fmt_num(m.cons_time) << " s\n"
    << "reac_time  " << fmt_num(m.reac_time) << " s\n"
    << "speed_var  " << fmt_num(m.speed_var) << " (m/s)^2\n"
    << "solves     " << run.optimal_solves << "/" << run.solves << " optimal\n";
  return o.str();
}

inline std::string ndjson_log(const Scenario& s, const ScenarioRun& run) {
  std::string out;
  auto line = [&](const ojson& j) { out += j.dump() + "\n"; };
  line({{"type", "header"},
        {"schema", kLogSchemaVersion},
        {"scenario", run.scenario},
        {"planner", std::string(to_string(run.kind))},
        {"seed", run.seed},
        {"dt", run.dt},
        {"d_safe", run.d_safe},
        {"gamma_cbf", run.gamma_cbf},
        {"config", ojson::parse(scenario_to_json(s).dump())}});
  for (const TickRecord& r : run.ticks) {
    line(detail::tick_json(r));
    if (r.grid) line(detail::grid_json(r.t, *r.grid));
  }
  ojson summary = metrics_json(run);
  summary.erase("scenario");
  summary.erase("planner");
  summary.erase("seed");
  ojson rec = {{"type", "summary"},
               {"final_time", run.final_time},
               {"final_robot",
                {{"x", run.final_robot.x}, {"y", run.final_robot.y}, {"heading", run.final_robot.heading}}}};
  rec.update(summary);
  line(rec);
  return out;
}

/// Writes every run artifact into dir.
inline void write_run_logs(const fs::path& dir, const Scenario& s, const ScenarioRun& run) {
  CsvTable robot({"t", "x", "y", "heading", "v", "omega"});
  CsvTable obstacles({"t", "id", "dynamic", "x", "y", "vx", "vy"});
  CsvTable ellipses({"t", "label", "cx", "cy", "a", "b", "theta"});
  CsvTable predictions({"t", "label", "k", "cx", "cy", "a", "b", "theta", "radius"});
  CsvTable barrier({"t", "id", "h"});
  CsvTable solver({"t", "status", "iterations", "cost", "min_residual", "slack"});
  CsvTable timing({"t", "solve_ms", "tick_ms"});

  for (const TickRecord& r : run.ticks) {
    robot.add(r.t, r.robot.x, r.robot.y, r.robot.heading, r.control.v, r.control.omega);
    for (const ObstacleState& o : r.truth)
      obstacles.add(r.t, o.id, o.dynamic, o.position.x(), o.position.y(), o.velocity.x(), o.velocity.y());
    for (const LabeledEllipse& le : r.ellipses) {
      const Ellipse& e = le.ellipse;
      ellipses.add(r.t, le.label, e.cx(), e.cy(), e.a(), e.b(), e.theta());
    }
    for (const PredictedObstacle& p : r.predictions) {
      predictions.add(r.t, p.label, 0, p.current.cx(), p.current.cy(), p.current.a(), p.current.b(),
                      p.current.theta(), p.current_radius);
      for (std::size_t k = 0; k < p.steps.size(); ++k) {
        const Ellipse& e = p.steps[k];
        const double rad = k < p.radius.size() ? p.radius[k] : 0.0;
        predictions.add(r.t, p.label, static_cast<int>(k + 1), e.cx(), e.cy(), e.a(), e.b(), e.theta(), rad);
      }
    }
    for (const AuditSample& a : r.audit) barrier.add(r.t, a.id, a.h);
    solver.add(r.t, to_string(r.status), r.iterations, r.cost, r.min_residual, r.slack);
    timing.add(r.t, r.solve_ms, r.tick_ms);
  }

  write_atomic(dir / "run.ndjson", ndjson_log(s, run));
  write_atomic(dir / "robot.csv", robot.str());
  write_atomic(dir / "obstacles.csv", obstacles.str());
  write_atomic(dir / "ellipses.csv", ellipses.str());
  write_atomic(dir / "predictions.csv", predictions.str());
  write_atomic(dir / "barrier.csv", barrier.str());
  write_atomic(dir / "solver.csv", solver.str());
  write_atomic(dir / "timing.csv", timing.str());
  write_atomic(dir / "metrics.csv", metrics_csv(run));
  write_atomic(dir / "metrics.json", metrics_json(run).dump(2) + "\n");
  write_atomic(dir / "metrics.txt", metrics_text(run));
}

/// One row of a comparison table: metrics averaged over the seeds that ran.
struct CompareRow {
  PlannerKind kind = PlannerKind::kMpcDcbf;
  int runs = 0;
  int collisions = 0;
  int timeouts = 0;
  double min_dist = std::numeric_limits<double>::quiet_NaN();
  double cons_time = std::numeric_limits<double>::quiet_NaN();
  double reac_time = std::numeric_limits<double>::quiet_NaN();
  double speed_var = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> failures;  // "seed N: message"

  bool collided_marker() const { return collisions > 0 && min_dist == 0.0; }
};

namespace detail {

/// Mean of the finite values, NaN when there are none.
inline double finite_mean(const std::vector<double>& xs) {
  double sum = 0.0;
  int n = 0;
  for (double x : xs)
    if (std::isfinite(x)) {
      sum += x;
      ++n;
    }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

inline CompareRow aggregate(PlannerKind kind, const std::vector<RunMetrics>& runs, std::vector<std::string> failures,
                            int timeouts = 0) {
  CompareRow row;
  row.kind = kind;
  row.runs = static_cast<int>(runs.size());
  row.timeouts = timeouts;
  row.failures = std::move(failures);
  std::vector<double> md, ct, rt, sv;
  for (const RunMetrics& m : runs) {
    if (m.collided) ++row.collisions;
    md.push_back(m.min_dist);
    ct.push_back(m.cons_time);
    rt.push_back(m.reac_time);
    sv.push_back(m.speed_var);
  }
  row.min_dist = detail::finite_mean(md);
  row.cons_time = detail::finite_mean(ct);
  row.reac_time = detail::finite_mean(rt);
  row.speed_var = detail::finite_mean(sv);
  return row;
}

inline std::string join(const std::vector<std::string>& xs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? std::string(sep) : "") + xs[i];
  return out;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  CsvTable t({"planner", "runs", "min_dist", "cons_time", "reac_time", "speed_var", "collisions", "timeouts",
              "failures"});
  for (const CompareRow& r : rows)
    t.add(to_string(r.kind), r.runs, r.min_dist, r.cons_time, r.reac_time, r.speed_var, r.collisions, r.timeouts,
          join(r.failures, "; "));
  return t.str();
}

inline std::string compare_json(const std::string& scenario, const std::vector<std::uint64_t>& seeds,
                                const std::vector<CompareRow>& rows) {
  ojson j;
  j["scenario"] = scenario;
  j["seeds"] = seeds;
  ojson arr = ojson::array();
  for (const CompareRow& r : rows)
    arr.push_back({{"planner", std::string(to_string(r.kind))},
                   {"runs", r.runs},
                   {"min_dist", detail::num(r.min_dist)},
                   {"cons_time", detail::num(r.cons_time)},
                   {"reac_time", detail::num(r.reac_time)},
                   {"speed_var", detail::num(r.speed_var)},
                   {"collisions", r.collisions},
                   {"timeouts", r.timeouts},
                   {"collided_marker", r.collided_marker()},
                   {"failures", r.failures}});
  j["rows"] = std::move(arr);
  return j.dump(2) + "\n";
}

inline std::string compare_text(const std::vector<CompareRow>& rows) {
  auto cell = [](double v, int prec) {
    if (!std::isfinite(v)) return std::string("-");
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(prec);
    o << v;
    return o.str();
  };
  std::vector<std::vector<std::string>> table{
      {"Method", "Min dist", "Cons time", "Reac time", "Speed var", "Runs", "Notes"}};
  for (const CompareRow& r : rows) {
    std::string note;
    if (r.collisions) note += std::to_string(r.collisions) + " collided";
    if (r.timeouts) note += (note.empty() ? "" : ", ") + std::to_string(r.timeouts) + " timed out";
    if (!r.failures.empty()) note += (note.empty() ? "" : ", ") + std::to_string(r.failures.size()) + " failed";
    table.push_back({std::string(to_string(r.kind)), r.collided_marker() ? "0(collided)" : cell(r.min_dist, 3),
                     cell(r.cons_time, 2), cell(r.reac_time, 3), cell(r.speed_var, 4), std::to_string(r.runs),
                     note});
  }
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - row[c].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  for (const CompareRow& r : rows)
    for (const std::string& f : r.failures) out += std::string(to_string(r.kind)) + ": " + f + "\n";
  return out;
}

}  // namespace dcbf::sim
