#pragma once

// Scenario description and its JSON form. Parsing is strict: unknown keys
// are errors so that typos in files and --set overrides surface early.

#include <dcbf/association.hpp>
#include <dcbf/localmap.hpp>
#include <dcbf/mpc.hpp>
#include <dcbf/tracker.hpp>
#include <dcbf/tracking.hpp>

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dcbf::sim {

using nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct Footprint {
  enum class Kind { kCylinder, kBox };
  Kind kind = Kind::kCylinder;
  double radius = 0.3;                   // cylinder
  Vec2 half_extent = Vec2(0.5, 0.5);     // box
  double yaw = 0.0;                      // box
  double height = 1.0;
};

struct Motion {
  enum class Type { kStatic, kConstantVelocity, kWaypoint, kSinusoidal };
  Type type = Type::kStatic;
  Vec2 start = Vec2::Zero();     // static/constant-velocity position, sinusoid center
  Vec2 velocity = Vec2::Zero();  // constant velocity
  double start_time = 0.0;       // motion begins at this time
  std::vector<Vec2> waypoints;   // waypoint script
  double speed = 1.0;            // waypoint speed, m/s
  bool loop = false;
  Vec2 amplitude = Vec2::Zero(); // sinusoid
  double period = 1.0;
  double phase = 0.0;
};

struct ObstacleSpec {
  std::string id;
  bool dynamic = false;
  Footprint shape;
  Motion motion;
};

struct WorldBounds {
  double x_min = -10.0, x_max = 30.0;
  double y_min = -15.0, y_max = 15.0;
};

struct RobotSpec {
  RobotState start{0.0, 0.0, 0.0};
  Vec2 goal = Vec2(20.0, 0.0);
  double radius = 0.3;
  double speed = 1.0;  // nominal reference speed
};

struct SensorSpec {
  int beams = 360;
  double max_range = 15.0;
  double noise = 0.02;
  double ring_step = 1.0;  // spacing of emitted ground points along each beam, m
};

struct PerceptionSpec {
  LocalMapConfig map;
  TraversabilityThresholds thresholds;
  double dbscan_eps = 0.3;
  int dbscan_min_pts = 3;
  AssociationParams association;
};

struct SimSpec {
  double dt = 0.1;
  double timeout = 60.0;
  double goal_tolerance = 0.5;
  double reaction_threshold = 0.05;  // |u - u_free| marking a reaction
};

struct LogSpec {
  int grid_every = 0;  // dump the elevation grid every n ticks, 0 = never
};

struct Scenario {
  std::string name = "unnamed";
  std::uint64_t seed = 1;
  WorldBounds world;
  RobotSpec robot;
  std::vector<Vec2> reference;  // waypoint polyline
  SensorSpec sensor;
  std::vector<ObstacleSpec> obstacles;
  PerceptionSpec perception;
  TrackerParams tracker;
  CurveFitParams curvefit;
  PlannerParams planner;
  SimSpec sim;
  LogSpec log;

  void validate() const;
};

namespace detail {

/// Object reader that records consumed keys and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void opt(const std::string& key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  void opt_vec2(const std::string& key, Vec2& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    out = to_vec2(j_.at(key), where(key));
  }

  template <int Rows>
  void opt_fixed(const std::string& key, Eigen::Matrix<double, Rows, 1>& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(Rows))
      throw ConfigError(where(key) + ": expected " + std::to_string(Rows) + " numbers");
    for (int i = 0; i < Rows; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(where(key) + ": expected numbers");
      out(i) = v[static_cast<std::size_t>(i)].get<double>();
    }
  }

  const json* child(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }

  static Vec2 to_vec2(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError(where + ": expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

template <int Rows>
inline json fixed_json(const Eigen::Matrix<double, Rows, 1>& v) {
  json a = json::array();
  for (int i = 0; i < Rows; ++i) a.push_back(v(i));
  return a;
}

inline std::string motion_name(Motion::Type t) {
  switch (t) {
    case Motion::Type::kStatic: return "static";
    case Motion::Type::kConstantVelocity: return "constant_velocity";
    case Motion::Type::kWaypoint: return "waypoint";
    case Motion::Type::kSinusoidal: return "sinusoidal";
  }
  return "static";
}

inline std::string inflation_name(InflationMode m) {
  return m == InflationMode::kConservative ? "conservative" : "bounding_equation";
}

inline Footprint read_shape(Reader& r) {
  Footprint f;
  std::string kind = "cylinder";
  r.opt("shape", kind);
  if (kind == "cylinder") {
    f.kind = Footprint::Kind::kCylinder;
  } else if (kind == "box") {
    f.kind = Footprint::Kind::kBox;
  } else {
    throw ConfigError(r.where("shape") + ": expected \"cylinder\" or \"box\"");
  }
  r.opt("radius", f.radius);
  Vec2 size = 2.0 * f.half_extent;
  r.opt_vec2("size", size);
  f.half_extent = 0.5 * size;
  r.opt("yaw", f.yaw);
  r.opt("height", f.height);
  return f;
}

inline json shape_json(const Footprint& f) {
  json j;
  j["shape"] = f.kind == Footprint::Kind::kBox ? "box" : "cylinder";
  j["radius"] = f.radius;
  j["size"] = vec2_json(2.0 * f.half_extent);
  j["yaw"] = f.yaw;
  j["height"] = f.height;
  return j;
}

inline Motion read_motion(const json& j, const std::string& path) {
  Reader r(j, path);
  Motion m;
  std::string type = "constant_velocity";
  r.opt("type", type);
  if (type == "static")
    m.type = Motion::Type::kStatic;
  else if (type == "constant_velocity")
    m.type = Motion::Type::kConstantVelocity;
  else if (type == "waypoint")
    m.type = Motion::Type::kWaypoint;
  else if (type == "sinusoidal")
    m.type = Motion::Type::kSinusoidal;
  else
    throw ConfigError(r.where("type") +
                      ": expected static, constant_velocity, waypoint or sinusoidal");
  r.opt_vec2("start", m.start);
  r.opt_vec2("velocity", m.velocity);
  r.opt("start_time", m.start_time);
  if (const json* w = r.child("waypoints")) {
    if (!w->is_array()) throw ConfigError(r.where("waypoints") + ": expected an array");
    for (std::size_t i = 0; i < w->size(); ++i)
      m.waypoints.push_back(Reader::to_vec2((*w)[i], r.where("waypoints") + "." + std::to_string(i)));
  }
  r.opt("speed", m.speed);
  r.opt("loop", m.loop);
  r.opt_vec2("amplitude", m.amplitude);
  r.opt("period", m.period);
  r.opt("phase", m.phase);
  r.finish();
  return m;
}

inline json motion_json(const Motion& m) {
  json j;
  j["type"] = motion_name(m.type);
  j["start"] = vec2_json(m.start);
  j["velocity"] = vec2_json(m.velocity);
  j["start_time"] = m.start_time;
  json w = json::array();
  for (const Vec2& p : m.waypoints) w.push_back(vec2_json(p));
  j["waypoints"] = w;
  j["speed"] = m.speed;
  j["loop"] = m.loop;
  j["amplitude"] = vec2_json(m.amplitude);
  j["period"] = m.period;
  j["phase"] = m.phase;
  return j;
}

inline void read_planner(const json& j, PlannerParams& p) {
  Reader r(j, "planner");
  r.opt("N", p.N);
  r.opt("dt", p.dt);
  r.opt("gamma_cbf", p.gamma_cbf);
  r.opt("d_safe", p.d_safe);
  r.opt_fixed("weight_P", p.weight_P);
  r.opt_fixed("weight_Q", p.weight_Q);
  r.opt_fixed("weight_R", p.weight_R);
  r.opt_fixed("weight_S", p.weight_S);
  r.opt("v_min", p.v_min);
  r.opt("v_max", p.v_max);
  r.opt("omega_max", p.omega_max);
  r.opt("terminal_radius", p.terminal_radius);
  if (const json* sb = r.child("state_bounds")) {
    if (!sb->is_null()) {
      Reader b(*sb, "planner.state_bounds");
      StateBounds s;
      b.opt("x_min", s.x_min);
      b.opt("x_max", s.x_max);
      b.opt("y_min", s.y_min);
      b.opt("y_max", s.y_max);
      b.finish();
      p.state_bounds = s;
    }
  }
  r.opt("slack_penalty", p.slack_penalty);
  r.opt("terminal_penalty", p.terminal_penalty);
  r.opt("max_iterations", p.max_iterations);
  r.opt("tolerance", p.tolerance);
  r.opt("trust_radius", p.trust_radius);
  r.finish();
}

inline json planner_json(const PlannerParams& p) {
  json j;
  j["N"] = p.N;
  j["dt"] = p.dt;
  j["gamma_cbf"] = p.gamma_cbf;
  j["d_safe"] = p.d_safe;
  j["weight_P"] = fixed_json(p.weight_P);
  j["weight_Q"] = fixed_json(p.weight_Q);
  j["weight_R"] = fixed_json(p.weight_R);
  j["weight_S"] = fixed_json(p.weight_S);
  j["v_min"] = p.v_min;
  j["v_max"] = p.v_max;
  j["omega_max"] = p.omega_max;
  j["terminal_radius"] = p.terminal_radius;
  if (p.state_bounds)
    j["state_bounds"] = {{"x_min", p.state_bounds->x_min},
                         {"x_max", p.state_bounds->x_max},
                         {"y_min", p.state_bounds->y_min},
                         {"y_max", p.state_bounds->y_max}};
  else
    j["state_bounds"] = nullptr;
  j["slack_penalty"] = p.slack_penalty;
  j["terminal_penalty"] = p.terminal_penalty;
  j["max_iterations"] = p.max_iterations;
  j["tolerance"] = p.tolerance;
  j["trust_radius"] = p.trust_radius;
  return j;
}

inline void read_tracker(const json& j, TrackerParams& p) {
  Reader r(j, "tracker");
  r.opt("T", p.T);
  Vec9 q = p.process_noise.diagonal();
  r.opt_fixed("process_noise", q);
  p.process_noise = q.asDiagonal();
  r.opt("r_p_min", p.r_p_min);
  r.opt("r_p_max", p.r_p_max);
  r.opt("r_shape", p.r_shape);
  r.opt("xi_min_crit", p.xi_min_crit);
  r.opt("xi_max_crit", p.xi_max_crit);
  r.opt("kappa", p.kappa);
  r.opt("gamma_pow", p.gamma_pow);
  r.opt("window", p.window);
  r.opt("init_pos_var", p.init_pos_var);
  r.opt("init_vel_var", p.init_vel_var);
  r.opt("init_acc_var", p.init_acc_var);
  r.opt("sigma_scale", p.sigma_scale);
  r.opt("axis_floor", p.axis_floor);
  std::string mode = inflation_name(p.inflation);
  r.opt("inflation", mode);
  if (mode == "bounding_equation")
    p.inflation = InflationMode::kBoundingEquation;
  else if (mode == "conservative")
    p.inflation = InflationMode::kConservative;
  else
    throw ConfigError("tracker.inflation: expected bounding_equation or conservative");
  r.finish();
}

inline json tracker_json(const TrackerParams& p) {
  json j;
  j["T"] = p.T;
  j["process_noise"] = fixed_json<9>(p.process_noise.diagonal());
  j["r_p_min"] = p.r_p_min;
  j["r_p_max"] = p.r_p_max;
  j["r_shape"] = p.r_shape;
  j["xi_min_crit"] = p.xi_min_crit;
  j["xi_max_crit"] = p.xi_max_crit;
  j["kappa"] = p.kappa;
  j["gamma_pow"] = p.gamma_pow;
  j["window"] = p.window;
  j["init_pos_var"] = p.init_pos_var;
  j["init_vel_var"] = p.init_vel_var;
  j["init_acc_var"] = p.init_acc_var;
  j["sigma_scale"] = p.sigma_scale;
  j["axis_floor"] = p.axis_floor;
  j["inflation"] = inflation_name(p.inflation);
  return j;
}

}  // namespace detail

inline Scenario scenario_from_json(const json& j) {
  using detail::Reader;
  Scenario s;
  Reader r(j, "");
  r.opt("name", s.name);
  r.opt("seed", s.seed);

  if (const json* w = r.child("world")) {
    Reader b(*w, "world");
    b.opt("x_min", s.world.x_min);
    b.opt("x_max", s.world.x_max);
    b.opt("y_min", s.world.y_min);
    b.opt("y_max", s.world.y_max);
    b.finish();
  }
  if (const json* rb = r.child("robot")) {
    Reader b(*rb, "robot");
    Vec3 start(s.robot.start.x, s.robot.start.y, s.robot.start.heading);
    b.opt_fixed("start", start);
    s.robot.start = RobotState(start.x(), start.y(), start.z());
    b.opt_vec2("goal", s.robot.goal);
    b.opt("radius", s.robot.radius);
    b.opt("speed", s.robot.speed);
    b.finish();
  }
  if (const json* ref = r.child("reference")) {
    if (!ref->is_array()) throw ConfigError("reference: expected an array of [x, y]");
    for (std::size_t i = 0; i < ref->size(); ++i)
      s.reference.push_back(Reader::to_vec2((*ref)[i], "reference." + std::to_string(i)));
  }
  if (const json* se = r.child("sensor")) {
    Reader b(*se, "sensor");
    b.opt("beams", s.sensor.beams);
    b.opt("max_range", s.sensor.max_range);
    b.opt("noise", s.sensor.noise);
    b.opt("ring_step", s.sensor.ring_step);
    b.finish();
  }
  if (const json* obs = r.child("obstacles")) {
    if (!obs->is_array()) throw ConfigError("obstacles: expected an array");
    for (std::size_t i = 0; i < obs->size(); ++i) {
      const std::string path = "obstacles." + std::to_string(i);
      Reader b((*obs)[i], path);
      ObstacleSpec o;
      o.id = "obs" + std::to_string(i);
      b.opt("id", o.id);
      o.shape = detail::read_shape(b);
      if (const json* m = b.child("motion")) o.motion = detail::read_motion(*m, path + ".motion");
      b.finish();
      o.dynamic = o.motion.type != Motion::Type::kStatic;
      s.obstacles.push_back(std::move(o));
    }
  }
  if (const json* pc = r.child("perception")) {
    Reader b(*pc, "perception");
    b.opt("size_x", s.perception.map.size_x);
    b.opt("size_y", s.perception.map.size_y);
    b.opt("resolution", s.perception.map.resolution);
    b.opt("ground_z", s.perception.map.ground_z);
    b.opt("z_min", s.perception.map.z_min);
    b.opt("z_max", s.perception.map.z_max);
    b.opt("s_max", s.perception.thresholds.s_max);
    b.opt("l_max", s.perception.thresholds.l_max);
    b.opt("h_max", s.perception.thresholds.h_max);
    b.opt("dbscan_eps", s.perception.dbscan_eps);
    b.opt("dbscan_min_pts", s.perception.dbscan_min_pts);
    b.opt("d_max", s.perception.association.d_max);
    b.opt("retire_after", s.perception.association.retire_after);
    b.finish();
  }
  if (const json* t = r.child("tracker")) detail::read_tracker(*t, s.tracker);
  if (const json* c = r.child("curvefit")) {
    Reader b(*c, "curvefit");
    b.opt("degree", s.curvefit.degree);
    b.opt("window", s.curvefit.window);
    b.finish();
  }
  if (const json* p = r.child("planner")) detail::read_planner(*p, s.planner);
  if (const json* sm = r.child("sim")) {
    Reader b(*sm, "sim");
    b.opt("dt", s.sim.dt);
    b.opt("timeout", s.sim.timeout);
    b.opt("goal_tolerance", s.sim.goal_tolerance);
    b.opt("reaction_threshold", s.sim.reaction_threshold);
    b.finish();
  }
  if (const json* lg = r.child("log")) {
    Reader b(*lg, "log");
    b.opt("grid_every", s.log.grid_every);
    b.finish();
  }
  r.finish();
  if (s.reference.empty()) s.reference = {s.robot.start.position(), s.robot.goal};
  s.validate();
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  using detail::vec2_json;
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["world"] = {{"x_min", s.world.x_min}, {"x_max", s.world.x_max},
                {"y_min", s.world.y_min}, {"y_max", s.world.y_max}};
  j["robot"] = {{"start", json::array({s.robot.start.x, s.robot.start.y, s.robot.start.heading})},
                {"goal", vec2_json(s.robot.goal)},
                {"radius", s.robot.radius},
                {"speed", s.robot.speed}};
  json ref = json::array();
  for (const Vec2& p : s.reference) ref.push_back(vec2_json(p));
  j["reference"] = ref;
  j["sensor"] = {{"beams", s.sensor.beams},
                 {"max_range", s.sensor.max_range},
                 {"noise", s.sensor.noise},
                 {"ring_step", s.sensor.ring_step}};
  json obs = json::array();
  for (const ObstacleSpec& o : s.obstacles) {
    json oj = detail::shape_json(o.shape);
    oj["id"] = o.id;
    oj["motion"] = detail::motion_json(o.motion);
    obs.push_back(oj);
  }
  j["obstacles"] = obs;
  const PerceptionSpec& pc = s.perception;
  j["perception"] = {{"size_x", pc.map.size_x},
                     {"size_y", pc.map.size_y},
                     {"resolution", pc.map.resolution},
                     {"ground_z", pc.map.ground_z},
                     {"z_min", pc.map.z_min},
                     {"z_max", pc.map.z_max},
                     {"s_max", pc.thresholds.s_max},
                     {"l_max", pc.thresholds.l_max},
                     {"h_max", pc.thresholds.h_max},
                     {"dbscan_eps", pc.dbscan_eps},
                     {"dbscan_min_pts", pc.dbscan_min_pts},
                     {"d_max", pc.association.d_max},
                     {"retire_after", pc.association.retire_after}};
  j["tracker"] = detail::tracker_json(s.tracker);
  j["curvefit"] = {{"degree", s.curvefit.degree}, {"window", s.curvefit.window}};
  j["planner"] = detail::planner_json(s.planner);
  j["sim"] = {{"dt", s.sim.dt},
              {"timeout", s.sim.timeout},
              {"goal_tolerance", s.sim.goal_tolerance},
              {"reaction_threshold", s.sim.reaction_threshold}};
  j["log"] = {{"grid_every", s.log.grid_every}};
  return j;
}

inline void Scenario::validate() const {
  auto inside = [&](const Vec2& p) {
    return p.x() >= world.x_min && p.x() <= world.x_max && p.y() >= world.y_min &&
           p.y() <= world.y_max;
  };
  if (!(world.x_min < world.x_max && world.y_min < world.y_max))
    throw ConfigError("world: empty bounds");
  if (!inside(robot.start.position())) throw ConfigError("robot.start: outside world bounds");
  if (!inside(robot.goal)) throw ConfigError("robot.goal: outside world bounds");
  if (!(robot.radius > 0.0)) throw ConfigError("robot.radius: must be positive");
  if (!(robot.speed > 0.0)) throw ConfigError("robot.speed: must be positive");
  if (reference.size() < 2) throw ConfigError("reference: need at least two waypoints");
  if (sensor.beams < 1) throw ConfigError("sensor.beams: must be >= 1");
  if (!(sensor.max_range > 0.0)) throw ConfigError("sensor.max_range: must be positive");
  if (!(sensor.noise >= 0.0)) throw ConfigError("sensor.noise: must be >= 0");
  if (!(sensor.ring_step > 0.0)) throw ConfigError("sensor.ring_step: must be positive");
  std::set<std::string> ids;
  for (const ObstacleSpec& o : obstacles) {
    if (!ids.insert(o.id).second) throw ConfigError("obstacles: duplicate id " + o.id);
    if (o.shape.kind == Footprint::Kind::kCylinder && !(o.shape.radius > 0.0))
      throw ConfigError("obstacles." + o.id + ": radius must be positive");
    if (o.shape.kind == Footprint::Kind::kBox && !(o.shape.half_extent.minCoeff() > 0.0))
      throw ConfigError("obstacles." + o.id + ": size must be positive");
    if (!(o.motion.speed >= 0.0)) throw ConfigError("obstacles." + o.id + ": speed must be >= 0");
    if (o.motion.type == Motion::Type::kWaypoint && o.motion.waypoints.empty())
      throw ConfigError("obstacles." + o.id + ": waypoint motion needs waypoints");
    if (o.motion.type == Motion::Type::kSinusoidal && !(o.motion.period > 0.0))
      throw ConfigError("obstacles." + o.id + ": period must be positive");
  }
  if (!(perception.map.resolution > 0.0)) throw ConfigError("perception.resolution: must be positive");
  if (!(perception.map.size_x > 0.0 && perception.map.size_y > 0.0))
    throw ConfigError("perception.size: must be positive");
  if (!(perception.dbscan_eps > 0.0)) throw ConfigError("perception.dbscan_eps: must be positive");
  if (perception.dbscan_min_pts < 1) throw ConfigError("perception.dbscan_min_pts: must be >= 1");
  if (!(perception.association.d_max > 0.0)) throw ConfigError("perception.d_max: must be positive");
  if (perception.association.retire_after < 1)
    throw ConfigError("perception.retire_after: must be >= 1");
  if (curvefit.degree < 0 || curvefit.window < 1) throw ConfigError("curvefit: invalid degree/window");
  if (!(sim.dt > 0.0) || !(sim.timeout > 0.0)) throw ConfigError("sim: dt and timeout must be positive");
  if (log.grid_every < 0) throw ConfigError("log.grid_every: must be >= 0");
  try {
    tracker.validate();
    planner.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

/// 1-based line and column of a byte offset in text.
inline std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based position of the offending character.
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    const auto pos = msg.find("parse error");
    if (pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

/// Sets a dot-keyed path in a JSON document. Numeric segments index arrays.
/// The value is parsed as JSON when possible and kept as a string otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream ss(key);
  std::string seg, walked;
  std::vector<std::string> segs;
  while (std::getline(ss, seg, '.')) segs.push_back(seg);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string& s = segs[i];
    walked += (walked.empty() ? "" : ".") + s;
    const bool last = i + 1 == segs.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = static_cast<std::size_t>(std::stoul(s));
      } catch (const std::exception&) {
        throw ConfigError("override '" + key + "': '" + walked + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + key + "': index out of range");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!node->contains(s)) throw ConfigError("override '" + key + "': unknown key " + walked);
      node = &(*node)[s];
    } else {
      throw ConfigError("override '" + key + "': '" + walked + "' has no children");
    }
    if (last) *node = value;
  }
}

inline Scenario parse_scenario(const std::string& text, const std::string& source = "<string>",
                               const std::vector<std::string>& overrides = {}) {
  json doc = parse_json_text(text, source);
  Scenario s = scenario_from_json(doc);
  if (overrides.empty()) return s;
  // Overrides act on the fully materialized document, so every key exists.
  json full = scenario_to_json(s);
  for (const std::string& o : overrides) apply_override(full, o);
  return scenario_from_json(full);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides = {}) {
  return parse_scenario(read_file(path), path, overrides);
}

}  // namespace dcbf::sim
