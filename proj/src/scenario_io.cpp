#include "mrtele/scenario.hpp"

#include "mrtele/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mrtele::session {

using nlohmann::json;

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Walks one JSON object, remembering which keys were consumed so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string key_path(const std::string& key) const { return join_path(path_, key); }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!node_.contains(key)) throw ConfigError(key_path(key), "required key is missing");
    return node_.at(key);
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? to_number(node_.at(key), key_path(key)) : fallback;
  }

  double required_number(const std::string& key) { return to_number(at(key), key_path(key)); }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    return to_numbers(at(key), key_path(key));
  }

  Eigen::VectorXd vector(const std::string& key) {
    const auto v = numbers(key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  kinematics::Vec3 vec3(const std::string& key) {
    const auto v = numbers(key);
    if (v.size() != 3) throw ConfigError(key_path(key), "expected 3 numbers");
    return {v[0], v[1], v[2]};
  }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!used_.count(item.key())) throw ConfigError(key_path(item.key()), "unknown key");
    }
  }

  static double to_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
  }

  static std::vector<double> to_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(to_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

/// Runs a validate() and re-labels its InvalidArgument with a key path.
template <typename F>
void check(const std::string& path, F&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

kinematics::KinematicChain read_chain(const json& node, const std::string& path) {
  Section s(node, path);
  kinematics::KinematicChain chain;
  if (s.has("preset")) {
    const std::string preset = s.string("preset", "");
    if (preset == "exoskeleton") {
      std::vector<double> lengths = {0.28, 0.05, 0.25, 0.07};
      if (s.has("link_lengths_m")) lengths = s.numbers("link_lengths_m");
      check(s.key_path("link_lengths_m"), [&] { chain = kinematics::exoskeleton_chain(lengths); });
    } else if (preset == "slave7") {
      chain = kinematics::default_slave_chain();
    } else {
      throw ConfigError(s.key_path("preset"), "unknown chain preset '" + preset +
                                                  "' (exoskeleton or slave7)");
    }
    if (s.has("name")) chain.name = s.string("name", chain.name);
    s.finish();
    return chain;
  }
  chain.name = s.string("name", "chain");
  const auto& rows = s.at("rows");
  const std::string rows_path = s.key_path("rows");
  if (!rows.is_array() || rows.empty()) throw ConfigError(rows_path, "expected a non-empty array");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Section r(rows[i], rows_path + "[" + std::to_string(i) + "]");
    kinematics::DHRow row;
    row.alpha = r.number("alpha_rad", 0.0);
    row.a = r.number("a_m", 0.0);
    row.d = r.number("d_m", 0.0);
    row.theta_offset = r.number("theta_offset_rad", 0.0);
    require(row.a >= 0.0, r.key_path("a_m"), "must be >= 0");
    kinematics::JointLimit limit;
    if (r.has("limits_rad")) {
      const auto lim = r.numbers("limits_rad");
      require(lim.size() == 2, r.key_path("limits_rad"), "expected [min, max]");
      require(lim[0] < lim[1], r.key_path("limits_rad"), "min must be < max");
      limit = {lim[0], lim[1]};
    }
    r.finish();
    chain.rows.push_back(row);
    chain.limits.push_back(limit);
  }
  s.finish();
  check(path, [&] { chain.validate(); });
  return chain;
}

void read_master(const json& node, MasterConfig& m) {
  Section s(node, "master");
  if (s.has("chain")) m.chain = read_chain(s.at("chain"), s.key_path("chain"));
  if (s.has("initial_q_rad")) m.initial_q = s.vector("initial_q_rad");
  s.finish();
}

void read_ik(const json& node, const std::string& path, kinematics::IkParams& ik) {
  Section s(node, path);
  ik.lambda = s.number("lambda", ik.lambda);
  ik.tol = s.number("tol_m", ik.tol);
  ik.tol_rot = s.number("tol_rot_rad", ik.tol_rot);
  ik.max_iters = static_cast<int>(s.number("max_iters", ik.max_iters));
  require(ik.lambda >= 0.0, s.key_path("lambda"), "must be >= 0");
  require(ik.tol > 0.0, s.key_path("tol_m"), "must be > 0");
  require(ik.tol_rot > 0.0, s.key_path("tol_rot_rad"), "must be > 0");
  require(ik.max_iters > 0, s.key_path("max_iters"), "must be > 0");
  s.finish();
}

void read_slave(const json& node, SlaveConfig& sc) {
  Section s(node, "slave");
  if (s.has("chain")) sc.chain = read_chain(s.at("chain"), s.key_path("chain"));
  if (s.has("home_q_rad")) sc.home_q = s.vector("home_q_rad");
  if (s.has("initial_q_rad")) sc.initial_q = s.vector("initial_q_rad");
  sc.tracker.rate_limit = s.number("rate_limit_rad_s", sc.tracker.rate_limit);
  require(sc.tracker.rate_limit > 0.0, s.key_path("rate_limit_rad_s"), "must be > 0");
  if (s.has("ik")) read_ik(s.at("ik"), s.key_path("ik"), sc.tracker.ik);
  s.finish();
}

void read_map(const json& node, MapConfig& m) {
  Section s(node, "map");
  if (s.has("scale")) {
    const auto& v = s.at("scale");
    if (v.is_number()) {
      m.scale = kinematics::Vec3::Constant(Section::to_number(v, s.key_path("scale")));
    } else {
      m.scale = s.vec3("scale");
    }
    require((m.scale.array() > 0.0).all(), s.key_path("scale"), "components must be > 0");
  }
  if (s.has("master_origin_m")) m.master_origin = s.vec3("master_origin_m");
  if (s.has("slave_origin_m")) m.slave_origin = s.vec3("slave_origin_m");
  s.finish();
}

env::RigidObject read_object(const json& node, const std::string& path) {
  Section s(node, path);
  env::RigidObject o;
  o.center = s.vec3("center_m");
  if (s.has("half_extents_m")) o.half_extents = s.vec3("half_extents_m");
  if (s.has("stiffness")) {
    const std::string label = s.string("stiffness", "custom");
    check(s.key_path("stiffness"), [&] { o.label = env::stiffness_class_from_string(label); });
  }
  if (o.label != env::StiffnessClass::custom) {
    const auto preset = env::stiffness_preset(o.label);
    o.stiffness = preset.stiffness;
    o.damping = preset.damping;
  }
  o.stiffness = s.number("stiffness_n_per_m", o.stiffness);
  o.damping = s.number("damping_ns_per_m", o.damping);
  o.force_cap = s.number("force_cap_n", o.force_cap);
  require(o.stiffness > 0.0, s.key_path("stiffness_n_per_m"), "must be > 0");
  require(o.damping >= 0.0, s.key_path("damping_ns_per_m"), "must be >= 0");
  require(o.force_cap > 0.0, s.key_path("force_cap_n"), "must be > 0");
  s.finish();
  check(path, [&] { o.validate(); });
  return o;
}

void read_reflex(const json& node, const std::string& path, operator_model::Reflex& r) {
  Section s(node, path);
  r.retreat_torque = s.number("retreat_torque_nm", r.retreat_torque);
  if (s.has("retreat_offset_rad")) r.retreat_offset = s.vector("retreat_offset_rad");
  r.reaction_time = s.number("reaction_time_s", r.reaction_time);
  r.retreat_speed = s.number("retreat_speed_rad_s", r.retreat_speed);
  require(r.retreat_torque > 0.0, s.key_path("retreat_torque_nm"), "must be > 0");
  require(r.reaction_time >= 0.0, s.key_path("reaction_time_s"), "must be >= 0");
  require(r.retreat_speed > 0.0, s.key_path("retreat_speed_rad_s"), "must be > 0");
  s.finish();
}

void read_semg(const json& node, const std::string& path, operator_model::SEMGCalibration& cal) {
  Section s(node, path);
  if (s.has("table")) {
    const auto& t = s.at("table");
    const std::string tp = s.key_path("table");
    if (!t.is_array()) throw ConfigError(tp, "expected an array of [torque_nm, semg_uv] pairs");
    cal.table.clear();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto pair = Section::to_numbers(t[i], tp + "[" + std::to_string(i) + "]");
      require(pair.size() == 2, tp + "[" + std::to_string(i) + "]", "expected [torque_nm, semg_uv]");
      cal.table.emplace_back(pair[0], pair[1]);
    }
  }
  cal.intercept = s.number("intercept_uv", cal.intercept);
  cal.slope = s.number("slope_uv_per_nm", cal.slope);
  require(cal.intercept >= 0.0, s.key_path("intercept_uv"), "must be >= 0");
  require(cal.slope > 0.0, s.key_path("slope_uv_per_nm"), "must be > 0");
  s.finish();
  check(path, [&] { cal.validate(); });
}

void read_script(const json& node, ScriptConfig& sc) {
  Section s(node, "script");
  if (s.has("keyframes")) {
    const auto& kf = s.at("keyframes");
    const std::string kp = s.key_path("keyframes");
    if (!kf.is_array() || kf.empty()) throw ConfigError(kp, "expected a non-empty array");
    for (std::size_t i = 0; i < kf.size(); ++i) {
      Section k(kf[i], kp + "[" + std::to_string(i) + "]");
      operator_model::Keyframe frame;
      frame.time = k.required_number("t_s");
      frame.q = k.vector("q_rad");
      k.finish();
      if (i > 0) {
        require(frame.time > sc.trajectory.keyframes.back().time, k.key_path("t_s"),
                "keyframe times must be strictly increasing");
      }
      sc.trajectory.keyframes.push_back(std::move(frame));
    }
    sc.interactive = false;
  }
  sc.interactive = s.boolean("interactive", sc.interactive);
  require(sc.interactive || !sc.trajectory.keyframes.empty(), s.key_path("keyframes"),
          "a non-interactive script needs keyframes");
  if (s.has("reflex")) read_reflex(s.at("reflex"), s.key_path("reflex"), sc.trajectory.reflex);
  sc.model.lock_torque = s.number("lock_torque_nm", sc.model.lock_torque);
  sc.model.max_speed = s.number("max_speed_rad_s", sc.model.max_speed);
  require(sc.model.lock_torque > 0.0, s.key_path("lock_torque_nm"), "must be > 0");
  require(sc.model.max_speed > 0.0, s.key_path("max_speed_rad_s"), "must be > 0");
  if (s.has("semg")) read_semg(s.at("semg"), s.key_path("semg"), sc.semg);
  sc.semg_noise = s.number("semg_noise_uv", sc.semg_noise);
  require(sc.semg_noise >= 0.0, s.key_path("semg_noise_uv"), "must be >= 0");
  s.finish();
}

void read_feedback(const json& node, feedback::FeedbackConfig& f) {
  Section s(node, "feedback");
  f.gain = s.number("gain", f.gain);
  require(f.gain > 0.0, s.key_path("gain"), "must be > 0");
  f.current_limit = s.number("current_limit_a", f.current_limit);
  require(f.current_limit > 0.0, s.key_path("current_limit_a"), "must be > 0");
  f.torque_cap = s.number("torque_cap_nm", f.torque_cap);
  require(f.torque_cap > 0.0, s.key_path("torque_cap_nm"), "must be > 0");
  if (s.has("actuated_joints")) {
    const auto joints = s.numbers("actuated_joints");
    require(!joints.empty(), s.key_path("actuated_joints"), "must not be empty");
    f.actuated_joints.clear();
    for (double j : joints) {
      require(j >= 1.0 && j == std::floor(j), s.key_path("actuated_joints"),
              "joint numbers are 1-based integers");
      f.actuated_joints.push_back(static_cast<int>(j) - 1);
    }
  }
  s.finish();
}

void read_clutch(const json& node, ClutchConfig& c) {
  Section s(node, "clutch");
  if (s.has("hill")) {
    Section h(s.at("hill"), s.key_path("hill"));
    c.hill.v_max = h.number("v_max_nm", c.hill.v_max);
    c.hill.k = h.number("k_a", c.hill.k);
    c.hill.n = h.number("n", c.hill.n);
    h.finish();
    check(h.path(), [&] { c.hill.validate(); });
  }
  if (s.has("spec")) {
    Section p(s.at("spec"), s.key_path("spec"));
    c.spec.idle_torque = p.number("idle_torque_nm", c.spec.idle_torque);
    c.spec.saturation_current = p.number("saturation_current_a", c.spec.saturation_current);
    c.spec.max_torque = p.number("max_torque_nm", c.spec.max_torque);
    c.spec.mass = p.number("mass_kg", c.spec.mass);
    c.spec.volume = p.number("volume_m3", c.spec.volume);
    c.spec.dissipated_power = p.number("power_w", c.spec.dissipated_power);
    p.finish();
    check(p.path(), [&] { c.spec.validate(); });
  }
  if (s.has("dynamics")) {
    Section d(s.at("dynamics"), s.key_path("dynamics"));
    c.dynamics.tau_rise = d.number("tau_rise_s", c.dynamics.tau_rise);
    c.dynamics.tau_fall = d.number("tau_fall_s", c.dynamics.tau_fall);
    c.dynamics.tau_demag = d.number("tau_demag_s", c.dynamics.tau_demag);
    d.finish();
  }
  if (s.has("demag")) {
    Section d(s.at("demag"), s.key_path("demag"));
    c.dynamics.demag.frequency = d.number("frequency_hz", c.dynamics.demag.frequency);
    c.dynamics.demag.envelope_tau = d.number("envelope_tau_s", c.dynamics.demag.envelope_tau);
    c.dynamics.demag.duration = d.number("duration_s", c.dynamics.demag.duration);
    d.finish();
  }
  check(s.path(), [&] { c.dynamics.validate(); });
  s.finish();
}

void read_channel(const json& node, ChannelConfig& c) {
  Section s(node, "channel");
  c.base_delay = s.number("base_delay_s", c.base_delay);
  require(c.base_delay >= 0.0, s.key_path("base_delay_s"), "must be >= 0");
  c.jitter = s.number("jitter_s", c.jitter);
  require(c.jitter >= 0.0, s.key_path("jitter_s"), "must be >= 0");
  c.drop_probability = s.number("drop_probability", c.drop_probability);
  require(c.drop_probability >= 0.0 && c.drop_probability < 1.0, s.key_path("drop_probability"),
          "must be in [0, 1)");
  c.tick_rate = s.number("tick_rate_hz", c.tick_rate);
  require(c.tick_rate > 0.0, s.key_path("tick_rate_hz"), "must be > 0");
  s.finish();
}

void read_run(const json& node, RunConfig& r) {
  Section s(node, "run");
  r.name = s.string("name", r.name);
  r.duration = s.required_number("duration_s");
  require(r.duration > 0.0, s.key_path("duration_s"), "must be > 0");
  if (s.has("seed")) {
    const auto& v = s.at("seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(s.key_path("seed"), "expected a non-negative integer");
    }
    r.seed = v.get<std::uint64_t>();
  }
  if (s.has("report_joint")) {
    const auto& v = s.at("report_joint");
    if (v.is_string() && v.get<std::string>() == "max") {
      r.report_joint = -1;
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 1) {
      r.report_joint = static_cast<int>(v.get<std::int64_t>()) - 1;
    } else {
      throw ConfigError(s.key_path("report_joint"), "expected a 1-based joint number or \"max\"");
    }
  }
  r.sensor_noise = s.number("sensor_noise_n", r.sensor_noise);
  require(r.sensor_noise >= 0.0, s.key_path("sensor_noise_n"), "must be >= 0");
  s.finish();
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json vec3_json(const kinematics::Vec3& v) { return std::vector<double>{v.x(), v.y(), v.z()}; }

json chain_json(const kinematics::KinematicChain& chain) {
  json rows = json::array();
  for (std::size_t i = 0; i < chain.rows.size(); ++i) {
    const auto& r = chain.rows[i];
    rows.push_back({{"alpha_rad", r.alpha},
                    {"a_m", r.a},
                    {"d_m", r.d},
                    {"theta_offset_rad", r.theta_offset},
                    {"limits_rad", {chain.limits[i].min, chain.limits[i].max}}});
  }
  return {{"name", chain.name}, {"rows", rows}};
}

}  // namespace

void Scenario::validate() const {
  check("master.chain", [&] { master.chain.validate(); });
  check("slave.chain", [&] { slave.chain.validate(); });
  const auto mdof = static_cast<Eigen::Index>(master.chain.dof());
  const auto sdof = static_cast<Eigen::Index>(slave.chain.dof());
  require(master.initial_q.size() == 0 || master.initial_q.size() == mdof, "master.initial_q_rad",
          "must have one angle per master joint");
  require(slave.home_q.size() == 0 || slave.home_q.size() == sdof, "slave.home_q_rad",
          "must have one angle per slave joint");
  require(!slave.initial_q || slave.initial_q->size() == sdof, "slave.initial_q_rad",
          "must have one angle per slave joint");
  require(slave.tracker.rate_limit > 0.0, "slave.rate_limit_rad_s", "must be > 0");
  check("map", [&] {
    kinematics::WorkspaceMap m;
    m.scale = map.scale;
    m.validate();
  });
  for (std::size_t i = 0; i < objects.size(); ++i) {
    check("objects[" + std::to_string(i) + "]", [&] { objects[i].validate(); });
  }
  if (!script.interactive) {
    check("script", [&] { script.trajectory.validate(master.chain.dof()); });
  }
  require(script.model.lock_torque > 0.0, "script.lock_torque_nm", "must be > 0");
  require(script.model.max_speed > 0.0, "script.max_speed_rad_s", "must be > 0");
  check("script.semg", [&] { script.semg.validate(); });
  require(script.semg_noise >= 0.0, "script.semg_noise_uv", "must be >= 0");
  require(feedback.gain > 0.0 && std::isfinite(feedback.gain), "feedback.gain", "must be > 0");
  check("feedback", [&] { feedback.validate(clutch.spec, master.chain.dof()); });
  check("clutch.hill", [&] { clutch.hill.validate(); });
  check("clutch.spec", [&] { clutch.spec.validate(); });
  check("clutch.dynamics", [&] { clutch.dynamics.validate(); });
  check("channel", [&] { channel.validate(); });
  require(run.duration > 0.0 && std::isfinite(run.duration), "run.duration_s", "must be > 0");
  require(run.report_joint == -1 ||
              std::find(feedback.actuated_joints.begin(), feedback.actuated_joints.end(),
                        run.report_joint) != feedback.actuated_joints.end(),
          "run.report_joint", "must be an actuated joint");
  require(run.sensor_noise >= 0.0, "run.sensor_noise_n", "must be >= 0");
}

std::size_t Scenario::tick_count() const {
  // Guard against 0.3 * 500 landing a hair under 150.
  return static_cast<std::size_t>(std::floor(run.duration * channel.tick_rate + 1e-9));
}

Scenario parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  Section s(root, "");
  Scenario sc;
  if (s.has("master")) read_master(s.at("master"), sc.master);
  if (s.has("slave")) read_slave(s.at("slave"), sc.slave);
  if (s.has("map")) read_map(s.at("map"), sc.map);
  if (s.has("objects")) {
    const auto& objs = s.at("objects");
    if (!objs.is_array()) throw ConfigError("objects", "expected an array");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      sc.objects.push_back(read_object(objs[i], "objects[" + std::to_string(i) + "]"));
    }
  }
  if (s.has("script")) read_script(s.at("script"), sc.script);
  if (s.has("feedback")) read_feedback(s.at("feedback"), sc.feedback);
  if (s.has("clutch")) read_clutch(s.at("clutch"), sc.clutch);
  if (s.has("channel")) read_channel(s.at("channel"), sc.channel);
  if (!s.has("run")) throw ConfigError("run.duration_s", "required key is missing");
  read_run(s.at("run"), sc.run);
  s.finish();
  sc.validate();
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_json(const Scenario& sc, int indent) {
  nlohmann::ordered_json j;
  j["master"] = {{"chain", chain_json(sc.master.chain)}};
  if (sc.master.initial_q.size() > 0) j["master"]["initial_q_rad"] = vec_json(sc.master.initial_q);

  j["slave"] = {{"chain", chain_json(sc.slave.chain)},
                {"rate_limit_rad_s", sc.slave.tracker.rate_limit},
                {"ik",
                 {{"lambda", sc.slave.tracker.ik.lambda},
                  {"tol_m", sc.slave.tracker.ik.tol},
                  {"tol_rot_rad", sc.slave.tracker.ik.tol_rot},
                  {"max_iters", sc.slave.tracker.ik.max_iters}}}};
  if (sc.slave.home_q.size() > 0) j["slave"]["home_q_rad"] = vec_json(sc.slave.home_q);
  if (sc.slave.initial_q) j["slave"]["initial_q_rad"] = vec_json(*sc.slave.initial_q);

  j["map"] = {{"scale", vec3_json(sc.map.scale)}};
  if (sc.map.master_origin) j["map"]["master_origin_m"] = vec3_json(*sc.map.master_origin);
  if (sc.map.slave_origin) j["map"]["slave_origin_m"] = vec3_json(*sc.map.slave_origin);

  j["objects"] = json::array();
  for (const auto& o : sc.objects) {
    nlohmann::ordered_json oj = {{"center_m", vec3_json(o.center)},
                                 {"half_extents_m", vec3_json(o.half_extents)},
                                 {"stiffness", env::to_string(o.label)},
                                 {"stiffness_n_per_m", o.stiffness},
                                 {"damping_ns_per_m", o.damping}};
    if (std::isfinite(o.force_cap)) oj["force_cap_n"] = o.force_cap;
    j["objects"].push_back(oj);
  }

  nlohmann::ordered_json script;
  script["interactive"] = sc.script.interactive;
  if (!sc.script.trajectory.keyframes.empty()) {
    script["keyframes"] = json::array();
    for (const auto& k : sc.script.trajectory.keyframes) {
      script["keyframes"].push_back({{"t_s", k.time}, {"q_rad", vec_json(k.q)}});
    }
  }
  const auto& rf = sc.script.trajectory.reflex;
  script["reflex"] = {{"retreat_torque_nm", rf.retreat_torque},
                      {"reaction_time_s", rf.reaction_time},
                      {"retreat_speed_rad_s", rf.retreat_speed}};
  if (rf.retreat_offset.size() > 0) script["reflex"]["retreat_offset_rad"] = vec_json(rf.retreat_offset);
  script["lock_torque_nm"] = sc.script.model.lock_torque;
  script["max_speed_rad_s"] = sc.script.model.max_speed;
  if (sc.script.semg.table.empty()) {
    script["semg"] = {{"intercept_uv", sc.script.semg.intercept},
                      {"slope_uv_per_nm", sc.script.semg.slope}};
  } else {
    json table = json::array();
    for (const auto& [t, v] : sc.script.semg.table) table.push_back({t, v});
    script["semg"] = {{"table", table}};
  }
  script["semg_noise_uv"] = sc.script.semg_noise;
  j["script"] = script;

  std::vector<int> joints;
  for (int a : sc.feedback.actuated_joints) joints.push_back(a + 1);
  j["feedback"] = {{"gain", sc.feedback.gain},
                   {"current_limit_a", sc.feedback.current_limit},
                   {"torque_cap_nm", sc.feedback.torque_cap},
                   {"actuated_joints", joints}};

  const auto& c = sc.clutch;
  j["clutch"] = {{"hill", {{"v_max_nm", c.hill.v_max}, {"k_a", c.hill.k}, {"n", c.hill.n}}},
                 {"spec",
                  {{"idle_torque_nm", c.spec.idle_torque},
                   {"saturation_current_a", c.spec.saturation_current},
                   {"max_torque_nm", c.spec.max_torque},
                   {"mass_kg", c.spec.mass},
                   {"volume_m3", c.spec.volume},
                   {"power_w", c.spec.dissipated_power}}},
                 {"dynamics",
                  {{"tau_rise_s", c.dynamics.tau_rise},
                   {"tau_fall_s", c.dynamics.tau_fall},
                   {"tau_demag_s", c.dynamics.tau_demag}}},
                 {"demag",
                  {{"frequency_hz", c.dynamics.demag.frequency},
                   {"envelope_tau_s", c.dynamics.demag.envelope_tau},
                   {"duration_s", c.dynamics.demag.duration}}}};

  j["channel"] = {{"base_delay_s", sc.channel.base_delay},
                  {"jitter_s", sc.channel.jitter},
                  {"drop_probability", sc.channel.drop_probability},
                  {"tick_rate_hz", sc.channel.tick_rate}};

  j["run"] = {{"name", sc.run.name}, {"duration_s", sc.run.duration}, {"seed", sc.run.seed}};
  if (sc.run.report_joint < 0) {
    j["run"]["report_joint"] = "max";
  } else {
    j["run"]["report_joint"] = sc.run.report_joint + 1;
  }
  j["run"]["sensor_noise_n"] = sc.run.sensor_noise;
  return j.dump(indent);
}

}  // namespace mrtele::session
