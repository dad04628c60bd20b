#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dynmarker/errors.hpp"
#include "dynmarker/sim_engine.hpp"

namespace dynmarker {

namespace detail {

using nlohmann::json;

// Reads one JSON object, remembering which keys were used so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(key_path(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  std::optional<Section> child(const std::string& key) {
    if (const json* v = get(key)) return Section(*v, key_path(key));
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline void read_noise(Section s, NoiseProfile& n) {
  s.number("sigma_at_1m", n.sigma_at_1m);
  s.number("range_exponent", n.range_exponent);
  s.finish();
}

inline void read_family(Section s, MarkerFamily& f) {
  s.number("max_detection_range", f.max_detection_range);
  s.number("min_pixel_footprint", f.min_pixel_footprint);
  s.boolean("yields_yaw", f.yields_yaw);
  if (auto n = s.child("position_noise")) read_noise(*n, f.position_noise);
  if (const json* y = s.get("yaw_noise")) {
    if (y->is_null()) {
      f.yaw_noise.reset();
    } else {
      NoiseProfile n = f.yaw_noise.value_or(NoiseProfile{});
      read_noise(Section(*y, s.key_path("yaw_noise")), n);
      f.yaw_noise = n;
    }
  }
  if (!f.yields_yaw) {
    if (f.yaw_noise && s.has("yaw_noise")) throw ConfigError(s.key_path("yaw_noise"), "family has no yaw");
    f.yaw_noise.reset();
  }
  s.finish();
}

inline void read_delay(Section& parent, const std::string& key, Delay& d) {
  const json* v = parent.get(key);
  if (!v) return;
  const std::string path = parent.key_path(key);
  if (v->is_number()) {
    d = Delay::constant(v->get<double>());
    return;
  }
  Section s(*v, path);
  if (const json* c = s.get("constant")) {
    if (!c->is_number()) throw ConfigError(path + ".constant", "expected a number");
    d = Delay::constant(c->get<double>());
  } else if (const json* u = s.get("uniform")) {
    if (!u->is_array() || u->size() != 2 || !(*u)[0].is_number() || !(*u)[1].is_number()) {
      throw ConfigError(path + ".uniform", "expected [min, max]");
    }
    d = Delay::uniform((*u)[0].get<double>(), (*u)[1].get<double>());
  } else {
    throw ConfigError(path, "expected a number, {\"constant\": v} or {\"uniform\": [min, max]}");
  }
  s.finish();
}

inline Eq3Variant parse_eq3_variant(const std::string& s, const std::string& path) {
  if (s == "consistent") return Eq3Variant::Consistent;
  if (s == "verbatim") return Eq3Variant::Verbatim;
  throw ConfigError(path, "expected consistent or verbatim, got '" + s + "'");
}

inline TimingScheme parse_scheme(const std::string& s, const std::string& path) {
  if (s == "safe") return TimingScheme::Safe;
  if (s == "optimized") return TimingScheme::Optimized;
  throw ConfigError(path, "expected safe or optimized, got '" + s + "'");
}

inline Strategy parse_strategy(const std::string& s, const std::string& path) {
  if (s == "dynamic") return Strategy::Dynamic;
  if (s == "static-full-pose") return Strategy::StaticFullPose;
  if (s == "static-long-range") return Strategy::StaticLongRange;
  throw ConfigError(path, "expected dynamic, static-full-pose or static-long-range, got '" + s + "'");
}

inline std::string string_field(Section& s, const std::string& key, const std::string& fallback) {
  const json* v = s.get(key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(s.key_path(key), "expected a string");
  return v->get<std::string>();
}

}  // namespace detail

/// Builds a scenario from a JSON document. Missing keys keep their
/// defaults, unknown keys are rejected, and the result is validated.
inline ScenarioConfig parse_scenario(const nlohmann::json& doc) {
  using detail::Section;
  ScenarioConfig c;
  Section root(doc, "");

  if (auto s = root.child("camera")) {
    s->number("fx", c.camera.fx);
    s->number("fy", c.camera.fy);
    s->number("cx", c.camera.cx);
    s->number("cy", c.camera.cy);
    s->number("width", c.camera.width);
    s->number("height", c.camera.height);
    s->number("frame_period", c.camera.frame_period);
    s->finish();
  }
  if (auto s = root.child("screen")) {
    s->number("width", c.screen.width);
    s->number("height", c.screen.height);
    s->number("refresh_delay", c.screen.refresh_delay);
    s->finish();
  }
  if (auto s = root.child("families")) {
    if (auto f = s->child("long_range")) detail::read_family(*f, c.families.long_range);
    if (auto f = s->child("full_pose")) detail::read_family(*f, c.families.full_pose);
    s->finish();
  }
  if (auto s = root.child("policy")) {
    s->number("switch_to_full_pose_below", c.policy.switch_to_full_pose_below);
    s->number("switch_to_long_range_above", c.policy.switch_to_long_range_above);
    s->number("scale_fraction", c.policy.scale_fraction);
    s->number("rescale_deadband", c.policy.rescale_deadband);
    s->number("gap_fraction", c.policy.gap_fraction);
    c.policy.eq3_variant = detail::parse_eq3_variant(detail::string_field(*s, "eq3_variant", "consistent"),
                                                     s->key_path("eq3_variant"));
    s->finish();
  }
  if (auto s = root.child("delays")) {
    detail::read_delay(*s, "d_fu", c.delays.d_fu);
    detail::read_delay(*s, "d_ms", c.delays.d_ms);
    detail::read_delay(*s, "d_mu", c.delays.d_mu);
    detail::read_delay(*s, "d_video", c.delays.d_video);
    detail::read_delay(*s, "d_pose", c.delays.d_pose);
    if (const auto* v = s->get("d_safety")) {
      if (v->is_null()) c.delays.d_safety.reset();
      else if (v->is_number()) c.delays.d_safety = v->get<double>();
      else throw ConfigError(s->key_path("d_safety"), "expected a number or null");
    }
    c.scheme = detail::parse_scheme(detail::string_field(*s, "scheme", "safe"), s->key_path("scheme"));
    s->finish();
  }
  if (auto s = root.child("controller")) {
    s->number("lambda", c.servo.lambda);
    s->number("max_linear", c.servo.max_linear);
    s->number("max_angular", c.servo.max_angular);
    s->number("descent_rate", c.servo.descent_rate);
    s->number("command_lag", c.command_lag);
    s->number("target_timeout", c.target_timeout);
    s->number("commit_height", c.commit_height);
    s->finish();
  }
  if (auto s = root.child("initial")) {
    if (const auto* p = s->get("position")) {
      if (!p->is_array() || p->size() != 3 || !(*p)[0].is_number() || !(*p)[1].is_number() || !(*p)[2].is_number()) {
        throw ConfigError(s->key_path("position"), "expected [x, y, z]");
      }
      c.initial_position = Vec3{(*p)[0].get<double>(), (*p)[1].get<double>(), (*p)[2].get<double>()};
    }
    s->number("yaw", c.initial_yaw);
    s->finish();
  }
  if (auto s = root.child("desired")) {
    s->number("height", c.desired_height);
    s->number("yaw", c.desired_yaw);
    s->finish();
  }
  if (auto s = root.child("landing")) {
    if (const auto* v = s->get("trigger_time")) {
      if (v->is_null()) c.landing_trigger_time.reset();
      else if (v->is_number()) c.landing_trigger_time = v->get<double>();
      else throw ConfigError(s->key_path("trigger_time"), "expected a number or null");
    }
    s->finish();
  }
  if (auto s = root.child("sim")) {
    s->unsigned_integer("seed", c.seed);
    s->number("duration", c.duration);
    s->number("tick", c.tick);
    s->number("touchdown_height", c.touchdown_height);
    s->number("bounds", c.bounds);
    c.strategy = detail::parse_strategy(detail::string_field(*s, "strategy", "dynamic"), s->key_path("strategy"));
    s->finish();
  }
  if (auto s = root.child("batch")) {
    s->number("lateral_radius", c.batch_lateral_radius);
    s->number("yaw_range", c.batch_yaw_range);
    s->finish();
  }
  root.finish();

  c.delays.d_frame = c.camera.frame_period;
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError("<scenario>", e.what());
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace dynmarker
