#include "bessim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "bessim/errors.hpp"

namespace bessim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* type_name(const json& j) { return j.type_name(); }

/// Reads one JSON object, tracking which keys were consumed.
class ObjReader {
public:
  ObjReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ValidationError(where() + ": expected object, got " + type_name(j_));
    }
  }

  [[nodiscard]] std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_number(*v, key_path(key));
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) out.reset();
      else out = as_number(*v, key_path(key));
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) out = as_integer<Int>(*v, key_path(key));
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(key_path(key) + ": expected boolean, got " + type_name(*v));
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ValidationError(key_path(key) + ": expected string, got " + type_name(*v));
      out = v->get<std::string>();
    }
  }

  void range(const std::string& key, double& lo, double& hi) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2) {
        throw ValidationError(key_path(key) + ": expected [lo, hi]");
      }
      lo = as_number((*v)[0], key_path(key) + "[0]");
      hi = as_number((*v)[1], key_path(key) + "[1]");
    }
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError(key_path(it.key()) + ": unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path + ": expected number, got " + type_name(v));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(path + ": must be finite");
    return d;
  }

  template <class Int>
  static Int as_integer(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<Int>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d)) return static_cast<Int>(d);
    }
    throw ValidationError(path + ": expected integer, got " + type_name(v));
  }

private:
  [[nodiscard]] std::string where() const { return path_.empty() ? "scenario" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_window(ObjReader& r, ActivationWindow& w) {
  r.number("start_s", w.start_s);
  r.optional_number("stop_s", w.stop_s);
}

DelaySpec read_delay(const json& j, const std::string& path) {
  ObjReader r(j, path);
  DelaySpec d;
  std::string mode = "constant";
  r.string("mode", mode);
  if (mode == "constant") d.mode = DelayMode::constant;
  else if (mode == "uniform") d.mode = DelayMode::uniform;
  else throw ValidationError(path + ".mode: expected constant or uniform");
  r.number("constant_s", d.constant_s);
  r.number("min_s", d.min_s);
  r.number("max_s", d.max_s);
  r.done();
  return d;
}

DropSpec read_drop(const json& j, const std::string& path) {
  ObjReader r(j, path);
  DropSpec d;
  r.number("drop_rate", d.drop_rate);
  r.done();
  return d;
}

FdiSpec read_fdi(const json& j, const std::string& path) {
  ObjReader r(j, path);
  FdiSpec f;
  r.integer("interval", f.interval);
  r.number("offset", f.offset);
  r.range("randomness", f.random_lo, f.random_hi);
  r.optional_number("base", f.base);
  r.number("scale", f.scale);
  r.number("ramp_rate", f.ramp_rate);
  if (const json* p = r.find("pulse"); p && !p->is_null()) {
    ObjReader pr(*p, path + ".pulse");
    PulseSpec ps;
    pr.number("magnitude", ps.magnitude);
    pr.integer("every_n", ps.every_n);
    pr.done();
    f.pulse = ps;
  }
  read_window(r, f.window);
  r.done();
  return f;
}

ReplaySpec read_replay(const json& j, const std::string& path) {
  ObjReader r(j, path);
  ReplaySpec s;
  r.number("start_s", s.start_s);
  r.number("record_duration_s", s.record_duration_s);
  r.number("replay_duration_s", s.replay_duration_s);
  r.done();
  return s;
}

LinkConfig read_link(const json& j, const std::string& path) {
  ObjReader r(j, path);
  LinkConfig c;
  r.string("link_id", c.link_id);
  if (!is_known_link(c.link_id)) {
    throw ValidationError(path + ".link_id: unknown link '" + c.link_id + "' (expected s2c, c2b or b2c-status)");
  }
  const std::string p = "links." + c.link_id;
  r.number("base_latency_s", c.base_latency_s);
  r.boolean("allow_reorder", c.allow_reorder);
  r.boolean("exclusive_mutation", c.exclusive_mutation);
  if (const json* v = r.find("delay"); v && !v->is_null()) c.delay = read_delay(*v, p + ".delay");
  if (const json* v = r.find("drop"); v && !v->is_null()) c.drop = read_drop(*v, p + ".drop");
  if (const json* v = r.find("fdi"); v && !v->is_null()) c.fdi = read_fdi(*v, p + ".fdi");
  if (const json* v = r.find("replay"); v && !v->is_null()) c.replay = read_replay(*v, p + ".replay");
  r.done();
  return c;
}

LoadAlterSpec read_load_alter(const json& j, const std::string& path) {
  ObjReader r(j, path);
  LoadAlterSpec s;
  r.integer("interval", s.interval);
  r.number("offset_mw", s.offset_mw);
  r.range("randomness_mw", s.random_lo, s.random_hi);
  if (const json* v = r.find("follow_battery"); v && !v->is_null()) {
    ObjReader fr(*v, path + ".follow_battery");
    FollowBattery fb;
    std::string mode = "reinforce";
    fr.string("mode", mode);
    if (mode == "reinforce") fb.mode = FollowMode::reinforce;
    else if (mode == "oppose") fb.mode = FollowMode::oppose;
    else throw ValidationError(path + ".follow_battery.mode: expected reinforce or oppose");
    fr.number("magnitude_mw", fb.magnitude_mw);
    fr.done();
    s.follow_battery = fb;
  }
  read_window(r, s.window);
  r.done();
  return s;
}

TriggerRule read_trigger(const json& j, const std::string& path) {
  ObjReader r(j, path);
  TriggerRule t;
  r.string("name", t.name);
  if (const json* c = r.find("condition")) {
    ObjReader cr(*c, path + ".condition");
    cr.string("signal", t.condition.signal);
    cr.optional_number("deviation_from", t.condition.deviation_from);
    cr.string("op", t.condition.op);
    cr.number("value", t.condition.value);
    cr.done();
  } else {
    throw ValidationError(path + ".condition: required");
  }
  if (const json* a = r.find("action")) t.action = *a;
  else throw ValidationError(path + ".action: required");
  std::string mode = "once";
  r.string("mode", mode);
  if (mode == "once") t.mode = TriggerMode::once;
  else if (mode == "latched") t.mode = TriggerMode::latched;
  else if (mode == "continuous") t.mode = TriggerMode::continuous;
  else throw ValidationError(path + ".mode: expected once, latched or continuous");
  r.done();
  return t;
}

ordered_json window_json(const ActivationWindow& w, ordered_json& j) {
  j["start_s"] = w.start_s;
  j["stop_s"] = w.stop_s ? ordered_json(*w.stop_s) : ordered_json(nullptr);
  return j;
}

ordered_json link_json(const LinkConfig& c) {
  ordered_json j;
  j["link_id"] = c.link_id;
  j["base_latency_s"] = c.base_latency_s;
  j["allow_reorder"] = c.allow_reorder;
  j["exclusive_mutation"] = c.exclusive_mutation;
  if (c.delay) {
    ordered_json d;
    d["mode"] = c.delay->mode == DelayMode::constant ? "constant" : "uniform";
    d["constant_s"] = c.delay->constant_s;
    d["min_s"] = c.delay->min_s;
    d["max_s"] = c.delay->max_s;
    j["delay"] = d;
  } else {
    j["delay"] = nullptr;
  }
  j["drop"] = c.drop ? ordered_json{{"drop_rate", c.drop->drop_rate}} : ordered_json(nullptr);
  if (c.fdi) {
    const auto& f = *c.fdi;
    ordered_json d;
    d["interval"] = f.interval;
    d["offset"] = f.offset;
    d["randomness"] = {f.random_lo, f.random_hi};
    d["base"] = f.base ? ordered_json(*f.base) : ordered_json(nullptr);
    d["scale"] = f.scale;
    d["ramp_rate"] = f.ramp_rate;
    if (f.pulse) {
      ordered_json p;
      p["magnitude"] = f.pulse->magnitude;
      p["every_n"] = f.pulse->every_n;
      d["pulse"] = p;
    } else {
      d["pulse"] = nullptr;
    }
    window_json(f.window, d);
    j["fdi"] = d;
  } else {
    j["fdi"] = nullptr;
  }
  if (c.replay) {
    ordered_json d;
    d["start_s"] = c.replay->start_s;
    d["record_duration_s"] = c.replay->record_duration_s;
    d["replay_duration_s"] = c.replay->replay_duration_s;
    j["replay"] = d;
  } else {
    j["replay"] = nullptr;
  }
  return j;
}

ordered_json load_alter_json(const LoadAlterSpec& s) {
  ordered_json j;
  j["interval"] = s.interval;
  j["offset_mw"] = s.offset_mw;
  j["randomness_mw"] = {s.random_lo, s.random_hi};
  if (s.follow_battery) {
    ordered_json f;
    f["mode"] = to_string(s.follow_battery->mode);
    f["magnitude_mw"] = s.follow_battery->magnitude_mw;
    j["follow_battery"] = f;
  } else {
    j["follow_battery"] = nullptr;
  }
  window_json(s.window, j);
  return j;
}

ordered_json trigger_json(const TriggerRule& t) {
  ordered_json j;
  j["name"] = t.name;
  ordered_json c;
  c["signal"] = t.condition.signal;
  c["deviation_from"] =
      t.condition.deviation_from ? ordered_json(*t.condition.deviation_from) : ordered_json(nullptr);
  c["op"] = t.condition.op;
  c["value"] = t.condition.value;
  j["condition"] = c;
  j["action"] = ordered_json::parse(t.action.dump());
  j["mode"] = to_string(t.mode);
  return j;
}

/// Serialized scenario with links as an object keyed by link_id.
json patchable_view(const ScenarioConfig& cfg) {
  json j = json::parse(scenario_to_json(cfg).dump());
  json links = json::object();
  for (const auto& l : j["links"]) links[l["link_id"].get<std::string>()] = l;
  j["links"] = links;
  return j;
}

json links_back_to_array(json j) {
  if (j.contains("links") && j["links"].is_object()) {
    json arr = json::array();
    for (auto& [id, l] : j["links"].items()) {
      if (l.is_null()) continue;
      json copy = l;
      if (copy.is_object() && !copy.contains("link_id")) copy["link_id"] = id;
      arr.push_back(copy);
    }
    j["links"] = arr;
  }
  return j;
}

} // namespace

PidConfig ControllerConfig::pid(const BatterySpec& battery) const {
  PidConfig p;
  p.kp = kp;
  p.ki = ki;
  p.kd = kd;
  p.setpoint_hz = setpoint_hz;
  p.output_limit_mw = output_limit_mw.value_or(battery.power_rating_mw);
  p.max_dt_s = max_dt_s;
  return p;
}

LinkConfig& ScenarioConfig::link(std::string_view id) {
  for (auto& l : links) {
    if (l.link_id == id) return l;
  }
  throw ValidationError("links: no link '" + std::string(id) + "'");
}

const LinkConfig& ScenarioConfig::link(std::string_view id) const {
  return const_cast<ScenarioConfig*>(this)->link(id);
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  for (auto id : {link_ids::s2c, link_ids::c2b, link_ids::b2c_status}) {
    LinkConfig l;
    l.link_id = std::string(id);
    c.links.push_back(l);
  }
  return c;
}

std::string to_string(ConsumptionSource s) { return s == ConsumptionSource::csv ? "csv" : "synthetic"; }

namespace {
ScenarioConfig apply_patch_impl(const ScenarioConfig& cfg, const json& patch, bool check_actions);
}

static ScenarioConfig parse_impl(const json& j, const std::filesystem::path& base_dir, bool check_actions) {
  ScenarioConfig c = default_scenario();
  c.base_dir = base_dir;
  ObjReader r(j, "");
  r.integer("schema_version", c.schema_version);
  if (c.schema_version != kSchemaVersion) {
    throw ValidationError("schema_version: unsupported version " + std::to_string(c.schema_version));
  }
  r.string("name", c.name);
  r.string("description", c.description);
  if (const json* v = r.find("seed")) {
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      throw ValidationError("seed: expected non-negative integer");
    }
    c.seed = v->get<std::uint64_t>();
  }

  if (const json* v = r.find("clock")) {
    ObjReader cr(*v, "clock");
    cr.integer("tick_hz", c.clock.tick_hz);
    cr.number("duration_s", c.clock.duration_s);
    cr.done();
  }

  const json* grid = r.find("grid");
  if (!grid) throw ValidationError("grid.consumption: consumption source is required");
  {
    ObjReader gr(*grid, "grid");
    const json* cons = gr.find("consumption");
    if (!cons) throw ValidationError("grid.consumption: consumption source is required");
    ObjReader cr(*cons, "grid.consumption");
    std::string source;
    cr.string("source", source);
    auto& cc = c.grid.consumption;
    if (source == "synthetic") {
      cc.source = ConsumptionSource::synthetic;
      cr.number("base_mw", cc.base_mw);
      cr.number("drift_mw_per_min", cc.drift_mw_per_min);
      cr.number("noise_mw", cc.noise_mw);
      if (const json* m = cr.find("minutes"); m && !m->is_null()) {
        cc.minutes = ObjReader::as_integer<int>(*m, "grid.consumption.minutes");
      }
    } else if (source == "csv") {
      cc.source = ConsumptionSource::csv;
      cr.string("path", cc.path);
      if (cc.path.empty()) throw ValidationError("grid.consumption.path: required for source csv");
      if (const json* w = cr.find("window"); w && !w->is_null()) {
        if (!w->is_array() || w->size() != 2) throw ValidationError("grid.consumption.window: expected [start, end]");
        cc.window = MinuteWindow{ObjReader::as_integer<int>((*w)[0], "grid.consumption.window[0]"),
                                 ObjReader::as_integer<int>((*w)[1], "grid.consumption.window[1]")};
      }
    } else if (source.empty()) {
      throw ValidationError("grid.consumption.source: required (synthetic or csv)");
    } else {
      throw ValidationError("grid.consumption.source: expected synthetic or csv");
    }
    cr.done();
    gr.number("scale", c.grid.scale);
    gr.number("noise_mw", c.grid.noise_mw);
    gr.number("consumption_floor_mw", c.grid.consumption_floor_mw);
    gr.done();
  }

  if (const json* v = r.find("meter")) {
    ObjReader mr(*v, "meter");
    mr.integer("interval_ticks", c.meter.interval_ticks);
    mr.done();
  }

  if (const json* v = r.find("battery")) {
    ObjReader br(*v, "battery");
    br.number("power_rating_mw", c.battery.spec.power_rating_mw);
    br.number("capacity_mwh", c.battery.spec.capacity_mwh);
    br.number("initial_soc_mwh", c.battery.spec.initial_soc_mwh);
    br.integer("status_interval_ticks", c.battery.status_interval_ticks);
    br.done();
  }

  if (const json* v = r.find("controller")) {
    ObjReader cr(*v, "controller");
    cr.number("kp", c.controller.kp);
    cr.number("ki", c.controller.ki);
    cr.number("kd", c.controller.kd);
    cr.number("setpoint_hz", c.controller.setpoint_hz);
    cr.optional_number("output_limit_mw", c.controller.output_limit_mw);
    cr.number("max_dt_s", c.controller.max_dt_s);
    cr.done();
  }

  if (const json* v = r.find("links")) {
    if (!v->is_array()) throw ValidationError("links: expected array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < v->size(); ++i) {
      LinkConfig l = read_link((*v)[i], "links[" + std::to_string(i) + "]");
      if (!seen.insert(l.link_id).second) throw ValidationError("links." + l.link_id + ": duplicate link");
      c.link(l.link_id) = l;
    }
  }

  if (const json* v = r.find("attacks")) {
    ObjReader ar(*v, "attacks");
    if (const json* la = ar.find("load_alter"); la && !la->is_null()) {
      c.attacks.load_alter = read_load_alter(*la, "attacks.load_alter");
    }
    if (const json* tr = ar.find("triggers"); tr && !tr->is_null()) {
      if (!tr->is_array()) throw ValidationError("attacks.triggers: expected array");
      for (std::size_t i = 0; i < tr->size(); ++i) {
        c.attacks.triggers.push_back(read_trigger((*tr)[i], "attacks.triggers[" + std::to_string(i) + "]"));
      }
    }
    ar.done();
  }

  if (const json* v = r.find("outputs")) {
    ObjReader orr(*v, "outputs");
    orr.string("dir", c.outputs.dir);
    orr.integer("telemetry_decimation", c.outputs.telemetry_decimation);
    orr.done();
  }
  r.done();

  validate_scenario(c);
  for (std::size_t i = 0; check_actions && i < c.attacks.triggers.size(); ++i) {
    try {
      (void)apply_patch_impl(c, c.attacks.triggers[i].action, false);
    } catch (const ValidationError& e) {
      throw ValidationError("attacks.triggers[" + std::to_string(i) + "].action: " + e.what());
    }
  }
  return c;
}

ScenarioConfig parse_scenario(const json& j, const std::filesystem::path& base_dir) {
  return parse_impl(j, base_dir, true);
}

ScenarioConfig parse_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

void validate_scenario(const ScenarioConfig& c) {
  validate_tick_hz(c.clock.tick_hz);
  if (!(c.clock.duration_s > 0.0)) throw ValidationError("clock.duration_s: must be > 0");
  const auto& cc = c.grid.consumption;
  if (cc.source == ConsumptionSource::synthetic) {
    if (!(cc.base_mw > 0.0)) throw ValidationError("grid.consumption.base_mw: must be > 0");
    if (cc.noise_mw < 0.0) throw ValidationError("grid.consumption.noise_mw: must be >= 0");
    if (cc.minutes && *cc.minutes < 2) throw ValidationError("grid.consumption.minutes: must be >= 2");
  } else if (cc.window && cc.window->start_minute > cc.window->end_minute) {
    throw ValidationError("grid.consumption.window: start must be <= end");
  }
  if (!(c.grid.scale > 0.0)) throw ValidationError("grid.scale: must be > 0");
  if (c.grid.noise_mw < 0.0) throw ValidationError("grid.noise_mw: must be >= 0");
  if (!(c.grid.consumption_floor_mw > 0.0)) throw ValidationError("grid.consumption_floor_mw: must be > 0");
  if (c.meter.interval_ticks < 1) throw ValidationError("meter.interval_ticks: must be >= 1");
  c.battery.spec.validate();
  if (c.battery.status_interval_ticks < 1) throw ValidationError("battery.status_interval_ticks: must be >= 1");
  if (c.controller.output_limit_mw && !(*c.controller.output_limit_mw > 0.0)) {
    throw ValidationError("controller.output_limit_mw: must be > 0");
  }
  c.controller.pid(c.battery.spec).validate();
  if (c.links.size() != 3) throw ValidationError("links: expected s2c, c2b and b2c-status");
  for (const auto& l : c.links) l.validate();
  if (c.attacks.load_alter) c.attacks.load_alter->validate("attacks.load_alter");
  for (std::size_t i = 0; i < c.attacks.triggers.size(); ++i) {
    c.attacks.triggers[i].validate("attacks.triggers[" + std::to_string(i) + "]");
  }
  if (c.outputs.telemetry_decimation < 1) throw ValidationError("outputs.telemetry_decimation: must be >= 1");
}

ordered_json scenario_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["description"] = c.description;
  j["seed"] = c.seed;
  j["clock"] = {{"tick_hz", c.clock.tick_hz}, {"duration_s", c.clock.duration_s}};

  ordered_json cons;
  const auto& cc = c.grid.consumption;
  cons["source"] = to_string(cc.source);
  if (cc.source == ConsumptionSource::synthetic) {
    cons["base_mw"] = cc.base_mw;
    cons["drift_mw_per_min"] = cc.drift_mw_per_min;
    cons["noise_mw"] = cc.noise_mw;
    cons["minutes"] = cc.minutes ? ordered_json(*cc.minutes) : ordered_json(nullptr);
  } else {
    cons["path"] = cc.path;
    cons["window"] = cc.window ? ordered_json{cc.window->start_minute, cc.window->end_minute} : ordered_json(nullptr);
  }
  ordered_json grid;
  grid["consumption"] = cons;
  grid["scale"] = c.grid.scale;
  grid["noise_mw"] = c.grid.noise_mw;
  grid["consumption_floor_mw"] = c.grid.consumption_floor_mw;
  j["grid"] = grid;

  j["meter"] = {{"interval_ticks", c.meter.interval_ticks}};
  ordered_json bat;
  bat["power_rating_mw"] = c.battery.spec.power_rating_mw;
  bat["capacity_mwh"] = c.battery.spec.capacity_mwh;
  bat["initial_soc_mwh"] = c.battery.spec.initial_soc_mwh;
  bat["status_interval_ticks"] = c.battery.status_interval_ticks;
  j["battery"] = bat;

  ordered_json ctl;
  ctl["kp"] = c.controller.kp;
  ctl["ki"] = c.controller.ki;
  ctl["kd"] = c.controller.kd;
  ctl["setpoint_hz"] = c.controller.setpoint_hz;
  ctl["output_limit_mw"] =
      c.controller.output_limit_mw ? ordered_json(*c.controller.output_limit_mw) : ordered_json(nullptr);
  ctl["max_dt_s"] = c.controller.max_dt_s;
  j["controller"] = ctl;

  ordered_json links = ordered_json::array();
  for (const auto& l : c.links) links.push_back(link_json(l));
  j["links"] = links;

  ordered_json attacks;
  attacks["load_alter"] = c.attacks.load_alter ? load_alter_json(*c.attacks.load_alter) : ordered_json(nullptr);
  ordered_json triggers = ordered_json::array();
  for (const auto& t : c.attacks.triggers) triggers.push_back(trigger_json(t));
  attacks["triggers"] = triggers;
  j["attacks"] = attacks;

  j["outputs"] = {{"dir", c.outputs.dir}, {"telemetry_decimation", c.outputs.telemetry_decimation}};
  return j;
}

std::string scenario_hash(const ScenarioConfig& cfg) {
  json doc = json::parse(scenario_to_json(cfg).dump());
  doc.erase("outputs"); // where results go does not change the run
  const std::string canonical = doc.dump();
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << fnv1a64(canonical);
  return out.str();
}

json expand_dotted_keys(const json& patch) {
  if (!patch.is_object()) return patch;
  json out = json::object();
  for (const auto& [key, value] : patch.items()) {
    json expanded = expand_dotted_keys(value);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      parts.push_back(key.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    json* node = &out;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      json& next = (*node)[parts[i]];
      if (!next.is_object()) next = json::object();
      node = &next;
    }
    json& leaf = (*node)[parts.back()];
    if (leaf.is_object() && expanded.is_object()) leaf.merge_patch(expanded);
    else leaf = expanded;
  }
  return out;
}

namespace {
ScenarioConfig apply_patch_impl(const ScenarioConfig& cfg, const json& patch, bool check_actions) {
  if (!patch.is_object()) throw ValidationError("patch: expected object");
  const json expanded = expand_dotted_keys(patch);
  json view = patchable_view(cfg);
  if (expanded.contains("links") && expanded["links"].is_object()) {
    for (const auto& [id, _] : expanded["links"].items()) {
      if (!is_known_link(id)) throw ValidationError("links." + id + ": unknown link");
    }
  }
  view.merge_patch(expanded);
  return parse_impl(links_back_to_array(view), cfg.base_dir, check_actions);
}
} // namespace

ScenarioConfig apply_scenario_patch(const ScenarioConfig& cfg, const json& patch) {
  return apply_patch_impl(cfg, patch, true);
}

json patch_for_parameter(const ScenarioConfig& cfg, const std::string& path, const json& value) {
  if (path.empty()) throw ValidationError("parameter path: empty");
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  const json view = patchable_view(cfg);
  const json* node = &view;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (node->is_null()) break; // optional block not configured yet; the reader validates the key
    if (!node->is_object() || !node->contains(parts[i])) {
      throw ValidationError("parameter path '" + path + "': no field '" + parts[i] + "'");
    }
    node = &(*node)[parts[i]];
    if (i + 1 == parts.size() && (node->is_object() || node->is_array())) {
      throw ValidationError("parameter path '" + path + "': not a scalar field");
    }
  }
  json patch = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  return patch;
}

ConsumptionSeries build_consumption(const ScenarioConfig& cfg) {
  const auto& cc = cfg.grid.consumption;
  ConsumptionSeries series;
  if (cc.source == ConsumptionSource::synthetic) {
    const int minutes = cc.minutes.value_or(static_cast<int>(std::ceil(cfg.clock.duration_s / 60.0)) + 1);
    RngStream rng(cfg.seed, streams::consumption_synth);
    series = generate_synthetic_consumption(cc.base_mw, cc.drift_mw_per_min, cc.noise_mw, std::max(minutes, 2), rng);
  } else {
    std::filesystem::path p(cc.path);
    if (p.is_relative() && !cfg.base_dir.empty()) p = cfg.base_dir / p;
    series = load_consumption_csv(p, cfg.grid.scale, cc.window);
  }
  if (series.duration_s() + 1e-9 < cfg.clock.duration_s) {
    throw ValidationError("clock.duration_s: run of " + std::to_string(cfg.clock.duration_s) +
                          " s exceeds the consumption series (" + std::to_string(series.duration_s()) + " s)");
  }
  return series;
}

} // namespace bessim
