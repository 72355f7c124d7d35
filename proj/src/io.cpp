#include "monoball/io.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>

namespace monoball {

using nlohmann::json;

LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MONOBALL_LOG");
    const std::string v = env ? env : "";
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (level > log_threshold()) return;
  static std::mutex mu;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[monoball " << names[static_cast<int>(level)] << "] " << message << '\n';
}

// ---- frame stream -------------------------------------------------------------

namespace {

json flatten(const Mat3& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double number(const json& j, std::size_t line, const char* what) {
  if (!j.is_number()) parse_fail(line, std::string(what) + " must be a number");
  return j.get<double>();
}

Mat3 read_mat3(const json& j, std::size_t line, const char* what) {
  if (!j.is_array() || j.size() != 9) parse_fail(line, std::string(what) + " must hold 9 numbers");
  Mat3 m;
  for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = number(j[k], line, what);
  return m;
}

std::vector<Vec2> read_pairs(const json& j, std::size_t line, const char* what) {
  std::vector<Vec2> out;
  if (j.is_null()) return out;
  if (!j.is_array()) parse_fail(line, std::string(what) + " must be an array");
  out.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) parse_fail(line, std::string(what) + " entries must be [a, b] pairs");
    out.emplace_back(number(p[0], line, what), number(p[1], line, what));
  }
  return out;
}

json pairs(const std::vector<Vec2>& v) {
  json a = json::array();
  for (const auto& p : v) a.push_back({p.x(), p.y()});
  return a;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

json frame_to_json(const FrameObservations& obs, bool with_calib) {
  json j;
  j["frame"] = obs.frame;
  j["detections"] = pairs(obs.detections);
  j["players"] = pairs(obs.players);
  if (with_calib) {
    const auto& T = obs.calib.translation;
    j["calib"] = {{"K", flatten(obs.calib.intrinsics)},
                  {"R", flatten(obs.calib.rotation)},
                  {"T", {T.x(), T.y(), T.z()}}};
  }
  return j;
}

void FrameStreamWriter::write(const FrameObservations& obs) {
  const bool with_calib = !last_ || !(*last_ == obs.calib);
  out_ << frame_to_json(obs, with_calib).dump() << '\n';
  last_ = obs.calib;
}

std::optional<FrameObservations> FrameStreamReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (blank(text)) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      parse_fail(line_, std::string("malformed JSON (") + e.what() + ")");
    }
    if (!j.is_object()) parse_fail(line_, "record must be a JSON object");
    if (!j.contains("frame") || !j["frame"].is_number_integer()) parse_fail(line_, "missing integer \"frame\"");
    FrameObservations obs;
    obs.frame = j["frame"].get<FrameIndex>();
    if (last_frame_ && obs.frame != *last_frame_ + 1) {
      parse_fail(line_, "frame " + std::to_string(obs.frame) + " does not follow " + std::to_string(*last_frame_));
    }
    obs.detections = read_pairs(j.value("detections", json()), line_, "detections");
    obs.players = read_pairs(j.value("players", json()), line_, "players");
    if (j.contains("calib")) {
      const json& c = j["calib"];
      if (!c.is_object() || !c.contains("K") || !c.contains("R") || !c.contains("T")) {
        parse_fail(line_, "calib needs K, R and T");
      }
      const json& t = c["T"];
      if (!t.is_array() || t.size() != 3) parse_fail(line_, "T must hold 3 numbers");
      Calibration calib{read_mat3(c["K"], line_, "K"), read_mat3(c["R"], line_, "R"),
                        Vec3(number(t[0], line_, "T"), number(t[1], line_, "T"), number(t[2], line_, "T"))};
      try {
        calib.validate();
      } catch (const Error& e) {
        parse_fail(line_, e.what());
      }
      calib_ = calib;
    } else if (!calib_) {
      parse_fail(line_, "first frame must carry calibration");
    }
    obs.calib = *calib_;
    last_frame_ = obs.frame;
    return obs;
  }
  return std::nullopt;
}

std::vector<FrameObservations> read_frame_stream(std::istream& in) {
  FrameStreamReader reader(in);
  std::vector<FrameObservations> out;
  while (auto f = reader.next()) out.push_back(std::move(*f));
  return out;
}

// ---- trajectory output --------------------------------------------------------

std::string trajectory_line(const TrajectoryRecord& r) {
  json j;
  j["frame"] = r.frame;
  j["x"] = r.position.x();
  j["y"] = r.position.y();
  j["z"] = r.position.z();
  j["mode"] = std::string(1, to_char(r.mode));
  j["log_weight"] = r.log_weight;
  j["finalized"] = r.finalized;
  return j.dump();
}

namespace {

Mode read_mode(const json& j, std::size_t line) {
  if (!j.is_string() || j.get<std::string>().size() != 1) parse_fail(line, "mode must be one of J, P, W, O");
  const auto m = mode_from_char(j.get<std::string>()[0]);
  if (!m) parse_fail(line, "mode must be one of J, P, W, O");
  return *m;
}

json parse_object(const std::string& text, std::size_t line) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) parse_fail(line, "record must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    parse_fail(line, std::string("malformed JSON (") + e.what() + ")");
  }
}

const json& field(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) parse_fail(line, std::string("missing \"") + key + "\"");
  return j[key];
}

TrajectoryRecord trajectory_from(const json& j, std::size_t line) {
  TrajectoryRecord r;
  const json& f = field(j, "frame", line);
  if (!f.is_number_integer()) parse_fail(line, "frame must be an integer");
  r.frame = f.get<FrameIndex>();
  r.position = Vec3(number(field(j, "x", line), line, "x"), number(field(j, "y", line), line, "y"),
                    number(field(j, "z", line), line, "z"));
  r.mode = read_mode(field(j, "mode", line), line);
  const json& lw = j.value("log_weight", json(0.0));
  r.log_weight = lw.is_null() ? kNegInf : number(lw, line, "log_weight");
  r.finalized = j.value("finalized", true);
  return r;
}

}  // namespace

TrajectoryRecord parse_trajectory_line(const std::string& line) { return trajectory_from(parse_object(line, 1), 1); }

std::vector<TrajectoryRecord> read_trajectory(std::istream& in) {
  std::vector<TrajectoryRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    out.push_back(trajectory_from(parse_object(text, line), line));
  }
  return out;
}

// ---- ground truth -------------------------------------------------------------

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  std::map<FrameIndex, std::vector<std::string>> events;
  for (const auto& e : truth.events) events[e.frame].push_back(e.kind == EventKind::Kick ? "kick" : "oop");
  for (const auto& f : truth.frames) {
    json j;
    j["frame"] = f.frame;
    j["x"] = f.position.x();
    j["y"] = f.position.y();
    j["z"] = f.position.z();
    j["mode"] = std::string(1, to_char(f.mode));
    j["events"] = json::array();
    if (auto it = events.find(f.frame); it != events.end()) {
      for (const auto& name : it->second) j["events"].push_back(name);
    }
    out << j.dump() << '\n';
  }
}

GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth truth;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json j = parse_object(text, line);
    const TrajectoryRecord r = trajectory_from(j, line);
    truth.frames.push_back({r.frame, r.position, r.mode});
    if (j.contains("events")) {
      if (!j["events"].is_array()) parse_fail(line, "events must be an array");
      for (const auto& e : j["events"]) {
        if (e == "kick") {
          truth.events.push_back({EventKind::Kick, r.frame});
        } else if (e == "oop") {
          truth.events.push_back({EventKind::OutOfPitch, r.frame});
        } else {
          parse_fail(line, "unknown event");
        }
      }
    }
  }
  return truth;
}

// ---- hypotheses -----------------------------------------------------------------

json hypothesis_to_json(const Hypothesis& h) {
  json j;
  j["frame"] = h.frame;
  j["position"] = {h.position.x(), h.position.y(), h.position.z()};
  j["mode"] = std::string(1, to_char(h.mode()));
  j["log_weight"] = h.log_weight;
  j["parent"] = h.parent;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, JumpLatent>) {
          j["velocity"] = {l.velocity.x(), l.velocity.y(), l.velocity.z()};
          j["variance"] = l.variance;
          j["visible"] = l.visible;
        } else if constexpr (std::is_same_v<T, PossessionLatent>) {
          j["player_index"] = l.player_index;
        } else if constexpr (std::is_same_v<T, WaitLatent>) {
          j["kick_frame"] = l.kick_frame;
          j["kicker_position"] = {l.kicker_position.x(), l.kicker_position.y()};
        }
      },
      h.latent);
  return j;
}

Hypothesis hypothesis_from_json(const json& j) {
  try {
    Hypothesis h;
    h.frame = j.at("frame").get<FrameIndex>();
    const auto& p = j.at("position");
    h.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    h.log_weight = j.at("log_weight").get<double>();
    h.parent = j.at("parent").get<std::int32_t>();
    const auto mode = mode_from_char(j.at("mode").get<std::string>().at(0));
    if (!mode) throw Error(ErrorCode::ParseError, "unknown mode");
    switch (*mode) {
      case Mode::J: {
        const auto& v = j.at("velocity");
        h.latent = JumpLatent{Vec3(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()),
                              j.at("variance").get<double>(), j.at("visible").get<bool>()};
        break;
      }
      case Mode::P: h.latent = PossessionLatent{j.at("player_index").get<int>()}; break;
      case Mode::W: {
        const auto& g = j.at("kicker_position");
        h.latent = WaitLatent{j.at("kick_frame").get<FrameIndex>(), Vec2(g.at(0).get<double>(), g.at(1).get<double>())};
        break;
      }
      case Mode::O: h.latent = OutLatent{}; break;
    }
    return h;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("hypothesis: ") + e.what());
  }
}

// ---- configuration ----------------------------------------------------------------

namespace {

struct Key {
  std::function<void(Config&, const json&)> set;
  std::function<json(const Config&)> get;
};

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw Error(ErrorCode::ConfigInvalid, key + " must be a number");
  return v.get<double>();
}

std::uint64_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::ConfigInvalid, key + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::map<std::string, Key> config_keys() {
  std::map<std::string, Key> keys;
  auto real = [&](const std::string& name, auto member) {
    keys[name] = {[=](Config& c, const json& v) { member(c) = as_double(v, name); },
                  [=](const Config& c) { return json(member(const_cast<Config&>(c))); }};
  };
  auto count = [&](const std::string& name, auto member) {
    keys[name] = {[=](Config& c, const json& v) { member(c) = static_cast<std::decay_t<decltype(member(c))>>(as_count(v, name)); },
                  [=](const Config& c) { return json(member(const_cast<Config&>(c))); }};
  };
  auto flag = [&](const std::string& name, auto member) {
    keys[name] = {[=](Config& c, const json& v) {
                    if (!v.is_boolean()) throw Error(ErrorCode::ConfigInvalid, name + " must be a boolean");
                    member(c) = v.get<bool>();
                  },
                  [=](const Config& c) { return json(member(const_cast<Config&>(c))); }};
  };

  real("model.possession_threshold", [](Config& c) -> double& { return c.model.possession_threshold; });
  real("model.sigma_v", [](Config& c) -> double& { return c.model.sigma_v; });
  real("model.sigma_g", [](Config& c) -> double& { return c.model.sigma_g; });
  real("model.logp_invisible", [](Config& c) -> double& { return c.model.logp_invisible; });
  real("model.ray_step", [](Config& c) -> double& { return c.model.ray_step; });
  real("model.fps", [](Config& c) -> double& { return c.model.fps; });
  real("model.logp_clutter", [](Config& c) -> double& { return c.model.logp_clutter; });
  real("model.logp_distant_possession", [](Config& c) -> double& { return c.model.logp_distant_possession; });
  real("model.max_kick_speed", [](Config& c) -> double& { return c.model.max_kick_speed; });
  flag("model.wait_prior", [](Config& c) -> bool& { return c.model.wait_prior; });
  count("model.beam_width", [](Config& c) -> std::size_t& { return c.model.beam_width; });
  count("model.lag", [](Config& c) -> std::size_t& { return c.model.lag; });
  count("model.mode_reserve", [](Config& c) -> std::size_t& { return c.model.mode_reserve; });

  // Shared by the filter and the simulator.
  auto physics = [&](const std::string& name, double PhysicsParams::*field) {
    keys["physics." + name] = {[=](Config& c, const json& v) {
                                 c.model.physics.*field = as_double(v, "physics." + name);
                                 c.sim.physics.*field = c.model.physics.*field;
                               },
                               [=](const Config& c) { return json(c.model.physics.*field); }};
  };
  physics("gravity", &PhysicsParams::gravity);
  physics("restitution", &PhysicsParams::restitution);
  physics("ground_friction", &PhysicsParams::ground_friction);
  physics("ball_radius", &PhysicsParams::ball_radius);
  physics("settle_speed", &PhysicsParams::settle_speed);
  auto pitch = [&](const std::string& name, double PitchGeometry::*field) {
    keys["pitch." + name] = {[=](Config& c, const json& v) {
                               c.model.pitch.*field = as_double(v, "pitch." + name);
                               c.sim.pitch.*field = c.model.pitch.*field;
                             },
                             [=](const Config& c) { return json(c.model.pitch.*field); }};
  };
  pitch("length", &PitchGeometry::length);
  pitch("width", &PitchGeometry::width);

  count("sim.seed", [](Config& c) -> std::uint64_t& { return c.sim.seed; });
  count("sim.duration", [](Config& c) -> std::size_t& { return c.sim.duration; });
  count("sim.n_players", [](Config& c) -> std::size_t& { return c.sim.n_players; });
  count("sim.max_wait_frames", [](Config& c) -> std::size_t& { return c.sim.max_wait_frames; });
  real("sim.fps", [](Config& c) -> double& { return c.sim.fps; });
  real("sim.occlusion_prob", [](Config& c) -> double& { return c.sim.occlusion_prob; });
  real("sim.pixel_noise_sigma", [](Config& c) -> double& { return c.sim.pixel_noise_sigma; });
  real("sim.kick_rate", [](Config& c) -> double& { return c.sim.kick_rate; });
  real("sim.possession_dwell", [](Config& c) -> double& { return c.sim.possession_dwell; });
  real("sim.out_of_play_prob", [](Config& c) -> double& { return c.sim.out_of_play_prob; });
  real("sim.false_positive_rate", [](Config& c) -> double& { return c.sim.false_positive_rate; });
  real("sim.capture_radius", [](Config& c) -> double& { return c.sim.capture_radius; });
  real("sim.image_width", [](Config& c) -> double& { return c.sim.image_width; });
  real("sim.image_height", [](Config& c) -> double& { return c.sim.image_height; });
  real("sim.player_speed", [](Config& c) -> double& { return c.sim.player_speed; });
  flag("sim.player_occlusion", [](Config& c) -> bool& { return c.sim.player_occlusion; });

  keys["sim.camera.K"] = {[](Config& c, const json& v) { c.sim.calib.intrinsics = read_mat3(v, 0, "sim.camera.K"); },
                          [](const Config& c) { return flatten(c.sim.calib.intrinsics); }};
  keys["sim.camera.R"] = {[](Config& c, const json& v) { c.sim.calib.rotation = read_mat3(v, 0, "sim.camera.R"); },
                          [](const Config& c) { return flatten(c.sim.calib.rotation); }};
  keys["sim.camera.T"] = {[](Config& c, const json& v) {
                            if (!v.is_array() || v.size() != 3) {
                              throw Error(ErrorCode::ConfigInvalid, "sim.camera.T must hold 3 numbers");
                            }
                            for (int k = 0; k < 3; ++k) c.sim.calib.translation[k] = as_double(v[k], "sim.camera.T");
                          },
                          [](const Config& c) {
                            const auto& t = c.sim.calib.translation;
                            return json{t.x(), t.y(), t.z()};
                          }};
  return keys;
}

std::string transition_key(Mode from, Mode to) {
  return std::string("model.transition.") + to_char(from) + to_char(to);
}

}  // namespace

Config parse_config(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  Config c;
  const auto keys = config_keys();
  std::array<std::array<double, 4>, 4> prob{};
  for (Mode a : kAllModes)
    for (Mode b : kAllModes) prob[index(a)][index(b)] = edge_allowed(a, b) ? std::exp(c.model.transition(a, b)) : 0.0;
  bool custom_transition = false;
  for (const auto& [key, value] : j.items()) {
    if (auto it = keys.find(key); it != keys.end()) {
      try {
        it->second.set(c, value);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::ConfigInvalid, key + ": malformed value");
        throw;
      }
      continue;
    }
    bool matched = false;
    for (Mode a : kAllModes) {
      for (Mode b : kAllModes) {
        if (key == transition_key(a, b)) {
          prob[index(a)][index(b)] = as_double(value, key);
          custom_transition = matched = true;
        }
      }
    }
    if (!matched) throw Error(ErrorCode::ConfigInvalid, "unknown config key \"" + key + "\"");
  }
  if (custom_transition) c.model.transition = transition_from_probabilities(prob);
  validate(c.model);
  validate(c.sim);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot open config " + path);
  try {
    return parse_config(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }
}

json config_to_json(const Config& config) {
  json j = json::object();
  for (const auto& [key, k] : config_keys()) j[key] = k.get(config);
  for (Mode a : kAllModes) {
    for (Mode b : kAllModes) {
      if (edge_allowed(a, b)) j[transition_key(a, b)] = std::exp(config.model.transition(a, b));
    }
  }
  return j;
}

}  // namespace monoball
