#include "vbcap/config.hpp"

#include <cctype>
#include <stdexcept>
#include <string>

#include "vbcap/csv.hpp"

namespace vbcap {

const char* policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::charge_slack_greedy: return "charge_slack_greedy";
    case PolicyKind::discharge_slack_greedy: return "discharge_slack_greedy";
    case PolicyKind::nominal_proportional: return "nominal_proportional";
    case PolicyKind::target_profile: return "target_profile";
  }
  return "?";
}

const char* mode_name(SimMode m) {
  return m == SimMode::strict ? "strict" : "clip";
}

const char* profile_name(ProfileKind k) {
  switch (k) {
    case ProfileKind::nominal: return "nominal";
    case ProfileKind::charge_equalized: return "charge_equalized";
    case ProfileKind::discharge_equalized: return "discharge_equalized";
  }
  return "?";
}

const char* steer_name(SteerKind k) {
  return k == SteerKind::charge ? "charge" : "discharge";
}

PolicyKind parse_policy(const std::string& s) {
  if (s == "charge_slack_greedy") return PolicyKind::charge_slack_greedy;
  if (s == "discharge_slack_greedy") return PolicyKind::discharge_slack_greedy;
  if (s == "nominal_proportional") return PolicyKind::nominal_proportional;
  if (s == "target_profile") return PolicyKind::target_profile;
  throw std::invalid_argument("config: unknown policy '" + s + "'");
}

SimMode parse_mode(const std::string& s) {
  if (s == "strict") return SimMode::strict;
  if (s == "clip") return SimMode::clip;
  throw std::invalid_argument("config: unknown mode '" + s + "'");
}

ProfileKind parse_profile(const std::string& s) {
  if (s == "nominal") return ProfileKind::nominal;
  if (s == "charge_equalized") return ProfileKind::charge_equalized;
  if (s == "discharge_equalized") return ProfileKind::discharge_equalized;
  throw std::invalid_argument("config: unknown initial profile '" + s + "'");
}

SteerKind parse_steer(const std::string& s) {
  if (s == "charge") return SteerKind::charge;
  if (s == "discharge") return SteerKind::discharge;
  throw std::invalid_argument("config: unknown steer profile '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_num(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" +
                                value + "'");
  }
}

std::uint64_t parse_seed(const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed '" + value + "'");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool saw_energy = false, saw_window = false;
  bool saw_volume = false, saw_cr = false, saw_dr = false;
  bool saw_lambda = false, saw_dt = false, saw_warmup = false;

  std::string section;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(
        pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      if (section != "load" && section != "battery" && section != "sim")
        throw std::invalid_argument("config: unknown section [" + section + "]");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value in: " + line);
    const std::string qual = section.empty() ? key : section + "." + key;

    if (section == "load") {
      if (key == "energy") {
        cfg.lc.energy = parse_num(qual, value);
        saw_energy = true;
      } else if (key == "window") {
        cfg.lc.window = parse_num(qual, value);
        saw_window = true;
      } else if (key == "power_limit") {
        cfg.lc.power_limit =
            value == "unbounded" ? kUnbounded : parse_num(qual, value);
      } else {
        throw std::invalid_argument("config: unknown key '" + qual + "'");
      }
    } else if (section == "battery") {
      if (key == "volume") {
        cfg.battery.volume = parse_num(qual, value);
        saw_volume = true;
      } else if (key == "charge_rate") {
        cfg.battery.charge_rate = parse_num(qual, value);
        saw_cr = true;
      } else if (key == "discharge_rate") {
        cfg.battery.discharge_rate = parse_num(qual, value);
        saw_dr = true;
      } else {
        throw std::invalid_argument("config: unknown key '" + qual + "'");
      }
    } else if (section == "sim") {
      if (key == "lambda") {
        cfg.sim.lambda = parse_num(qual, value);
        saw_lambda = true;
      } else if (key == "dt") {
        cfg.sim.dt = parse_num(qual, value);
        saw_dt = true;
      } else if (key == "warmup") {
        cfg.sim.warmup = parse_num(qual, value);
        saw_warmup = true;
      } else if (key == "policy") {
        cfg.sim.policy = parse_policy(value);
      } else if (key == "mode") {
        cfg.sim.mode = parse_mode(value);
      } else if (key == "seed") {
        cfg.sim.seed = parse_seed(value);
      } else if (key == "initial_profile") {
        cfg.sim.initial_profile = parse_profile(value);
      } else if (key == "initial_chi") {
        cfg.sim.initial_chi = parse_num(qual, value);
      } else if (key == "steer_profile") {
        cfg.sim.steer_profile = parse_steer(value);
      } else {
        throw std::invalid_argument("config: unknown key '" + qual + "'");
      }
    } else {
      throw std::invalid_argument("config: key '" + key +
                                  "' appears before any [section]");
    }
  }

  if (!saw_energy || !saw_window)
    throw std::invalid_argument("config: load.energy and load.window are required");
  cfg.lc.validated();

  if (saw_volume || saw_cr || saw_dr) {
    if (!(saw_volume && saw_cr && saw_dr))
      throw std::invalid_argument(
          "config: [battery] needs volume, charge_rate and discharge_rate");
    cfg.battery.validated();
    cfg.battery_set = true;
  }

  // Scale-aware defaults: about a hundred loads in flight, a thousand steps
  // per window, two windows of warm-up.
  if (!saw_lambda) cfg.sim.lambda = 100.0 / cfg.lc.window;
  if (!saw_dt) cfg.sim.dt = cfg.lc.window / 1000.0;
  if (!saw_warmup) cfg.sim.warmup = 2.0 * cfg.lc.window;
  cfg.sim.lc = cfg.lc;
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  return parse_config(read_file(path));
}

std::map<std::string, std::string> config_echo(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  out["load.energy"] = format_double(cfg.lc.energy);
  out["load.window"] = format_double(cfg.lc.window);
  out["load.power_limit"] = cfg.lc.bounded()
                                ? format_double(cfg.lc.power_limit)
                                : std::string("unbounded");
  if (cfg.battery_set) {
    out["battery.volume"] = format_double(cfg.battery.volume);
    out["battery.charge_rate"] = format_double(cfg.battery.charge_rate);
    out["battery.discharge_rate"] = format_double(cfg.battery.discharge_rate);
  }
  out["sim.lambda"] = format_double(cfg.sim.lambda);
  out["sim.dt"] = format_double(cfg.sim.dt);
  out["sim.warmup"] = format_double(cfg.sim.warmup);
  out["sim.policy"] = policy_name(cfg.sim.policy);
  out["sim.mode"] = mode_name(cfg.sim.mode);
  out["sim.seed"] = std::to_string(cfg.sim.seed);
  out["sim.initial_profile"] = profile_name(cfg.sim.initial_profile);
  out["sim.initial_chi"] = format_double(cfg.sim.initial_chi);
  out["sim.steer_profile"] = steer_name(cfg.sim.steer_profile);
  return out;
}

}  // namespace vbcap
