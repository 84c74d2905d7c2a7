#pragma once

#include <map>
#include <string>

#include "vbcap/model.hpp"
#include "vbcap/simulate.hpp"

namespace vbcap {

// Parsed run configuration: load class, battery under test, simulator knobs.
struct RunConfig {
  LoadClass lc;
  BatterySpec battery;
  bool battery_set = false;
  SimConfig sim;
};

// Line-oriented `key = value` file with [section] headers. Sections: load
// (energy, window, power_limit), battery (volume, charge_rate,
// discharge_rate), sim (lambda, dt, warmup, policy, mode, seed,
// initial_profile, initial_chi, steer_profile). power_limit accepts
// "unbounded". Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

// Canonical echo of every resolved parameter, keyed `section.key`, values
// formatted exactly as the CSV writers format them.
std::map<std::string, std::string> config_echo(const RunConfig& cfg);

const char* policy_name(PolicyKind p);
const char* mode_name(SimMode m);
const char* profile_name(ProfileKind k);
const char* steer_name(SteerKind k);

PolicyKind parse_policy(const std::string& s);
SimMode parse_mode(const std::string& s);
ProfileKind parse_profile(const std::string& s);
SteerKind parse_steer(const std::string& s);

}  // namespace vbcap
