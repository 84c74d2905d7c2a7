#include "vbcap/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "vbcap/allocation.hpp"
#include "vbcap/capacity.hpp"
#include "vbcap/config.hpp"
#include "vbcap/csv.hpp"
#include "vbcap/model.hpp"
#include "vbcap/signals.hpp"
#include "vbcap/simulate.hpp"
#include "vbcap/sweep.hpp"
#include "vbcap/version.hpp"

namespace vbcap {
namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out;
  std::string out_dir;
  bool quiet = false;
};

std::string out_directory(const GlobalOpts& g) {
  return g.out_dir.empty() ? std::string(".") : g.out_dir;
}

std::string resolve_out(const GlobalOpts& g, const std::string& def_name) {
  if (!g.out.empty()) return g.out;
  return (std::filesystem::path(out_directory(g)) / def_name).string();
}

void note(const GlobalOpts& g, const std::string& msg) {
  if (!g.quiet) std::cout << msg << "\n";
}

double parse_num(const std::string& value, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number in " + what + ": '" + value + "'");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t c = s.find(',', pos);
    if (c == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, c - pos));
    pos = c + 1;
  }
}

LoadClass parse_load(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 3)
    throw std::invalid_argument("--load expects E,T,P (P may be 'unbounded')");
  LoadClass lc;
  lc.energy = parse_num(parts[0], "--load");
  lc.window = parse_num(parts[1], "--load");
  lc.power_limit =
      parts[2] == "unbounded" ? kUnbounded : parse_num(parts[2], "--load");
  return lc.validated();
}

BatterySpec parse_battery(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 3)
    throw std::invalid_argument(
        "--battery expects volume,charge_rate,discharge_rate");
  BatterySpec spec;
  spec.volume = parse_num(parts[0], "--battery");
  spec.charge_rate = parse_num(parts[1], "--battery");
  spec.discharge_rate = parse_num(parts[2], "--battery");
  return spec.validated();
}

NormalizedBattery parse_normalized(const std::string& s) {
  const auto parts = split_commas(s);
  if (parts.size() != 3)
    throw std::invalid_argument("--normalized expects c,w_bar,w_under");
  NormalizedBattery nb;
  nb.c = parse_num(parts[0], "--normalized");
  nb.w_bar = parse_num(parts[1], "--normalized");
  nb.w_under = parse_num(parts[2], "--normalized");
  return nb;
}

ProbePattern parse_pattern(const std::string& s) {
  if (s == "charge_full") return ProbePattern::charge_full;
  if (s == "discharge_empty") return ProbePattern::discharge_empty;
  if (s == "charge_then_discharge") return ProbePattern::charge_then_discharge;
  if (s == "discharge_then_charge") return ProbePattern::discharge_then_charge;
  throw std::invalid_argument("unknown probe pattern '" + s + "'");
}

bool has_prefix(const std::string& s, const char* prefix) {
  return s.rfind(prefix, 0) == 0;
}

// Generated signal specs: constant:level,duration  square:amp,period,duration
// walk:step_sd,duration
Trajectory make_generated(const std::string& spec, double dt,
                          std::uint64_t seed) {
  const std::size_t colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const auto args = split_commas(
      colon == std::string::npos ? std::string() : spec.substr(colon + 1));
  if (name == "constant") {
    if (args.size() != 2)
      throw std::invalid_argument("constant takes level,duration");
    return constant_signal(parse_num(args[0], spec), parse_num(args[1], spec),
                           dt);
  }
  if (name == "square") {
    if (args.size() != 3)
      throw std::invalid_argument("square takes amplitude,period,duration");
    return square_wave(parse_num(args[0], spec), parse_num(args[1], spec),
                       parse_num(args[2], spec), dt);
  }
  if (name == "walk") {
    if (args.size() != 2)
      throw std::invalid_argument("walk takes step_sd,duration");
    return random_walk(seed, parse_num(args[0], spec), parse_num(args[1], spec),
                       dt);
  }
  throw std::invalid_argument("unknown signal spec '" + spec + "'");
}

std::vector<std::pair<std::string, std::string>> echo_pairs(
    const std::map<std::string, std::string>& m) {
  return {m.begin(), m.end()};
}

std::string manifest_text(const std::map<std::string, std::string>& m) {
  std::string out;
  for (const auto& [k, v] : m) out += k + " = " + v + "\n";
  return out;
}

int do_frontier(const GlobalOpts& g, std::vector<double> cs, int n) {
  if (cs.empty()) cs = {0.0, 0.1, 0.5, 0.9, 1.0};
  for (double c : cs)
    if (!(c >= 0.0 && c <= 1.0))
      throw std::invalid_argument("--c values must be in [0, 1]");
  std::string csv = "c,w_bar,w_under\n";
  for (double c : cs) {
    for (const FrontierSample& s : frontier_curve(c, n)) {
      csv += format_double(c);
      csv += ',';
      csv += format_double(s.w_bar);
      csv += ',';
      csv += format_double(s.w_under);
      csv += '\n';
    }
  }
  const std::string path = resolve_out(g, "frontier.csv");
  write_file_atomic(path, csv);
  note(g, "wrote " + path);
  return 0;
}

int do_envelope(const GlobalOpts& g, const std::string& load_str, int n) {
  const LoadClass lc = parse_load(load_str);
  std::string csv = "sigma,x_lower,x_nominal,x_upper\n";
  for (double sigma : default_age_grid(lc, n)) {
    csv += format_double(sigma);
    csv += ',';
    csv += format_double(lower_envelope(lc, sigma));
    csv += ',';
    csv += format_double(lc.nominal_rate() * sigma);
    csv += ',';
    csv += format_double(upper_envelope(lc, sigma));
    csv += '\n';
  }
  const std::string path = resolve_out(g, "envelope.csv");
  write_file_atomic(path, csv);
  note(g, "wrote " + path);
  return 0;
}

int do_alloc(const GlobalOpts& g, const std::string& load_str, double chi,
             const std::string& kind) {
  const LoadClass lc = parse_load(load_str);
  AllocationProfile profile = [&] {
    if (kind == "charge") return charge_slack_equalized(lc, chi);
    if (kind == "discharge") return discharge_slack_equalized(lc, chi);
    throw std::invalid_argument("--kind must be charge or discharge");
  }();
  const std::string path = resolve_out(g, "alloc.csv");
  write_file_atomic(path, profile.to_csv());
  note(g, "wrote " + path);
  return 0;
}

int do_probe(const GlobalOpts& g, const std::string& battery_str,
             const std::string& pattern_str, const std::string& signal_str,
             double dt, double chi0, bool project) {
  if (pattern_str.empty() == signal_str.empty())
    throw std::invalid_argument("probe needs exactly one of --pattern, --signal");
  Trajectory tr;
  BatterySpec spec;
  const bool have_battery = !battery_str.empty();
  if (have_battery) spec = parse_battery(battery_str);
  if (!pattern_str.empty()) {
    if (!have_battery)
      throw std::invalid_argument("--pattern needs --battery");
    tr = extremal_probe(spec, parse_pattern(pattern_str), dt, chi0);
  } else {
    tr = make_generated(signal_str, dt, g.seed);
  }
  if (project) {
    if (!have_battery) throw std::invalid_argument("--project needs --battery");
    tr = project_to_battery(tr, spec, chi0);
  }
  const std::string path = resolve_out(g, "probe.csv");
  write_file_atomic(path, trajectory_to_csv(tr));
  note(g, "wrote " + path);
  return 0;
}

Trajectory resolve_trajectory(const RunConfig& rc, const std::string& s) {
  if (has_prefix(s, "probe:")) {
    if (!rc.battery_set)
      throw std::invalid_argument("probe: trajectories need a [battery] section");
    return extremal_probe(rc.battery, parse_pattern(s.substr(6)), rc.sim.dt,
                          rc.sim.initial_chi);
  }
  if (has_prefix(s, "constant:") || has_prefix(s, "square:"))
    return make_generated(s, rc.sim.dt, rc.sim.seed);
  if (has_prefix(s, "walk:")) {
    Trajectory tr = make_generated(s, rc.sim.dt, rc.sim.seed);
    // A raw walk wanders without bound; pin it to the battery under test
    // when one is configured.
    if (rc.battery_set)
      tr = project_to_battery(tr, rc.battery, rc.sim.initial_chi);
    return tr;
  }
  return trajectory_from_csv(read_file(s));
}

int do_simulate(const GlobalOpts& g, const std::string& config_path,
                const std::string& traj_str) {
  RunConfig rc = load_config_file(config_path);
  if (g.seed_given) rc.sim.seed = g.seed;
  const std::string dir = out_directory(g);

  std::map<std::string, std::string> manifest = config_echo(rc);
  manifest["tool_version"] = kVersion;
  manifest["seed"] = std::to_string(rc.sim.seed);
  manifest["trajectory"] = traj_str;

  const auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file_atomic(path, content);
    note(g, "wrote " + path);
  };

  if (traj_str == "suite:adversarial") {
    if (!rc.battery_set)
      throw std::invalid_argument(
          "suite:adversarial needs a [battery] section");
    bool all_tracked = true;
    for (const ProbeRun& pr :
         adversarial_suite(rc.lc, rc.battery, rc.sim.dt)) {
      RunConfig rrc = rc;
      rrc.sim.initial_profile = pr.init;
      rrc.sim.initial_chi = pr.chi0;
      const SimResult res = run(rrc.sim, pr.traj);
      auto echo = config_echo(rrc);
      echo["trajectory"] = traj_str + "/" + pr.name;
      emit("result_" + pr.name + ".csv", res.records_csv(echo_pairs(echo)));
      emit("events_" + pr.name + ".csv", res.events_csv());
      manifest["outputs.result." + pr.name] = "result_" + pr.name + ".csv";
      manifest["outputs.events." + pr.name] = "events_" + pr.name + ".csv";
      const bool ok = res.verdict == Verdict::tracked;
      manifest["verdict." + pr.name] = ok ? "tracked" : "failed";
      all_tracked = all_tracked && ok;
    }
    manifest["verdict"] = all_tracked ? "tracked" : "failed";
    emit("manifest.txt", manifest_text(manifest));
    return all_tracked ? 0 : 1;
  }

  const Trajectory tr = resolve_trajectory(rc, traj_str);
  const SimResult res = run(rc.sim, tr);
  auto echo = config_echo(rc);
  echo["trajectory"] = traj_str;
  emit("result.csv", res.records_csv(echo_pairs(echo)));
  emit("events.csv", res.events_csv());
  manifest["outputs.result"] = "result.csv";
  manifest["outputs.events"] = "events.csv";
  const bool ok = res.verdict == Verdict::tracked;
  manifest["verdict"] = ok ? "tracked" : "failed";
  emit("manifest.txt", manifest_text(manifest));
  return ok ? 0 : 1;
}

int do_verify(const GlobalOpts& g, const std::string& load_str,
              const std::string& battery_str, const std::string& norm_str,
              bool empirical, double dt_flag) {
  if (battery_str.empty() == norm_str.empty())
    throw std::invalid_argument(
        "verify needs exactly one of --battery, --normalized");
  const LoadClass lc = parse_load(load_str);
  BatterySpec spec;
  NormalizedBattery nb;
  bool have_nb = false;
  if (!battery_str.empty()) {
    spec = parse_battery(battery_str);
    try {
      nb = normalize(spec, lc);
      have_nb = true;
    } catch (const std::domain_error&) {
      // inflexible or unbounded class: report in absolute units only
    }
  } else {
    nb = parse_normalized(norm_str);
    spec = denormalize(nb, lc);
    have_nb = true;
  }

  std::cout << "battery = " << format_double(spec.volume) << ","
            << (spec.charge_rate == kUnbounded
                    ? std::string("unbounded")
                    : format_double(spec.charge_rate))
            << "," << format_double(spec.discharge_rate) << "\n";
  if (have_nb)
    std::cout << "normalized = " << format_double(nb.c) << ","
              << format_double(nb.w_bar) << "," << format_double(nb.w_under)
              << "\n";

  const AreaConditionResult r = area_condition_holds(lc, spec);
  std::cout << "max_area = " << format_double(r.max_area) << "\n";
  std::cout << "budget = " << format_double(r.budget) << "\n";
  if (r.budget > 0.0)
    std::cout << "area_ratio = " << format_double(r.max_area / r.budget)
              << "\n";
  if (r.holds) {
    std::cout << "verdict = not_excluded\n";
  } else {
    std::cout << "verdict = violates_necessary\n";
    std::cout << "witness_chi = " << format_double(r.witness_chi) << "\n";
  }

  if (empirical) {
    SimConfig base;
    base.lc = lc;
    base.lambda = 100.0 / lc.window;
    base.dt = dt_flag > 0.0 ? dt_flag : lc.window / 1000.0;
    base.warmup = 2.0 * lc.window;
    base.mode = SimMode::strict;
    base.seed = g.seed;
    base.record_steps = false;
    for (PolicyKind policy :
         {PolicyKind::charge_slack_greedy, PolicyKind::discharge_slack_greedy,
          PolicyKind::nominal_proportional, PolicyKind::target_profile}) {
      base.policy = policy;
      const SuiteOutcome out = run_adversarial_suite(lc, spec, base);
      std::cout << "empirical." << policy_name(policy) << " = "
                << (out.tracked ? "tracked" : "failed");
      if (!out.tracked) std::cout << " (" << out.first_failed << ")";
      std::cout << "\n";
    }
  }
  return r.holds ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"deferrable-load fleets as virtual batteries: capacity curves, "
               "allocation profiles, tracking simulation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed,
                 "seed for generated signals and empirical sweeps");
  app.add_option("--out", g.out, "output file (overrides the default name)");
  app.add_option("--out-dir", g.out_dir, "output directory")
      ->envname("VBCAP_OUT_DIR");
  app.add_flag("--quiet", g.quiet, "suppress progress notes");

  auto* cmd_frontier = app.add_subcommand(
      "frontier", "realizable (w_bar, w_under) frontier per normalized volume");
  std::vector<double> fr_c;
  int fr_n = 101;
  cmd_frontier->add_option("--c", fr_c,
                           "normalized volumes (default 0,0.1,0.5,0.9,1)");
  cmd_frontier->add_option("--n", fr_n, "grid points per curve");

  auto* cmd_envelope =
      app.add_subcommand("envelope", "energy envelopes of a load class");
  std::string env_load;
  int env_n = 512;
  cmd_envelope->add_option("--load", env_load, "load class E,T,P")->required();
  cmd_envelope->add_option("--n", env_n, "grid intervals");

  auto* cmd_alloc = app.add_subcommand(
      "alloc", "slack-equalized allocation profile at a stored-energy target");
  std::string al_load, al_kind = "charge";
  double al_chi = 0.0;
  cmd_alloc->add_option("--load", al_load, "load class E,T,P")->required();
  cmd_alloc->add_option("--chi", al_chi, "stored-energy target");
  cmd_alloc->add_option("--kind", al_kind, "charge or discharge");

  auto* cmd_probe = app.add_subcommand(
      "probe", "emit an extremal or generated battery trajectory as CSV");
  std::string pr_battery, pr_pattern, pr_signal;
  double pr_dt = 1e-3, pr_chi0 = 0.0;
  bool pr_project = false;
  cmd_probe->add_option("--battery", pr_battery,
                        "battery volume,charge_rate,discharge_rate");
  auto* pr_pat_opt = cmd_probe->add_option(
      "--pattern", pr_pattern,
      "charge_full | discharge_empty | charge_then_discharge | "
      "discharge_then_charge");
  auto* pr_sig_opt = cmd_probe->add_option(
      "--signal", pr_signal,
      "constant:level,dur | square:amp,period,dur | walk:sd,dur");
  pr_pat_opt->excludes(pr_sig_opt);
  cmd_probe->add_option("--dt", pr_dt, "sample step");
  cmd_probe->add_option("--chi0", pr_chi0, "starting battery state");
  cmd_probe->add_flag("--project", pr_project,
                      "project the signal into the battery's feasible set");

  auto* cmd_simulate = app.add_subcommand(
      "simulate", "run a fleet-tracking simulation from a config file");
  std::string sim_config, sim_traj;
  cmd_simulate->add_option("--config", sim_config, "config file")->required();
  cmd_simulate
      ->add_option("--trajectory", sim_traj,
                   "CSV file, probe:<pattern>, constant:/square:/walk: spec, "
                   "or suite:adversarial")
      ->required();

  auto* cmd_verify = app.add_subcommand(
      "verify", "analytic realizability verdict for a battery and load class");
  std::string vf_load, vf_battery, vf_norm;
  bool vf_empirical = false;
  double vf_dt = 0.0;
  cmd_verify->add_option("--load", vf_load, "load class E,T,P")->required();
  auto* vf_b_opt =
      cmd_verify->add_option("--battery", vf_battery, "absolute battery C,Wb,Wu");
  auto* vf_n_opt = cmd_verify->add_option("--normalized", vf_norm,
                                          "normalized battery c,wb,wu");
  vf_b_opt->excludes(vf_n_opt);
  cmd_verify->add_flag("--empirical", vf_empirical,
                       "also run the adversarial suite under every policy");
  cmd_verify->add_option("--dt", vf_dt, "empirical suite step (default T/1000)");

  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.seed_given = app.count("--seed") > 0;

  try {
    if (cmd_frontier->parsed()) return do_frontier(g, fr_c, fr_n);
    if (cmd_envelope->parsed()) return do_envelope(g, env_load, env_n);
    if (cmd_alloc->parsed()) return do_alloc(g, al_load, al_chi, al_kind);
    if (cmd_probe->parsed())
      return do_probe(g, pr_battery, pr_pattern, pr_signal, pr_dt, pr_chi0,
                      pr_project);
    if (cmd_simulate->parsed()) return do_simulate(g, sim_config, sim_traj);
    if (cmd_verify->parsed())
      return do_verify(g, vf_load, vf_battery, vf_norm, vf_empirical, vf_dt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace vbcap
