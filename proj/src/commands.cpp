#include "sicsim/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sicsim/baseband_sim.hpp"
#include "sicsim/csv.hpp"
#include "sicsim/link_abstraction.hpp"
#include "sicsim/rng.hpp"

namespace sicsim {

namespace {

std::string out_path(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.out_dir);
  return (std::filesystem::path(config.out_dir) / name).string();
}

std::string knob_name(CalibKnob knob) {
  return knob == CalibKnob::eps_cross ? "eps-cross" : "sigma-v2";
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

int resolve_workers(const RunConfig& config) {
  if (config.workers > 0) return config.workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hc == 0 ? 4u : hc, 1u, 8u));
}

}  // namespace

const std::vector<ThroughputReference>& table1_reference() {
  static const std::vector<ThroughputReference> rows = {
      {4, 0.875, 0.5837, 0.6026},
      {3, 0.8344, 0.6926, 0.6465},
      {2, 0.7917, 0.7273, 0.7495},
  };
  return rows;
}

const std::vector<ResolutionReference>& table2_reference() {
  static const std::vector<ResolutionReference> rows = {
      {"2221", 1.0, 0.9997},  {"221", 0.98, 0.9954},   {"21", 0.9, 0.9324},
      {"3321", 0.9, 0.8757},  {"3221", 0.82, 0.7498},  {"321", 0.74, 0.7024},
      {"3311", 0.98, 0.9391}, {"3121", 0.9, 0.9324},   {"311", 0.87, 0.7532},
      {"44211", 0.84, 0.8643},{"4321", 0.59, 0.5125},  {"4311", 0.56, 0.5496},
      {"422121", 0.88, 0.9282},{"42121", 0.81, 0.8695},{"42211", 0.7, 0.7263},
      {"4211", 0.64, 0.6804}, {"4111", 0.66, 0.7297},
  };
  return rows;
}

LinkParams ideal_link_set() {
  LinkParams link;
  link.gamma = 1.0;
  link.sigma_v2 = 0.0;
  link.eps_self = 0.0;
  link.eps_cross = 0.0;
  link.noise_power = 1e-12;
  return link;
}

LinkParams measured_link_set() {
  LinkParams link;
  link.gamma = 1.0;
  link.sigma_v2 = 0.001;
  link.eps_self = 0.001;
  link.eps_cross = 0.2;
  link.noise_power = 0.1;
  return link;
}

void cmd_enumerate(const RunConfig& config, std::ostream& out) {
  auto scenarios = enumerate_scenarios(config.model, enumerate_options(config));
  evaluate_resolution(scenarios,
                      homogeneous_links(config.model.M, config.link),
                      config.rician, ssinr_options(config),
                      ser_options(config));

  const std::string path = out_path(config, "scenarios.csv");
  CsvFile csv(path,
              {"label", "p_occ", "rho", "p_res", "contribution", "cumulative"});
  double cumulative = 0.0;
  for (const auto& s : scenarios) {
    const double contribution = s.p_occ * s.rho * s.p_res;
    cumulative += contribution;
    csv.row({s.label, g6(s.p_occ), g6(s.rho), g6(s.p_res), g6(contribution),
             g6(cumulative)});
  }
  csv.close();
  out << "wrote " << path << " (" << scenarios.size() << " scenarios)\n";
}

void cmd_throughput(const RunConfig& config, std::ostream& out) {
  const double mac = mac_throughput(config.model, enumerate_options(config));
  const double total = total_throughput(
      config.model, config.link, config.rician, enumerate_options(config),
      ssinr_options(config), ser_options(config));
  // The baseline column carries slotted ALOHA at its optimum load G = 1.
  const double aloha = slotted_aloha_throughput(1.0);

  const std::string path = out_path(config, "throughput.csv");
  CsvFile csv(path, {"M", "u", "mac_tpt", "total_tpt", "aloha_baseline"});
  csv.row({std::to_string(config.model.M), std::to_string(config.model.u),
           g6(mac), g6(total), g6(aloha)});
  csv.close();
  out << "wrote " << path << "\n";
}

CalibrationResult cmd_calibrate(const RunConfig& config, std::ostream& out) {
  const auto targets = parse_calib_targets(config.calib_targets);
  const auto knob = parse_calib_knob(config.calib_knob);
  const CalibrationResult result =
      calibrate_links(targets, knob, config.model.u, ser_options(config));

  const auto links =
      homogeneous_links(config.model.M, result.link);
  const std::string path = out_path(config, "calibration.csv");
  CsvFile csv(path, {"label", "target", "predicted", "knob", "snr0",
                     "eps_cross", "sigma_v2", "eps_self", "residual"});
  for (const auto& t : targets) {
    const auto chain = chain_for_label(t.label, config.model.u).chain;
    const double pred = resolution_probability(
        chain, links, result.rician, ssinr_options(config),
        ser_options(config));
    csv.row({t.label, g6(t.p_res), g6(pred), knob_name(result.knob),
             g6(result.snr0), g6(result.link.eps_cross),
             g6(result.link.sigma_v2), g6(result.link.eps_self),
             g6(result.residual)});
  }
  csv.close();
  out << "calibrated: knob=" << knob_name(result.knob)
      << " snr0=" << g6(result.snr0)
      << " eps_cross=" << g6(result.link.eps_cross)
      << " sigma_v2=" << g6(result.link.sigma_v2)
      << " residual=" << g6(result.residual) << "\n";
  out << "wrote " << path << "\n";
  return result;
}

void cmd_sweep(const RunConfig& config, std::ostream& out) {
  if (config.sweep_param.empty())
    throw ConfigError(
        "config: sweep_param is required (use --param NAME --from A --to B "
        "--steps K)");

  std::vector<double> values;
  for (int i = 0; i < config.sweep_steps; ++i) {
    values.push_back(config.sweep_steps == 1
                         ? config.sweep_from
                         : config.sweep_from +
                               i * (config.sweep_to - config.sweep_from) /
                                   (config.sweep_steps - 1));
  }

  const std::vector<std::pair<std::string, LinkParams>> sets = {
      {"ideal", ideal_link_set()}, {"measured", measured_link_set()}};
  const std::vector<int> m_values = {2, 3, 4};

  // Pre-validate every swept link so a bad range is a config error, not a
  // mid-run failure.
  auto apply_param = [&](LinkParams link, double v) {
    if (config.sweep_param == "sigma_v2") link.sigma_v2 = v;
    if (config.sweep_param == "channel_gain") link.gamma = v * v;
    if (config.sweep_param == "noise_power") link.noise_power = v;
    if (config.sweep_param == "eps_cross") link.eps_cross = v;
    return link;
  };
  for (double v : values)
    for (const auto& [name, base] : sets) {
      try {
        validate(apply_param(base, v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config: sweep value " + g6(v) + " makes " +
                          config.sweep_param + " invalid for the " + name +
                          " set: " + e.what());
      }
    }

  struct Row {
    double value;
    std::string set;
    int M;
    double total;
  };
  std::vector<std::vector<Row>> results(values.size());

  auto eval_point = [&](std::size_t vi) {
    std::vector<Row> rows;
    for (const auto& [name, base] : sets) {
      const LinkParams link = apply_param(base, values[vi]);
      for (int M : m_values) {
        const AddressModel model{AddressKind::distinct_uniform, config.model.u,
                                 M};
        const double total = total_throughput(
            model, link, config.rician, enumerate_options(config),
            ssinr_options(config), ser_options(config));
        rows.push_back({values[vi], name, M, total});
      }
    }
    return rows;
  };

  const int n_workers =
      std::min<int>(resolve_workers(config), static_cast<int>(values.size()));
  if (n_workers <= 1) {
    for (std::size_t vi = 0; vi < values.size(); ++vi)
      results[vi] = eval_point(vi);
  } else {
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w)
      futures.push_back(std::async(std::launch::async, [&, w]() {
        for (std::size_t vi = static_cast<std::size_t>(w); vi < values.size();
             vi += static_cast<std::size_t>(n_workers))
          results[vi] = eval_point(vi);
      }));
    for (auto& f : futures) f.get();
  }

  const std::string path = out_path(config, "sweep.csv");
  CsvFile csv(path, {"param", "value", "param_set", "M", "total_tpt"});
  for (const auto& rows : results)
    for (const auto& r : rows)
      csv.row({config.sweep_param, g6(r.value), r.set, std::to_string(r.M),
               g6(r.total)});
  csv.close();
  out << "wrote " << path << " (" << values.size() << " sweep points)\n";
}

void cmd_validate_baseband(const RunConfig& config, std::ostream& out) {
  constexpr int kTransmitters = 4;
  std::vector<BasebandUser> users;
  for (int id = 0; id < kTransmitters; ++id) {
    BasebandUser u;
    u.user = id;
    u.link = config.link;
    u.payload_seed = derive_seed(config.seed, 'P', static_cast<std::uint64_t>(id));
    u.phase_drift = config.phase_drift;
    users.push_back(u);
  }
  SynthesisOptions sopts;
  sopts.symbols = config.symbols_per_slot;
  sopts.hw_noise_constant = config.hw_noise_constant;
  const BasebandSlot slot =
      synthesize_slot(users, derive_seed(config.seed, 'B', 0), sopts);

  const auto links = homogeneous_links(kTransmitters, config.link);
  const std::string path = out_path(config, "fig1.csv");
  CsvFile csv(path, {"cancelled_count", "analytical_db", "empirical_db",
                     "ci_halfwidth_db", "analytical_linear",
                     "empirical_linear"});
  for (int c = 1; c <= kTransmitters; ++c) {
    CancellationContext ctx;
    for (int i = 0; i < kTransmitters; ++i) ctx.transmitters.push_back(i);
    for (int i = 0; i < c; ++i) ctx.cancelled.push_back(i);
    ctx.target = 0;
    const double analytical = ssinr(ctx, links, ssinr_options(config));

    CancelOptions copts;
    copts.inject_reference_noise = config.inject_reference_noise;
    copts.seed = derive_seed(config.seed, 'C', static_cast<std::uint64_t>(c));
    const CancelMeasurement meas =
        cancel_and_measure(slot, ctx.cancelled, 0, copts);

    // 95% CI of the mean residual power, propagated to dB (delta method).
    double var = 0.0;
    for (const auto& z : meas.residual) {
      const double d = std::norm(z) - meas.residual_power;
      var += d * d;
    }
    const double n = static_cast<double>(meas.residual.size());
    const double ci_linear = 1.96 * std::sqrt(var / n / n);
    const double ci_db =
        (10.0 / std::log(10.0)) * ci_linear / meas.residual_power;

    csv.row({std::to_string(c - 1), g6(to_db(analytical)),
             g6(to_db(meas.empirical_sinr)), g6(ci_db), g6(analytical),
             g6(meas.empirical_sinr)});
  }
  csv.close();

  const std::string dump_base = out_path(config, "fig1_slot");
  dump_slot(slot, dump_base);
  out << "wrote " << path << "\n";
  out << "wrote " << dump_base << ".iq and " << dump_base << ".txt\n";
}

void cmd_report_tables(const RunConfig& config, std::ostream& out) {
  const auto targets = parse_calib_targets(config.calib_targets);
  const auto knob = parse_calib_knob(config.calib_knob);
  // The labeled scenarios of both tables live at depth 3.
  constexpr int kTableDepth = 3;
  const CalibrationResult calib =
      calibrate_links(targets, knob, kTableDepth, ser_options(config));

  int max_users = 0;
  for (const auto& ref : table2_reference())
    max_users = std::max(max_users, ref.label[0] - '0');
  const auto links = homogeneous_links(max_users, calib.link);

  const std::string t2_path = out_path(config, "table2.csv");
  CsvFile t2(t2_path, {"label", "measured_printed", "model_printed",
                       "model_reproduced", "abs_dev", "chain_source"});
  for (const auto& ref : table2_reference()) {
    const LabelChain lc = chain_for_label(ref.label, kTableDepth);
    const double pred =
        resolution_probability(lc.chain, links, calib.rician,
                               ssinr_options(config), ser_options(config));
    t2.row({ref.label, g6(ref.measured_printed), g6(ref.model_printed),
            g6(pred), g6(std::abs(pred - ref.model_printed)),
            lc.from_enumeration ? "trace" : "synthesized"});
  }
  t2.close();

  const std::string t1_path = out_path(config, "table1.csv");
  CsvFile t1(t1_path, {"M", "mac_tpt", "pres1_printed", "total_tpt",
                       "model_printed", "measured_printed", "abs_dev"});
  for (const auto& ref : table1_reference()) {
    const AddressModel model{AddressKind::distinct_uniform, kTableDepth,
                             ref.M};
    const double mac = mac_throughput(model, enumerate_options(config));
    const double total = total_throughput(
        model, calib.link, calib.rician, enumerate_options(config),
        ssinr_options(config), ser_options(config));
    t1.row({std::to_string(ref.M), g6(mac), g6(ref.mac_printed), g6(total),
            g6(ref.model_printed), g6(ref.measured_printed),
            g6(std::abs(total - ref.model_printed))});
  }
  t1.close();

  const std::string sens_path = out_path(config, "mac_sensitivity.csv");
  CsvFile sens(sens_path, {"u", "M", "mac_tpt"});
  for (int u = 3; u <= 5; ++u)
    for (int M = 2; M <= 4; ++M) {
      const AddressModel model{AddressKind::distinct_uniform, u, M};
      sens.row({std::to_string(u), std::to_string(M),
                g6(mac_throughput(model, enumerate_options(config)))});
    }
  sens.close();

  out << "wrote " << t2_path << "\n";
  out << "wrote " << t1_path << "\n";
  out << "wrote " << sens_path << "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Inter-slot SIC random-access simulator and model toolkit"};
  app.name("sicsim");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string sweep_param;
  std::string calib_knob;
  std::vector<std::string> set_exprs;
  std::uint64_t seed = 0;
  int users = 0;
  int address_bits = 0;
  int steps = 0;
  int symbols = 0;
  int workers = 0;
  double from = 0.0;
  double to = 0.0;
  bool eq3 = false;
  bool mgf = false;
  bool no_idle = false;
  bool no_inject = false;
  bool hw_const = false;

  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--seed", seed, "master random seed");
  app.add_option("--out", out_dir, "output directory for CSV files");
  app.add_option("--users", users, "number of colliding users (M)");
  app.add_option("--address-bits", address_bits, "address depth (u)");
  app.add_option("--param", sweep_param,
                 "sweep parameter: sigma_v2 | channel_gain | noise_power | "
                 "eps_cross");
  app.add_option("--from", from, "sweep start value");
  app.add_option("--to", to, "sweep end value");
  app.add_option("--steps", steps, "number of sweep points");
  app.add_option("--calib-knob", calib_knob,
                 "calibration knob: eps-cross | sigma-v2");
  app.add_option("--symbols", symbols, "baseband symbols per slot");
  app.add_option("--workers", workers, "worker threads (0 = auto)");
  app.add_flag("--eq3-as-printed", eq3,
               "charge residual terms for every transmitter (uncorrected "
               "model form)");
  app.add_flag("--mgf-as-printed", mgf,
               "drop the s factor from the fading MGF exponent (uncorrected "
               "model form)");
  app.add_flag("--no-idle-count", no_idle,
               "exclude idle slots from throughput accounting");
  app.add_flag("--no-inject-reference-noise", no_inject,
               "subtract noiseless replicas in the baseband oracle");
  app.add_flag("--hw-noise-constant", hw_const,
               "hold the hardware-noise coefficient constant per packet");
  app.add_option("--set", set_exprs, "override any config key (KEY=VALUE)")
      ->take_all();

  for (const char* name : {"enumerate", "throughput", "calibrate", "sweep",
                           "validate-baseband", "report-tables"})
    app.add_subcommand(name)->fallthrough();

  std::vector<const char*> argv;
  argv.push_back("sicsim");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return 0;
      }
      err << "error: " << e.what() << "\n";
      return 2;
    }

    RunConfig config;
    if (app.count("--config")) apply_config_file(config, config_path);
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--out")) config.out_dir = out_dir;
    if (app.count("--users")) config.model.M = users;
    if (app.count("--address-bits")) config.model.u = address_bits;
    if (app.count("--param")) config.sweep_param = sweep_param;
    if (app.count("--from")) config.sweep_from = from;
    if (app.count("--to")) config.sweep_to = to;
    if (app.count("--steps")) config.sweep_steps = steps;
    if (app.count("--calib-knob")) config.calib_knob = calib_knob;
    if (app.count("--symbols")) config.symbols_per_slot = symbols;
    if (app.count("--workers")) config.workers = workers;
    if (eq3) config.eq3_as_printed = true;
    if (mgf) config.mgf_as_printed = true;
    if (no_idle) config.count_idle_slots = false;
    if (no_inject) config.inject_reference_noise = false;
    if (hw_const) config.hw_noise_constant = true;
    for (const auto& expr : set_exprs) apply_set_expression(config, expr);
    validate(config);

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "enumerate") {
      cmd_enumerate(config, out);
    } else if (sub == "throughput") {
      cmd_throughput(config, out);
    } else if (sub == "calibrate") {
      cmd_calibrate(config, out);
    } else if (sub == "sweep") {
      cmd_sweep(config, out);
    } else if (sub == "validate-baseband") {
      cmd_validate_baseband(config, out);
    } else if (sub == "report-tables") {
      cmd_report_tables(config, out);
    }
    return 0;
  } catch (const CalibrationError& e) {
    err << "calibration failed: best residual " << g6(e.best().residual)
        << " with knob " << knob_name(e.best().knob) << "\n";
    return 3;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sicsim
