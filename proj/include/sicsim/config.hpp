#pragma once

// Flat key=value run configuration shared by every subcommand.  Values come
// from (in order of increasing precedence) built-in defaults, a --config
// file, named command-line flags, and repeated --set KEY=VALUE overrides.
// Every diagnostic is a single line naming the offending key.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sicsim/link_abstraction.hpp"
#include "sicsim/phy_model.hpp"
#include "sicsim/scenario_analysis.hpp"

namespace sicsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  AddressModel model{AddressKind::distinct_uniform, 3, 4};
  LinkParams link{1.0, 0.001, 0.001, 0.2, 0.1};  // measured parameter set
  RicianLink rician{4.0, 1024};

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  std::string sweep_param;  // sigma_v2 | channel_gain | noise_power | eps_cross
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  int sweep_steps = 1;

  bool eq3_as_printed = false;
  bool mgf_as_printed = false;
  bool count_idle_slots = true;
  bool inject_reference_noise = true;
  bool hw_noise_constant = false;

  int symbols_per_slot = 100000;
  double phase_drift = 0.0;
  int workers = 0;  // 0 = pick from hardware concurrency

  std::string calib_targets = "21:0.9324,221:0.9954";
  std::string calib_knob = "eps-cross";  // eps-cross | sigma-v2
};

// Set one key.  `line` (1-based) decorates diagnostics when the value came
// from a file; pass 0 for command-line origins.  Throws ConfigError on
// unknown keys or unparseable values.
void apply_key_value(RunConfig& config, const std::string& key,
                     const std::string& value, int line = 0);

// Apply every `key = value` line of a config file ('#' starts a comment,
// blank lines are skipped).  Throws ConfigError naming the key and line.
void apply_config_file(RunConfig& config, const std::string& path);

// Parse a "KEY=VALUE" command-line override.
void apply_set_expression(RunConfig& config, const std::string& expr);

// Cross-field validation; throws ConfigError naming the key.
void validate(const RunConfig& config);

// Views of the config in the vocabulary of the owning modules.
SsinrOptions ssinr_options(const RunConfig& config);
SerOptions ser_options(const RunConfig& config);
EnumerateOptions enumerate_options(const RunConfig& config);
CalibKnob parse_calib_knob(const std::string& name);
std::vector<CalibrationTarget> parse_calib_targets(const std::string& text);

}  // namespace sicsim
