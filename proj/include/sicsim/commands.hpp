#pragma once

// Subcommand implementations behind the CLI binary.  Each cmd_* writes its
// CSV outputs into config.out_dir and a short progress line to `out`; all
// errors surface as exceptions (ConfigError, CalibrationError, ...), mapped
// to exit codes by run_cli.

#include <iosfwd>
#include <string>
#include <vector>

#include "sicsim/config.hpp"
#include "sicsim/scenario_analysis.hpp"

namespace sicsim {

// Reference model values the reports compare against.
struct ThroughputReference {
  int M;
  double mac_printed;       // throughput with every resolution succeeding
  double measured_printed;  // reference measurement column
  double model_printed;     // reference model column
};

struct ResolutionReference {
  std::string label;
  double measured_printed;
  double model_printed;
};

// Rows in reference order (throughput: M = 4, 3, 2).
const std::vector<ThroughputReference>& table1_reference();
const std::vector<ResolutionReference>& table2_reference();

// The two parameter sets the sweeps compare: an impairment-free link and
// the reference measurement conditions.
LinkParams ideal_link_set();
LinkParams measured_link_set();

void cmd_enumerate(const RunConfig& config, std::ostream& out);
void cmd_throughput(const RunConfig& config, std::ostream& out);
CalibrationResult cmd_calibrate(const RunConfig& config, std::ostream& out);
void cmd_sweep(const RunConfig& config, std::ostream& out);
void cmd_validate_baseband(const RunConfig& config, std::ostream& out);
void cmd_report_tables(const RunConfig& config, std::ostream& out);

// Command-line entry point (argv without the program name).  Returns the
// process exit status: 0 success, 2 config/usage error, 3 calibration
// failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace sicsim
