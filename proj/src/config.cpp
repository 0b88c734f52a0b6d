#include "sicsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

namespace sicsim {

namespace {

std::string where(int line) {
  return line > 0 ? " (line " + std::to_string(line) + ")" : "";
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value,
                    int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw ConfigError("config: key \"" + key + "\" expects a number, got \"" +
                      value + "\"" + where(line));
  }
}

long long parse_int(const std::string& key, const std::string& value,
                    int line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw ConfigError("config: key \"" + key +
                      "\" expects an integer, got \"" + value + "\"" +
                      where(line));
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value,
                        int line) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-')
      throw std::invalid_argument(value);
    return v;
  } catch (...) {
    throw ConfigError("config: key \"" + key +
                      "\" expects an unsigned integer, got \"" + value +
                      "\"" + where(line));
  }
}

bool parse_bool(const std::string& key, const std::string& value, int line) {
  if (value == "true" || value == "1" || value == "yes" || value == "on")
    return true;
  if (value == "false" || value == "0" || value == "no" || value == "off")
    return false;
  throw ConfigError("config: key \"" + key +
                    "\" expects true/false, got \"" + value + "\"" +
                    where(line));
}

}  // namespace

void apply_key_value(RunConfig& config, const std::string& key,
                     const std::string& value, int line) {
  if (key == "address_model") {
    if (value == "distinct-uniform")
      config.model.kind = AddressKind::distinct_uniform;
    else if (value == "iid-bits")
      config.model.kind = AddressKind::iid_bits;
    else
      throw ConfigError(
          "config: key \"address_model\" must be \"distinct-uniform\" or "
          "\"iid-bits\", got \"" +
          value + "\"" + where(line));
  } else if (key == "users") {
    config.model.M = static_cast<int>(parse_int(key, value, line));
  } else if (key == "address_bits") {
    config.model.u = static_cast<int>(parse_int(key, value, line));
  } else if (key == "gamma") {
    config.link.gamma = parse_double(key, value, line);
  } else if (key == "channel_gain") {
    const double h = parse_double(key, value, line);
    if (h < 0.0)
      throw ConfigError("config: key \"channel_gain\" must be non-negative" +
                        where(line));
    config.link.gamma = h * h;
  } else if (key == "sigma_v2") {
    config.link.sigma_v2 = parse_double(key, value, line);
  } else if (key == "eps_self") {
    config.link.eps_self = parse_double(key, value, line);
  } else if (key == "eps_cross") {
    config.link.eps_cross = parse_double(key, value, line);
  } else if (key == "noise_power") {
    config.link.noise_power = parse_double(key, value, line);
  } else if (key == "k_factor") {
    config.rician.k_factor = parse_double(key, value, line);
  } else if (key == "packet_len_bits") {
    config.rician.packet_len_bits =
        static_cast<int>(parse_int(key, value, line));
  } else if (key == "seed") {
    config.seed = parse_u64(key, value, line);
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "sweep_param") {
    config.sweep_param = value;
  } else if (key == "sweep_from") {
    config.sweep_from = parse_double(key, value, line);
  } else if (key == "sweep_to") {
    config.sweep_to = parse_double(key, value, line);
  } else if (key == "sweep_steps") {
    config.sweep_steps = static_cast<int>(parse_int(key, value, line));
  } else if (key == "eq3_as_printed") {
    config.eq3_as_printed = parse_bool(key, value, line);
  } else if (key == "mgf_as_printed") {
    config.mgf_as_printed = parse_bool(key, value, line);
  } else if (key == "count_idle_slots") {
    config.count_idle_slots = parse_bool(key, value, line);
  } else if (key == "inject_reference_noise") {
    config.inject_reference_noise = parse_bool(key, value, line);
  } else if (key == "hw_noise_constant") {
    config.hw_noise_constant = parse_bool(key, value, line);
  } else if (key == "symbols_per_slot") {
    config.symbols_per_slot = static_cast<int>(parse_int(key, value, line));
  } else if (key == "phase_drift") {
    config.phase_drift = parse_double(key, value, line);
  } else if (key == "workers") {
    config.workers = static_cast<int>(parse_int(key, value, line));
  } else if (key == "calib_targets") {
    config.calib_targets = value;
  } else if (key == "calib_knob") {
    config.calib_knob = value;
  } else {
    throw ConfigError("config: unknown key \"" + key + "\"" + where(line));
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file \"" + path + "\"");
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: malformed line (expected key=value)" +
                        where(lineno));
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: empty key" + where(lineno));
    apply_key_value(config, key, value, lineno);
  }
}

void apply_set_expression(RunConfig& config, const std::string& expr) {
  const std::size_t eq = expr.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config: --set expects KEY=VALUE, got \"" + expr + "\"");
  apply_key_value(config, trim(expr.substr(0, eq)), trim(expr.substr(eq + 1)));
}

void validate(const RunConfig& config) {
  if (config.model.M < 1)
    throw ConfigError("config: users must be at least 1");
  if (config.model.u < 1 || config.model.u > 30)
    throw ConfigError("config: address_bits must lie in [1, 30]");
  if (config.model.kind == AddressKind::distinct_uniform &&
      config.model.M > (std::int64_t{1} << config.model.u))
    throw ConfigError(
        "config: users exceeds the 2^address_bits distinct addresses");
  try {
    validate(config.link);
    validate(config.rician);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (config.symbols_per_slot < 1)
    throw ConfigError("config: symbols_per_slot must be at least 1");
  if (config.workers < 0)
    throw ConfigError("config: workers must be non-negative");
  if (config.sweep_steps < 1)
    throw ConfigError("config: sweep_steps must be at least 1");
  if (!config.sweep_param.empty() && config.sweep_param != "sigma_v2" &&
      config.sweep_param != "channel_gain" &&
      config.sweep_param != "noise_power" && config.sweep_param != "eps_cross")
    throw ConfigError("config: unknown sweep parameter \"" +
                      config.sweep_param + "\"");
  parse_calib_knob(config.calib_knob);
  parse_calib_targets(config.calib_targets);
}

SsinrOptions ssinr_options(const RunConfig& config) {
  SsinrOptions opts;
  opts.residuals_over_all_transmitters = config.eq3_as_printed;
  return opts;
}

SerOptions ser_options(const RunConfig& config) {
  SerOptions opts;
  opts.mgf_exponent_without_s = config.mgf_as_printed;
  return opts;
}

EnumerateOptions enumerate_options(const RunConfig& config) {
  EnumerateOptions opts;
  opts.count_idle_slots = config.count_idle_slots;
  return opts;
}

CalibKnob parse_calib_knob(const std::string& name) {
  if (name == "eps-cross") return CalibKnob::eps_cross;
  if (name == "sigma-v2") return CalibKnob::sigma_v2;
  throw ConfigError(
      "config: calib_knob must be \"eps-cross\" or \"sigma-v2\", got \"" +
      name + "\"");
}

std::vector<CalibrationTarget> parse_calib_targets(const std::string& text) {
  std::vector<CalibrationTarget> targets;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = trim(text.substr(pos, comma - pos));
    if (item.empty())
      throw ConfigError(
          "config: calib_targets expects \"label:prob,...\", got \"" + text +
          "\"");
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos || colon == 0)
      throw ConfigError(
          "config: calib_targets expects \"label:prob,...\", got \"" + text +
          "\"");
    CalibrationTarget t;
    t.label = trim(item.substr(0, colon));
    t.p_res = parse_double("calib_targets", trim(item.substr(colon + 1)), 0);
    if (!(t.p_res >= 0.0 && t.p_res <= 1.0))
      throw ConfigError(
          "config: calib_targets probabilities must lie in [0, 1]");
    targets.push_back(std::move(t));
    pos = comma + 1;
  }
  if (targets.empty())
    throw ConfigError("config: calib_targets must not be empty");
  return targets;
}

}  // namespace sicsim
