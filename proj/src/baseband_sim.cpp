#include "sicsim/baseband_sim.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

#include "sicsim/rng.hpp"

namespace sicsim {

namespace {

std::complex<double> qpsk_symbol(std::uint64_t bits) {
  constexpr double kAmp = 0.70710678118654752440;  // 1/sqrt(2), unit power
  return {(bits & 1) ? kAmp : -kAmp, (bits & 2) ? kAmp : -kAmp};
}

std::string format_g6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

}  // namespace

BasebandSlot synthesize_slot(const std::vector<BasebandUser>& users,
                             std::uint64_t seed, const SynthesisOptions& opts) {
  if (users.empty())
    throw std::invalid_argument("baseband slot needs at least one transmitter");
  if (opts.symbols < 1)
    throw std::invalid_argument("symbols must be at least 1");
  std::set<int> ids;
  for (const auto& u : users) {
    validate(u.link);
    if (u.user < 0)
      throw std::invalid_argument("user ids must be non-negative");
    if (!ids.insert(u.user).second)
      throw std::invalid_argument("duplicate user id in baseband slot");
  }

  const int n = opts.symbols;
  BasebandSlot slot;
  slot.seed = seed;
  slot.noise_power = users.front().link.noise_power;
  slot.samples.assign(static_cast<std::size_t>(n), {0.0, 0.0});

  for (const auto& u : users) {
    Rng phase_rng(derive_seed(seed, 'p', static_cast<std::uint64_t>(u.user)));
    const double phase = 2.0 * std::numbers::pi * phase_rng.uniform01();
    const std::complex<double> h =
        std::sqrt(u.link.gamma) * std::polar(1.0, phase);
    const std::complex<double> h_eff = h * std::polar(1.0, u.phase_drift);

    Rng payload(u.payload_seed);
    Rng vrng(derive_seed(seed, 'v', static_cast<std::uint64_t>(u.user)));
    const double sv = std::sqrt(u.link.sigma_v2);
    std::complex<double> v{1.0, 0.0};
    if (opts.hw_noise_constant) v += sv * vrng.cnormal();
    for (int t = 0; t < n; ++t) {
      const std::complex<double> x = qpsk_symbol(payload.next_u64());
      if (!opts.hw_noise_constant) v = 1.0 + sv * vrng.cnormal();
      slot.samples[static_cast<std::size_t>(t)] += x * v * h_eff;
    }
    slot.truth.push_back({u.user, u.link, u.payload_seed, h, h_eff});
  }

  Rng nrng(derive_seed(seed, 'n', 0));
  const double sn = std::sqrt(slot.noise_power);
  for (auto& sample : slot.samples) sample += sn * nrng.cnormal();
  return slot;
}

CancelMeasurement cancel_and_measure(const BasebandSlot& slot,
                                     const std::vector<int>& cancelled,
                                     int target, const CancelOptions& opts) {
  std::map<int, const UserTruth*> by_id;
  for (const auto& t : slot.truth) by_id.emplace(t.user, &t);

  std::set<int> cset;
  for (int id : cancelled) {
    if (by_id.find(id) == by_id.end())
      throw std::invalid_argument("cancelled id " + std::to_string(id) +
                                  " does not transmit in this slot");
    if (!cset.insert(id).second)
      throw std::invalid_argument("duplicate cancelled id " +
                                  std::to_string(id));
  }
  if (cset.find(target) == cset.end())
    throw std::invalid_argument("target must be among the cancelled ids");

  CancelMeasurement out;
  out.residual = slot.samples;
  const int n = static_cast<int>(slot.samples.size());

  // Streams are keyed by user id and the subtraction runs in sorted-id
  // order, so the outcome does not depend on the order the caller lists
  // the cancelled ids in.
  for (int id : cset) {
    const UserTruth& ut = *by_id.at(id);
    const bool self = (id == target);
    const double eps = self ? ut.link.eps_self : ut.link.eps_cross;
    const bool inject = opts.inject_reference_noise && !self;
    Rng payload(ut.payload_seed);
    Rng erng(derive_seed(opts.seed, 'e', static_cast<std::uint64_t>(id)));
    Rng wrng(derive_seed(opts.seed, 'w', static_cast<std::uint64_t>(id)));
    const double sw = std::sqrt(ut.link.noise_power);
    for (int t = 0; t < n; ++t) {
      const std::complex<double> x = qpsk_symbol(payload.next_u64());
      std::complex<double> replica = x * ut.h_eff * (1.0 + eps * erng.cnormal());
      if (inject) replica += sw * wrng.cnormal();
      out.residual[static_cast<std::size_t>(t)] -= replica;
    }
  }

  out.residual_power = mean_power(out.residual);
  if (out.residual_power <= 0.0)
    throw std::domain_error("residual power vanished; nothing to measure");
  out.empirical_sinr = by_id.at(target)->link.gamma / out.residual_power;
  return out;
}

double estimate_phase_drift(const std::vector<std::complex<double>>& received,
                            const std::vector<std::complex<double>>& reference) {
  if (received.size() != reference.size())
    throw std::invalid_argument("phase estimate: stream lengths differ");
  if (received.empty())
    throw std::invalid_argument("phase estimate: empty streams");
  double s = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < received.size(); ++i) {
    const double d = std::arg(received[i] * std::conj(reference[i]));
    s += std::sin(d);
    c += std::cos(d);
  }
  return std::atan2(s, c);
}

double mean_power(const std::vector<std::complex<double>>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& z : samples) acc += std::norm(z);
  return acc / static_cast<double>(samples.size());
}

void dump_slot(const BasebandSlot& slot, const std::string& base_path) {
  {
    std::ofstream iq(base_path + ".iq", std::ios::binary);
    if (!iq)
      throw std::runtime_error("cannot open " + base_path + ".iq for writing");
    for (const auto& z : slot.samples) {
      const float pair[2] = {static_cast<float>(z.real()),
                             static_cast<float>(z.imag())};
      iq.write(reinterpret_cast<const char*>(pair), sizeof(pair));
    }
    iq.flush();
    if (!iq) throw std::runtime_error("failed writing " + base_path + ".iq");
  }

  std::ofstream txt(base_path + ".txt", std::ios::binary);
  if (!txt)
    throw std::runtime_error("cannot open " + base_path + ".txt for writing");
  txt << "format=cf32le symbols=" << slot.samples.size() << " users=";
  for (std::size_t i = 0; i < slot.truth.size(); ++i) {
    if (i) txt << ';';
    txt << slot.truth[i].user;
  }
  txt << " noise_power=" << format_g6(slot.noise_power) << " seed=" << slot.seed
      << "\n";
  txt.flush();
  if (!txt) throw std::runtime_error("failed writing " + base_path + ".txt");
}

SlotDump read_slot_dump(const std::string& base_path) {
  std::ifstream iq(base_path + ".iq", std::ios::binary);
  if (!iq) throw std::runtime_error("cannot open " + base_path + ".iq");
  const std::string bytes((std::istreambuf_iterator<char>(iq)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() % (2 * sizeof(float)) != 0)
    throw std::runtime_error(base_path + ".iq is truncated");

  SlotDump dump;
  const std::size_t count = bytes.size() / (2 * sizeof(float));
  dump.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    float re = 0.0f;
    float im = 0.0f;
    std::memcpy(&re, bytes.data() + i * 2 * sizeof(float), sizeof(float));
    std::memcpy(&im, bytes.data() + (i * 2 + 1) * sizeof(float), sizeof(float));
    dump.samples.emplace_back(re, im);
  }

  std::ifstream txt(base_path + ".txt");
  if (!txt) throw std::runtime_error("cannot open " + base_path + ".txt");
  std::getline(txt, dump.header);
  return dump;
}

}  // namespace sicsim
