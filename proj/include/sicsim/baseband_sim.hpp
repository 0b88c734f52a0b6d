#pragma once

// Symbol-level baseband oracle.  Synthesizes one shared collision slot of
// QPSK packets through complex channels with multiplicative hardware noise
// and AWGN, replays imperfect cancellation the way the analytic residual
// model assumes it, and measures the empirical post-cancellation SINR so the
// closed-form ssinr() can be checked against an independent signal chain.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sicsim/phy_model.hpp"

namespace sicsim {

struct BasebandUser {
  int user = 0;
  LinkParams link;
  std::uint64_t payload_seed = 0;  // QPSK payload stream, replayable on its own
  double phase_drift = 0.0;        // radians, applied on top of the random phase
};

struct UserTruth {
  int user = 0;
  LinkParams link;
  std::uint64_t payload_seed = 0;
  std::complex<double> h;      // sqrt(gamma) * exp(j*phase), drift excluded
  std::complex<double> h_eff;  // h rotated by the user's phase drift
};

struct BasebandSlot {
  std::vector<std::complex<double>> samples;
  std::vector<UserTruth> truth;  // one entry per transmitter, input order
  std::uint64_t seed = 0;
  double noise_power = 0.0;  // AWGN power applied (taken from users[0].link)
};

struct SynthesisOptions {
  int symbols = 4096;
  // Hold the multiplicative hardware-noise coefficient constant over the
  // packet instead of redrawing it per symbol (same average power).
  bool hw_noise_constant = false;
};

// r[t] = sum_k x_k[t] * v_k[t] * h_eff_k + n[t], with unit-power QPSK
// symbols x from each user's payload seed, v = 1 + sqrt(sigma_v2)*CN(0,1),
// and AWGN of users[0].link.noise_power.  Per-user phases are uniform,
// derived from `seed`; throws std::invalid_argument on empty input,
// duplicate user ids, invalid links, or symbols < 1.
BasebandSlot synthesize_slot(const std::vector<BasebandUser>& users,
                             std::uint64_t seed,
                             const SynthesisOptions& opts = {});

struct CancelOptions {
  // Re-created replicas of packets decoded in *other* slots carry that
  // reference slot's noise into the subtraction (one injected noise term per
  // cross cancellation, matching the analytic residual model).  Disable to
  // subtract noiseless replicas instead.
  bool inject_reference_noise = true;
  std::uint64_t seed = 0;  // stream for estimation errors and injected noise
};

struct CancelMeasurement {
  double residual_power = 0.0;  // mean |residual|^2 over the slot
  double empirical_sinr = 0.0;  // gamma_target / residual_power
  std::vector<std::complex<double>> residual;
};

// Subtract the replica x_k * h_eff_k * (1 + e_k) of every cancelled packet
// (e_k is a white complex estimation-error process of power eps_self^2 for
// the target, eps_cross^2 otherwise, so the measured residual concentrates
// on its expectation) and measure what is left as the target's empirical
// SINR.  The target must be among the cancelled ids and all cancelled ids
// must transmit in the slot; throws std::invalid_argument otherwise.
CancelMeasurement cancel_and_measure(const BasebandSlot& slot,
                                     const std::vector<int>& cancelled,
                                     int target,
                                     const CancelOptions& opts = {});

// Circular-mean phase offset between two equally-long sample streams:
// atan2(sum sin d_t, sum cos d_t) with d_t = arg(received[t] *
// conj(reference[t])).  Throws std::invalid_argument on length mismatch or
// empty input.
double estimate_phase_drift(const std::vector<std::complex<double>>& received,
                            const std::vector<std::complex<double>>& reference);

// Mean |x|^2 of a sample stream (0 for an empty stream).
double mean_power(const std::vector<std::complex<double>>& samples);

// Write `<base_path>.iq` (interleaved little-endian float32 I/Q) and
// `<base_path>.txt` (a one-line description of the capture).
void dump_slot(const BasebandSlot& slot, const std::string& base_path);

struct SlotDump {
  std::vector<std::complex<double>> samples;
  std::string header;
};

// Read back a dump written by dump_slot.  Throws std::runtime_error when a
// file is missing or truncated.
SlotDump read_slot_dump(const std::string& base_path);

}  // namespace sicsim
