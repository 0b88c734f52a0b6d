#pragma once

// SNR-to-error-probability mapping over a Rician fading link.  rician_ser
// evaluates the average QPSK symbol error probability through the
// moment-generating-function integral of the fading distribution;
// decode_prob raises symbol survival to the packet length.

#include <cstdint>
#include <stdexcept>

namespace sicsim {

struct RicianLink {
  double k_factor = 4.0;      // line-of-sight to scattered power ratio
  int packet_len_bits = 1024;  // 128-byte packets by default
};

// Throws std::invalid_argument naming the offending field.
// Domain: k_factor >= 0, packet_len_bits >= 1.
void validate(const RicianLink& link);

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SerOptions {
  // Drop the s factor from the fading MGF exponent.  The uncorrected form
  // grows without bound in the mean SNR and can exceed 1, so it is no
  // longer a probability; decode_prob clamps it.  Kept for auditability.
  bool mgf_exponent_without_s = false;
  double quad_tol = 1e-10;  // absolute tolerance of the adaptive quadrature
};

// Average QPSK symbol error probability at mean linear SNR `gamma` over a
// Rician channel:  (1/pi) * integral over theta in (0, 3*pi/4] of
// M(-sin^2(pi/4)/sin^2(theta)) d(theta), where M is the fading MGF.
// Exact limits: 0.75 at gamma == 0, -> 0 as gamma -> infinity.
// Throws QuadratureError if the integrator cannot reach quad_tol.
double rician_ser(double gamma, double k_factor, const SerOptions& opts = {});

// Probability that a packet of packet_len_bits symbols-worth of bits decodes:
// (1 - rician_ser)^packet_len_bits, with the base clamped to [0, 1] so the
// uncorrected MGF variant stays well defined.  A length of zero yields 1.
double decode_prob(double gamma, const RicianLink& link,
                   const SerOptions& opts = {});

struct McEstimate {
  double mean = 0.0;
  double stderror = 0.0;
  std::uint64_t trials = 0;
};

// Independent Monte Carlo oracle for rician_ser: draws a Rician channel
// amplitude and two Gaussian noise components per trial and counts QPSK
// symbol errors directly.  Deterministic for a given seed regardless of
// worker count (fixed chunking, fixed accumulation order).
McEstimate mc_rician_qpsk_ser(double gamma, double k_factor,
                              std::uint64_t trials, std::uint64_t seed,
                              int workers = 0);

}  // namespace sicsim
