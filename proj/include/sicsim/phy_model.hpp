#pragma once

// Residual-interference model for successive interference cancellation.
// A cancelled packet leaves behind two residual power terms (hardware noise
// on the transmit side, channel-estimation error on the receive side) plus
// the noise of the reference slot its replica came from.  ssinr() combines
// those residuals with the full power of uncancelled interferers into the
// post-cancellation SINR of one target packet inside a collision slot.

#include <map>
#include <vector>

namespace sicsim {

struct LinkParams {
  double gamma = 1.0;        // received signal power (linear)
  double sigma_v2 = 0.0;     // variance of the multiplicative hardware-noise coefficient
  double eps_self = 0.0;     // channel-estimation error for a user's own packet
  double eps_cross = 0.0;    // channel-estimation error when estimated inside a collision
  double noise_power = 0.1;  // AWGN power (linear)
};

// Throws std::invalid_argument naming the offending field.
// Domain: gamma >= 0, sigma_v2 >= 0, 0 <= eps_self <= eps_cross < 1,
// noise_power > 0.
void validate(const LinkParams& link);

struct ResidualPowers {
  double hw_residual = 0.0;       // gamma * sigma_v2
  double chanest_residual = 0.0;  // gamma * eps^2 * (1 + sigma_v2)
};

// Power left behind when one packet is cancelled with an imperfect replica.
// The self/cross flag selects which estimation error applies.  The cross
// term between the two impairments is neglected; the baseband oracle
// quantifies that approximation.
ResidualPowers residual_powers(const LinkParams& link, bool self_cancellation);

struct CancellationContext {
  std::vector<int> transmitters;  // S: every packet sharing the slot
  std::vector<int> cancelled;     // C: packets cancelled so far, target included
  int target = 0;                 // i: the packet being decoded
};

struct SsinrOptions {
  // Charge residual terms for every transmitter instead of only the
  // cancelled ones (uncancelled interferers are then counted twice: once as
  // residual, once at full power).  This reproduces the uncorrected form of
  // the model for auditability; leave false for the corrected reading.
  bool residuals_over_all_transmitters = false;
};

// Post-cancellation SINR of ctx.target:
//   gamma_i / ( sum_{k in C} (hw_k + chanest_k + noise_k)
//             + sum_{j in S\C} gamma_j )
// with the self estimation error applied for k == target and the cross
// error for every other cancelled packet; each cancelled packet contributes
// the noise power of the reference slot its replica was taken from.
// Throws std::invalid_argument when ctx is inconsistent (C must be a subset
// of S, target must be in both) or a transmitter has no LinkParams entry,
// and std::domain_error when the denominator is zero.
double ssinr(const CancellationContext& ctx,
             const std::map<int, LinkParams>& links,
             const SsinrOptions& opts = {});

// SINR of a packet decoded m-th in a chain where all packets share one
// LinkParams value and the slot's entire occupancy of m packets has been
// cancelled (m - 1 cross cancellations plus the target's own replica):
//   1 / ( (m-1)*a_cross + a_self + m/snr0 ),
// a_x = sigma_v2 + eps_x^2*(1+sigma_v2), snr0 = gamma/noise_power.
double homogeneous_chain_ssinr(int m, const LinkParams& link,
                               const SsinrOptions& opts = {});

}  // namespace sicsim
