#include "sicsim/link_abstraction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <future>
#include <thread>
#include <vector>

#include "sicsim/rng.hpp"

namespace sicsim {

void validate(const RicianLink& link) {
  if (!(link.k_factor >= 0.0)) throw std::invalid_argument("k_factor must be >= 0");
  if (link.packet_len_bits < 1)
    throw std::invalid_argument("packet_len_bits must be >= 1");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Integrand of the symbol-error integral: the fading MGF evaluated at
// s = -sin^2(pi/4)/sin^2(theta).  The theta -> 0 endpoint is supplied as an
// analytic limit (the MGF vanishes there for positive SNR).
double mgf_integrand(double theta, double gamma, double k, bool printed_exponent) {
  if (theta <= 0.0) return gamma > 0.0 ? 0.0 : 1.0;
  const double sin_theta = std::sin(theta);
  const double s = -0.5 / (sin_theta * sin_theta);
  const double denom = (1.0 + k) - s * gamma;  // always > 0 for s < 0
  const double prefactor = (1.0 + k) / denom;
  double exponent = printed_exponent ? (k * gamma / denom) : (k * s * gamma / denom);
  exponent = std::min(exponent, 700.0);  // keep exp() finite for the unclamped variant
  return prefactor * std::exp(exponent);
}

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0)
    throw QuadratureError("adaptive quadrature failed to converge within the depth budget");
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 60);
}

}  // namespace

double rician_ser(double gamma, double k_factor, const SerOptions& opts) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(k_factor >= 0.0)) throw std::invalid_argument("k_factor must be >= 0");
  if (gamma == 0.0) return 0.75;  // MGF is identically 1
  const bool printed = opts.mgf_exponent_without_s;
  const auto f = [&](double theta) {
    return mgf_integrand(theta, gamma, k_factor, printed);
  };
  double result = adaptive_simpson(f, 0.0, 0.75 * kPi, opts.quad_tol) / kPi;
  result = std::max(result, 0.0);
  if (!printed) result = std::min(result, 0.75);
  return result;
}

double decode_prob(double gamma, const RicianLink& link, const SerOptions& opts) {
  if (link.packet_len_bits < 0)
    throw std::invalid_argument("packet_len_bits must be >= 0");
  const double ser = rician_ser(gamma, link.k_factor, opts);
  const double base = std::clamp(1.0 - ser, 0.0, 1.0);
  return std::pow(base, static_cast<double>(link.packet_len_bits));
}

McEstimate mc_rician_qpsk_ser(double gamma, double k_factor,
                              std::uint64_t trials, std::uint64_t seed,
                              int workers) {
  constexpr int kChunks = 256;
  constexpr std::uint64_t kStreamTag = 0x52435345u;  // distinct stream family

  const double mu = std::sqrt(k_factor / (k_factor + 1.0));
  const double scatter = std::sqrt(1.0 / (k_factor + 1.0));

  std::array<std::uint64_t, kChunks> chunk_errors{};
  std::array<std::uint64_t, kChunks> chunk_trials{};
  for (int c = 0; c < kChunks; ++c) {
    chunk_trials[c] = trials / kChunks + (static_cast<std::uint64_t>(c) < trials % kChunks ? 1 : 0);
  }

  const auto run_chunk = [&](int c) {
    Rng rng(derive_seed(seed, kStreamTag, static_cast<std::uint64_t>(c)));
    std::uint64_t errors = 0;
    for (std::uint64_t t = 0; t < chunk_trials[c]; ++t) {
      const std::complex<double> h = std::complex<double>(mu, 0.0) + scatter * rng.cnormal();
      const double g = gamma * std::norm(h);
      const double threshold = -std::sqrt(g);
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      if (z1 < threshold || z2 < threshold) ++errors;
    }
    chunk_errors[c] = errors;
  };

  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::clamp(n_workers, 1, kChunks);
  std::vector<std::future<void>> futures;
  futures.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      for (int c = w; c < kChunks; c += n_workers) run_chunk(c);
    }));
  }
  for (auto& f : futures) f.get();

  std::uint64_t errors = 0;
  for (int c = 0; c < kChunks; ++c) errors += chunk_errors[c];

  McEstimate est;
  est.trials = trials;
  est.mean = trials ? static_cast<double>(errors) / static_cast<double>(trials) : 0.0;
  est.stderror = trials ? std::sqrt(std::max(est.mean * (1.0 - est.mean), 0.0) /
                                    static_cast<double>(trials))
                        : 0.0;
  return est;
}

}  // namespace sicsim
