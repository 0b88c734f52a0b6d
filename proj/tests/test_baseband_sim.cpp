#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "sicsim/baseband_sim.hpp"
#include "sicsim/phy_model.hpp"
#include "sicsim/rng.hpp"
#include "sicsim/scenario_analysis.hpp"

using namespace sicsim;

namespace {

LinkParams clean_link(double noise = 1e-30) {
  LinkParams link;
  link.gamma = 1.0;
  link.sigma_v2 = 0.0;
  link.eps_self = 0.0;
  link.eps_cross = 0.0;
  link.noise_power = noise;
  return link;
}

LinkParams measured_link() {
  LinkParams link;
  link.gamma = 1.0;
  link.sigma_v2 = 0.001;
  link.eps_self = 0.001;
  link.eps_cross = 0.2;
  link.noise_power = 0.1;
  return link;
}

std::vector<BasebandUser> make_users(int count, const LinkParams& link,
                                     double drift = 0.0) {
  std::vector<BasebandUser> users;
  for (int id = 0; id < count; ++id) {
    BasebandUser u;
    u.user = id;
    u.link = link;
    u.payload_seed = derive_seed(1000, 'P', static_cast<std::uint64_t>(id));
    u.phase_drift = drift;
    users.push_back(u);
  }
  return users;
}

double db(double x) { return 10.0 * std::log10(x); }

}  // namespace

TEST_CASE("slot synthesis validation") {
  SynthesisOptions opts;
  CHECK_THROWS_AS(synthesize_slot({}, 1, opts), std::invalid_argument);

  auto users = make_users(2, clean_link());
  opts.symbols = 0;
  CHECK_THROWS_AS(synthesize_slot(users, 1, opts), std::invalid_argument);
  opts.symbols = 16;

  users[1].user = 0;  // duplicate id
  CHECK_THROWS_AS(synthesize_slot(users, 1, opts), std::invalid_argument);

  users = make_users(2, clean_link());
  users[0].user = -1;
  CHECK_THROWS_AS(synthesize_slot(users, 1, opts), std::invalid_argument);

  users = make_users(1, clean_link());
  users[0].link.noise_power = 0.0;  // invalid link
  CHECK_THROWS_AS(synthesize_slot(users, 1, opts), std::invalid_argument);
}

TEST_CASE("synthesis is deterministic in the seed") {
  const auto users = make_users(3, measured_link());
  SynthesisOptions opts;
  opts.symbols = 256;
  const auto a = synthesize_slot(users, 42, opts);
  const auto b = synthesize_slot(users, 42, opts);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(a.samples[i] == b.samples[i]);

  const auto c = synthesize_slot(users, 43, opts);
  CHECK(a.samples[0] != c.samples[0]);

  // Truth carries one entry per transmitter with |h|^2 = gamma.
  REQUIRE(a.truth.size() == 3);
  for (const auto& t : a.truth)
    CHECK(std::norm(t.h) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a perfect self-replica removes the packet exactly") {
  // One impairment-free transmitter and (numerically) no noise: subtracting
  // the regenerated packet must cancel to machine precision, which pins the
  // payload regeneration, channel application, and phase bookkeeping.
  const auto users = make_users(1, clean_link());
  SynthesisOptions opts;
  opts.symbols = 512;
  const auto slot = synthesize_slot(users, 7, opts);
  CHECK(mean_power(slot.samples) == doctest::Approx(1.0).epsilon(0.2));

  const auto meas = cancel_and_measure(slot, {0}, 0, {});
  CHECK(meas.residual_power < 1e-25);
  CHECK(meas.empirical_sinr > 1e25);
}

TEST_CASE("received power matches the link budget") {
  const auto users = make_users(4, measured_link());
  SynthesisOptions opts;
  opts.symbols = 40000;
  const auto slot = synthesize_slot(users, 5, opts);
  // E|r|^2 = sum_k gamma*(1+sigma_v2) + noise = 4*1.001 + 0.1.
  CHECK(mean_power(slot.samples) == doctest::Approx(4.104).epsilon(0.03));
}

TEST_CASE("uncancelled interference dominates the first decode") {
  // Two clean users, noise 0.1: after removing only the target, the residual
  // is the other packet plus noise, so the SINR sits at 1/1.1.
  const auto users = make_users(2, clean_link(0.1));
  SynthesisOptions opts;
  opts.symbols = 50000;
  const auto slot = synthesize_slot(users, 21, opts);
  const auto meas = cancel_and_measure(slot, {0}, 0, {});
  CHECK(meas.empirical_sinr == doctest::Approx(1.0 / 1.1).epsilon(0.05));
}

TEST_CASE("noiseless replicas leave only the slot noise behind") {
  const auto users = make_users(2, clean_link(0.1));
  SynthesisOptions opts;
  opts.symbols = 50000;
  const auto slot = synthesize_slot(users, 31, opts);
  CancelOptions copts;
  copts.inject_reference_noise = false;
  copts.seed = 77;
  const auto meas = cancel_and_measure(slot, {0, 1}, 0, copts);
  CHECK(meas.residual_power == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("each cross replica carries its reference slot's noise") {
  const auto users = make_users(3, clean_link(0.1));
  SynthesisOptions opts;
  opts.symbols = 50000;
  const auto slot = synthesize_slot(users, 32, opts);
  CancelOptions copts;  // injection on by default
  copts.seed = 78;
  const auto meas = cancel_and_measure(slot, {0, 1, 2}, 0, copts);
  // Slot noise + one injected noise per cross cancellation = 3 * 0.1.
  CHECK(meas.residual_power == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("empirical SINR tracks the residual model within half a dB") {
  const auto users = make_users(4, measured_link());
  SynthesisOptions opts;
  opts.symbols = 50000;
  const auto slot = synthesize_slot(users, 91, opts);
  const auto links = homogeneous_links(4, measured_link());

  for (int c : {2, 4}) {
    CancellationContext ctx;
    ctx.transmitters = {0, 1, 2, 3};
    for (int i = 0; i < c; ++i) ctx.cancelled.push_back(i);
    ctx.target = 0;
    const double analytical = ssinr(ctx, links);

    CancelOptions copts;
    copts.seed = derive_seed(91, 'c', static_cast<std::uint64_t>(c));
    const auto meas = cancel_and_measure(slot, ctx.cancelled, 0, copts);
    CHECK(std::abs(db(meas.empirical_sinr) - db(analytical)) < 0.5);
  }
}

TEST_CASE("cancellation bookkeeping is validated") {
  const auto users = make_users(2, clean_link(0.1));
  SynthesisOptions opts;
  opts.symbols = 64;
  const auto slot = synthesize_slot(users, 3, opts);
  CHECK_THROWS_AS(cancel_and_measure(slot, {0, 5}, 0, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cancel_and_measure(slot, {0, 0}, 0, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(cancel_and_measure(slot, {1}, 0, {}), std::invalid_argument);
}

TEST_CASE("cancellation order does not change the measurement") {
  const auto users = make_users(3, measured_link());
  SynthesisOptions opts;
  opts.symbols = 2048;
  const auto slot = synthesize_slot(users, 12, opts);
  CancelOptions copts;
  copts.seed = 5;
  const auto a = cancel_and_measure(slot, {0, 1, 2}, 1, copts);
  const auto b = cancel_and_measure(slot, {2, 0, 1}, 1, copts);
  CHECK(a.residual_power == b.residual_power);
}

TEST_CASE("phase drift recovery") {
  SynthesisOptions opts;
  opts.symbols = 4096;

  // Noise-free: the circular mean recovers the rotation almost exactly.
  const auto clean_ref = synthesize_slot(make_users(1, clean_link()), 9, opts);
  const auto clean_rx =
      synthesize_slot(make_users(1, clean_link(), 0.3), 9, opts);
  CHECK(estimate_phase_drift(clean_rx.samples, clean_ref.samples) ==
        doctest::Approx(0.3).epsilon(1e-9));

  // With noise the estimate concentrates as the stream grows.
  const auto noisy_ref =
      synthesize_slot(make_users(1, clean_link(0.1)), 9, opts);
  const auto noisy_rx =
      synthesize_slot(make_users(1, clean_link(0.1), 0.3), 9, opts);
  const double est = estimate_phase_drift(noisy_rx.samples, noisy_ref.samples);
  CHECK(std::abs(est - 0.3) < 0.02);

  SynthesisOptions short_opts;
  short_opts.symbols = 64;
  const auto short_ref =
      synthesize_slot(make_users(1, clean_link(0.1)), 9, short_opts);
  const auto short_rx =
      synthesize_slot(make_users(1, clean_link(0.1), 0.3), 9, short_opts);
  const double short_est =
      estimate_phase_drift(short_rx.samples, short_ref.samples);
  CHECK(std::abs(short_est - 0.3) < 0.2);  // noisier, still unbiased

  CHECK_THROWS_AS(
      estimate_phase_drift(clean_rx.samples,
                           std::vector<std::complex<double>>(12)),
      std::invalid_argument);
  CHECK_THROWS_AS(estimate_phase_drift({}, {}), std::invalid_argument);
}

TEST_CASE("constant hardware-noise coefficient mode") {
  auto link = measured_link();
  link.sigma_v2 = 0.25;
  const auto users = make_users(2, link);
  SynthesisOptions per_symbol;
  per_symbol.symbols = 1024;
  SynthesisOptions per_packet = per_symbol;
  per_packet.hw_noise_constant = true;

  const auto a = synthesize_slot(users, 17, per_symbol);
  const auto b = synthesize_slot(users, 17, per_packet);
  // Both modes consume the same coefficient stream, so the first symbol
  // coincides and the divergence starts at the second draw.
  CHECK(a.samples[0] == b.samples[0]);
  CHECK(a.samples[1] != b.samples[1]);

  // With sigma_v2 = 0 the coefficient is exactly 1 either way.
  const auto clean_users = make_users(2, clean_link(0.1));
  const auto c = synthesize_slot(clean_users, 17, per_symbol);
  const auto d = synthesize_slot(clean_users, 17, per_packet);
  for (std::size_t i = 0; i < c.samples.size(); ++i)
    CHECK(c.samples[i] == d.samples[i]);
}

TEST_CASE("mean power") {
  CHECK(mean_power({}) == 0.0);
  CHECK(mean_power({{3.0, 4.0}}) == doctest::Approx(25.0));
  CHECK(mean_power({{1.0, 0.0}, {0.0, -1.0}}) == doctest::Approx(1.0));
}

TEST_CASE("capture dump round-trip") {
  const auto users = make_users(2, measured_link());
  SynthesisOptions opts;
  opts.symbols = 64;
  const auto slot = synthesize_slot(users, 5, opts);

  const auto dir = std::filesystem::temp_directory_path() / "sicsim_dump_test";
  std::filesystem::create_directories(dir);
  const std::string base = (dir / "slot").string();
  dump_slot(slot, base);

  const SlotDump dump = read_slot_dump(base);
  REQUIRE(dump.samples.size() == slot.samples.size());
  for (std::size_t i = 0; i < dump.samples.size(); ++i) {
    CHECK(dump.samples[i].real() ==
          static_cast<double>(static_cast<float>(slot.samples[i].real())));
    CHECK(dump.samples[i].imag() ==
          static_cast<double>(static_cast<float>(slot.samples[i].imag())));
  }
  CHECK(dump.header ==
        "format=cf32le symbols=64 users=0;1 noise_power=0.1 seed=5");

  CHECK_THROWS_AS(read_slot_dump((dir / "missing").string()),
                  std::runtime_error);
  std::filesystem::remove_all(dir);
}
