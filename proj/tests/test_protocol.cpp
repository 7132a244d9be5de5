#include <doctest.h>

#include <cmath>
#include <map>

#include "qsi/decoy.hpp"
#include "qsi/protocol.hpp"

using namespace qsi;
using namespace qsi::sim;

namespace {

double pmf_ref(double mu, int n) {
  double p = std::exp(-mu);
  for (int k = 1; k <= n; ++k) p *= mu / k;
  return p;
}

// |observed - expected| within k binomial standard deviations
bool within_sigma(double hits, double trials, double p, double k = 5.0) {
  const double sd = std::sqrt(trials * p * (1.0 - p));
  return std::abs(hits - trials * p) <= k * sd + 1.0;
}

// E = sum_n P_n [Y0/2 + e_n (Y_n - Y0)] / sum_n P_n Y_n with e_n per photon number
template <typename ErrorOf>
double expected_qber(const decoy::ChannelModel& ch, double mu, ErrorOf e_of) {
  double err = 0.0;
  double gain = 0.0;
  for (int n = 0; n < 80; ++n) {
    const double p = pmf_ref(mu, n);
    const double y = n == 0 ? ch.background_yield
                            : 1.0 - std::pow(1.0 - ch.transmittance, n) * (1.0 - ch.background_yield);
    gain += p * y;
    err += p * (0.5 * ch.background_yield + (n == 0 ? 0.0 : e_of(n) * (y - ch.background_yield)));
  }
  return err / gain;
}

SimulationConfig bright_link() {
  SimulationConfig cfg;
  cfg.channel = {0.05, 1e-3, 0.02};
  cfg.rng_seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("pulse sampler reproduces the source mixture") {
  const decoy::IntensityConfig src;
  const PulseSampler sampler(src);
  Rng rng(3);
  const int draws = 4'000'000;
  std::map<std::pair<int, int>, int> cells;
  std::array<int, 4> phases{};
  for (int i = 0; i < draws; ++i) {
    const auto p = sampler(rng);
    ++cells[{static_cast<int>(p.intensity_class), static_cast<int>(p.photon_number)}];
    ++phases[p.phase_index];
  }
  const std::array<double, 3> means{src.mu, src.nu, 0.0};
  for (int k = 0; k < 3; ++k) {
    for (int n = 0; n <= 4; ++n) {
      const double p = src.class_probabilities[k] * (means[k] == 0.0 ? (n == 0 ? 1.0 : 0.0)
                                                                       : pmf_ref(means[k], n));
      CHECK(within_sigma(cells[{k, n}], draws, p));
    }
  }
  for (int phase : phases) CHECK(within_sigma(phase, draws, 0.25));
  CHECK(basis_of(0) == Basis::Z);
  CHECK(basis_of(1) == Basis::X);
  CHECK(basis_of(2) == Basis::Z);
  CHECK(basis_of(3) == Basis::X);
}

TEST_CASE("ideal and pure-noise channels") {
  Rng rng(8);
  const ChannelResponse ideal(decoy::ChannelModel{1.0, 0.0, 0.0});
  int sifted = 0;
  int errors = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto ev = transmit(PulseState{IntensityClass::signal, static_cast<std::uint8_t>(i % 4), 1},
                             ideal, rng);
    REQUIRE(ev.detected);
    sifted += ev.sifted();
    errors += ev.sifted() && ev.bit_error;
  }
  CHECK(errors == 0);
  CHECK(within_sigma(sifted, 20000, 0.5));

  const ChannelResponse noise(decoy::ChannelModel{0.0, 1.0, 0.0});
  sifted = errors = 0;
  for (int i = 0; i < 20000; ++i) {
    const auto ev = transmit(PulseState{IntensityClass::vacuum, 0, 0}, noise, rng);
    REQUIRE(ev.detected);
    if (ev.sifted()) {
      ++sifted;
      errors += ev.bit_error;
    }
  }
  CHECK(within_sigma(errors, sifted, 0.5));
  CHECK(ideal.background_share(1) == 0.0);
  CHECK(noise.background_share(3) == 1.0);
}

TEST_CASE("honest session matches the analytic gain and QBER") {
  auto cfg = bright_link();
  const auto r = run_session(cfg, 8, 250'000);
  const auto& o = r.observables;
  const double total = 2e6;
  CHECK(o.signal.sent + o.decoy.sent + o.vacuum.sent == 2'000'000);
  CHECK(within_sigma(o.signal.detected, o.signal.sent, decoy::overall_gain(cfg.channel, 0.68)));
  CHECK(within_sigma(o.decoy.detected, o.decoy.sent, decoy::overall_gain(cfg.channel, 0.18)));
  CHECK(within_sigma(o.vacuum.detected, o.vacuum.sent, 1e-3));
  CHECK(within_sigma(o.signal.sent, total, 13.0 / 16.0));

  const double e_mu = expected_qber(cfg.channel, 0.68, [](int) { return 0.02; });
  CHECK(within_sigma(o.signal.errors, o.signal.sifted, e_mu));

  std::uint64_t frame_sum = 0;
  for (auto c : r.frame_counts) frame_sum += c;
  CHECK(r.frame_counts.size() == 8);
  CHECK(frame_sum == o.signal.sifted);
}

TEST_CASE("sessions are deterministic and independent of the worker count") {
  auto cfg = bright_link();
  cfg.threads = 1;
  const auto a = run_session(cfg, 3, 700'000);
  cfg.threads = 4;
  const auto b = run_session(cfg, 3, 700'000);
  CHECK(a.observables == b.observables);
  CHECK(a.frame_counts == b.frame_counts);
  cfg.rng_seed = 6;
  const auto c = run_session(cfg, 3, 700'000);
  CHECK_FALSE(a.observables == c.observables);
}

TEST_CASE("frame transmittance scaling") {
  auto cfg = bright_link();
  cfg.channel.background_yield = 0.0;
  const std::vector<double> scale{1.0, 0.0, 0.5};
  const auto r = run_session(cfg, 3, 200'000, scale);
  CHECK(r.frame_counts[1] == 0);
  CHECK(r.frame_counts[0] > r.frame_counts[2]);
  CHECK(r.frame_counts[2] > 0);
  const std::vector<double> wrong{1.0};
  CHECK_THROWS(run_session(cfg, 3, 10, wrong));
}

TEST_CASE("full intercept-resend raises the decoy QBER to the photon-number mixture") {
  auto cfg = bright_link();
  cfg.attack.enabled = true;
  cfg.attack.profile = attack::AttackProfile(10);
  const auto r = run_session(cfg, 8, 250'000);
  const auto e_of = [&](int n) { return cfg.attack.profile.error_rate(n); };
  CHECK(within_sigma(r.observables.decoy.errors, r.observables.decoy.sifted,
                     expected_qber(cfg.channel, 0.18, e_of)));
  CHECK(within_sigma(r.observables.signal.errors, r.observables.signal.sifted,
                     expected_qber(cfg.channel, 0.68, e_of)));
  // lossless resend keeps the honest gains
  CHECK(within_sigma(r.observables.signal.detected, r.observables.signal.sent,
                     decoy::overall_gain(cfg.channel, 0.68)));

  cfg.attack.resend = ResendPolicy::always_detected;
  const auto d = run_session(cfg, 2, 250'000);
  const double p_nonvac = 1.0 - std::exp(-0.68);
  CHECK(within_sigma(d.observables.signal.detected, d.observables.signal.sent,
                     p_nonvac + std::exp(-0.68) * 1e-3));
}

TEST_CASE("channel calibration") {
  const decoy::IntensityConfig src;
  const auto target = decoy::DecoyObservables::from_rates(2.69e-4, 7.32e-5, 3e-6, 0.0213, 0.0399,
                                                          {1000, 1000, 1000});
  const auto ch = calibrate_channel(target, src);
  CHECK(decoy::overall_gain(ch, src.mu) == doctest::Approx(2.69e-4).epsilon(1e-9));
  CHECK(ch.background_yield == 3e-6);
  CHECK(ch.misalignment_error ==
        doctest::Approx((0.0213 * 2.69e-4 - 0.5 * 3e-6) / (2.69e-4 - 3e-6)).epsilon(1e-12));
  // predicted decoy QBER from the fitted link
  const double e_nu = expected_qber(ch, src.nu, [&](int) { return ch.misalignment_error; });
  CHECK(e_nu == doctest::Approx(0.0357).epsilon(0.01));

  auto bad = target;
  bad.q_mu = 1e-7;  // below background
  CHECK_THROWS_AS(calibrate_channel(bad, src), InfeasibleCalibration);
  bad.q_mu = 0.9;  // above what a perfect link delivers at mu = 0.68
  CHECK_THROWS_AS(calibrate_channel(bad, src), InfeasibleCalibration);
}

TEST_CASE("configuration checks") {
  SimulationConfig cfg;
  cfg.channel = {0.1, 0.0, 0.0};
  CHECK_NOTHROW(cfg.validate());
  cfg.attack.enabled = true;
  cfg.attack.fraction = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg.attack.fraction = 1.0;
  CHECK_THROWS(run_session(cfg, 0, 10));
}
