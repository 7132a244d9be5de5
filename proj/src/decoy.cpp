#include "qsi/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qsi::decoy {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::domain_error(message);
}

double ratio_or_zero(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> qber_of(const ClassTally& t) {
  if (t.sifted == 0) return std::nullopt;
  return static_cast<double>(t.errors) / static_cast<double>(t.sifted);
}

ClampedValue clamp_to(double v, double lo, double hi) {
  const double c = std::clamp(v, lo, hi);
  return {c, v, c != v};
}

// Pieces shared by the joint-yield and QBER bounds.
struct ThreePhotonTerms {
  double p3_mu, p3_nu, p0_mu, p0_nu;
  double gap() const { return p3_mu - p3_nu; }
};

ThreePhotonTerms three_photon_terms(const IntensityConfig& cfg) {
  cfg.validate();
  ThreePhotonTerms t{poisson_pmf(cfg.mu, 3), poisson_pmf(cfg.nu, 3), poisson_pmf(cfg.mu, 0),
                     poisson_pmf(cfg.nu, 0)};
  require(t.gap() != 0.0, "P3(mu) equals P3(nu)");
  return t;
}

}  // namespace

void IntensityConfig::validate() const {
  require(nu > 0.0 && nu < mu && mu <= 1.0, "decoy precondition 0 < nu < mu <= 1 violated");
  double sum = 0.0;
  for (double p : class_probabilities) {
    require(p >= 0.0, "negative class probability");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-12, "class probabilities must sum to 1");
}

void ChannelModel::validate() const {
  require(transmittance >= 0.0 && transmittance <= 1.0, "transmittance outside [0, 1]");
  require(background_yield >= 0.0 && background_yield <= 1.0, "background yield outside [0, 1]");
  require(misalignment_error >= 0.0 && misalignment_error <= 0.5,
          "misalignment error outside [0, 0.5]");
}

ClassTally& ClassTally::operator+=(const ClassTally& other) noexcept {
  sent += other.sent;
  detected += other.detected;
  sifted += other.sifted;
  errors += other.errors;
  return *this;
}

DecoyObservables DecoyObservables::from_tallies(const ClassTally& signal, const ClassTally& decoy,
                                                const ClassTally& vacuum) {
  DecoyObservables obs;
  obs.signal = signal;
  obs.decoy = decoy;
  obs.vacuum = vacuum;
  obs.q_mu = ratio_or_zero(signal.detected, signal.sent);
  obs.q_nu = ratio_or_zero(decoy.detected, decoy.sent);
  obs.y0 = ratio_or_zero(vacuum.detected, vacuum.sent);
  obs.e_mu = qber_of(signal);
  obs.e_nu = qber_of(decoy);
  return obs;
}

DecoyObservables DecoyObservables::from_rates(double q_mu, double q_nu, double y0, double e_mu,
                                              double e_nu,
                                              const std::array<std::uint64_t, 3>& sent) {
  for (double r : {q_mu, q_nu, y0, e_mu, e_nu}) require(r >= 0.0 && r <= 1.0, "rate outside [0, 1]");
  auto nominal = [](std::uint64_t n, double gain, double qber) {
    ClassTally t;
    t.sent = n;
    t.detected = static_cast<std::uint64_t>(std::llround(gain * static_cast<double>(n)));
    t.sifted = t.detected / 2;
    t.errors = static_cast<std::uint64_t>(std::llround(qber * static_cast<double>(t.sifted)));
    return t;
  };
  DecoyObservables obs;
  obs.q_mu = q_mu;
  obs.q_nu = q_nu;
  obs.y0 = y0;
  obs.e_mu = e_mu;
  obs.e_nu = e_nu;
  obs.signal = nominal(sent[0], q_mu, e_mu);
  obs.decoy = nominal(sent[1], q_nu, e_nu);
  obs.vacuum = nominal(sent[2], y0, 0.5);
  return obs;
}

double poisson_pmf(double mu, int n) {
  require(mu >= 0.0, "poisson_pmf: negative mean");
  require(n >= 0, "poisson_pmf: negative photon number");
  if (mu == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mu) - mu - std::lgamma(n + 1.0));
}

double yield_n(const ChannelModel& channel, int n) {
  require(n >= 0, "yield_n: negative photon number");
  if (n == 0) return channel.background_yield;
  const double miss = std::pow(1.0 - channel.transmittance, n);
  return std::clamp(1.0 - miss * (1.0 - channel.background_yield), 0.0, 1.0);
}

double overall_gain(const ChannelModel& channel, double mu) {
  require(mu >= 0.0, "overall_gain: negative mean");
  double gain = 0.0;
  for (int n = 0;; ++n) {
    gain += poisson_pmf(mu, n) * yield_n(channel, n);
    // Terms beyond n shrink by at least mu/(n+2) per step, and Y_n <= 1.
    const double ratio = mu / (n + 2.0);
    if (ratio < 1.0) {
      const double tail = poisson_pmf(mu, n + 1) / (1.0 - ratio);
      if (tail < 1e-15) break;
    }
  }
  return gain;
}

bool DecoyInequalityReport::all_pass() const {
  return one_photon_holds && two_photon_holds &&
         std::all_of(ratio_holds.begin(), ratio_holds.end(), [](bool b) { return b; });
}

DecoyInequalityReport decoy_inequality_check(double mu, double nu, int n_max) {
  require(nu > 0.0 && nu < mu && mu <= 1.0, "decoy precondition 0 < nu < mu <= 1 violated");
  require(n_max >= 3, "n_max must be at least 3");
  DecoyInequalityReport report;
  report.n_max = n_max;
  // log(P_n(mu)/P_n(nu)) = nu - mu + n log(mu/nu); stays finite where the
  // pmfs themselves underflow.
  auto log_ratio = [&](int n) { return nu - mu + n * std::log(mu / nu); };
  const double reference = log_ratio(3);
  for (int n = 3; n <= n_max; ++n) {
    report.ratio_holds.push_back(log_ratio(n) >= reference - 1e-12 * std::abs(reference));
  }
  report.one_photon_holds = poisson_pmf(mu, 1) > poisson_pmf(nu, 1);
  report.two_photon_holds = poisson_pmf(mu, 2) > poisson_pmf(nu, 2);
  return report;
}

ClampedValue joint_yield_lower_bound(const DecoyObservables& obs, const IntensityConfig& cfg) {
  const auto t = three_photon_terms(cfg);
  const double v = (t.p3_mu * obs.q_nu - t.p3_nu * obs.q_mu -
                    (t.p0_nu * t.p3_mu - t.p0_mu * t.p3_nu) * obs.y0) /
                   t.gap();
  if (v < 0.0) return {0.0, v, true};
  return {v, v, false};
}

ClampedValue qber_lower_bound(const DecoyObservables& obs, const IntensityConfig& cfg, double e2) {
  if (!(obs.q_nu > 0.0)) throw UndefinedBound("qber_lower_bound: decoy gain is zero");
  require(e2 >= 0.0 && e2 <= 0.5, "qber_lower_bound: e2 outside [0, 0.5]");
  const auto t = three_photon_terms(cfg);
  const double background = 0.5 * t.p0_nu * obs.y0;
  const double gains = e2 * (t.p3_mu * obs.q_nu - t.p3_nu * obs.q_mu) / t.gap();
  const double dark = e2 * obs.y0 * (t.p0_nu * t.p3_mu - t.p0_mu * t.p3_nu) / t.gap();
  return clamp_to((background + gains - dark) / obs.q_nu, 0.0, 0.5);
}

}  // namespace qsi::decoy
