#include "qsi/security.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace qsi::security {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "undefined"; }

}  // namespace

std::string to_string(Decision d) {
  switch (d) {
    case Decision::secure:
      return "secure";
    case Decision::compromised:
      return "compromised";
    case Decision::inconclusive:
      break;
  }
  return "inconclusive";
}

SecurityVerdict verdict(const decoy::DecoyObservables& obs, const decoy::IntensityConfig& cfg,
                        double e2, const VerdictPolicy& policy) {
  SecurityVerdict v;
  v.measured_e_nu = obs.e_nu;
  v.decoy_sifted = obs.decoy.sifted;
  v.decoy_errors = obs.decoy.errors;
  if (obs.q_nu > 0.0) {
    const auto bound = decoy::qber_lower_bound(obs, cfg, e2);
    v.bound_e_nu_l = bound.value;
    v.bound_clamped = bound.clamped;
  }
  if (!v.measured_e_nu || !v.bound_e_nu_l) return v;

  const double e = *v.measured_e_nu;
  if (v.decoy_sifted > 0) {
    v.standard_error = std::sqrt(e * (1.0 - e) / static_cast<double>(v.decoy_sifted));
  }
  if (v.decoy_sifted < policy.min_sifted) return v;

  const double margin = policy.sigma_margin * v.standard_error;
  if (e + margin < *v.bound_e_nu_l) {
    v.decision = Decision::secure;
  } else if (e - margin >= *v.bound_e_nu_l) {
    v.decision = Decision::compromised;
  }
  return v;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

KeyRateEstimate secret_key_rate(const decoy::DecoyObservables& obs,
                                const decoy::IntensityConfig& cfg, const KeyRateParams& params) {
  cfg.validate();
  KeyRateEstimate out;
  if (!obs.e_mu || !obs.e_nu || *obs.e_mu >= 0.5) return out;

  const double mu = cfg.mu;
  const double nu = cfg.nu;
  const double e_mu = *obs.e_mu;
  const double e_nu = *obs.e_nu;

  // Single-photon yield and error bounds from the vacuum+weak decoy pair.
  out.y1_lower = mu / (mu * nu - nu * nu) *
                 (obs.q_nu * std::exp(nu) - obs.q_mu * std::exp(mu) * nu * nu / (mu * mu) -
                  (mu * mu - nu * nu) / (mu * mu) * obs.y0);
  out.y1_lower = std::max(0.0, out.y1_lower);
  out.q1_lower = mu * std::exp(-mu) * out.y1_lower;
  if (out.y1_lower > 0.0) {
    out.e1_upper = std::clamp(
        (e_nu * obs.q_nu * std::exp(nu) - 0.5 * obs.y0) / (out.y1_lower * nu), 0.0, 0.5);
  }

  const double q = params.sifting_factor * params.signal_fraction;
  const double per_pulse = q * (-obs.q_mu * params.f_ec * binary_entropy(e_mu) +
                                out.q1_lower * (1.0 - binary_entropy(out.e1_upper)));
  out.bits_per_pulse = std::max(0.0, per_pulse);
  out.bits_per_second = out.bits_per_pulse * params.pulse_rate;
  return out;
}

std::string to_key_value(const SecurityVerdict& v) {
  std::string out;
  out += "decision=" + to_string(v.decision) + "\n";
  out += "measured_e_nu=" + fmt(v.measured_e_nu) + "\n";
  out += "bound_e_nu_l=" + fmt(v.bound_e_nu_l) + "\n";
  out += "bound_clamped=" + std::string(v.bound_clamped ? "true" : "false") + "\n";
  out += "standard_error=" + fmt(v.standard_error) + "\n";
  out += "decoy_sifted=" + std::to_string(v.decoy_sifted) + "\n";
  out += "decoy_errors=" + std::to_string(v.decoy_errors) + "\n";
  out += "key_rate_bps=" + fmt(v.key_rate_bps) + "\n";
  return out;
}

std::string csv_header() {
  return "decision,measured_e_nu,bound_e_nu_l,bound_clamped,standard_error,decoy_sifted,"
         "decoy_errors,key_rate_bps\n";
}

std::string to_csv_row(const SecurityVerdict& v) {
  return to_string(v.decision) + "," + fmt(v.measured_e_nu) + "," + fmt(v.bound_e_nu_l) + "," +
         (v.bound_clamped ? "true" : "false") + "," + fmt(v.standard_error) + "," +
         std::to_string(v.decoy_sifted) + "," + std::to_string(v.decoy_errors) + "," +
         fmt(v.key_rate_bps) + "\n";
}

}  // namespace qsi::security
