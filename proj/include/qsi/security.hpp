// Security verdict for an imaging session: the measured decoy QBER against
// the intercept-resend floor, plus a decoy-state secret key rate estimate.
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qsi/decoy.hpp"

namespace qsi::security {

enum class Decision : std::uint8_t { secure, compromised, inconclusive };

std::string to_string(Decision d);

struct VerdictPolicy {
  double sigma_margin = 3.0;      // binomial standard errors on E_nu
  std::uint64_t min_sifted = 100;  // sifted decoy detections needed to decide
};

struct SecurityVerdict {
  std::optional<double> measured_e_nu;
  std::optional<double> bound_e_nu_l;
  bool bound_clamped = false;
  Decision decision = Decision::inconclusive;
  double key_rate_bps = 0.0;
  std::uint64_t decoy_sifted = 0;
  std::uint64_t decoy_errors = 0;
  double standard_error = 0.0;  // sqrt(E (1 - E) / sifted)
};

/// secure:       E + k SE <  bound
/// compromised:  E - k SE >= bound
/// inconclusive: otherwise, or fewer than min_sifted decoy detections.
/// key_rate_bps is left at zero; see secret_key_rate.
SecurityVerdict verdict(const decoy::DecoyObservables& obs, const decoy::IntensityConfig& cfg,
                        double e2, const VerdictPolicy& policy = {});

struct KeyRateParams {
  double pulse_rate = 40e6;
  double signal_fraction = 13.0 / 16.0;
  double sifting_factor = 0.5;
  double f_ec = 1.16;
};

struct KeyRateEstimate {
  double y1_lower = 0.0;
  double q1_lower = 0.0;
  double e1_upper = 0.5;
  double bits_per_pulse = 0.0;
  double bits_per_second = 0.0;
};

double binary_entropy(double p);

/// Weak+vacuum decoy-state GLLP rate
///   R = q { -Q_mu f H2(E_mu) + Q1^L [1 - H2(e1^U)] },  q = sifting * signal fraction,
/// floored at zero and scaled by the pulse rate.
KeyRateEstimate secret_key_rate(const decoy::DecoyObservables& obs,
                                const decoy::IntensityConfig& cfg, const KeyRateParams& params);

/// Flat key=value block, one entry per line.
std::string to_key_value(const SecurityVerdict& v);
std::string csv_header();
std::string to_csv_row(const SecurityVerdict& v);

}  // namespace qsi::security
