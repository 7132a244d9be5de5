// Weak+vacuum decoy-state closed forms: Poisson source statistics, yields,
// gains, and the decoy-class QBER floor an intercept-resend attacker must
// induce.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qsi::decoy {

/// Mean photon numbers and class probabilities (signal, decoy, vacuum).
struct IntensityConfig {
  double mu = 0.68;
  double nu = 0.18;
  std::array<double, 3> class_probabilities{13.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0};

  /// Throws std::domain_error unless 0 < nu < mu <= 1 and the class
  /// probabilities form a distribution.
  void validate() const;
};

/// End-to-end channel: eta includes optics and detector efficiency.
struct ChannelModel {
  double transmittance = 0.0;
  double background_yield = 0.0;
  double misalignment_error = 0.0;

  void validate() const;
};

/// Raw per-class counters. `sifted` counts detections whose bases matched.
struct ClassTally {
  std::uint64_t sent = 0;
  std::uint64_t detected = 0;
  std::uint64_t sifted = 0;
  std::uint64_t errors = 0;

  ClassTally& operator+=(const ClassTally& other) noexcept;
  friend bool operator==(const ClassTally&, const ClassTally&) = default;
};

/// Gains and QBERs of the three intensity classes. QBERs are empty when a
/// class has no sifted detections.
struct DecoyObservables {
  double q_mu = 0.0;
  double q_nu = 0.0;
  double y0 = 0.0;
  std::optional<double> e_mu;
  std::optional<double> e_nu;
  ClassTally signal;
  ClassTally decoy;
  ClassTally vacuum;

  /// Rates derived from counters.
  static DecoyObservables from_tallies(const ClassTally& signal, const ClassTally& decoy,
                                       const ClassTally& vacuum);

  /// Published rates with nominal counters rebuilt for `sent` pulses per
  /// class (sifting factor one half). The given rates stay authoritative.
  static DecoyObservables from_rates(double q_mu, double q_nu, double y0, double e_mu,
                                     double e_nu, const std::array<std::uint64_t, 3>& sent);

  friend bool operator==(const DecoyObservables&, const DecoyObservables&) = default;
};

/// A bound together with its pre-clamp value.
struct ClampedValue {
  double value = 0.0;
  double unclamped = 0.0;
  bool clamped = false;
};

/// e^-mu mu^n / n!, evaluated in log space.
double poisson_pmf(double mu, int n);

/// Y_n = 1 - (1 - eta)^n (1 - Y0).
double yield_n(const ChannelModel& channel, int n);

/// sum_n P_n(mu) Y_n, truncated once the Poisson tail drops below 1e-15.
double overall_gain(const ChannelModel& channel, double mu);

struct DecoyInequalityReport {
  /// ratio_holds[k] is the check for n = k + 3.
  std::vector<bool> ratio_holds;
  bool one_photon_holds = false;
  bool two_photon_holds = false;
  int n_max = 0;

  bool all_pass() const;
};

/// Checks P_n(mu)/P_n(nu) >= P_3(mu)/P_3(nu) for 3 <= n <= n_max and
/// P_1, P_2 ordering. Throws std::domain_error unless 0 < nu < mu <= 1.
DecoyInequalityReport decoy_inequality_check(double mu, double nu, int n_max = 100);

/// Lower bound on P_1(nu) Y_1 + P_2(nu) Y_2, clamped below at zero.
ClampedValue joint_yield_lower_bound(const DecoyObservables& obs, const IntensityConfig& cfg);

/// Thrown when the decoy gain is zero and the QBER floor has no meaning.
class UndefinedBound : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Minimum decoy-class QBER under intercept-resend, given the two-photon
/// attack floor e2. Clamped to [0, 0.5].
ClampedValue qber_lower_bound(const DecoyObservables& obs, const IntensityConfig& cfg, double e2);

}  // namespace qsi::decoy
