// Intercept-resend eavesdropper statistics: a QND photon-number measurement,
// a filter, and a square-root measurement on the filtered BB84 Fock states.
#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace qsi::attack {

/// |c_j(n)|, the overlaps of the four n-photon BB84 states in the symmetric
/// basis. Squares sum to one.
struct OverlapCoefficients {
  int n = 1;
  std::array<double, 4> c{};
};

/// Eve's filter amplitudes, taken real and in [0, 1].
struct FilterWeights {
  std::array<double, 4> alpha{1.0, 1.0, 1.0, 1.0};
};

/// Thrown when every filtered amplitude vanishes.
class DegenerateFilter : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Throws std::domain_error for n < 1.
OverlapCoefficients overlap_coefficients(int n);

/// Error rate of the SRM on states filtered with `weights`.
double srm_error_rate(const OverlapCoefficients& coeffs, const FilterWeights& weights);

struct MinimumError {
  double value = 0.5;
  FilterWeights argmin;
};

/// Minimum of srm_error_rate over FilterWeights by deterministic multi-start
/// pattern search (16 starts on {0.35, 0.9}^4, step tolerance 1e-10).
MinimumError min_error_rate(int n);

/// Eve's per-photon-number error floor; entries beyond n_max are zero.
class AttackProfile {
 public:
  static constexpr int kDefaultMaxPhotons = 10;

  AttackProfile() = default;
  explicit AttackProfile(int n_max);

  /// e_n; e_0 is not Eve's (vacuum carries nothing) and returns 0.5.
  double error_rate(int n) const;
  int n_max() const { return static_cast<int>(rates_.size()); }

 private:
  std::vector<double> rates_;  // rates_[n-1] = e_n
};

}  // namespace qsi::attack
