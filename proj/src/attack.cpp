#include "qsi/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qsi::attack {

namespace {

// Pattern search on the unit box. Returns the best point found.
MinimumError pattern_search(const OverlapCoefficients& coeffs, FilterWeights start) {
  auto objective = [&](const FilterWeights& w) {
    try {
      return srm_error_rate(coeffs, w);
    } catch (const DegenerateFilter&) {
      return 0.5;
    }
  };

  FilterWeights best = start;
  double best_value = objective(best);
  double step = 0.25;
  constexpr double kTolerance = 1e-10;
  constexpr int kMaxIterations = 200000;

  for (int iter = 0; step >= kTolerance && iter < kMaxIterations; ++iter) {
    const FilterWeights base = best;
    for (std::size_t j = 0; j < 4; ++j) {
      for (double direction : {1.0, -1.0}) {
        FilterWeights trial = best;
        trial.alpha[j] = std::clamp(trial.alpha[j] + direction * step, 0.0, 1.0);
        const double v = objective(trial);
        if (v < best_value) {
          best_value = v;
          best = trial;
          break;
        }
      }
    }
    if (best.alpha == base.alpha) {
      step *= 0.5;
      continue;
    }
    // Hooke-Jeeves pattern move along the accepted displacement.
    FilterWeights jump = best;
    for (std::size_t j = 0; j < 4; ++j) {
      jump.alpha[j] = std::clamp(2.0 * best.alpha[j] - base.alpha[j], 0.0, 1.0);
    }
    const double v = objective(jump);
    if (v < best_value) {
      best_value = v;
      best = jump;
    }
  }
  return {best_value, best};
}

}  // namespace

OverlapCoefficients overlap_coefficients(int n) {
  if (n < 1) throw std::domain_error("overlap_coefficients: n must be >= 1");
  const double scale = std::pow(2.0, -(1.0 + n / 2.0));
  const double angle = std::numbers::pi / 4.0 * n;
  const double cos_term = scale * std::cos(angle);
  const double sin_term = scale * std::sin(angle);
  // Radicands that vanish analytically can land a few ulps below zero.
  auto root = [](double radicand) { return std::sqrt(std::max(0.0, radicand)); };
  OverlapCoefficients out;
  out.n = n;
  out.c = {root(0.25 + cos_term), root(0.25 + sin_term), root(0.25 - cos_term),
           root(0.25 - sin_term)};
  return out;
}

double srm_error_rate(const OverlapCoefficients& coeffs, const FilterWeights& weights) {
  std::array<double, 4> gamma{};
  double norm = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    gamma[j] = std::abs(weights.alpha[j] * coeffs.c[j]);
    norm += gamma[j] * gamma[j];
  }
  if (norm <= 0.0) throw DegenerateFilter("srm_error_rate: all filtered amplitudes vanish");
  // sum over l, m in {0, 1} of |gamma_2l gamma_2m+1| factorises.
  const double cross = (gamma[0] + gamma[2]) * (gamma[1] + gamma[3]);
  return std::clamp(0.5 - cross / (2.0 * norm), 0.0, 0.5);
}

MinimumError min_error_rate(int n) {
  const auto coeffs = overlap_coefficients(n);
  MinimumError best;
  bool first = true;
  constexpr std::array<double, 2> kLevels{0.35, 0.9};
  for (int mask = 0; mask < 16; ++mask) {
    FilterWeights start;
    for (int j = 0; j < 4; ++j) start.alpha[j] = kLevels[(mask >> j) & 1];
    const auto result = pattern_search(coeffs, start);
    if (first || result.value < best.value - 1e-10) {
      best = result;
      first = false;
    }
  }
  return best;
}

AttackProfile::AttackProfile(int n_max) {
  if (n_max < 1) throw std::domain_error("AttackProfile: n_max must be >= 1");
  rates_.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) rates_.push_back(min_error_rate(n).value);
}

double AttackProfile::error_rate(int n) const {
  if (n <= 0) return 0.5;
  if (n > n_max()) return 0.0;
  return rates_[static_cast<std::size_t>(n - 1)];
}

}  // namespace qsi::attack
