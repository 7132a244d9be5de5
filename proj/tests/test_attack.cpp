#include <doctest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "qsi/attack.hpp"

using namespace qsi::attack;

namespace {

std::array<double, 4> coeff_ref(int n) {
  const double pi = std::acos(-1.0);
  const double a = std::pow(2.0, -(1.0 + n / 2.0));
  const double c = std::cos(pi * n / 4.0);
  const double s = std::sin(pi * n / 4.0);
  auto root = [](double x) { return std::sqrt(std::max(0.0, x)); };
  return {root(0.25 + a * c), root(0.25 + a * s), root(0.25 - a * c), root(0.25 - a * s)};
}

// Error rate written term by term: 1/2 - sum_{l,m} |g_{2l} g_{2m+1}| / (2 sum |g_j|^2).
double error_ref(const std::array<double, 4>& c, const std::array<double, 4>& a) {
  std::array<double, 4> g{};
  for (int j = 0; j < 4; ++j) g[j] = a[j] * c[j];
  double cross = 0.0;
  for (int l = 0; l <= 1; ++l) {
    for (int m = 0; m <= 1; ++m) cross += std::abs(g[2 * l] * g[2 * m + 1]);
  }
  double norm = 0.0;
  for (double x : g) norm += x * x;
  return 0.5 - cross / (2.0 * norm);
}

// Coarse grid over [0,1]^4 followed by successively finer local grids.
double grid_min(int n) {
  const auto c = coeff_ref(n);
  auto eval = [&](const std::array<double, 4>& a) {
    double norm = 0.0;
    for (int j = 0; j < 4; ++j) norm += a[j] * a[j] * c[j] * c[j];
    return norm > 0.0 ? error_ref(c, a) : 0.5;
  };
  std::array<double, 4> best{};
  double best_e = 0.5;
  const int steps = 20;
  for (int i0 = 0; i0 <= steps; ++i0)
    for (int i1 = 0; i1 <= steps; ++i1)
      for (int i2 = 0; i2 <= steps; ++i2)
        for (int i3 = 0; i3 <= steps; ++i3) {
          const std::array<double, 4> a{double(i0) / steps, double(i1) / steps,
                                        double(i2) / steps, double(i3) / steps};
          const double e = eval(a);
          if (e < best_e) {
            best_e = e;
            best = a;
          }
        }
  for (double h = 1.0 / steps; h > 1e-4; h /= 10.0) {
    const auto centre = best;
    for (int i0 = -10; i0 <= 10; ++i0)
      for (int i1 = -10; i1 <= 10; ++i1)
        for (int i2 = -10; i2 <= 10; ++i2)
          for (int i3 = -10; i3 <= 10; ++i3) {
            std::array<double, 4> a{centre[0] + i0 * h / 10, centre[1] + i1 * h / 10,
                                    centre[2] + i2 * h / 10, centre[3] + i3 * h / 10};
            for (double& x : a) x = std::clamp(x, 0.0, 1.0);
            const double e = eval(a);
            if (e < best_e) {
              best_e = e;
              best = a;
            }
          }
  }
  return best_e;
}

}  // namespace

TEST_CASE("overlap coefficients") {
  const auto c1 = overlap_coefficients(1);
  CHECK(c1.c[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(c1.c[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(c1.c[2] == doctest::Approx(0.0));
  CHECK(c1.c[3] == doctest::Approx(0.0));

  const auto c2 = overlap_coefficients(2);
  CHECK(c2.c[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c2.c[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(c2.c[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c2.c[3] == doctest::Approx(0.0));

  for (int n = 1; n <= 50; ++n) {
    const auto c = overlap_coefficients(n);
    const auto ref = coeff_ref(n);
    double sum = 0.0;
    for (int j = 0; j < 4; ++j) {
      CHECK(c.c[j] >= 0.0);
      CHECK(c.c[j] == doctest::Approx(ref[j]).epsilon(1e-12));
      sum += c.c[j] * c.c[j];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(overlap_coefficients(0), std::domain_error);
}

TEST_CASE("error rate for given filters") {
  for (int n : {1, 2, 3, 5}) {
    const auto c = overlap_coefficients(n);
    const auto ref_c = coeff_ref(n);
    for (const auto& a : {std::array<double, 4>{1, 1, 1, 1}, std::array<double, 4>{0.3, 1, 0.7, 0.2},
                          std::array<double, 4>{1, 0.5, 0, 1}}) {
      FilterWeights w;
      w.alpha = a;
      CHECK(srm_error_rate(c, w) == doctest::Approx(error_ref(ref_c, a)).epsilon(1e-12));
    }
  }
  // single-photon closed form: 1/2 - |a0 a1| / (2 (a0^2 + a1^2))
  FilterWeights w;
  w.alpha = {0.4, 0.9, 1, 1};
  CHECK(srm_error_rate(overlap_coefficients(1), w) ==
        doctest::Approx(0.5 - 0.36 / (2 * (0.16 + 0.81))).epsilon(1e-12));
  // two-photon closed form
  w.alpha = {0.4, 0.9, 0.6, 1};
  const double e2 = 0.5 - (0.4 * 0.9 + 0.9 * 0.6) / std::sqrt(2.0) / (0.16 + 2 * 0.81 + 0.36);
  CHECK(srm_error_rate(overlap_coefficients(2), w) == doctest::Approx(e2).epsilon(1e-12));

  w.alpha = {0, 0, 1, 1};
  CHECK_THROWS_AS(srm_error_rate(overlap_coefficients(1), w), DegenerateFilter);
}

TEST_CASE("minimum error rates") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto e1 = min_error_rate(1);
  const auto e2 = min_error_rate(2);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(std::abs(e1.value - 0.25) <= 1e-6);
  CHECK(std::abs(e2.value - (2.0 - std::sqrt(2.0)) / 4.0) <= 1e-6);
  CHECK(seconds < 1.0);

  // the reported argmin reproduces the reported value
  CHECK(srm_error_rate(overlap_coefficients(2), e2.argmin) == doctest::Approx(e2.value));
  for (double a : e2.argmin.alpha) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("optimiser agrees with a brute-force grid search") {
  for (int n = 1; n <= 4; ++n) {
    const double grid = grid_min(n);
    const double opt = min_error_rate(n).value;
    CHECK(opt <= grid + 1e-9);
    CHECK(std::abs(opt - grid) <= 1e-6);
  }
  // all four overlaps nonzero from n = 3: balanced filters null the error
  CHECK(min_error_rate(3).value == doctest::Approx(0.0));
}

TEST_CASE("attack profile") {
  const AttackProfile p(4);
  CHECK(p.n_max() == 4);
  CHECK(p.error_rate(0) == 0.5);
  CHECK(p.error_rate(1) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(p.error_rate(2) == doctest::Approx((2 - std::sqrt(2.0)) / 4).epsilon(1e-9));
  CHECK(p.error_rate(3) == doctest::Approx(0.0));
  CHECK(p.error_rate(9) == 0.0);
}
