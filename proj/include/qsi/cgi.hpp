// Computational ghost imaging on a block grid: DMD binary patterns, the
// bucket-detector forward model, correlation reconstruction and SNR.
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsi/rng.hpp"

namespace qsi::cgi {

using Rng = Xoshiro256;

enum class PatternMode : std::uint8_t { raster_scan, random };

std::string to_string(PatternMode mode);
PatternMode parse_pattern_mode(const std::string& text);

struct GridSize {
  std::size_t width = 20;
  std::size_t height = 20;

  std::size_t blocks() const noexcept { return width * height; }
  friend bool operator==(const GridSize&, const GridSize&) = default;
};

/// N binary masks over the block grid, stored row-major per pattern.
class PatternSet {
 public:
  PatternSet(GridSize grid, PatternMode mode, std::uint64_t seed,
             std::vector<std::uint8_t> masks);

  GridSize grid() const noexcept { return grid_; }
  PatternMode mode() const noexcept { return mode_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return masks_.size() / grid_.blocks(); }

  /// Mask i as a span of grid().blocks() values in {0, 1}.
  std::span<const std::uint8_t> pattern(std::size_t i) const;
  /// Number of "on" blocks in pattern i.
  std::size_t on_count(std::size_t i) const;

 private:
  GridSize grid_;
  PatternMode mode_;
  std::uint64_t seed_;
  std::vector<std::uint8_t> masks_;
};

/// Raster scan turns on block i (row-major) in pattern i and needs
/// count == grid.blocks(). Random masks are fair coins drawn from `seed`.
PatternSet generate_patterns(PatternMode mode, GridSize grid, std::size_t count,
                             std::uint64_t seed = 0);

/// Object transmission T(x, y) in [0, 1], row-major.
struct ObjectMask {
  GridSize grid;
  std::vector<double> transmission;

  void validate() const;
};

/// "+" shaped object: bars of width `thickness` through the centre, inset
/// by `margin` blocks from the edges.
ObjectMask plus_object(GridSize grid, std::size_t thickness = 4, std::size_t margin = 2);

struct ImageGrid {
  GridSize grid;
  std::vector<double> values;
  std::size_t pattern_count = 0;
  PatternMode mode = PatternMode::raster_scan;
  std::uint64_t seed = 0;
};

/// sum_{x,y} T * I_i for every pattern (pre-scaling, pre-rounding).
std::vector<double> transmitted_energy(const ObjectMask& object, const PatternSet& patterns);

/// Per-pattern transmitted fraction sum(T * I_i) / sum(I_i), plus a
/// constant leakage, capped at 1. Empty patterns transmit only leakage.
std::vector<double> transmitted_fractions(const ObjectMask& object, const PatternSet& patterns,
                                          double leakage = 0.0);

struct AnalyticCountModel {
  double scale = 1.0;         // kappa
  bool shot_noise = false;    // Poisson noise on each count
  double leakage_counts = 0.0;  // mean constant background per pattern
};

/// B_i = round(kappa * sum T I_i + leakage), or Poisson with that mean.
std::vector<double> bucket_counts(const ObjectMask& object, const PatternSet& patterns,
                                  const AnalyticCountModel& model, Rng& rng);

/// Per-frame detection counts from a protocol session, aligned with patterns.
std::vector<double> bucket_counts(const PatternSet& patterns,
                                  std::span<const std::uint64_t> frame_counts);

/// O(x,y) = 1/N sum_i (B_i - <B>) (I_i(x,y) - <I(x,y)>). Needs N >= 2.
ImageGrid reconstruct(const PatternSet& patterns, std::span<const double> counts);

struct SnrReport {
  double signal_mean = 0.0;          // mean(signal) - mean(background)
  double background_variance = 0.0;  // population variance
  double snr_db = 0.0;               // +inf when the background is flat
  bool infinite = false;
};

/// Signal and background regions as per-block membership flags.
SnrReport snr_db(const ImageGrid& image, const std::vector<bool>& signal_region,
                 const std::vector<bool>& background_region);

/// Default regions: T >= 0.5 is signal, the rest background.
SnrReport snr_db(const ImageGrid& image, const ObjectMask& object);

/// Pearson correlation; NaN when either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace qsi::cgi
