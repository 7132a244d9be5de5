#include "qsi/cgi.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qsi::cgi {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::domain_error(message);
}

}  // namespace

std::string to_string(PatternMode mode) {
  return mode == PatternMode::raster_scan ? "raster" : "random";
}

PatternMode parse_pattern_mode(const std::string& text) {
  if (text == "raster" || text == "raster-scan" || text == "raster_scan") {
    return PatternMode::raster_scan;
  }
  if (text == "random") return PatternMode::random;
  throw std::invalid_argument("unknown pattern mode '" + text + "'");
}

PatternSet::PatternSet(GridSize grid, PatternMode mode, std::uint64_t seed,
                       std::vector<std::uint8_t> masks)
    : grid_(grid), mode_(mode), seed_(seed), masks_(std::move(masks)) {
  require(grid_.blocks() > 0, "pattern grid is empty");
  require(masks_.size() % grid_.blocks() == 0, "mask storage is not a whole number of patterns");
}

std::span<const std::uint8_t> PatternSet::pattern(std::size_t i) const {
  require(i < size(), "pattern index out of range");
  return std::span<const std::uint8_t>(masks_).subspan(i * grid_.blocks(), grid_.blocks());
}

std::size_t PatternSet::on_count(std::size_t i) const {
  const auto p = pattern(i);
  return static_cast<std::size_t>(std::count(p.begin(), p.end(), std::uint8_t{1}));
}

PatternSet generate_patterns(PatternMode mode, GridSize grid, std::size_t count,
                             std::uint64_t seed) {
  require(count >= 1, "at least one pattern is required");
  require(grid.blocks() > 0, "pattern grid is empty");
  const std::size_t blocks = grid.blocks();
  std::vector<std::uint8_t> masks(count * blocks, 0);
  if (mode == PatternMode::raster_scan) {
    if (count != blocks) {
      throw std::invalid_argument("raster scan needs exactly one pattern per block (" +
                                  std::to_string(blocks) + "), got " + std::to_string(count));
    }
    for (std::size_t i = 0; i < count; ++i) masks[i * blocks + i] = 1;
  } else {
    Rng rng(seed);
    std::uint64_t bits = 0;
    int left = 0;
    for (auto& m : masks) {
      if (left == 0) {
        bits = rng();
        left = 64;
      }
      m = static_cast<std::uint8_t>(bits & 1U);
      bits >>= 1;
      --left;
    }
  }
  return PatternSet(grid, mode, seed, std::move(masks));
}

void ObjectMask::validate() const {
  require(transmission.size() == grid.blocks(), "object does not match its grid");
  for (double t : transmission) {
    require(std::isfinite(t) && t >= 0.0 && t <= 1.0, "object transmission outside [0, 1]");
  }
}

ObjectMask plus_object(GridSize grid, std::size_t thickness, std::size_t margin) {
  ObjectMask object{grid, std::vector<double>(grid.blocks(), 0.0)};
  auto in_band = [&](std::size_t v, std::size_t extent) {
    const std::size_t lo = (extent - thickness) / 2;
    return v >= lo && v < lo + thickness;
  };
  for (std::size_t y = 0; y < grid.height; ++y) {
    for (std::size_t x = 0; x < grid.width; ++x) {
      const bool inside_x = x >= margin && x + margin < grid.width;
      const bool inside_y = y >= margin && y + margin < grid.height;
      const bool vertical = in_band(x, grid.width) && inside_y;
      const bool horizontal = in_band(y, grid.height) && inside_x;
      if (vertical || horizontal) object.transmission[y * grid.width + x] = 1.0;
    }
  }
  return object;
}

std::vector<double> transmitted_energy(const ObjectMask& object, const PatternSet& patterns) {
  object.validate();
  require(object.grid == patterns.grid(), "object and patterns use different grids");
  std::vector<double> energy(patterns.size(), 0.0);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto mask = patterns.pattern(i);
    double sum = 0.0;
    for (std::size_t b = 0; b < mask.size(); ++b) {
      if (mask[b] != 0) sum += object.transmission[b];
    }
    energy[i] = sum;
  }
  return energy;
}

std::vector<double> transmitted_fractions(const ObjectMask& object, const PatternSet& patterns,
                                          double leakage) {
  require(leakage >= 0.0 && leakage <= 1.0, "leakage outside [0, 1]");
  auto fractions = transmitted_energy(object, patterns);
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const auto on = static_cast<double>(patterns.on_count(i));
    const double f = on > 0.0 ? fractions[i] / on : 0.0;
    fractions[i] = std::min(1.0, f + leakage);
  }
  return fractions;
}

std::vector<double> bucket_counts(const ObjectMask& object, const PatternSet& patterns,
                                  const AnalyticCountModel& model, Rng& rng) {
  require(model.scale >= 0.0 && model.leakage_counts >= 0.0, "negative count scale or leakage");
  auto counts = transmitted_energy(object, patterns);
  for (auto& b : counts) {
    const double mean = model.scale * b + model.leakage_counts;
    if (model.shot_noise) {
      b = mean > 0.0 ? static_cast<double>(std::poisson_distribution<std::uint64_t>(mean)(rng))
                     : 0.0;
    } else {
      b = std::round(mean);
    }
  }
  return counts;
}

std::vector<double> bucket_counts(const PatternSet& patterns,
                                  std::span<const std::uint64_t> frame_counts) {
  if (frame_counts.size() != patterns.size()) {
    throw std::invalid_argument("got " + std::to_string(frame_counts.size()) +
                                " frame counts for " + std::to_string(patterns.size()) +
                                " patterns");
  }
  return {frame_counts.begin(), frame_counts.end()};
}

ImageGrid reconstruct(const PatternSet& patterns, std::span<const double> counts) {
  const std::size_t n = patterns.size();
  require(n >= 2, "reconstruction needs at least two patterns");
  require(counts.size() == n, "one bucket count per pattern required");
  const std::size_t blocks = patterns.grid().blocks();
  const double inv_n = 1.0 / static_cast<double>(n);

  double mean_b = 0.0;
  for (double b : counts) mean_b += b;
  mean_b *= inv_n;

  std::vector<double> mean_i(blocks, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mask = patterns.pattern(i);
    for (std::size_t p = 0; p < blocks; ++p) mean_i[p] += mask[p];
  }
  for (auto& m : mean_i) m *= inv_n;

  ImageGrid image{patterns.grid(), std::vector<double>(blocks, 0.0), n, patterns.mode(),
                  patterns.seed()};
  for (std::size_t i = 0; i < n; ++i) {
    const double weight = counts[i] - mean_b;
    const auto mask = patterns.pattern(i);
    for (std::size_t p = 0; p < blocks; ++p) {
      image.values[p] += weight * (static_cast<double>(mask[p]) - mean_i[p]);
    }
  }
  for (auto& v : image.values) v *= inv_n;
  return image;
}

SnrReport snr_db(const ImageGrid& image, const std::vector<bool>& signal_region,
                 const std::vector<bool>& background_region) {
  const std::size_t blocks = image.values.size();
  require(signal_region.size() == blocks && background_region.size() == blocks,
          "region masks do not match the image");
  double sum_s = 0.0;
  double sum_b = 0.0;
  std::size_t n_s = 0;
  std::size_t n_b = 0;
  for (std::size_t p = 0; p < blocks; ++p) {
    require(!(signal_region[p] && background_region[p]), "signal and background regions overlap");
    if (signal_region[p]) {
      sum_s += image.values[p];
      ++n_s;
    } else if (background_region[p]) {
      sum_b += image.values[p];
      ++n_b;
    }
  }
  require(n_s > 0 && n_b > 0, "signal and background regions must be nonempty");
  const double mean_b = sum_b / static_cast<double>(n_b);
  double var = 0.0;
  for (std::size_t p = 0; p < blocks; ++p) {
    if (background_region[p]) var += (image.values[p] - mean_b) * (image.values[p] - mean_b);
  }

  SnrReport report;
  report.signal_mean = sum_s / static_cast<double>(n_s) - mean_b;
  report.background_variance = var / static_cast<double>(n_b);
  if (report.background_variance == 0.0) {
    report.infinite = true;
    report.snr_db = std::numeric_limits<double>::infinity();
  } else {
    report.snr_db =
        10.0 * std::log10(report.signal_mean * report.signal_mean / report.background_variance);
  }
  return report;
}

SnrReport snr_db(const ImageGrid& image, const ObjectMask& object) {
  require(object.grid == image.grid, "object and image use different grids");
  std::vector<bool> signal(object.transmission.size());
  std::vector<bool> background(object.transmission.size());
  for (std::size_t p = 0; p < signal.size(); ++p) {
    signal[p] = object.transmission[p] >= 0.5;
    background[p] = !signal[p];
  }
  return snr_db(image, signal, background);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), "pearson: inputs must be equal-length and nonempty");
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace qsi::cgi
