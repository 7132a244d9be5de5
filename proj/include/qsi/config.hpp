// Run configuration: flat `section.key = value` text with optional
// `[section]` headers, environment overrides, and a canonical serializer.
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsi/cgi.hpp"
#include "qsi/decoy.hpp"
#include "qsi/protocol.hpp"

namespace qsi::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CountSource : std::uint8_t { analytic, monte_carlo };

/// Published (or target) observables: analysis input and calibration target.
struct ObservedRates {
  double q_mu = 2.69e-4;
  double q_nu = 7.32e-5;
  double y0 = 3.0e-6;
  double e_mu = 0.0213;
  double e_nu = 0.0399;

  friend bool operator==(const ObservedRates&, const ObservedRates&) = default;
};

struct RunConfig {
  decoy::IntensityConfig source;
  double pulse_rate = 40e6;
  ObservedRates observed;

  bool calibrate_channel = true;
  decoy::ChannelModel channel;  // used as-is when calibrate_channel is false

  std::uint64_t seed = 1;
  std::uint64_t frames = 400;
  std::uint64_t pulses_per_frame = 200000;
  unsigned threads = 0;

  bool attack_enabled = false;
  double attack_fraction = 1.0;
  sim::ResendPolicy resend = sim::ResendPolicy::lossless;
  int attack_n_max = attack::AttackProfile::kDefaultMaxPhotons;

  cgi::GridSize grid;
  cgi::PatternMode pattern_mode = cgi::PatternMode::raster_scan;
  std::size_t pattern_count = 400;
  std::string object_path;  // empty: built-in "+" object
  CountSource counts = CountSource::monte_carlo;
  double kappa = 100.0;
  bool shot_noise = false;
  double leakage = 0.1;         // Monte Carlo: transmitted fraction added to every frame
  double leakage_counts = 0.0;  // analytic: mean background counts per pattern
  bool export_patterns = false;

  std::size_t sweep_points = 11;

  double sigma_margin = 3.0;
  std::uint64_t min_sifted = 100;
  double f_ec = 1.16;
  double sifting_factor = 0.5;

  std::string output_dir = "out";

  /// Throws ConfigError on any violated component invariant.
  void validate() const;

  bool operator==(const RunConfig& other) const;
};

/// Every recognised key, in canonical order.
const std::vector<std::string>& known_keys();

/// Applies `key = value` lines on top of `base`. Unknown keys, duplicate
/// keys and malformed values throw ConfigError.
RunConfig parse(const std::string& text, const RunConfig& base = {});
RunConfig load(const std::string& path, const RunConfig& base = {});

/// Sets one key from its textual value.
void set_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& cfg, const std::string& key);

/// Environment variable consulted for `key`: QSI_ + upper-cased key with
/// dots replaced by underscores (source.mu -> QSI_SOURCE_MU).
std::string env_name(const std::string& key);

/// Applies overrides found through `lookup` (returns nullptr when unset).
void apply_env(RunConfig& cfg, const std::function<const char*(const char*)>& lookup);

/// Canonical text: every key in known_keys() order, round-trip exact.
std::string serialize(const RunConfig& cfg);

/// FNV-1a 64 of serialize(cfg), as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

sim::SimulationConfig simulation_config(const RunConfig& cfg, const decoy::ChannelModel& channel);
decoy::DecoyObservables observed_observables(const RunConfig& cfg);

}  // namespace qsi::config
