// Pulse-level Monte Carlo of weak+vacuum decoy-state phase-encoding BB84,
// with an optional intercept-resend eavesdropper. Modelled at the level of
// outcome statistics: yields, misalignment and Eve's error floors.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qsi/attack.hpp"
#include "qsi/decoy.hpp"
#include "qsi/rng.hpp"

namespace qsi::sim {

using Rng = Xoshiro256;

/// 53-bit uniform double in [0, 1).
inline double uniform01(std::uint64_t raw) noexcept {
  return static_cast<double>(raw >> 11) * 0x1.0p-53;
}
inline double uniform01(Rng& rng) { return uniform01(rng()); }

enum class IntensityClass : std::uint8_t { signal = 0, decoy = 1, vacuum = 2 };
enum class Basis : std::uint8_t { Z = 0, X = 1 };

/// Phases 0 and pi are Z, pi/2 and 3pi/2 are X.
constexpr Basis basis_of(unsigned phase_index) noexcept {
  return (phase_index & 1U) == 0 ? Basis::Z : Basis::X;
}

struct PulseState {
  IntensityClass intensity_class = IntensityClass::signal;
  std::uint8_t phase_index = 0;  // relative phase k * pi / 2
  std::uint32_t photon_number = 0;
};

struct DetectionEvent {
  bool detected = false;
  Basis bob_basis = Basis::Z;
  bool bases_match = false;
  bool bit_error = false;  // only meaningful when sifted()
  IntensityClass origin = IntensityClass::signal;

  bool sifted() const noexcept { return detected && bases_match; }
};

enum class ResendPolicy : std::uint8_t {
  lossless,         // Eve's resent state is detected with the no-attack yield
  always_detected,  // Bob always registers Eve's resent state
};

struct AttackSettings {
  bool enabled = false;
  double fraction = 1.0;  // probability any given pulse is intercepted
  ResendPolicy resend = ResendPolicy::lossless;
  attack::AttackProfile profile;
};

struct SimulationConfig {
  double pulse_rate = 40e6;
  decoy::IntensityConfig source;
  decoy::ChannelModel channel;
  AttackSettings attack;
  std::uint64_t rng_seed = 1;
  unsigned threads = 0;  // 0 picks std::thread::hardware_concurrency()

  void validate() const;
};

/// Joint (class, photon number) sampler built from an IntensityConfig.
/// Walker alias table driven by one 64-bit draw per pulse: the high 32 bits
/// pick a slot, bits 2..31 decide own/alias, bits 0..1 pick the phase.
/// Cell probabilities are therefore resolved to about 1e-9 / slot count.
class PulseSampler {
 public:
  explicit PulseSampler(const decoy::IntensityConfig& source);
  PulseState operator()(Rng& rng) const;

 private:
  struct Cell {
    IntensityClass intensity_class;
    std::uint32_t photon_number;
  };
  struct Slot {
    std::uint32_t keep;  // own is kept when the 30-bit draw is below this
    std::uint32_t own;
    std::uint32_t alias;
  };
  std::vector<Cell> cells_;
  std::vector<Slot> slots_;
};

/// Per-photon-number yields and background shares of a channel.
class ChannelResponse {
 public:
  explicit ChannelResponse(const decoy::ChannelModel& channel);

  double yield(std::uint32_t n) const noexcept;
  /// True with probability Y_n given a fresh 64-bit draw.
  bool clicks(std::uint32_t n, std::uint64_t raw) const noexcept;
  /// Fraction of n-photon detections attributed to background, Y0 / Y_n.
  double background_share(std::uint32_t n) const noexcept;
  const decoy::ChannelModel& model() const noexcept { return channel_; }

 private:
  decoy::ChannelModel channel_;
  std::vector<double> yields_;
  std::vector<std::uint64_t> thresholds_;  // ceil(Y_n * 2^53)
};

PulseState sample_pulse(Rng& rng, const decoy::IntensityConfig& source);

/// Honest channel: detection with probability Y_n; sifted bits flip with
/// probability 1/2 when background-caused and e_d otherwise.
DetectionEvent transmit(const PulseState& pulse, const ChannelResponse& channel, Rng& rng);
DetectionEvent transmit(const PulseState& pulse, const decoy::ChannelModel& channel, Rng& rng);

/// Intercept-resend: Eve learns n, sends nothing for vacuum, and resends her
/// SRM guess otherwise. Misalignment does not apply to resent states.
DetectionEvent eve_intercept(const PulseState& pulse, const attack::AttackProfile& profile,
                             ResendPolicy policy, const ChannelResponse& channel, Rng& rng);

struct SessionResult {
  decoy::DecoyObservables observables;
  /// Signal-class sifted detections per frame.
  std::vector<std::uint64_t> frame_counts;
};

/// Pulses per RNG substream. Substreams are keyed by (seed, frame, chunk),
/// so results do not depend on the worker count.
inline constexpr std::uint64_t kBatchPulses = std::uint64_t{1} << 18;

/// Runs frames * pulses_per_frame pulses. `frame_transmittance_scale`, when
/// non-empty, multiplies the channel transmittance of each frame.
SessionResult run_session(const SimulationConfig& cfg, std::uint64_t frames,
                          std::uint64_t pulses_per_frame,
                          std::span<const double> frame_transmittance_scale = {});

class InfeasibleCalibration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fits eta so the modelled signal gain matches target.q_mu (bisection,
/// 1e-12 relative), then e_d = (E_mu Q_mu - Y0/2) / (Q_mu - Y0).
decoy::ChannelModel calibrate_channel(const decoy::DecoyObservables& target,
                                      const decoy::IntensityConfig& source);

}  // namespace qsi::sim
