#include "qsi/protocol.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <thread>

namespace qsi::sim {

namespace {

constexpr std::uint32_t kYieldTableSize = 64;

std::size_t index_of(IntensityClass c) { return static_cast<std::size_t>(c); }

struct BatchTally {
  std::array<decoy::ClassTally, 3> classes{};
  std::uint64_t frame_sifted_signal = 0;
};

// Shared tail of transmit/eve_intercept once a detection happened: Bob's
// basis choice and the bit-flip draw.
DetectionEvent finish_detection(const PulseState& pulse, double flip_probability, Rng& rng) {
  const std::uint64_t raw = rng();
  DetectionEvent ev;
  ev.detected = true;
  ev.origin = pulse.intensity_class;
  ev.bob_basis = (raw & 1U) == 0 ? Basis::Z : Basis::X;
  ev.bases_match = ev.bob_basis == basis_of(pulse.phase_index);
  ev.bit_error = ev.bases_match && uniform01(raw) < flip_probability;
  return ev;
}

DetectionEvent no_click(const PulseState& pulse) {
  DetectionEvent ev;
  ev.origin = pulse.intensity_class;
  return ev;
}

BatchTally run_batch(const SimulationConfig& cfg, const PulseSampler& sampler,
                     const ChannelResponse& channel, std::uint64_t pulses, Rng rng) {
  BatchTally tally;
  const auto& attack = cfg.attack;
  for (std::uint64_t i = 0; i < pulses; ++i) {
    const PulseState pulse = sampler(rng);
    const bool intercepted =
        attack.enabled && (attack.fraction >= 1.0 || uniform01(rng) < attack.fraction);
    const DetectionEvent ev = intercepted
                                  ? eve_intercept(pulse, attack.profile, attack.resend, channel, rng)
                                  : transmit(pulse, channel, rng);
    auto& t = tally.classes[index_of(pulse.intensity_class)];
    ++t.sent;
    if (!ev.detected) continue;
    ++t.detected;
    if (!ev.bases_match) continue;
    ++t.sifted;
    if (ev.bit_error) ++t.errors;
    if (pulse.intensity_class == IntensityClass::signal) ++tally.frame_sifted_signal;
  }
  return tally;
}

}  // namespace

void SimulationConfig::validate() const {
  if (!(pulse_rate > 0.0)) throw std::domain_error("pulse_rate must be positive");
  source.validate();
  channel.validate();
  if (attack.enabled && !(attack.fraction >= 0.0 && attack.fraction <= 1.0)) {
    throw std::domain_error("attack fraction outside [0, 1]");
  }
}

PulseSampler::PulseSampler(const decoy::IntensityConfig& source) {
  source.validate();
  const std::array<double, 3> means{source.mu, source.nu, 0.0};
  std::vector<double> weights;
  for (std::size_t k = 0; k < 3; ++k) {
    const double pc = source.class_probabilities[k];
    if (pc == 0.0) continue;
    for (std::uint32_t n = 0; n < 200; ++n) {
      const double p = pc * decoy::poisson_pmf(means[k], static_cast<int>(n));
      if (p < 1e-16 && n > 0) break;
      cells_.push_back({static_cast<IntensityClass>(k), n});
      weights.push_back(p);
    }
  }

  // Vose's construction.
  const std::size_t size = cells_.size();
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> scaled(size);
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::uint32_t i = 0; i < size; ++i) {
    scaled[i] = weights[i] / total * static_cast<double>(size);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  constexpr double kKeepScale = 0x1.0p30;
  auto keep_of = [&](double fraction) {
    return static_cast<std::uint32_t>(std::llround(std::clamp(fraction, 0.0, 1.0) * kKeepScale));
  };
  slots_.resize(size);
  for (std::uint32_t i = 0; i < size; ++i) slots_[i] = {keep_of(1.0), i, i};
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    slots_[s] = {keep_of(scaled[s]), s, l};
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
}

PulseState PulseSampler::operator()(Rng& rng) const {
  const std::uint64_t raw = rng();
  const std::uint64_t index = ((raw >> 32) * slots_.size()) >> 32;
  const Slot& slot = slots_[index];
  const auto coin = static_cast<std::uint32_t>((raw & 0xFFFFFFFFU) >> 2);
  const Cell& cell = cells_[coin < slot.keep ? slot.own : slot.alias];
  return {cell.intensity_class, static_cast<std::uint8_t>(raw & 3U), cell.photon_number};
}

ChannelResponse::ChannelResponse(const decoy::ChannelModel& channel) : channel_(channel) {
  channel_.validate();
  yields_.reserve(kYieldTableSize);
  for (std::uint32_t n = 0; n < kYieldTableSize; ++n) {
    yields_.push_back(decoy::yield_n(channel_, static_cast<int>(n)));
    thresholds_.push_back(static_cast<std::uint64_t>(std::ceil(yields_.back() * 0x1.0p53)));
  }
}

bool ChannelResponse::clicks(std::uint32_t n, std::uint64_t raw) const noexcept {
  if (n < kYieldTableSize) return (raw >> 11) < thresholds_[n];
  return uniform01(raw) < yield(n);
}

double ChannelResponse::yield(std::uint32_t n) const noexcept {
  if (n < kYieldTableSize) return yields_[n];
  return decoy::yield_n(channel_, static_cast<int>(n));
}

double ChannelResponse::background_share(std::uint32_t n) const noexcept {
  const double y = yield(n);
  return y > 0.0 ? std::min(1.0, channel_.background_yield / y) : 1.0;
}

PulseState sample_pulse(Rng& rng, const decoy::IntensityConfig& source) {
  return PulseSampler(source)(rng);
}

DetectionEvent transmit(const PulseState& pulse, const ChannelResponse& channel, Rng& rng) {
  const std::uint32_t n = pulse.photon_number;
  if (!channel.clicks(n, rng())) return no_click(pulse);
  const double share = channel.background_share(n);
  const double flip = 0.5 * share + channel.model().misalignment_error * (1.0 - share);
  return finish_detection(pulse, flip, rng);
}

DetectionEvent transmit(const PulseState& pulse, const decoy::ChannelModel& channel, Rng& rng) {
  return transmit(pulse, ChannelResponse(channel), rng);
}

DetectionEvent eve_intercept(const PulseState& pulse, const attack::AttackProfile& profile,
                             ResendPolicy policy, const ChannelResponse& channel, Rng& rng) {
  const std::uint32_t n = pulse.photon_number;
  if (n == 0) {
    // Nothing to resend; Bob only sees background.
    if (!channel.clicks(0, rng())) return no_click(pulse);
    return finish_detection(pulse, 0.5, rng);
  }
  if (policy == ResendPolicy::always_detected) {
    return finish_detection(pulse, profile.error_rate(static_cast<int>(n)), rng);
  }
  if (!channel.clicks(n, rng())) return no_click(pulse);
  const double share = channel.background_share(n);
  const double e_n = profile.error_rate(static_cast<int>(n));
  return finish_detection(pulse, 0.5 * share + e_n * (1.0 - share), rng);
}

SessionResult run_session(const SimulationConfig& cfg, std::uint64_t frames,
                          std::uint64_t pulses_per_frame,
                          std::span<const double> frame_transmittance_scale) {
  cfg.validate();
  if (frames == 0 || pulses_per_frame == 0) {
    throw std::domain_error("run_session: frames and pulses_per_frame must be >= 1");
  }
  if (!frame_transmittance_scale.empty() && frame_transmittance_scale.size() != frames) {
    throw std::domain_error("run_session: one transmittance scale per frame required");
  }

  const PulseSampler sampler(cfg.source);
  const ChannelResponse base_channel(cfg.channel);
  const std::uint64_t chunks_per_frame = (pulses_per_frame + kBatchPulses - 1) / kBatchPulses;
  const std::uint64_t batches = frames * chunks_per_frame;
  std::vector<BatchTally> results(batches);

  auto work = [&](std::uint64_t b) {
    const std::uint64_t frame = b / chunks_per_frame;
    const std::uint64_t chunk = b % chunks_per_frame;
    const std::uint64_t begin = chunk * kBatchPulses;
    const std::uint64_t count = std::min(kBatchPulses, pulses_per_frame - begin);
    Rng rng = Rng::substream(cfg.rng_seed, frame, chunk);
    if (frame_transmittance_scale.empty()) {
      results[b] = run_batch(cfg, sampler, base_channel, count, std::move(rng));
    } else {
      decoy::ChannelModel scaled = cfg.channel;
      scaled.transmittance =
          std::clamp(cfg.channel.transmittance * frame_transmittance_scale[frame], 0.0, 1.0);
      results[b] = run_batch(cfg, sampler, ChannelResponse(scaled), count, std::move(rng));
    }
  };

  unsigned workers = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, batches));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < batches; ++b) work(b);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint64_t b = next++; b < batches; b = next++) work(b);
      });
    }
  }

  std::array<decoy::ClassTally, 3> totals{};
  SessionResult out;
  out.frame_counts.assign(frames, 0);
  for (std::uint64_t b = 0; b < batches; ++b) {
    for (std::size_t k = 0; k < 3; ++k) totals[k] += results[b].classes[k];
    out.frame_counts[b / chunks_per_frame] += results[b].frame_sifted_signal;
  }
  out.observables = decoy::DecoyObservables::from_tallies(totals[0], totals[1], totals[2]);
  return out;
}

decoy::ChannelModel calibrate_channel(const decoy::DecoyObservables& target,
                                      const decoy::IntensityConfig& source) {
  source.validate();
  const double q = target.q_mu;
  const double y0 = target.y0;
  if (!(y0 >= 0.0 && y0 < 1.0) || !(q >= 0.0 && q <= 1.0)) {
    throw InfeasibleCalibration("calibration targets outside [0, 1)");
  }
  if (!target.e_mu) throw InfeasibleCalibration("calibration needs a signal QBER");
  if (q < y0) throw InfeasibleCalibration("target signal gain is below the background yield");

  decoy::ChannelModel channel;
  channel.background_yield = y0;
  auto gain_at = [&](double eta) {
    decoy::ChannelModel c = channel;
    c.transmittance = eta;
    return decoy::overall_gain(c, source.mu);
  };
  if (q > gain_at(1.0)) throw InfeasibleCalibration("target signal gain exceeds a lossless channel");

  double lo = 0.0;
  double hi = 1.0;
  if (q == y0) {
    hi = 0.0;
  } else {
    while (hi - lo > 1e-12 * hi) {
      const double mid = 0.5 * (lo + hi);
      (gain_at(mid) < q ? lo : hi) = mid;
    }
  }
  channel.transmittance = 0.5 * (lo + hi);

  if (q > y0) {
    const double e_d = (*target.e_mu * q - 0.5 * y0) / (q - y0);
    channel.misalignment_error = std::clamp(e_d, 0.0, 0.5);
  }
  return channel;
}

}  // namespace qsi::sim
