#include "qsi/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <utility>
#include <vector>

#include "qsi/attack.hpp"
#include "qsi/cgi.hpp"
#include "qsi/image_io.hpp"
#include "qsi/protocol.hpp"
#include "qsi/security.hpp"

namespace qsi::cli {

namespace {

namespace fs = std::filesystem;
using config::RunConfig;

std::string fmt(double v) {
  if (std::isnan(v)) return "undefined";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "undefined"; }

std::string hash_bytes(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Collects the files of one command and writes them, plus a manifest of
// their hashes, in a single pass at the end.
class Artifacts {
 public:
  Artifacts(const RunConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {}

  void add(std::string name, std::string contents) {
    files_.emplace_back(std::move(name), std::move(contents));
  }

  void write() {
    const fs::path dir = cfg_.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

    add("config.ini", config::serialize(cfg_));
    std::string manifest;
    manifest += "command=" + command_ + "\n";
    manifest += "qsi_version=" + std::string(kVersion) + "\n";
    manifest += "seed=" + std::to_string(cfg_.seed) + "\n";
    manifest += "config_hash=" + config::config_hash(cfg_) + "\n";
    for (const auto& [name, contents] : files_) {
      manifest += "file=" + name + " fnv1a64=" + hash_bytes(contents) + "\n";
    }
    files_.emplace_back("manifest.txt", std::move(manifest));
    try {
      for (const auto& [name, contents] : files_) cgi::write_file(dir / name, contents);
    } catch (const cgi::FormatError& e) {
      throw std::runtime_error(e.what());  // an output problem, not an input one
    }
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::vector<std::pair<std::string, std::string>> files_;
};

double e2_floor() { return attack::min_error_rate(2).value; }

decoy::ChannelModel resolve_channel(const RunConfig& cfg) {
  if (!cfg.calibrate_channel) return cfg.channel;
  return sim::calibrate_channel(config::observed_observables(cfg), cfg.source);
}

security::VerdictPolicy policy_of(const RunConfig& cfg) {
  return {cfg.sigma_margin, cfg.min_sifted};
}

security::KeyRateParams key_params(const RunConfig& cfg) {
  return {cfg.pulse_rate, cfg.source.class_probabilities[0], cfg.sifting_factor, cfg.f_ec};
}

security::SecurityVerdict assess(const decoy::DecoyObservables& obs, const RunConfig& cfg,
                                 double e2) {
  auto v = security::verdict(obs, cfg.source, e2, policy_of(cfg));
  v.key_rate_bps = security::secret_key_rate(obs, cfg.source, key_params(cfg)).bits_per_second;
  return v;
}

std::string observables_csv(const decoy::DecoyObservables& obs) {
  std::string out = "class,sent,detected,sifted,errors,gain,qber\n";
  auto row = [&](const char* name, const decoy::ClassTally& t) {
    const double gain = t.sent > 0 ? static_cast<double>(t.detected) / t.sent : 0.0;
    const double qber =
        t.sifted > 0 ? static_cast<double>(t.errors) / t.sifted : std::nan("");
    out += std::string(name) + "," + std::to_string(t.sent) + "," + std::to_string(t.detected) +
           "," + std::to_string(t.sifted) + "," + std::to_string(t.errors) + "," + fmt(gain) +
           "," + fmt(qber) + "\n";
  };
  row("signal", obs.signal);
  row("decoy", obs.decoy);
  row("vacuum", obs.vacuum);
  return out;
}

std::string channel_block(const decoy::ChannelModel& ch) {
  return "transmittance=" + fmt(ch.transmittance) + "\nbackground_yield=" +
         fmt(ch.background_yield) + "\nmisalignment_error=" + fmt(ch.misalignment_error) + "\n";
}

}  // namespace

int cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto& src = cfg.source;
  const auto inequality = decoy::decoy_inequality_check(src.mu, src.nu);

  std::string table = "n,c0,c1,c2,c3,e_min\n";
  double e1 = 0.5;
  double e2 = 0.5;
  for (int n = 1; n <= 10; ++n) {
    const auto c = attack::overlap_coefficients(n);
    const double e = attack::min_error_rate(n).value;
    if (n == 1) e1 = e;
    if (n == 2) e2 = e;
    table += std::to_string(n);
    for (double cj : c.c) table += "," + fmt(cj);
    table += "," + fmt(e) + "\n";
  }

  const auto obs = config::observed_observables(cfg);
  std::optional<decoy::ClampedValue> bound;
  if (obs.q_nu > 0.0) bound = decoy::qber_lower_bound(obs, src, e2);
  const auto joint = decoy::joint_yield_lower_bound(obs, src);
  const auto rate = security::secret_key_rate(obs, src, key_params(cfg));

  std::vector<std::pair<std::string, std::string>> rows = {
      {"mu", fmt(src.mu)},
      {"nu", fmt(src.nu)},
      {"Q_mu", fmt(obs.q_mu)},
      {"Q_nu", fmt(obs.q_nu)},
      {"Y0", fmt(obs.y0)},
      {"E_mu", fmt(obs.e_mu)},
      {"E_nu", fmt(obs.e_nu)},
      {"e1_min", fmt(e1)},
      {"e2_min", fmt(e2)},
      {"Y12_lower", fmt(joint.value)},
      {"E_nu_L", bound ? fmt(bound->value) : "undefined"},
      {"E_nu_L_unclamped", bound ? fmt(bound->unclamped) : "undefined"},
      {"E_nu_L_clamped", bound ? (bound->clamped ? "true" : "false") : "undefined"},
      {"Y1_lower", fmt(rate.y1_lower)},
      {"e1_upper", fmt(rate.e1_upper)},
      {"key_rate_bps", fmt(rate.bits_per_second)},
      {"decoy_inequalities", inequality.all_pass() ? "hold" : "violated"},
  };
  std::string csv = "quantity,value\n";
  std::string text = "decoy-state analysis\n";
  for (const auto& [k, v] : rows) {
    csv += k + "," + v + "\n";
    char line[96];
    std::snprintf(line, sizeof line, "  %-20s %s\n", k.c_str(), v.c_str());
    text += line;
  }

  std::string ineq = "n,holds\n1," + std::string(inequality.one_photon_holds ? "1" : "0") +
                     "\n2," + (inequality.two_photon_holds ? "1" : "0") + "\n";
  for (std::size_t k = 0; k < inequality.ratio_holds.size(); ++k) {
    ineq += std::to_string(k + 3) + "," + (inequality.ratio_holds[k] ? "1" : "0") + "\n";
  }
  text += "\nP_n(mu)/P_n(nu) ordering for n <= " + std::to_string(inequality.n_max) + ": " +
          (inequality.all_pass() ? "holds" : "VIOLATED") + "\n";
  text += "\nc_j(n) and minimum SRM error\n" + table;

  Artifacts out(cfg, "analyze");
  out.add("cj_table.csv", table);
  out.add("analysis.csv", csv);
  out.add("analysis.txt", text);
  out.add("inequalities.csv", ineq);
  out.write();
  log << text;
  return kSuccess;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto channel = resolve_channel(cfg);
  const auto session =
      sim::run_session(config::simulation_config(cfg, channel), cfg.frames, cfg.pulses_per_frame);
  const auto v = assess(session.observables, cfg, e2_floor());

  Artifacts out(cfg, "simulate");
  out.add("observables.csv", observables_csv(session.observables));
  out.add("channel.txt", channel_block(channel));
  out.add("verdict.txt", security::to_key_value(v));
  out.add("verdict.csv", security::csv_header() + security::to_csv_row(v));
  out.write();

  log << "pulses " << cfg.frames * cfg.pulses_per_frame << "  E_nu " << fmt(v.measured_e_nu)
      << "  E_nu^L " << fmt(v.bound_e_nu_l) << "  decision " << security::to_string(v.decision)
      << "\n";
  return v.decision == security::Decision::compromised ? kCompromised : kSuccess;
}

int cmd_image(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  cgi::ObjectMask object;
  if (cfg.object_path.empty()) {
    object = cgi::plus_object(cfg.grid);
  } else {
    object = cgi::read_object(cfg.object_path);
    if (!(object.grid == cfg.grid)) {
      throw config::ConfigError(cfg.object_path + ": object is " +
                                std::to_string(object.grid.width) + "x" +
                                std::to_string(object.grid.height) + ", grid is " +
                                std::to_string(cfg.grid.width) + "x" +
                                std::to_string(cfg.grid.height));
    }
  }
  const auto patterns =
      cgi::generate_patterns(cfg.pattern_mode, cfg.grid, cfg.pattern_count, cfg.seed);

  Artifacts out(cfg, "image");
  std::vector<double> counts;
  if (cfg.counts == config::CountSource::analytic) {
    auto rng = cgi::Rng::substream(cfg.seed, 0x696d616765ULL);  // "image"
    counts = cgi::bucket_counts(object, patterns,
                                {cfg.kappa, cfg.shot_noise, cfg.leakage_counts}, rng);
  } else {
    // One frame per pattern; each frame's transmittance is scaled by the
    // fraction of light the object passes under that pattern.
    const auto channel = resolve_channel(cfg);
    const auto scale = cgi::transmitted_fractions(object, patterns, cfg.leakage);
    const auto session = sim::run_session(config::simulation_config(cfg, channel),
                                          patterns.size(), cfg.pulses_per_frame, scale);
    counts = cgi::bucket_counts(patterns, session.frame_counts);
    const auto v = assess(session.observables, cfg, e2_floor());
    out.add("observables.csv", observables_csv(session.observables));
    out.add("verdict.txt", security::to_key_value(v));
    out.add("verdict.csv", security::csv_header() + security::to_csv_row(v));
    log << "session decision " << security::to_string(v.decision) << "\n";
  }

  const auto image = cgi::reconstruct(patterns, counts);
  const double correlation = cgi::pearson(image.values, object.transmission);

  std::vector<bool> signal(object.transmission.size());
  std::vector<bool> background(object.transmission.size());
  bool have_signal = false;
  bool have_background = false;
  for (std::size_t p = 0; p < signal.size(); ++p) {
    signal[p] = object.transmission[p] >= 0.5;
    background[p] = !signal[p];
    have_signal = have_signal || signal[p];
    have_background = have_background || background[p];
  }
  std::string snr = "snr_db,signal_mean,background_variance,correlation\n";
  if (have_signal && have_background) {
    const auto r = cgi::snr_db(image, signal, background);
    snr += (r.infinite ? std::string("inf") : fmt(r.snr_db)) + "," + fmt(r.signal_mean) + "," +
           fmt(r.background_variance) + "," + fmt(correlation) + "\n";
    log << "SNR " << (r.infinite ? std::string("inf") : fmt(r.snr_db)) << " dB  ";
  } else {
    snr += "undefined,undefined,undefined," + fmt(correlation) + "\n";
  }
  log << "correlation(O, T) " << fmt(correlation) << "\n";

  std::string counts_csv = "pattern,on_blocks,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts_csv += std::to_string(i) + "," + std::to_string(patterns.on_count(i)) + "," +
                  fmt(counts[i]) + "\n";
  }

  out.add("image.pgm", cgi::encode_pgm(cgi::render_8bit(image)));
  out.add("image_raw.txt", cgi::encode_float_grid(image.grid, image.values));
  out.add("counts.csv", counts_csv);
  out.add("snr.csv", snr);
  if (cfg.export_patterns) out.add("patterns.txt", cgi::encode_patterns(patterns));
  out.write();
  return kSuccess;
}

int cmd_attack_sweep(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto channel = resolve_channel(cfg);
  const double e2 = e2_floor();

  std::string csv = "fraction,e_nu,e_nu_l,decision,decoy_sifted,standard_error\n";
  for (std::size_t i = 0; i < cfg.sweep_points; ++i) {
    const double fraction = static_cast<double>(i) / static_cast<double>(cfg.sweep_points - 1);
    RunConfig point = cfg;
    point.attack_enabled = fraction > 0.0;
    point.attack_fraction = fraction;
    const auto session = sim::run_session(config::simulation_config(point, channel), cfg.frames,
                                          cfg.pulses_per_frame);
    const auto v = security::verdict(session.observables, cfg.source, e2, policy_of(cfg));
    csv += fmt(fraction) + "," + fmt(v.measured_e_nu) + "," + fmt(v.bound_e_nu_l) + "," +
           security::to_string(v.decision) + "," + std::to_string(v.decoy_sifted) + "," +
           fmt(v.standard_error) + "\n";
    log << "fraction " << fmt(fraction) << "  E_nu " << fmt(v.measured_e_nu) << "  "
        << security::to_string(v.decision) << "\n";
  }

  Artifacts out(cfg, "attack-sweep");
  out.add("channel.txt", channel_block(channel));
  out.add("sweep.csv", csv);
  out.write();
  return kSuccess;
}

int run_guarded(int (*command)(const RunConfig&, std::ostream&), const RunConfig& cfg,
                std::ostream& log, std::ostream& err) {
  try {
    return command(cfg, log);
  } catch (const config::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cgi::FormatError& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const sim::InfeasibleCalibration& e) {
    err << "infeasible calibration: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace qsi::cli
