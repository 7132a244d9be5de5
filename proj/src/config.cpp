#include "qsi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "qsi/image_io.hpp"

namespace qsi::config {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

Field real(std::string key, double RunConfig::*member) {
  return {std::move(key), [member](const RunConfig& c) { return format_double(c.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            c.*member = to_double(k, v);
          }};
}

template <typename Unsigned>
Field integer(std::string key, Unsigned RunConfig::*member) {
  return {std::move(key), [member](const RunConfig& c) { return std::to_string(c.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            c.*member = static_cast<Unsigned>(to_u64(k, v));
          }};
}

Field flag(std::string key, bool RunConfig::*member) {
  return {std::move(key), [member](const RunConfig& c) { return from_bool(c.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            c.*member = to_bool(k, v);
          }};
}

// Accessors for fields nested one level down.
template <typename Outer, typename T>
Field nested_real(std::string key, Outer RunConfig::*outer, T Outer::*inner) {
  return {std::move(key), [=](const RunConfig& c) { return format_double(c.*outer.*inner); },
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.*outer.*inner = to_double(k, v);
          }};
}

Field probability(std::string key, std::size_t index) {
  return {std::move(key),
          [index](const RunConfig& c) {
            return format_double(c.source.class_probabilities[index]);
          },
          [index](RunConfig& c, const std::string& k, const std::string& v) {
            c.source.class_probabilities[index] = to_double(k, v);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(nested_real("source.mu", &RunConfig::source, &decoy::IntensityConfig::mu));
    f.push_back(nested_real("source.nu", &RunConfig::source, &decoy::IntensityConfig::nu));
    f.push_back(probability("source.p_signal", 0));
    f.push_back(probability("source.p_decoy", 1));
    f.push_back(probability("source.p_vacuum", 2));
    f.push_back(real("source.pulse_rate", &RunConfig::pulse_rate));

    f.push_back(nested_real("observed.q_mu", &RunConfig::observed, &ObservedRates::q_mu));
    f.push_back(nested_real("observed.q_nu", &RunConfig::observed, &ObservedRates::q_nu));
    f.push_back(nested_real("observed.y0", &RunConfig::observed, &ObservedRates::y0));
    f.push_back(nested_real("observed.e_mu", &RunConfig::observed, &ObservedRates::e_mu));
    f.push_back(nested_real("observed.e_nu", &RunConfig::observed, &ObservedRates::e_nu));

    f.push_back(flag("channel.calibrate", &RunConfig::calibrate_channel));
    f.push_back(nested_real("channel.transmittance", &RunConfig::channel,
                            &decoy::ChannelModel::transmittance));
    f.push_back(nested_real("channel.background_yield", &RunConfig::channel,
                            &decoy::ChannelModel::background_yield));
    f.push_back(nested_real("channel.misalignment", &RunConfig::channel,
                            &decoy::ChannelModel::misalignment_error));

    f.push_back(integer("sim.seed", &RunConfig::seed));
    f.push_back(integer("sim.frames", &RunConfig::frames));
    f.push_back(integer("sim.pulses_per_frame", &RunConfig::pulses_per_frame));
    f.push_back(integer("sim.threads", &RunConfig::threads));

    f.push_back(flag("attack.enabled", &RunConfig::attack_enabled));
    f.push_back(real("attack.fraction", &RunConfig::attack_fraction));
    f.push_back({"attack.resend",
                 [](const RunConfig& c) {
                   return std::string(c.resend == sim::ResendPolicy::lossless ? "lossless"
                                                                              : "always_detected");
                 },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   if (v == "lossless") {
                     c.resend = sim::ResendPolicy::lossless;
                   } else if (v == "always_detected" || v == "always-detected") {
                     c.resend = sim::ResendPolicy::always_detected;
                   } else {
                     throw ConfigError(k + ": expected lossless or always_detected, got '" + v +
                                       "'");
                   }
                 }});
    f.push_back({"attack.n_max", [](const RunConfig& c) { return std::to_string(c.attack_n_max); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.attack_n_max = static_cast<int>(to_u64(k, v));
                 }});

    f.push_back({"imaging.grid_width",
                 [](const RunConfig& c) { return std::to_string(c.grid.width); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.grid.width = to_u64(k, v);
                 }});
    f.push_back({"imaging.grid_height",
                 [](const RunConfig& c) { return std::to_string(c.grid.height); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.grid.height = to_u64(k, v);
                 }});
    f.push_back({"imaging.mode",
                 [](const RunConfig& c) { return cgi::to_string(c.pattern_mode); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.pattern_mode = cgi::parse_pattern_mode(v);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(k + ": " + e.what());
                   }
                 }});
    f.push_back(integer("imaging.patterns", &RunConfig::pattern_count));
    f.push_back({"imaging.object", [](const RunConfig& c) { return c.object_path; },
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.object_path = v;
                 }});
    f.push_back({"imaging.counts",
                 [](const RunConfig& c) {
                   return std::string(c.counts == CountSource::analytic ? "analytic"
                                                                        : "monte_carlo");
                 },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   if (v == "analytic") {
                     c.counts = CountSource::analytic;
                   } else if (v == "monte_carlo" || v == "monte-carlo") {
                     c.counts = CountSource::monte_carlo;
                   } else {
                     throw ConfigError(k + ": expected analytic or monte_carlo, got '" + v + "'");
                   }
                 }});
    f.push_back(real("imaging.kappa", &RunConfig::kappa));
    f.push_back(flag("imaging.shot_noise", &RunConfig::shot_noise));
    f.push_back(real("imaging.leakage", &RunConfig::leakage));
    f.push_back(real("imaging.leakage_counts", &RunConfig::leakage_counts));
    f.push_back(flag("imaging.export_patterns", &RunConfig::export_patterns));

    f.push_back(integer("sweep.points", &RunConfig::sweep_points));

    f.push_back(real("security.sigma_margin", &RunConfig::sigma_margin));
    f.push_back(integer("security.min_sifted", &RunConfig::min_sifted));
    f.push_back(real("security.f_ec", &RunConfig::f_ec));
    f.push_back(real("security.sifting_factor", &RunConfig::sifting_factor));

    f.push_back({"output.dir", [](const RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.output_dir = v;
                 }});
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  try {
    source.validate();
    if (!calibrate_channel) channel.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  check(pulse_rate > 0.0, "source.pulse_rate must be positive");
  for (double r : {observed.q_mu, observed.q_nu, observed.y0, observed.e_mu, observed.e_nu}) {
    check(r >= 0.0 && r <= 1.0, "observed rates must lie in [0, 1]");
  }
  check(frames >= 1 && pulses_per_frame >= 1, "sim.frames and sim.pulses_per_frame must be >= 1");
  check(attack_fraction >= 0.0 && attack_fraction <= 1.0, "attack.fraction outside [0, 1]");
  check(attack_n_max >= 1, "attack.n_max must be >= 1");
  check(grid.blocks() >= 1, "imaging grid is empty");
  check(pattern_count >= 2, "imaging.patterns must be >= 2");
  if (pattern_mode == cgi::PatternMode::raster_scan) {
    check(pattern_count == grid.blocks(), "raster scan needs imaging.patterns = grid blocks");
  }
  check(kappa >= 0.0, "imaging.kappa must be nonnegative");
  check(leakage >= 0.0 && leakage <= 1.0, "imaging.leakage outside [0, 1]");
  check(leakage_counts >= 0.0, "imaging.leakage_counts must be nonnegative");
  check(sweep_points >= 2, "sweep.points must be >= 2");
  check(sigma_margin >= 0.0, "security.sigma_margin must be nonnegative");
  check(f_ec >= 1.0, "security.f_ec must be >= 1");
  check(sifting_factor > 0.0 && sifting_factor <= 1.0, "security.sifting_factor outside (0, 1]");
}

bool RunConfig::operator==(const RunConfig& other) const {
  return serialize(*this) == serialize(other);
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  field(key).set(cfg, key, value);
}

std::string get_value(const RunConfig& cfg, const std::string& key) {
  return field(key).get(cfg);
}

RunConfig parse(const std::string& text, const RunConfig& base) {
  RunConfig cfg = base;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.resize(c);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      set_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

RunConfig load(const std::string& path, const RunConfig& base) {
  std::string text;
  try {
    text = cgi::read_file(path);
  } catch (const cgi::FormatError& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse(text, base);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string env_name(const std::string& key) {
  std::string name = "QSI_";
  for (char c : key) {
    name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return name;
}

void apply_env(RunConfig& cfg, const std::function<const char*(const char*)>& lookup) {
  for (const auto& f : fields()) {
    const std::string name = env_name(f.key);
    if (const char* value = lookup(name.c_str())) {
      try {
        f.set(cfg, f.key, trim(value));
      } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
      }
    }
  }
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : serialize(cfg)) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

sim::SimulationConfig simulation_config(const RunConfig& cfg, const decoy::ChannelModel& channel) {
  sim::SimulationConfig s;
  s.pulse_rate = cfg.pulse_rate;
  s.source = cfg.source;
  s.channel = channel;
  s.rng_seed = cfg.seed;
  s.threads = cfg.threads;
  s.attack.enabled = cfg.attack_enabled;
  s.attack.fraction = cfg.attack_fraction;
  s.attack.resend = cfg.resend;
  if (cfg.attack_enabled) s.attack.profile = attack::AttackProfile(cfg.attack_n_max);
  return s;
}

decoy::DecoyObservables observed_observables(const RunConfig& cfg) {
  const double total = static_cast<double>(cfg.frames) * static_cast<double>(cfg.pulses_per_frame);
  std::array<std::uint64_t, 3> sent{};
  for (std::size_t k = 0; k < 3; ++k) {
    sent[k] = static_cast<std::uint64_t>(std::llround(total * cfg.source.class_probabilities[k]));
  }
  const auto& o = cfg.observed;
  return decoy::DecoyObservables::from_rates(o.q_mu, o.q_nu, o.y0, o.e_mu, o.e_nu, sent);
}

}  // namespace qsi::config
