#include <doctest.h>

#include <algorithm>
#include <map>

#include "qsi/config.hpp"

using namespace qsi::config;

TEST_CASE("defaults are valid") {
  const RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.source.mu == 0.68);
  CHECK(cfg.observed.q_nu == 7.32e-5);
}

TEST_CASE("sections, comments and flat keys") {
  const auto cfg = parse(
      "# comment\n"
      "[source]\n"
      "mu = 0.7   ; trailing comment\n"
      "\n"
      "[sim]\n"
      "seed = 99\n"
      "[]\n"
      "imaging.mode = random\n"
      "attack.enabled = yes\n");
  CHECK(cfg.source.mu == 0.7);
  CHECK(cfg.seed == 99);
  CHECK(cfg.pattern_mode == qsi::cgi::PatternMode::random);
  CHECK(cfg.attack_enabled);
}

TEST_CASE("bad input is rejected") {
  CHECK_THROWS_AS(parse("source.mu_typo = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("source.mu = 0.5\nsource.mu = 0.6\n"), ConfigError);
  CHECK_THROWS_AS(parse("source.mu = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse("sim.seed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("attack.enabled = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse("[source\nmu = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("just words\n"), ConfigError);
  CHECK_THROWS_AS(load("/nonexistent/qsi.ini"), ConfigError);
}

TEST_CASE("validation") {
  auto cfg = parse("source.nu = 0.9\n");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = parse("imaging.patterns = 100\n");  // raster scan needs one pattern per block
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = parse("imaging.mode = random\nimaging.patterns = 100\n");
  CHECK_NOTHROW(cfg.validate());
  cfg = parse("attack.fraction = 2\n");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("serialise then parse is the identity") {
  auto cfg = parse(
      "source.mu = 0.6100000000000001\n"
      "observed.q_mu = 1.2345678901234567e-4\n"
      "imaging.object = some/path.pgm\n"
      "attack.resend = always_detected\n"
      "imaging.counts = analytic\n"
      "sim.threads = 3\n");
  const auto text = serialize(cfg);
  const auto back = parse(text);
  CHECK(back == cfg);
  CHECK(serialize(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);
  CHECK(config_hash(cfg) != config_hash(RunConfig{}));

  std::size_t lines = std::count(text.begin(), text.end(), '\n');
  CHECK(lines == known_keys().size());
}

TEST_CASE("every key round-trips through get and set") {
  RunConfig cfg;
  for (const auto& key : known_keys()) {
    RunConfig copy;
    set_value(copy, key, get_value(cfg, key));
    CHECK(copy == cfg);
  }
}

TEST_CASE("environment overrides") {
  CHECK(env_name("source.mu") == "QSI_SOURCE_MU");
  CHECK(env_name("sim.pulses_per_frame") == "QSI_SIM_PULSES_PER_FRAME");
  const std::map<std::string, std::string> env{{"QSI_SOURCE_NU", "0.2"},
                                               {"QSI_OUTPUT_DIR", "elsewhere"}};
  RunConfig cfg;
  apply_env(cfg, [&](const char* name) -> const char* {
    const auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  CHECK(cfg.source.nu == 0.2);
  CHECK(cfg.output_dir == "elsewhere");

  const std::map<std::string, std::string> bad{{"QSI_SIM_SEED", "x"}};
  CHECK_THROWS_AS(apply_env(cfg,
                            [&](const char* name) -> const char* {
                              const auto it = bad.find(name);
                              return it == bad.end() ? nullptr : it->second.c_str();
                            }),
                  ConfigError);
}

TEST_CASE("derived module settings") {
  auto cfg = parse("attack.enabled = true\nattack.fraction = 0.3\nsim.seed = 7\n");
  const auto sim = simulation_config(cfg, {1e-3, 1e-6, 0.01});
  CHECK(sim.attack.enabled);
  CHECK(sim.attack.fraction == 0.3);
  CHECK(sim.rng_seed == 7);
  CHECK(sim.channel.transmittance == 1e-3);

  const auto obs = observed_observables(cfg);
  CHECK(obs.q_mu == 2.69e-4);
  CHECK(obs.signal.sent == 65'000'000);
  CHECK(obs.decoy.sent == 10'000'000);
  CHECK(obs.vacuum.sent == 5'000'000);
}
