#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "gclab/config.hpp"

using namespace gclab;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_config(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::trunc);
  out << body;
  return p;
}

bool has_error_containing(const ConfigError& e, const std::string& needle) {
  for (const auto& msg : e.errors())
    if (msg.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("config: minimal ou experiment parses") {
  const auto p = write_temp_config("gclab_cfg_ok.ini",
                                   "[model]\n"
                                   "kind = dissipative_sde\n"
                                   "eigenvalues = 1.0\n"
                                   "[coupling]\n"
                                   "gain = 1.0\n"
                                   "T = 3.0\n"
                                   "dt = 1e-4\n"
                                   "ensemble = 4\n"
                                   "[seeds]\n"
                                   "master_seed = 7\n");
  const ExperimentConfig cfg = load_config(p);
  CHECK(cfg.kind == ExperimentConfig::ModelKind::DissipativeSde);
  CHECK(cfg.eigenvalues == std::vector<double>{1.0});
  CHECK(cfg.T == 3.0);
  CHECK(cfg.dt == 1e-4);
  CHECK(cfg.ensemble == 4);
  CHECK(cfg.master_seed == 7);
  CHECK(cfg.coupled);
  CHECK_FALSE(cfg.auto_gain);
}

TEST_CASE("config: negative dt names the offending key") {
  const auto p = write_temp_config("gclab_cfg_dt.ini",
                                   "[model]\n"
                                   "kind = dissipative_sde\n"
                                   "[coupling]\n"
                                   "dt = -0.5\n");
  try {
    load_config(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(has_error_containing(e, "coupling.dt must be > 0"));
  }
}

TEST_CASE("config: nse range condition is validated") {
  const auto p = write_temp_config("gclab_cfg_range.ini",
                                   "[model]\n"
                                   "kind = nse2d\n"
                                   "k_max = 8\n"
                                   "noise_radius2 = 1\n"
                                   "forced_radius2 = 2\n");
  try {
    load_config(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(has_error_containing(e, "range condition"));
    CHECK(has_error_containing(e, "span the forced modes"));
  }
}

TEST_CASE("config: unknown keys are rejected and all errors are collected") {
  const auto p = write_temp_config("gclab_cfg_multi.ini",
                                   "[model]\n"
                                   "kind = dissipative_sde\n"
                                   "typo_key = 1\n"
                                   "[coupling]\n"
                                   "dt = 0\n"
                                   "T = -1\n"
                                   "ensemble = 0\n");
  try {
    load_config(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() >= 4);
    CHECK(has_error_containing(e, "unknown key 'model.typo_key'"));
    CHECK(has_error_containing(e, "coupling.dt must be > 0"));
    CHECK(has_error_containing(e, "coupling.T must be > 0"));
    CHECK(has_error_containing(e, "coupling.ensemble must be >= 1"));
  }
}

TEST_CASE("config: parse errors carry line numbers") {
  const auto p = write_temp_config("gclab_cfg_parse.ini",
                                   "[model\n"
                                   "kind = dissipative_sde\n"
                                   "stray line\n");
  try {
    load_config(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(has_error_containing(e, "line 1"));
    CHECK(has_error_containing(e, "line 3"));
  }
}

TEST_CASE("config: auto gain, hconstants and hitprob sections") {
  const auto p = write_temp_config("gclab_cfg_full.ini",
                                   "[model]\n"
                                   "kind = sfde\n"
                                   "delay = 1.0\n"
                                   "drift_a0 = -2.0\n"
                                   "drift_a1 = 0.5\n"
                                   "noise_amp = 1.0\n"
                                   "[coupling]\n"
                                   "gain = auto\n"
                                   "dt = 1e-3\n"
                                   "T = 6\n"
                                   "[hconstants]\n"
                                   "zeta = 5\n"
                                   "kappa = 1\n"
                                   "mu = 1\n"
                                   "b = 2\n"
                                   "[hitprob]\n"
                                   "t0 = 5\n"
                                   "n_traj = 100\n"
                                   "initial = -1,0,1\n"
                                   "target_radius = 3\n");
  const ExperimentConfig cfg = load_config(p);
  CHECK(cfg.auto_gain);
  REQUIRE(cfg.hconstants.has_value());
  CHECK(cfg.hconstants->zeta == 5.0);
  CHECK(cfg.has_hitprob);
  CHECK(cfg.hit_initial.size() == 3);
}

TEST_CASE("config: missing file") {
  CHECK_THROWS_AS(load_config("/nonexistent/gclab.ini"), ConfigError);
}
