#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gclab/certify.hpp"
#include "gclab/models/dissipative_sde.hpp"

namespace gclab {

/// Config rejection carrying every collected problem, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& es) {
    std::string s = "config invalid:";
    for (const auto& e : es) s += "\n  - " + e;
    return s;
  }
  std::vector<std::string> errors_;
};

namespace ini {

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

using Section = std::map<std::string, Entry>;

struct File {
  std::map<std::string, Section> sections;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key) > 0;
  }
  const Entry* find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Sectioned key = value text; '#' and ';' start comments. Parse errors
/// carry line and column.
inline File parse(std::istream& in, std::vector<std::string>& errors) {
  File file;
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t comment = std::min(raw.find('#'), raw.find(';'));
    std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back("parse error at line " + std::to_string(line_no) + ", column " +
                         std::to_string(line.size()) + ": unterminated section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        errors.push_back("parse error at line " + std::to_string(line_no) +
                         ", column 2: empty section name");
      file.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("parse error at line " + std::to_string(line_no) +
                       ", column 1: expected key = value");
      continue;
    }
    if (section.empty()) {
      errors.push_back("parse error at line " + std::to_string(line_no) +
                       ", column 1: key outside any [section]");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      errors.push_back("parse error at line " + std::to_string(line_no) +
                       ", column 1: empty key");
      continue;
    }
    auto [it, inserted] = file.sections[section].emplace(key, Entry{value, line_no});
    if (!inserted)
      errors.push_back("duplicate key '" + section + "." + key + "' at line " +
                       std::to_string(line_no));
  }
  return file;
}

}  // namespace ini

/// Fully validated experiment description. Field groups mirror the config
/// sections; only the group for the selected model kind is meaningful.
struct ExperimentConfig {
  enum class ModelKind { DissipativeSde, Sfde, Nse2d };

  ModelKind kind = ModelKind::DissipativeSde;

  // dissipative_sde
  std::vector<double> eigenvalues = {1.0};
  SdeNonlinearity nonlinearity = SdeNonlinearity::Zero;
  double nonlin_scale = 0.0;
  double sigma_scale = 1.0;

  // sfde (linear delay family)
  double delay = 1.0;
  double drift_a0 = -2.0;
  double drift_a1 = 0.5;
  double noise_amp = 1.0;

  // nse2d
  double nu = 1.0;
  int k_max = 16;
  int noise_radius2 = 2;
  int forced_radius2 = 2;
  double noise_amplitude = 0.25;
  double init_amplitude = 0.5;
  double init_diff_amplitude = 1.0;

  // coupling
  bool coupled = true;
  double gain = 1.0;
  bool auto_gain = false;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t ensemble = 256;
  std::uint64_t record_stride = 10;
  double x0 = 1.0;
  double y0 = 0.0;

  std::uint64_t master_seed = 1;

  // outputs
  std::string directory = "out";
  bool write_runs = true;
  std::size_t max_run_files = 16;

  // bounds
  std::vector<double> deltas = {0.3, 0.5, 0.9};
  std::vector<double> cap_scales = {2.0, 8.0};
  bool tv_estimate = false;
  int tv_bins = 64;

  // optional explicit certificate input
  std::optional<HConstants> hconstants;

  // optional hitting-probability experiment
  bool has_hitprob = false;
  double hit_t0 = 5.0;
  std::size_t hit_ntraj = 256;
  std::vector<double> hit_initial = {-1.0, 0.0, 1.0};
  double hit_target_radius = 3.0;
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

inline bool parse_u64(const std::string& s, std::uint64_t& out) {
  try {
    std::size_t pos = 0;
    out = std::stoull(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

inline std::vector<double> parse_list(const std::string& s, bool& ok) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  ok = true;
  while (std::getline(ss, item, ',')) {
    double v;
    if (!parse_double(ini::trim(item), v)) {
      ok = false;
      return out;
    }
    out.push_back(v);
  }
  if (out.empty()) ok = false;
  return out;
}

class Reader {
 public:
  Reader(const ini::File& file, std::vector<std::string>& errors) : file_(file), errors_(errors) {}

  double number(const std::string& sec, const std::string& key, double fallback) {
    const auto* e = file_.find(sec, key);
    if (!e) return fallback;
    double v;
    if (!parse_double(e->value, v)) {
      errors_.push_back(sec + "." + key + " is not a number (line " + std::to_string(e->line) + ")");
      return fallback;
    }
    return v;
  }

  std::uint64_t unsigned_number(const std::string& sec, const std::string& key,
                                std::uint64_t fallback) {
    const auto* e = file_.find(sec, key);
    if (!e) return fallback;
    std::uint64_t v;
    if (!parse_u64(e->value, v)) {
      errors_.push_back(sec + "." + key + " is not a nonnegative integer (line " +
                        std::to_string(e->line) + ")");
      return fallback;
    }
    return v;
  }

  std::string text(const std::string& sec, const std::string& key, const std::string& fallback) {
    const auto* e = file_.find(sec, key);
    return e ? e->value : fallback;
  }

  bool boolean(const std::string& sec, const std::string& key, bool fallback) {
    const auto* e = file_.find(sec, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    errors_.push_back(sec + "." + key + " must be true or false (line " + std::to_string(e->line) +
                      ")");
    return fallback;
  }

  std::vector<double> list(const std::string& sec, const std::string& key,
                           std::vector<double> fallback) {
    const auto* e = file_.find(sec, key);
    if (!e) return fallback;
    bool ok;
    auto v = parse_list(e->value, ok);
    if (!ok) {
      errors_.push_back(sec + "." + key + " is not a comma-separated number list (line " +
                        std::to_string(e->line) + ")");
      return fallback;
    }
    return v;
  }

  bool present(const std::string& sec, const std::string& key) const {
    return file_.has(sec, key);
  }

 private:
  const ini::File& file_;
  std::vector<std::string>& errors_;
};

}  // namespace detail

/// Parses and fully validates an experiment config, reporting every error.
/// Unknown keys are rejected.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> errors;
  if (!in) throw ConfigError({"cannot open config file: " + path.string()});
  ini::File file = ini::parse(in, errors);
  detail::Reader r(file, errors);
  ExperimentConfig cfg;

  const std::string kind = r.text("model", "kind", "");
  if (kind == "dissipative_sde")
    cfg.kind = ExperimentConfig::ModelKind::DissipativeSde;
  else if (kind == "sfde")
    cfg.kind = ExperimentConfig::ModelKind::Sfde;
  else if (kind == "nse2d")
    cfg.kind = ExperimentConfig::ModelKind::Nse2d;
  else
    errors.push_back("model.kind must be one of dissipative_sde, sfde, nse2d");

  if (kind == "dissipative_sde") {
    cfg.eigenvalues = r.list("model", "eigenvalues", cfg.eigenvalues);
    const std::string nl = r.text("model", "nonlinearity", "zero");
    if (nl == "zero")
      cfg.nonlinearity = SdeNonlinearity::Zero;
    else if (nl == "cubic_saturating")
      cfg.nonlinearity = SdeNonlinearity::CubicSaturating;
    else if (nl == "rotation")
      cfg.nonlinearity = SdeNonlinearity::Rotation;
    else
      errors.push_back("model.nonlinearity must be zero, cubic_saturating or rotation");
    cfg.nonlin_scale = r.number("model", "nonlin_scale", cfg.nonlin_scale);
    cfg.sigma_scale = r.number("model", "sigma_scale", cfg.sigma_scale);
    double prev = 0.0;
    for (double l : cfg.eigenvalues) {
      if (!(l > 0.0)) errors.push_back("model.eigenvalues must all be > 0");
      if (l < prev) errors.push_back("model.eigenvalues must be ascending");
      prev = l;
    }
  } else if (kind == "sfde") {
    cfg.delay = r.number("model", "delay", cfg.delay);
    cfg.drift_a0 = r.number("model", "drift_a0", cfg.drift_a0);
    cfg.drift_a1 = r.number("model", "drift_a1", cfg.drift_a1);
    cfg.noise_amp = r.number("model", "noise_amp", cfg.noise_amp);
    if (!(cfg.delay > 0.0)) errors.push_back("model.delay must be > 0");
    if (!(cfg.noise_amp > 0.0)) errors.push_back("model.noise_amp must be > 0");
  } else if (kind == "nse2d") {
    cfg.nu = r.number("model", "nu", cfg.nu);
    cfg.k_max = static_cast<int>(r.unsigned_number("model", "k_max", 16));
    cfg.noise_radius2 = static_cast<int>(r.unsigned_number("model", "noise_radius2", 2));
    cfg.forced_radius2 =
        static_cast<int>(r.unsigned_number("model", "forced_radius2",
                                           static_cast<std::uint64_t>(cfg.noise_radius2)));
    cfg.noise_amplitude = r.number("model", "noise_amplitude", cfg.noise_amplitude);
    cfg.init_amplitude = r.number("model", "init_amplitude", cfg.init_amplitude);
    cfg.init_diff_amplitude = r.number("model", "init_diff_amplitude", cfg.init_diff_amplitude);
    if (!(cfg.nu > 0.0)) errors.push_back("model.nu must be > 0");
    if (cfg.k_max < 1) errors.push_back("model.k_max must be >= 1");
    if (!(cfg.noise_amplitude > 0.0)) errors.push_back("model.noise_amplitude must be > 0");
    if (cfg.forced_radius2 > cfg.noise_radius2)
      errors.push_back(
          "model: noise directions do not span the forced modes "
          "(range condition: forced_radius2 must be <= noise_radius2)");
  }

  const std::string mode = r.text("coupling", "mode", "coupled");
  if (mode == "coupled")
    cfg.coupled = true;
  else if (mode == "true")
    cfg.coupled = false;
  else
    errors.push_back("coupling.mode must be coupled or true");
  const std::string gain = r.text("coupling", "gain", "1.0");
  if (gain == "auto") {
    cfg.auto_gain = true;
  } else if (!detail::parse_double(gain, cfg.gain)) {
    errors.push_back("coupling.gain must be a number or auto");
  }
  cfg.T = r.number("coupling", "T", cfg.T);
  cfg.dt = r.number("coupling", "dt", cfg.dt);
  cfg.ensemble = r.unsigned_number("coupling", "ensemble", cfg.ensemble);
  cfg.record_stride = r.unsigned_number("coupling", "record_stride", cfg.record_stride);
  cfg.x0 = r.number("coupling", "x0", cfg.x0);
  cfg.y0 = r.number("coupling", "y0", cfg.y0);
  if (!(cfg.dt > 0.0)) errors.push_back("coupling.dt must be > 0");
  if (!(cfg.T > 0.0)) errors.push_back("coupling.T must be > 0");
  if (cfg.ensemble < 1) errors.push_back("coupling.ensemble must be >= 1");
  if (cfg.record_stride < 1) errors.push_back("coupling.record_stride must be >= 1");
  if (cfg.dt > 0.0 && cfg.T > 0.0 && cfg.T / cfg.dt > 5e7)
    errors.push_back("coupling.T / coupling.dt is unreasonably large");

  cfg.master_seed = r.unsigned_number("seeds", "master_seed", cfg.master_seed);

  cfg.directory = r.text("outputs", "directory", cfg.directory);
  cfg.write_runs = r.boolean("outputs", "write_runs", cfg.write_runs);
  cfg.max_run_files = r.unsigned_number("outputs", "max_run_files", cfg.max_run_files);

  cfg.deltas = r.list("bounds", "deltas", cfg.deltas);
  cfg.cap_scales = r.list("bounds", "cap_scales", cfg.cap_scales);
  cfg.tv_estimate = r.boolean("bounds", "tv_estimate", cfg.tv_estimate);
  cfg.tv_bins = static_cast<int>(r.unsigned_number("bounds", "tv_bins", 64));
  for (double d : cfg.deltas)
    if (!(d > 0.0) || !(d < 1.0)) errors.push_back("bounds.deltas must lie in (0,1)");
  for (double n : cfg.cap_scales)
    if (!(n > 1.0)) errors.push_back("bounds.cap_scales must be > 1");
  if (cfg.tv_bins < 2) errors.push_back("bounds.tv_bins must be >= 2");

  if (r.present("hconstants", "zeta")) {
    HConstants h;
    h.zeta = r.number("hconstants", "zeta", 0.0);
    h.kappa = r.number("hconstants", "kappa", 0.0);
    h.mu = r.number("hconstants", "mu", 1.0);
    h.b = r.number("hconstants", "b", 0.0);
    h.b1 = r.number("hconstants", "b1", 0.0);
    h.b2 = r.number("hconstants", "b2", 0.0);
    try {
      h.validate();
      cfg.hconstants = h;
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("hconstants: ") + e.what());
    }
  }

  if (file.sections.count("hitprob") > 0) {
    cfg.has_hitprob = true;
    cfg.hit_t0 = r.number("hitprob", "t0", cfg.hit_t0);
    cfg.hit_ntraj = r.unsigned_number("hitprob", "n_traj", cfg.hit_ntraj);
    cfg.hit_initial = r.list("hitprob", "initial", cfg.hit_initial);
    cfg.hit_target_radius = r.number("hitprob", "target_radius", cfg.hit_target_radius);
    if (!(cfg.hit_t0 > 0.0)) errors.push_back("hitprob.t0 must be > 0");
    if (cfg.hit_ntraj < 1) errors.push_back("hitprob.n_traj must be >= 1");
    if (!(cfg.hit_target_radius >= 0.0)) errors.push_back("hitprob.target_radius must be >= 0");
  }

  // reject unknown keys so typos cannot silently change an experiment
  for (const auto& [sec, entries] : file.sections)
    for (const auto& [key, entry] : entries)
      if (!entry.used)
        errors.push_back("unknown key '" + sec + "." + key + "' (line " +
                         std::to_string(entry.line) + ")");

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

}  // namespace gclab
