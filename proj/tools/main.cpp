#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gclab/bounds.hpp"
#include "gclab/certify.hpp"
#include "gclab/config.hpp"
#include "gclab/experiment.hpp"
#include "gclab/transport.hpp"

namespace {

using gclab::ExitStatus;

gclab::EmpiricalMeasure<std::vector<double>> read_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure file: " + path);
  gclab::EmpiricalMeasure<std::vector<double>> m;
  std::string line;
  std::size_t dim = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = gclab::ini::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::stringstream ss(trimmed);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(gclab::ini::trim(cell)));
    if (row.size() < 2)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected weight,coord[,coord...]");
    if (dim == 0) dim = row.size() - 1;
    if (row.size() - 1 != dim)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": inconsistent dimension");
    m.weights.push_back(row.front());
    m.points.emplace_back(row.begin() + 1, row.end());
  }
  return m;
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

gclab::ExperimentConfig load_with_overrides(const std::string& config_path, bool seed_set,
                                            std::uint64_t seed, const std::string& out_dir) {
  gclab::ExperimentConfig cfg = gclab::load_config(config_path);
  if (seed_set) cfg.master_seed = seed;
  if (!out_dir.empty()) cfg.directory = out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gclab: coupled-simulation laboratory for ergodicity rate experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned workers = 1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "experiment config file")
                  ->envname("GCLAB_CONFIG");
    if (needs_config) c->required();
    sub->add_option_function<std::uint64_t>(
           "--seed",
           [&](std::uint64_t v) {
             seed = v;
             seed_set = true;
           },
           "override seeds.master_seed")
        ->envname("GCLAB_SEED");
    sub->add_option("--workers", workers, "worker threads for ensembles")
        ->envname("GCLAB_WORKERS");
    sub->add_option("--out", out_dir, "override outputs.directory")->envname("GCLAB_OUT");
  };

  auto* certify = app.add_subcommand("certify", "derive and print the rate certificate");
  add_common(certify, true);

  auto* couple = app.add_subcommand("couple", "run a coupled (or true) pair ensemble");
  add_common(couple, true);

  auto* bounds = app.add_subcommand("bounds", "evaluate the KL/TV bound calculus");
  double b_kl = -1.0, b_mdelta = -1.0, b_mu_a = -1.0;
  std::vector<double> b_deltas;
  std::vector<double> b_caps;
  bounds->add_option("--kl", b_kl, "KL divergence (or Girsanov cost/2)");
  bounds->add_option("--m-delta", b_mdelta, "delta-moment M_delta of the control cost");
  bounds->add_option("--delta", b_deltas, "delta values in (0,1)");
  bounds->add_option("--cap-scale", b_caps, "N values (> 1) for measure lower bounds");
  bounds->add_option("--mu-a", b_mu_a, "mu(A) for measure lower bounds");

  auto* wasserstein = app.add_subcommand("wasserstein", "exact W1 between weighted point files");
  std::string file_a, file_b, cost_kind = "euclidean";
  std::size_t cap = 512;
  wasserstein->add_option("--a", file_a, "first measure (rows: weight,coord,...)")->required();
  wasserstein->add_option("--b", file_b, "second measure")->required();
  wasserstein->add_option("--cost", cost_kind, "euclidean | capped (min with 1)");
  wasserstein->add_option("--cap", cap, "maximum point count per measure");

  auto* hitprob = app.add_subcommand("hitprob", "Monte-Carlo hitting probabilities");
  add_common(hitprob, true);

  auto* report = app.add_subcommand("report", "summarize an artifact directory");
  std::string report_dir;
  report->add_option("--dir", report_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitStatus::ConfigProblem);
  }

  try {
    if (*certify) {
      const auto cfg = load_with_overrides(config_path, seed_set, seed, out_dir);
      gclab::HConstants h;
      std::optional<bool> threshold;
      std::optional<double> lamN1;
      if (cfg.kind == gclab::ExperimentConfig::ModelKind::Nse2d) {
        gclab::Nse2dSpec probe;
        probe.nu = cfg.nu;
        probe.k_max = cfg.k_max;
        probe.noise_directions = gclab::spanning_noise_directions(cfg.k_max, cfg.noise_radius2,
                                                                  cfg.noise_amplitude);
        probe.forced_mode_count = gclab::mode_count_within(cfg.k_max, cfg.forced_radius2);
        lamN1 = probe.lambda_Np1();
        h = gclab::nse_h_constants(cfg.nu, probe.f_norm_Ahalf(), probe.sigma_norm2_h(), *lamN1);
        threshold = gclab::check_nse_threshold(cfg.nu, probe.f_norm_Ahalf(),
                                               probe.sigma_norm2_h(), *lamN1);
      } else if (cfg.hconstants.has_value()) {
        h = *cfg.hconstants;
      } else {
        std::cerr << "certify: config needs an [hconstants] section or an nse2d model\n";
        return static_cast<int>(ExitStatus::ConfigProblem);
      }
      std::optional<gclab::Certificate> cert;
      std::string reason;
      try {
        cert = gclab::derive_certificate(h, gclab::default_gamma_grid(h));
      } catch (const gclab::InfeasibleError& e) {
        reason = e.constraint();
      }
      std::cout << gclab::certificate_report(h, cert, reason, threshold, lamN1);
      return cert.has_value() ? 0 : static_cast<int>(ExitStatus::InfeasibleCertificate);
    }

    if (*couple) {
      const auto cfg = load_with_overrides(config_path, seed_set, seed, out_dir);
      const auto outcome = gclab::run_experiment(cfg, cfg.directory, workers);
      if (outcome.status == ExitStatus::Ok) {
        std::cout << "artifacts written to " << outcome.artifact_dir.string() << "\n";
      } else {
        std::cerr << "couple failed: " << outcome.message << "\n";
      }
      return static_cast<int>(outcome.status);
    }

    if (*bounds) {
      using gclab::fmt17;
      if (b_kl >= 0.0) {
        std::cout << "kl [kl-girsanov] = " << fmt17(b_kl) << "\n";
        const auto p = gclab::pinsker_tv(b_kl);
        std::cout << "tv_pinsker [tv-pinsker] = " << fmt17(p.value)
                  << (p.clamped ? " (clamped)" : "") << "\n";
        std::cout << "tv_exp [tv-exp] = " << fmt17(gclab::tv_exp_bound(b_kl).value) << "\n";
        if (b_mu_a >= 0.0)
          for (double N : b_caps)
            std::cout << "measure_lower(N=" << fmt17(N) << ") [measure-lower] = "
                      << fmt17(gclab::measure_lower_bound(b_mu_a, b_kl, N)) << "\n";
      }
      if (b_mdelta >= 0.0) {
        for (double d : b_deltas) {
          const auto up = gclab::tv_delta_upper(b_mdelta, d);
          std::cout << "tv_upper(delta=" << fmt17(d) << ") [tv-moment-upper] = "
                    << fmt17(up.value) << (up.clamped ? " (clamped)" : "") << "\n";
          std::cout << "tv_floor(delta=" << fmt17(d) << ") [tv-moment-floor] = "
                    << fmt17(gclab::tv_delta_floor(b_mdelta, d)) << "\n";
          if (b_mu_a >= 0.0)
            for (double N : b_caps)
              std::cout << "wiener_lower(delta=" << fmt17(d) << ", N=" << fmt17(N)
                        << ") [wiener-lower] = "
                        << fmt17(gclab::wiener_lower_bound(b_mu_a, b_mdelta, d, N)) << "\n";
        }
      }
      if (b_kl < 0.0 && b_mdelta < 0.0) {
        std::cerr << "bounds: provide --kl and/or --m-delta\n";
        return static_cast<int>(ExitStatus::ConfigProblem);
      }
      return 0;
    }

    if (*wasserstein) {
      const auto mu = read_measure(file_a);
      const auto nu = read_measure(file_b);
      gclab::TransportOptions opt;
      opt.max_points = cap;
      double value = 0.0;
      if (cost_kind == "euclidean")
        value = gclab::empirical_wasserstein(mu, nu, euclidean, opt);
      else if (cost_kind == "capped")
        value = gclab::empirical_wasserstein(
            mu, nu,
            [](const std::vector<double>& a, const std::vector<double>& b) {
              return std::min(euclidean(a, b), 1.0);
            },
            opt);
      else {
        std::cerr << "wasserstein: unknown cost '" << cost_kind << "'\n";
        return static_cast<int>(ExitStatus::ConfigProblem);
      }
      std::cout << "w1 [exact-transport] = " << gclab::fmt17(value) << "\n";
      return 0;
    }

    if (*hitprob) {
      const auto cfg = load_with_overrides(config_path, seed_set, seed, out_dir);
      std::cout << gclab::run_hitprob(cfg, workers).dump(2) << "\n";
      return 0;
    }

    if (*report) {
      std::cout << gclab::report_summary(report_dir);
      return 0;
    }
  } catch (const gclab::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(ExitStatus::ConfigProblem);
  } catch (const gclab::InfeasibleError& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(ExitStatus::InfeasibleCertificate);
  } catch (const gclab::BlowupError& e) {
    std::cerr << "blow-up at t=" << e.time() << ": " << e.what() << "\n";
    return static_cast<int>(ExitStatus::Blowup);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io failure: " << e.what() << "\n";
    return static_cast<int>(ExitStatus::IoFailure);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return static_cast<int>(ExitStatus::ConfigProblem);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitStatus::IoFailure);
  }
  return 0;
}
