#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "gclab/bounds.hpp"
#include "gclab/certify.hpp"
#include "gclab/config.hpp"
#include "gclab/coupling.hpp"
#include "gclab/metrics.hpp"
#include "gclab/models/dissipative_sde.hpp"
#include "gclab/models/nse2d.hpp"
#include "gclab/models/sfde.hpp"
#include "gclab/noise.hpp"

namespace gclab {

enum class ExitStatus : int {
  Ok = 0,
  ConfigProblem = 2,
  InfeasibleCertificate = 3,
  Blowup = 4,
  IoFailure = 5,
};

struct ExperimentOutcome {
  ExitStatus status = ExitStatus::Ok;
  std::filesystem::path artifact_dir;
  std::string message;
};

inline std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes via a temp file plus rename so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string run_csv(const CoupledRun& run) {
  std::string s = "t,q,U_x,S_int,cost,logweight\n";
  for (std::size_t i = 0; i < run.times.size(); ++i) {
    s += fmt17(run.times[i]);
    s += ',';
    s += fmt17(run.q_series[i]);
    s += ',';
    s += fmt17(run.U_series[i]);
    s += ',';
    s += fmt17(run.S_integral[i]);
    s += ',';
    s += fmt17(run.cost_series[i]);
    s += ',';
    s += fmt17(run.logweight_series[i]);
    s += '\n';
  }
  return s;
}

namespace detail {

/// Index-parallel loop; per-index errors are collected and the lowest-index
/// one is rethrown after the join so outcomes do not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned workers,
                         const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const unsigned effective = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::vector<std::string> errors(n);
  std::vector<char> failed(n, 0);
  if (effective == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < effective; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (const std::exception& e) {
          failed[i] = 1;
          errors[i] = e.what();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < n; ++i)
    if (failed[i]) throw std::runtime_error("run " + std::to_string(i) + ": " + errors[i]);
}

struct EnsembleData {
  std::vector<CoupledRun> runs;
  std::vector<double> final_costs;
  std::vector<double> y_projections;    // projection of the controlled marginal at T
  std::vector<double> ref_projections;  // projection of independent true runs from y0
  double blowup_time = -1.0;
  std::string blowup_message;
};

template <class Model, class Project>
EnsembleData run_ensemble(const Model& model, const typename Model::State& x0,
                          const typename Model::State& y0,
                          const typename Model::Control& control, const ExperimentConfig& cfg,
                          unsigned workers, Project&& project_y,
                          const std::function<double(const typename Model::State&)>& project_state) {
  EnsembleData data;
  data.runs.resize(cfg.ensemble);
  data.final_costs.resize(cfg.ensemble);
  data.y_projections.resize(cfg.ensemble);
  const RunOptions opt{cfg.record_stride, 1e12};
  const NoiseStream base(cfg.master_seed, 0, std::max(1, model.noise_dimension()), cfg.dt);

  std::mutex blow_mu;
  try {
    parallel_for(cfg.ensemble, workers, [&](std::size_t i) {
      const NoiseStream stream = base.with_stream(i);
      if (cfg.coupled) {
        auto res = run_coupled_pair_final(model, x0, y0, control, cfg.T, cfg.dt, stream, opt);
        data.runs[i] = std::move(res.run);
        data.y_projections[i] = project_y(res.final_state);
      } else {
        data.runs[i] = run_true_pair(model, x0, y0, cfg.T, cfg.dt, stream, opt);
        data.y_projections[i] = 0.0;
      }
      data.final_costs[i] = data.runs[i].final_cost();
    });
    if (cfg.tv_estimate && cfg.coupled) {
      data.ref_projections.resize(cfg.ensemble);
      parallel_for(cfg.ensemble, workers, [&](std::size_t i) {
        const NoiseStream stream = base.with_stream(cfg.ensemble + i);
        auto xT = run_single(model, y0, cfg.T, cfg.dt, stream, opt);
        data.ref_projections[i] = project_state(xT);
      });
    }
  } catch (const std::runtime_error& e) {
    std::lock_guard<std::mutex> lock(blow_mu);
    data.blowup_time = 0.0;
    data.blowup_message = e.what();
  }
  return data;
}

inline nlohmann::ordered_json fit_json(const DecayFit& fit) {
  return {{"rate", fit.rate}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

inline nlohmann::ordered_json bound_json(double value, bool clamped, const std::string& tag) {
  return {{"value", value}, {"clamped", clamped}, {"provenance", tag}};
}

inline nlohmann::ordered_json bounds_block(std::span<const double> costs,
                                           const ExperimentConfig& cfg) {
  nlohmann::ordered_json out;
  const MeanStdErr kl = ledger_kl_bound(costs);
  out["kl"] = {{"value", kl.mean}, {"std_error", kl.std_error}, {"provenance", "kl-girsanov"}};
  const BoundValue p = pinsker_tv(kl.mean);
  out["tv_pinsker"] = bound_json(p.value, p.clamped, "tv-pinsker");
  const BoundValue e = tv_exp_bound(kl.mean);
  out["tv_exp"] = bound_json(e.value, e.clamped, "tv-exp");
  out["per_delta"] = nlohmann::ordered_json::array();
  for (double d : cfg.deltas) {
    const MeanStdErr md = ledger_m_delta(costs, d);
    const BoundValue up = tv_delta_upper(md.mean, d);
    nlohmann::ordered_json j;
    j["delta"] = d;
    j["m_delta"] = {{"value", md.mean}, {"std_error", md.std_error}, {"provenance", "delta-moment"}};
    j["tv_upper"] = bound_json(up.value, up.clamped, "tv-moment-upper");
    j["tv_floor"] = bound_json(tv_delta_floor(md.mean, d), false, "tv-moment-floor");
    out["per_delta"].push_back(j);
  }
  return out;
}

}  // namespace detail

/// Certificate report: human-readable lines followed by a machine block.
inline std::string certificate_report(const HConstants& h, const std::optional<Certificate>& cert,
                                      const std::string& infeasible_reason,
                                      std::optional<bool> nse_threshold = std::nullopt,
                                      std::optional<double> lambda_Np1 = std::nullopt) {
  std::ostringstream os;
  os << "certificate report\n";
  os << "==================\n";
  os << "constants: zeta=" << fmt17(h.zeta) << " kappa=" << fmt17(h.kappa)
     << " mu=" << fmt17(h.mu) << " b=" << fmt17(h.b) << " b1=" << fmt17(h.b1)
     << " b2=" << fmt17(h.b2) << "\n";
  os << "gate zeta > kappa*b/mu [condtheta]: " << (check_condtheta(h) ? "pass" : "fail") << "\n";
  if (nse_threshold.has_value())
    os << "spectral-gap threshold [nse-threshold] with lambda_{N+1}=" << fmt17(*lambda_Np1)
       << ": " << (*nse_threshold ? "pass" : "fail") << "\n";
  if (cert.has_value()) {
    os << "rate certificate [exp-rate]: gamma=" << fmt17(cert->gamma)
       << " upsilon=" << fmt17(cert->upsilon) << " chi=" << fmt17(cert->chi)
       << " alpha0=" << fmt17(cert->alpha0) << " lambda=" << fmt17(cert->lambda)
       << " Q=" << fmt17(cert->Q) << "\n";
  } else {
    os << "infeasible: " << infeasible_reason << "\n";
  }
  os << "\n[values]\n";
  os << "zeta = " << fmt17(h.zeta) << "\n";
  os << "kappa = " << fmt17(h.kappa) << "\n";
  os << "mu = " << fmt17(h.mu) << "\n";
  os << "b = " << fmt17(h.b) << "\n";
  os << "b1 = " << fmt17(h.b1) << "\n";
  os << "b2 = " << fmt17(h.b2) << "\n";
  os << "condtheta = " << (check_condtheta(h) ? "true" : "false") << "\n";
  if (nse_threshold.has_value())
    os << "nse_threshold = " << (*nse_threshold ? "true" : "false") << "\n";
  if (cert.has_value()) {
    os << "gamma = " << fmt17(cert->gamma) << "\n";
    os << "upsilon = " << fmt17(cert->upsilon) << "\n";
    os << "chi = " << fmt17(cert->chi) << "\n";
    os << "alpha0 = " << fmt17(cert->alpha0) << "\n";
    os << "lambda = " << fmt17(cert->lambda) << "\n";
    os << "Q = " << fmt17(cert->Q) << "\n";
  } else {
    os << "infeasible = " << infeasible_reason << "\n";
  }
  return os.str();
}

/// Default pathwise tolerance for envelope checks: discretization noise
/// scales with dt and the envelope rate.
inline double default_h1_tolerance(double zeta, double dt) { return 10.0 * dt * zeta; }

/// Builds the model named by the config and runs the coupled (or true)
/// ensemble, persisting per-run CSVs, an ensemble summary, the certificate
/// report, and Girsanov bound evaluations into `out_dir`.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                        const std::filesystem::path& out_dir,
                                        unsigned workers = 1) {
  namespace fs = std::filesystem;
  ExperimentOutcome outcome;
  outcome.artifact_dir = out_dir;
  nlohmann::ordered_json summary;
  summary["schema"] = "gclab-summary-v1";
  summary["master_seed"] = cfg.master_seed;
  summary["coupling"] = {{"mode", cfg.coupled ? "coupled" : "true"},
                         {"T", cfg.T},
                         {"dt", cfg.dt},
                         {"ensemble", cfg.ensemble},
                         {"record_stride", cfg.record_stride}};

  try {
    fs::create_directories(out_dir);
    if (cfg.write_runs) fs::create_directories(out_dir / "runs");
  } catch (const std::exception& e) {
    outcome.status = ExitStatus::IoFailure;
    outcome.message = e.what();
    return outcome;
  }

  // ---- certificate ----------------------------------------------------
  std::optional<HConstants> hconst = cfg.hconstants;
  std::optional<bool> nse_threshold;
  std::optional<double> lambda_Np1;
  double sigma_norm2 = 0.0;
  if (cfg.kind == ExperimentConfig::ModelKind::Nse2d) {
    Nse2dSpec probe;
    probe.nu = cfg.nu;
    probe.k_max = cfg.k_max;
    probe.noise_directions =
        spanning_noise_directions(cfg.k_max, cfg.noise_radius2, cfg.noise_amplitude);
    probe.forced_mode_count = mode_count_within(cfg.k_max, cfg.forced_radius2);
    sigma_norm2 = probe.sigma_norm2_h();
    lambda_Np1 = probe.lambda_Np1();
    hconst = nse_h_constants(cfg.nu, probe.f_norm_Ahalf(), sigma_norm2, *lambda_Np1);
    nse_threshold = check_nse_threshold(cfg.nu, probe.f_norm_Ahalf(), sigma_norm2, *lambda_Np1);
  }
  if (hconst.has_value()) {
    std::optional<Certificate> cert;
    std::string reason;
    try {
      cert = derive_certificate(*hconst, default_gamma_grid(*hconst));
    } catch (const InfeasibleError& e) {
      reason = e.constraint();
    }
    try {
      write_file_atomic(out_dir / "certificate.txt",
                        certificate_report(*hconst, cert, reason, nse_threshold, lambda_Np1));
    } catch (const std::exception& e) {
      outcome.status = ExitStatus::IoFailure;
      outcome.message = e.what();
      return outcome;
    }
    if (!cert.has_value()) {
      summary["certificate"] = {{"feasible", false}, {"reason", reason}};
      try {
        write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
      } catch (const std::exception& e) {
        outcome.status = ExitStatus::IoFailure;
        outcome.message = e.what();
        return outcome;
      }
      outcome.status = ExitStatus::InfeasibleCertificate;
      outcome.message = "infeasible certificate: " + reason;
      return outcome;
    }
    summary["certificate"] = {{"feasible", true},     {"zeta", hconst->zeta},
                              {"kappa", hconst->kappa}, {"mu", hconst->mu},
                              {"b", hconst->b},         {"b1", hconst->b1},
                              {"b2", hconst->b2},       {"gamma", cert->gamma},
                              {"upsilon", cert->upsilon}, {"chi", cert->chi},
                              {"alpha0", cert->alpha0},   {"lambda", cert->lambda},
                              {"Q", cert->Q}};
    if (nse_threshold.has_value()) {
      summary["certificate"]["nse_threshold"] = *nse_threshold;
      summary["certificate"]["lambda_Np1"] = *lambda_Np1;
    }
  }

  // ---- ensembles per model kind ----------------------------------------
  detail::EnsembleData data;
  std::string tv_projection_name = "none";
  double h1_zeta = 0.0, h1_kappa = 0.0;
  bool h1_applicable = false;
  double tuned_gain = cfg.gain;

  try {
    if (cfg.kind == ExperimentConfig::ModelKind::DissipativeSde) {
      DissipativeSdeSpec spec;
      spec.eigenvalues = cfg.eigenvalues;
      spec.nonlinearity = cfg.nonlinearity;
      spec.nonlin_scale = cfg.nonlin_scale;
      const int n = spec.dim();
      spec.sigma = cfg.sigma_scale * Eigen::MatrixXd::Identity(n, n);
      spec.lipschitz_bound = 3.0 * std::abs(cfg.nonlin_scale);
      DissipativeSdeModel model(spec);
      const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, cfg.x0);
      const Eigen::VectorXd y0 = Eigen::VectorXd::Constant(n, cfg.y0);
      summary["model"] = {{"kind", "dissipative_sde"},
                          {"dimension", n},
                          {"gain", cfg.gain},
                          {"sigma_scale", cfg.sigma_scale}};
      if (cfg.nonlinearity == SdeNonlinearity::Zero) {
        h1_applicable = true;
        h1_zeta = 2.0 * (cfg.eigenvalues.front() + (cfg.coupled ? cfg.gain : 0.0));
        h1_kappa = 0.0;
      }
      tv_projection_name = "coordinate0";
      data = detail::run_ensemble(
          model, x0, y0, cfg.gain, cfg, workers,
          [](const DissipativeSdeModel::PairState& p) { return (p.x - p.diff)[0]; },
          [](const Eigen::VectorXd& x) { return x[0]; });
    } else if (cfg.kind == ExperimentConfig::ModelKind::Sfde) {
      SfdeSpec spec = linear_delay_sfde(cfg.drift_a0, cfg.drift_a1, cfg.delay, cfg.noise_amp);
      SfdeModel model(spec, cfg.dt);
      const Segment x0 = model.constant_segment(cfg.x0);
      const Segment y0 = model.constant_segment(cfg.y0);
      if (cfg.auto_gain && cfg.coupled) {
        const NoiseStream pilot(cfg.master_seed, 3 * cfg.ensemble,
                                std::max(1, model.noise_dimension()), cfg.dt);
        tuned_gain = tune_coupling_gain(model, x0, y0, std::min(cfg.T, 4.0 * cfg.delay), cfg.dt,
                                        pilot, 16, -1.0, 20, {cfg.record_stride, 1e12})
                         .gain;
      }
      summary["model"] = {{"kind", "sfde"},          {"delay", cfg.delay},
                          {"drift_a0", cfg.drift_a0}, {"drift_a1", cfg.drift_a1},
                          {"noise_amp", cfg.noise_amp}, {"gain", tuned_gain},
                          {"gain_autotuned", cfg.auto_gain}};
      tv_projection_name = "endpoint0";
      data = detail::run_ensemble(
          model, x0, y0, tuned_gain, cfg, workers,
          [](const SfdeModel::PairState& p) { return p.y.endpoint()[0]; },
          [](const Segment& s) { return s.endpoint()[0]; });
    } else {
      Nse2dSpec spec;
      spec.nu = cfg.nu;
      spec.k_max = cfg.k_max;
      spec.noise_directions =
          spanning_noise_directions(cfg.k_max, cfg.noise_radius2, cfg.noise_amplitude);
      spec.forced_mode_count = mode_count_within(cfg.k_max, cfg.forced_radius2);
      Nse2dModel model(spec);
      // smooth deterministic initial data from the master seed
      SpectralField x0(cfg.k_max);
      {
        NoiseStream init(cfg.master_seed ^ 0x5eedf1e1dull, 0, 2, 1.0);
        std::vector<double> z(2);
        for (std::size_t i = 0; i < x0.mode_count(); ++i) {
          init.fill_normals(i, z);
          const double damp =
              1.0 / (1.0 + static_cast<double>(x0.table().modes[i].norm2()));
          x0.coeffs()[i] = cfg.init_amplitude * damp * std::complex<double>(z[0], z[1]);
        }
        x0.hermitianize();
      }
      SpectralField diff0 = vorticity_mode(cfg.k_max, {1, 0}, 0);
      diff0 *= cfg.init_diff_amplitude;
      const SpectralField y0 = x0 - diff0;
      summary["model"] = {{"kind", "nse2d"},
                          {"nu", cfg.nu},
                          {"k_max", cfg.k_max},
                          {"noise_radius2", cfg.noise_radius2},
                          {"forced_modes", spec.forced_mode_count},
                          {"noise_amplitude", cfg.noise_amplitude},
                          {"sigma_norm2_h", sigma_norm2},
                          {"lambda_Np1", *lambda_Np1}};
      h1_applicable = cfg.coupled;
      h1_zeta = cfg.nu * (*lambda_Np1);
      h1_kappa = 4.0 / cfg.nu;
      tv_projection_name = "h_norm";
      data = detail::run_ensemble(
          model, x0, y0, Nse2dModel::Control{}, cfg, workers,
          [](const Nse2dModel::PairState& p) { return norms(p.x - p.diff).h_norm; },
          [](const SpectralField& w) { return norms(w).h_norm; });
    }
  } catch (const std::invalid_argument& e) {
    outcome.status = ExitStatus::ConfigProblem;
    outcome.message = e.what();
    return outcome;
  }

  if (!data.blowup_message.empty()) {
    summary["status"] = "blow-up";
    summary["error"] = data.blowup_message;
    try {
      write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
    } catch (const std::exception& e) {
      outcome.status = ExitStatus::IoFailure;
      outcome.message = e.what();
      return outcome;
    }
    outcome.status = ExitStatus::Blowup;
    outcome.message = data.blowup_message;
    return outcome;
  }
  summary["status"] = "ok";

  // ---- ensemble statistics ---------------------------------------------
  const auto mean_q = mean_series(data.runs, &CoupledRun::q_series);
  summary["ensemble"] = {{"size", cfg.ensemble},
                         {"final_mean_q", mean_q.back()},
                         {"initial_q", data.runs.front().q_series.front()}};
  bool q_positive = true;
  for (double v : mean_q) q_positive = q_positive && v > 0.0;
  if (q_positive) {
    const DecayFit fit = fit_decay_rate(data.runs.front().times, mean_q);
    summary["ensemble"]["fitted_q_decay"] = detail::fit_json(fit);
    summary["ensemble"]["fitted_q_decay"]["provenance"] = "contraction-rate-fit";
  }

  if (h1_applicable) {
    const double tol = default_h1_tolerance(h1_zeta, cfg.dt);
    std::size_t violations = 0, points = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& run : data.runs) {
      const auto rep = verify_dissipativity(run, h1_zeta, h1_kappa, tol);
      violations += rep.violations;
      points += rep.checked_points;
      worst = std::min(worst, rep.worst_margin);
    }
    summary["h1"] = {{"zeta", h1_zeta},
                     {"kappa", h1_kappa},
                     {"tolerance", tol},
                     {"checked_points", points},
                     {"violations", violations},
                     {"worst_margin", points > 0 ? worst : 0.0},
                     {"provenance", "dissipativity-envelope"}};
  }

  if (cfg.kind == ExperimentConfig::ModelKind::Nse2d) {
    // identity constants recover the martingale (f = 0)
    const auto rep = verify_energy(data.runs, 2.0 * cfg.nu, sigma_norm2, 4.0 * sigma_norm2, 0.0);
    summary["h2"] = {{"mu_identity", 2.0 * cfg.nu},
                     {"mu_certificate", cfg.nu},
                     {"b", sigma_norm2},
                     {"martingale_mean", rep.martingale_estimate.mean},
                     {"martingale_std_error", rep.martingale_estimate.std_error},
                     {"qv_ratio", rep.qv_ratio},
                     {"provenance", "energy-balance"}};
  }

  if (cfg.coupled) summary["bounds"] = detail::bounds_block(data.final_costs, cfg);

  if (cfg.tv_estimate && cfg.coupled) {
    const double tv = tv_histogram(data.y_projections, data.ref_projections, cfg.tv_bins);
    nlohmann::ordered_json tvj;
    tvj["projection"] = tv_projection_name;
    tvj["bins"] = cfg.tv_bins;
    tvj["estimate"] = tv;
    tvj["provenance"] = "tv-projected-histogram";
    tvj["pinsker_margin"] = summary["bounds"]["tv_pinsker"]["value"].get<double>() - tv;
    summary["tv"] = tvj;
  }

  // ---- persist -----------------------------------------------------------
  try {
    if (cfg.write_runs) {
      const std::size_t n_files = std::min<std::size_t>(cfg.max_run_files, data.runs.size());
      for (std::size_t i = 0; i < n_files; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%05zu.csv", i);
        write_file_atomic(out_dir / "runs" / name, run_csv(data.runs[i]));
      }
    }
    write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  } catch (const std::exception& e) {
    outcome.status = ExitStatus::IoFailure;
    outcome.message = e.what();
    return outcome;
  }
  outcome.message = "ok";
  return outcome;
}

/// Hitting-probability experiment for the configured model (initial points
/// are constant states; the target is a norm ball).
inline nlohmann::ordered_json run_hitprob(const ExperimentConfig& cfg, unsigned workers = 1) {
  (void)workers;
  if (!cfg.has_hitprob) throw std::invalid_argument("config has no [hitprob] section");
  nlohmann::ordered_json out;
  const NoiseStream base(cfg.master_seed, 1u << 20, 1, cfg.dt);
  HitProbReport rep;
  if (cfg.kind == ExperimentConfig::ModelKind::DissipativeSde) {
    DissipativeSdeSpec spec;
    spec.eigenvalues = cfg.eigenvalues;
    spec.nonlinearity = cfg.nonlinearity;
    spec.nonlin_scale = cfg.nonlin_scale;
    spec.sigma = cfg.sigma_scale * Eigen::MatrixXd::Identity(spec.dim(), spec.dim());
    DissipativeSdeModel model(spec);
    std::vector<Eigen::VectorXd> inits;
    for (double v : cfg.hit_initial) inits.push_back(Eigen::VectorXd::Constant(spec.dim(), v));
    const double radius = cfg.hit_target_radius;
    rep = estimate_hitting_prob(
        model, std::span<const Eigen::VectorXd>(inits),
        [radius](const Eigen::VectorXd& x) { return x.norm() <= radius; }, cfg.hit_t0, cfg.dt,
        cfg.hit_ntraj, base.with_dt(cfg.dt));
  } else if (cfg.kind == ExperimentConfig::ModelKind::Sfde) {
    SfdeSpec spec = linear_delay_sfde(cfg.drift_a0, cfg.drift_a1, cfg.delay, cfg.noise_amp);
    SfdeModel model(spec, cfg.dt);
    std::vector<Segment> inits;
    for (double v : cfg.hit_initial) inits.push_back(model.constant_segment(v));
    const double radius = cfg.hit_target_radius;
    rep = estimate_hitting_prob(
        model, std::span<const Segment>(inits),
        [radius](const Segment& s) { return s.sup_norm() <= radius; }, cfg.hit_t0, cfg.dt,
        cfg.hit_ntraj, base.with_dt(cfg.dt));
  } else {
    throw std::invalid_argument("hitprob: nse2d initial-point sampling is not configured");
  }
  out["t0"] = cfg.hit_t0;
  out["n_traj"] = cfg.hit_ntraj;
  out["target_radius"] = cfg.hit_target_radius;
  out["min_probability"] = rep.min_probability;
  out["blowups"] = rep.blowups;
  out["per_point"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < rep.per_point.size(); ++i)
    out["per_point"].push_back({{"initial", cfg.hit_initial[i]},
                                {"probability", rep.per_point[i].probability},
                                {"std_error", rep.per_point[i].std_error}});
  out["provenance"] = "hitting-probability";
  return out;
}

/// Renders a human-readable report of one artifact directory; flags any
/// bound the empirical TV estimate violates.
inline std::string report_summary(const std::filesystem::path& artifact_dir) {
  namespace fs = std::filesystem;
  const fs::path spath = artifact_dir / "summary.json";
  std::ifstream in(spath);
  if (!in) throw std::runtime_error("missing artifact: " + spath.string());
  nlohmann::json summary;
  try {
    in >> summary;
  } catch (const std::exception& e) {
    throw std::runtime_error("unreadable summary: " + std::string(e.what()));
  }

  std::ostringstream os;
  os << "experiment report: " << artifact_dir.string() << "\n";
  os << "==========================================\n";
  if (summary.contains("status")) os << "status: " << summary["status"].get<std::string>() << "\n";
  if (summary.contains("model")) {
    os << "model: " << summary["model"]["kind"].get<std::string>() << "\n";
  }
  if (summary.contains("certificate")) {
    const auto& c = summary["certificate"];
    if (c.value("feasible", false)) {
      os << "certificate [exp-rate]: lambda=" << c["lambda"].get<double>()
         << " chi=" << c["chi"].get<double>() << " alpha0=" << c["alpha0"].get<double>()
         << " (zeta=" << c["zeta"].get<double>() << ", kappa=" << c["kappa"].get<double>()
         << ", mu=" << c["mu"].get<double>() << ", b=" << c["b"].get<double>() << ")\n";
      if (c.contains("nse_threshold"))
        os << "threshold [nse-threshold]: lambda_{N+1}=" << c["lambda_Np1"].get<double>()
           << " verdict=" << (c["nse_threshold"].get<bool>() ? "pass" : "fail") << "\n";
    } else {
      os << "certificate: infeasible (" << c.value("reason", "") << ")\n";
    }
  }
  if (summary.contains("ensemble")) {
    const auto& e = summary["ensemble"];
    os << "ensemble: n=" << e["size"].get<std::size_t>();
    if (e.contains("fitted_q_decay")) {
      const auto& f = e["fitted_q_decay"];
      os << " [contraction-rate-fit] rate=" << f["rate"].get<double>()
         << " r2=" << f["r_squared"].get<double>();
    }
    os << "\n";
  }
  if (summary.contains("h1")) {
    const auto& h = summary["h1"];
    os << "h1 [dissipativity-envelope]: zeta=" << h["zeta"].get<double>()
       << " kappa=" << h["kappa"].get<double>() << " violations=" << h["violations"].get<std::size_t>()
       << "/" << h["checked_points"].get<std::size_t>()
       << " worst_margin=" << h["worst_margin"].get<double>() << " (tol "
       << h["tolerance"].get<double>() << ")\n";
  }
  if (summary.contains("h2")) {
    const auto& h = summary["h2"];
    os << "h2 [energy-balance]: b=" << h["b"].get<double>()
       << " martingale_mean=" << h["martingale_mean"].get<double>() << " (s.e. "
       << h["martingale_std_error"].get<double>() << ")\n";
  }
  bool any_flag = false;
  if (summary.contains("bounds")) {
    const auto& b = summary["bounds"];
    os << "kl [kl-girsanov]: " << b["kl"]["value"].get<double>() << " (s.e. "
       << b["kl"]["std_error"].get<double>() << ")\n";
    os << "tv bounds: pinsker [tv-pinsker]=" << b["tv_pinsker"]["value"].get<double>()
       << " exp [tv-exp]=" << b["tv_exp"]["value"].get<double>() << "\n";
    for (const auto& d : b["per_delta"]) {
      os << "  delta=" << d["delta"].get<double>() << ": M_delta [delta-moment]="
         << d["m_delta"]["value"].get<double>()
         << " tv_upper [tv-moment-upper]=" << d["tv_upper"]["value"].get<double>()
         << (d["tv_upper"]["clamped"].get<bool>() ? " (clamped)" : "")
         << " tv_floor [tv-moment-floor]=" << d["tv_floor"]["value"].get<double>() << "\n";
    }
    if (summary.contains("tv")) {
      const double tv = summary["tv"]["estimate"].get<double>();
      os << "tv estimate [tv-projected-histogram] on " << summary["tv"]["projection"].get<std::string>()
         << ": " << tv << "\n";
      auto flag = [&](const char* name, double bound) {
        if (tv > bound) {
          os << "  VIOLATION: tv estimate " << tv << " exceeds " << name << " bound " << bound
             << "\n";
          any_flag = true;
        }
      };
      flag("tv-pinsker", summary["bounds"]["tv_pinsker"]["value"].get<double>());
      flag("tv-exp", summary["bounds"]["tv_exp"]["value"].get<double>());
      for (const auto& d : summary["bounds"]["per_delta"])
        flag("tv-moment-upper", d["tv_upper"]["value"].get<double>());
    }
  }
  if (summary.contains("hitprob")) {
    os << "hitprob [hitting-probability]: min p=" << summary["hitprob"]["min_probability"].get<double>()
       << "\n";
  }
  if (!any_flag) os << "no bound violations flagged\n";
  return os.str();
}

}  // namespace gclab
