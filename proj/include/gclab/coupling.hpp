#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gclab/noise.hpp"
#include "gclab/util.hpp"

namespace gclab {

struct RunOptions {
  std::uint64_t record_stride = 1;
  double blowup_threshold = 1e12;
};

/// Time series of one generalized-coupling pair: the premetric q(X_t, Y_t),
/// the energy functionals of the first marginal, the running control cost
/// and Girsanov log-weight.
struct CoupledRun {
  std::vector<double> times;
  std::vector<double> q_series;
  std::vector<double> U_series;
  std::vector<double> S_integral;
  std::vector<double> cost_series;
  std::vector<double> logweight_series;
  std::uint64_t stream_index = 0;
  double max_beta2_over_q = 0.0;

  double final_time() const { return times.back(); }
  double final_cost() const { return cost_series.back(); }
};

template <class Model>
struct PairRunResult {
  CoupledRun run;
  typename Model::PairState final_state;
};

namespace detail {

template <class Model>
PairRunResult<Model> run_pair(const Model& model, const typename Model::State& x0,
                              const typename Model::State& y0,
                              const typename Model::Control& control, double T, double dt,
                              const NoiseStream& noise, bool with_control,
                              const RunOptions& opt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("run: T and dt must be > 0");
  if (std::abs(noise.dt() - dt) > 1e-12 * dt)
    throw std::invalid_argument("run: noise stream dt differs from integrator dt");
  const auto n_steps = static_cast<std::uint64_t>(std::llround(T / dt));
  if (n_steps < 1) throw std::invalid_argument("run: horizon shorter than one step");

  auto pair = model.make_pair(x0, y0);
  GirsanovLedger ledger;
  KahanSum s_int;
  double s_prev = model.S(pair);

  CoupledRun run;
  run.stream_index = noise.stream_index();
  auto record = [&](double t) {
    run.times.push_back(t);
    run.q_series.push_back(model.q(pair));
    run.U_series.push_back(model.U(pair));
    run.S_integral.push_back(s_int.value());
    run.cost_series.push_back(ledger.cost());
    run.logweight_series.push_back(ledger.log_weight());
  };
  record(0.0);

  const std::size_t m = static_cast<std::size_t>(model.noise_dimension());
  std::vector<double> dW(m);
  std::vector<double> beta(m, 0.0);
  for (std::uint64_t step = 0; step < n_steps; ++step) {
    noise.fill_increment(step, dW);
    if (with_control) {
      const double q_pre = model.q(pair);
      beta = model.control_drift(pair, control);
      if (q_pre > 0.0) {
        double b2 = 0.0;
        for (double b : beta) b2 += b * b;
        run.max_beta2_over_q = std::max(run.max_beta2_over_q, b2 / q_pre);
      }
    }
    ledger.update(beta, dW, dt);
    model.pair_step(pair, dW, control, dt, with_control);

    const double t = static_cast<double>(step + 1) * dt;
    if (!model.pair_finite(pair) || model.pair_norm(pair) > opt.blowup_threshold)
      throw BlowupError(t, "trajectory norm exceeded the blow-up threshold");

    const double s_new = model.S(pair);
    s_int.add(0.5 * dt * (s_prev + s_new));
    s_prev = s_new;
    if ((step + 1) % opt.record_stride == 0 || step + 1 == n_steps) record(t);
  }
  return {std::move(run), std::move(pair)};
}

}  // namespace detail

/// Generalized coupling: X carries the raw noise (so Law(X) is the true
/// marginal), Y sees the same increments plus the control drift; the ledger
/// tracks the control.
template <class Model>
CoupledRun run_coupled_pair(const Model& model, const typename Model::State& x0,
                            const typename Model::State& y0,
                            const typename Model::Control& control, double T, double dt,
                            const NoiseStream& noise, const RunOptions& opt = {}) {
  return detail::run_pair(model, x0, y0, control, T, dt, noise, true, opt).run;
}

/// As run_coupled_pair, additionally returning the terminal pair state.
template <class Model>
PairRunResult<Model> run_coupled_pair_final(const Model& model, const typename Model::State& x0,
                                            const typename Model::State& y0,
                                            const typename Model::Control& control, double T,
                                            double dt, const NoiseStream& noise,
                                            const RunOptions& opt = {}) {
  return detail::run_pair(model, x0, y0, control, T, dt, noise, true, opt);
}

/// True coupling: shared noise, zero control, zero cost.
template <class Model>
CoupledRun run_true_pair(const Model& model, const typename Model::State& x0,
                         const typename Model::State& y0, double T, double dt,
                         const NoiseStream& noise, const RunOptions& opt = {}) {
  return detail::run_pair(model, x0, y0, typename Model::Control{}, T, dt, noise, false, opt).run;
}

/// Single trajectory with the raw noise.
template <class Model>
typename Model::State run_single(const Model& model, typename Model::State x, double T, double dt,
                                 const NoiseStream& noise, const RunOptions& opt = {}) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("run: T and dt must be > 0");
  const auto n_steps = static_cast<std::uint64_t>(std::llround(T / dt));
  const std::size_t m = static_cast<std::size_t>(model.noise_dimension());
  std::vector<double> dW(m);
  for (std::uint64_t step = 0; step < n_steps; ++step) {
    noise.fill_increment(step, dW);
    model.step(x, dW, dt);
    if (!model.state_finite(x) || model.state_norm(x) > opt.blowup_threshold)
      throw BlowupError(static_cast<double>(step + 1) * dt,
                        "trajectory norm exceeded the blow-up threshold");
  }
  return x;
}

struct DissipativityReport {
  std::size_t checked_points = 0;
  std::size_t violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
};

/// Pathwise check of q(X_t,Y_t) <= q(x,y) exp(-zeta t + kappa int_0^t S):
/// margin(t) = log q(0) - zeta t + kappa S_int(t) - log q(t), counted as a
/// violation where margin < -tol. Violations are data, not failures.
inline DissipativityReport verify_dissipativity(const CoupledRun& run, double zeta, double kappa,
                                                double tol) {
  if (run.times.size() < 2) throw std::invalid_argument("dissipativity: run too short");
  const double q0 = run.q_series.front();
  DissipativityReport rep;
  rep.tolerance = tol;
  for (std::size_t i = 1; i < run.times.size(); ++i) {
    const double qi = run.q_series[i];
    if (qi == 0.0) continue;  // envelope trivially satisfied
    if (q0 == 0.0) throw std::invalid_argument("dissipativity: q(0)=0 but q(t)>0 (inconsistent run)");
    const double margin =
        std::log(q0) - zeta * run.times[i] + kappa * run.S_integral[i] - std::log(qi);
    ++rep.checked_points;
    if (margin < rep.worst_margin) rep.worst_margin = margin;
    if (margin < -tol) ++rep.violations;
  }
  if (rep.checked_points == 0) rep.worst_margin = 0.0;
  return rep;
}

struct EnergyReport {
  MeanStdErr martingale_estimate;  // mean and s.e. of M_hat_T over the ensemble
  double qv_ratio = 0.0;           // mean of [sum (dM)^2] / [b1 S_int + b2 T], 0 if unset
  double b_used = 0.0;
  double mu_used = 0.0;
};

/// Recovers M_hat_T = U(T) + mu int_0^T S - U(0) - b T per run; for the
/// energy-identity constants this is the martingale term, so its ensemble
/// mean should vanish. The quadratic-variation ratio against b1 S + b2 is
/// reported as a diagnostic.
inline EnergyReport verify_energy(std::span<const CoupledRun> runs, double mu, double b,
                                  double b1 = 0.0, double b2 = 0.0) {
  if (runs.empty()) throw std::invalid_argument("energy: empty ensemble");
  std::vector<double> mhat(runs.size());
  KahanSum ratio_sum;
  std::size_t ratio_n = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const CoupledRun& run = runs[r];
    const double T = run.final_time();
    mhat[r] = run.U_series.back() + mu * run.S_integral.back() - run.U_series.front() - b * T;
    if (b1 > 0.0 || b2 > 0.0) {
      KahanSum qv;
      for (std::size_t i = 1; i < run.times.size(); ++i) {
        const double dtm = run.times[i] - run.times[i - 1];
        const double dm = (run.U_series[i] + mu * run.S_integral[i] - b * run.times[i]) -
                          (run.U_series[i - 1] + mu * run.S_integral[i - 1] - b * run.times[i - 1]);
        (void)dtm;
        qv.add(dm * dm);
      }
      const double denom = b1 * run.S_integral.back() + b2 * T;
      if (denom > 0.0) {
        ratio_sum.add(qv.value() / denom);
        ++ratio_n;
      }
    }
  }
  EnergyReport rep;
  rep.martingale_estimate = mean_std_error(mhat);
  rep.qv_ratio = ratio_n > 0 ? ratio_sum.value() / static_cast<double>(ratio_n) : 0.0;
  rep.b_used = b;
  rep.mu_used = mu;
  return rep;
}

struct DecayFit {
  double rate = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (t, log value); rate is the negated slope.
inline DecayFit fit_decay_rate(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || times.size() < 2)
    throw std::invalid_argument("fit_decay_rate: need matching series of length >= 2");
  std::vector<double> logs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) throw std::invalid_argument("fit_decay_rate: values must be > 0");
    logs[i] = std::log(values[i]);
  }
  const LinearFit fit = linear_fit(times, logs);
  return {-fit.slope, fit.intercept, fit.r_squared};
}

/// Ensemble mean of one recorded series across runs (same grid required).
inline std::vector<double> mean_series(std::span<const CoupledRun> runs,
                                       std::vector<double> CoupledRun::* member) {
  if (runs.empty()) throw std::invalid_argument("mean_series: empty ensemble");
  const std::size_t len = (runs.front().*member).size();
  std::vector<double> out(len, 0.0);
  for (const auto& r : runs) {
    const auto& series = r.*member;
    if (series.size() != len) throw std::invalid_argument("mean_series: grid mismatch");
    for (std::size_t i = 0; i < len; ++i) out[i] += series[i];
  }
  for (double& v : out) v /= static_cast<double>(runs.size());
  return out;
}

struct HitPointEstimate {
  double probability = 0.0;
  double std_error = 0.0;
};

struct HitProbReport {
  double min_probability = 1.0;
  std::vector<HitPointEstimate> per_point;
  std::size_t blowups = 0;
};

/// Monte-Carlo estimate of inf_{x in B} P_{t0}(x, D) over sampled initial
/// points; blow-ups count as misses and are tallied separately.
template <class Model, class Predicate>
HitProbReport estimate_hitting_prob(const Model& model,
                                    std::span<const typename Model::State> initial_points,
                                    Predicate&& in_target, double t0, double dt,
                                    std::size_t n_traj, const NoiseStream& base_noise,
                                    const RunOptions& opt = {}) {
  if (initial_points.empty()) throw std::invalid_argument("hitprob: no initial points");
  if (n_traj < 1) throw std::invalid_argument("hitprob: need at least one trajectory");
  HitProbReport rep;
  std::uint64_t stream = base_noise.stream_index();
  for (const auto& x0 : initial_points) {
    std::size_t hits = 0;
    for (std::size_t j = 0; j < n_traj; ++j, ++stream) {
      try {
        const auto xT = run_single(model, x0, t0, dt, base_noise.with_stream(stream), opt);
        if (in_target(xT)) ++hits;
      } catch (const BlowupError&) {
        ++rep.blowups;
      }
    }
    const double p = static_cast<double>(hits) / static_cast<double>(n_traj);
    const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n_traj));
    rep.per_point.push_back({p, se});
    rep.min_probability = std::min(rep.min_probability, p);
  }
  return rep;
}

struct GainTuneResult {
  double gain = 1.0;
  double fitted_slope = 0.0;
  int doublings = 0;
};

/// Doubles the coupling gain from 1 until the fitted slope of
/// log E q(X_t, Y_t) over a pilot ensemble reaches the target (default -1).
template <class Model>
GainTuneResult tune_coupling_gain(const Model& model, const typename Model::State& x0,
                                  const typename Model::State& y0, double T, double dt,
                                  const NoiseStream& base_noise, std::size_t pilot_runs = 16,
                                  double target_slope = -1.0, int max_doublings = 20,
                                  const RunOptions& opt = {}) {
  double gain = 1.0;
  GainTuneResult out;
  for (int k = 0; k <= max_doublings; ++k, gain *= 2.0) {
    std::vector<CoupledRun> runs;
    runs.reserve(pilot_runs);
    for (std::size_t i = 0; i < pilot_runs; ++i)
      runs.push_back(run_coupled_pair(model, x0, y0, gain, T, dt,
                                      base_noise.with_stream(base_noise.stream_index() + i), opt));
    const auto mean_q = mean_series(runs, &CoupledRun::q_series);
    bool positive = true;
    for (double v : mean_q) positive = positive && v > 0.0;
    if (positive) {
      const DecayFit fit = fit_decay_rate(runs.front().times, mean_q);
      if (-fit.rate <= target_slope) {
        out.gain = gain;
        out.fitted_slope = -fit.rate;
        out.doublings = k;
        return out;
      }
    } else {
      out.gain = gain;  // the pair already glued together
      out.fitted_slope = -std::numeric_limits<double>::infinity();
      out.doublings = k;
      return out;
    }
  }
  throw std::runtime_error("gain tuner: target decay not reached within the doubling budget");
}

}  // namespace gclab
