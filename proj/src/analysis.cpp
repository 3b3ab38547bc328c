#include "stocon/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stocon/parallel.hpp"
#include "stocon/rng.hpp"

namespace stocon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kZ95 = 1.959963984540054;

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  LineFit fit;
  const double det = sw * sxx - sx * sx;
  if (det == 0.0) {  // fewer than two distinct abscissae
    fit.slope = 0.0;
    fit.intercept = sw > 0 ? sy / sw : 0.0;
  } else {
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
  }
  double rss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / static_cast<double>(x.size()));
  return fit;
}

MeanCi group_mean_ci(const std::vector<double>& samples, bool allow_neg_inf, const char* op) {
  if (samples.size() < 30)
    throw std::invalid_argument(std::string(op) + ": each sample group needs >= 30 samples");
  bool has_neg_inf = false;
  for (double s : samples) {
    if (s == -kInf && allow_neg_inf) {
      has_neg_inf = true;
      continue;
    }
    if (!std::isfinite(s)) throw std::invalid_argument(std::string(op) + ": samples must be finite");
  }
  if (has_neg_inf) return {-kInf, 0.0, -kInf, -kInf, static_cast<long>(samples.size())};
  return mean_ci(samples);
}

/// CI upper bound strictly below the cap; a zero-width (deterministic) CI
/// sitting exactly on the cap also satisfies E <= cap.
bool ci_below_cap(double lo, double hi, double cap) {
  return hi < cap || (hi == cap && lo == hi);
}

ContractionVerdict uniform_bound_verdict(const char* theorem, const char* quantity,
                                         const std::vector<std::vector<double>>& groups, double cap,
                                         bool allow_neg_inf, const char* op) {
  if (groups.empty()) throw std::invalid_argument(std::string(op) + ": empty sample set");
  ContractionVerdict verdict;
  verdict.theorem = theorem;
  double est = -kInf, lo = -kInf, hi = -kInf;
  long total = 0;
  // Uniformity over steps/cells: componentwise maxima over the group CIs.
  for (const auto& g : groups) {
    const MeanCi ci = group_mean_ci(g, allow_neg_inf, op);
    est = std::max(est, ci.mean);
    lo = std::max(lo, ci.lo);
    hi = std::max(hi, ci.hi);
    total += ci.n;
  }
  verdict.n_samples = total;
  verdict.verdict = ci_below_cap(lo, hi, cap);
  verdict.conditions.push_back({quantity, est, lo, hi, cap, verdict.verdict});
  verdict.diagnostics["groups"] = static_cast<double>(groups.size());

  // Law-of-large-numbers diagnostic: half-sample versus full-sample running
  // average of the pooled sequence.
  double sum = 0.0;
  long count = 0;
  double half_mean = kNan;
  bool finite = true;
  const long half = total / 2;
  for (const auto& g : groups)
    for (double s : g) {
      if (!std::isfinite(s)) {
        finite = false;
        break;
      }
      sum += s;
      if (++count == half) half_mean = sum / static_cast<double>(count);
    }
  if (finite && count > 0 && half > 0)
    verdict.diagnostics["lln_half_vs_full_gap"] = std::abs(half_mean - sum / static_cast<double>(count));
  return verdict;
}

}  // namespace

MeanCi mean_ci(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("mean_ci: empty sample set");
  const double n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double s : samples) sum += s;
  const double mean = sum / n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double se = sd / std::sqrt(n);
  return {mean, se, mean - kZ95 * se, mean + kZ95 * se, static_cast<long>(samples.size())};
}

double RateEstimate::factor() const { return std::exp(slope); }

RateEstimate finite_time_lyapunov(const Trajectory& traj, double tail_fraction) {
  if (!traj.has_variational())
    throw std::invalid_argument("finite_time_lyapunov: trajectory has no dz norms");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
    throw std::invalid_argument("finite_time_lyapunov: tail fraction must be in (0, 1]");
  const auto& t = traj.times;
  const auto& y = traj.dz_log_norms;
  const double t0 = t.front(), t_end = t.back();
  const double window_start = t0 + (1.0 - tail_fraction) * (t_end - t0);

  size_t first = 0;
  while (first < t.size() && t[first] < window_start - 1e-12) ++first;
  const size_t count = t.size() - first;
  if (count < 30) throw std::invalid_argument("finite_time_lyapunov: horizon too short (< 30 tail samples)");

  RateEstimate est;
  est.window_lo = t[first];
  est.window_hi = t_end;
  est.n_points = static_cast<long>(count);
  est.ci_lo = kNan;
  est.ci_hi = kNan;

  bool zero_norm = false;
  for (size_t i = first; i < t.size(); ++i)
    if (y[i] == -kInf) zero_norm = true;
  if (zero_norm) {
    est.slope = -kInf;
    est.intercept = kNan;
    est.max_running_rate = -kInf;
    return est;
  }

  std::vector<double> xs(t.begin() + static_cast<long>(first), t.end());
  std::vector<double> ys(y.begin() + static_cast<long>(first), y.end());
  const LineFit fit = weighted_line_fit(xs, ys, std::vector<double>(count, 1.0));
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  est.residual_rms = fit.residual_rms;

  est.max_running_rate = -kInf;
  const double y_origin = y.front();
  for (size_t i = first; i < t.size(); ++i) {
    if (t[i] == t.front()) continue;
    const double rate = y_origin == -kInf ? kInf : (y[i] - y_origin) / (t[i] - t.front());
    est.max_running_rate = std::max(est.max_running_rate, rate);
  }
  return est;
}

ContractionVerdict check_t1_discrete(const std::vector<std::vector<double>>& log_eta_groups,
                                     double rate_cap) {
  if (!(rate_cap < 0.0)) throw std::invalid_argument("check_t1_discrete: rate cap must be negative");
  return uniform_bound_verdict("T1", "max_E_log_eta", log_eta_groups, rate_cap, true,
                               "check_t1_discrete");
}

ContractionVerdict check_t2_discrete(const std::vector<std::vector<double>>& eta_sq_groups,
                                     double rate_cap) {
  if (!(rate_cap >= 0.0 && rate_cap < 1.0))
    throw std::invalid_argument("check_t2_discrete: rate cap must be in [0, 1)");
  for (const auto& g : eta_sq_groups)
    for (double s : g)
      if (s < 0.0) throw std::invalid_argument("check_t2_discrete: eta^2 samples must be nonnegative");
  return uniform_bound_verdict("T2", "max_E_eta_sq", eta_sq_groups, rate_cap, false,
                               "check_t2_discrete");
}

RateEstimate fit_geometric(const std::vector<double>& values, const std::vector<double>& ses) {
  if (values.size() < 2 || values.size() != ses.size())
    throw std::invalid_argument("fit_geometric: need >= 2 values with matching ses");
  RateEstimate est;
  est.ci_lo = kNan;
  est.ci_hi = kNan;
  est.max_running_rate = kNan;

  // The log of a Monte Carlo mean is biased once its relative error is
  // appreciable, so the fit window stops where the relative standard error
  // crosses 20% (keeping at least three points).
  constexpr double kRelSeCap = 0.2;
  size_t keep = values.size();
  for (size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
      throw std::invalid_argument("fit_geometric: values must be nonnegative");
    if (values[i] == 0.0) {  // absorbing zero: contracting by convention
      est.slope = -kInf;
      est.intercept = kNan;
      est.n_points = static_cast<long>(values.size());
      est.window_hi = static_cast<double>(values.size() - 1);
      return est;
    }
    if (ses[i] / values[i] >= kRelSeCap && i >= 3 && i < keep) keep = i;
  }
  keep = std::max<size_t>(keep, 3);
  keep = std::min(keep, values.size());

  std::vector<double> xs(keep), ys(keep), ws(keep);
  for (size_t i = 0; i < keep; ++i) {
    xs[i] = static_cast<double>(i);
    ys[i] = std::log(values[i]);
    const double rel = ses[i] / values[i];
    ws[i] = 1.0 / (rel * rel + 1e-12);
  }
  const LineFit fit = weighted_line_fit(xs, ys, ws);
  est.slope = fit.slope;
  est.intercept = fit.intercept;
  est.residual_rms = fit.residual_rms;
  est.window_lo = 0.0;
  est.window_hi = static_cast<double>(keep - 1);
  est.n_points = static_cast<long>(keep);
  return est;
}

RateEstimate ms_rate_fit(const std::vector<std::vector<double>>& dz_sq_by_path,
                         std::uint64_t bootstrap_seed) {
  const size_t paths = dz_sq_by_path.size();
  if (paths < 100) throw std::invalid_argument("ms_rate_fit: needs >= 100 paths");
  const size_t steps = dz_sq_by_path.front().size();
  if (steps < 2) throw std::invalid_argument("ms_rate_fit: needs >= 2 time points");
  for (const auto& row : dz_sq_by_path) {
    if (row.size() != steps) throw std::invalid_argument("ms_rate_fit: ragged ensemble");
    for (double v : row)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("ms_rate_fit: ||dz||^2 entries must be finite and nonnegative");
  }

  auto column_stats = [&](const std::vector<size_t>& idx, std::vector<double>& mean,
                          std::vector<double>& se) {
    mean.assign(steps, 0.0);
    se.assign(steps, 0.0);
    const double n = static_cast<double>(idx.size());
    for (size_t p : idx)
      for (size_t i = 0; i < steps; ++i) mean[i] += dz_sq_by_path[p][i];
    for (size_t i = 0; i < steps; ++i) mean[i] /= n;
    for (size_t p : idx)
      for (size_t i = 0; i < steps; ++i) {
        const double d = dz_sq_by_path[p][i] - mean[i];
        se[i] += d * d;
      }
    for (size_t i = 0; i < steps; ++i) se[i] = std::sqrt(se[i] / (n * (n - 1.0)));
  };

  std::vector<size_t> all(paths);
  for (size_t p = 0; p < paths; ++p) all[p] = p;
  std::vector<double> mean, se;
  column_stats(all, mean, se);
  RateEstimate est = fit_geometric(mean, se);

  // Bootstrap over paths for the slope interval.
  constexpr int kResamples = 200;
  std::vector<double> slopes;
  slopes.reserve(kResamples);
  RngStream rng = noise_stream(bootstrap_seed, 0xb007u, 0);
  std::vector<size_t> idx(paths);
  std::vector<double> bmean, bse;
  for (int b = 0; b < kResamples; ++b) {
    for (size_t p = 0; p < paths; ++p) idx[p] = static_cast<size_t>(rng.next_u64() % paths);
    column_stats(idx, bmean, bse);
    bool zero = false;
    for (double m : bmean) zero = zero || m == 0.0;
    slopes.push_back(zero ? -kInf : fit_geometric(bmean, bse).slope);
  }
  std::sort(slopes.begin(), slopes.end());
  est.ci_lo = slopes[static_cast<size_t>(std::floor(0.025 * (kResamples - 1)))];
  est.ci_hi = slopes[static_cast<size_t>(std::ceil(0.975 * (kResamples - 1)))];
  return est;
}

ContractionVerdict check_t3_continuous(const std::vector<std::vector<double>>& cell_integrals_by_path,
                                       double total_time, double rate_cap) {
  if (!(rate_cap < 0.0)) throw std::invalid_argument("check_t3_continuous: rate cap must be negative");
  if (!(total_time > 0.0)) throw std::invalid_argument("check_t3_continuous: total time must be positive");
  if (cell_integrals_by_path.empty()) throw std::invalid_argument("check_t3_continuous: empty sample set");
  std::vector<double> averages;
  averages.reserve(cell_integrals_by_path.size());
  size_t min_cells = std::numeric_limits<size_t>::max();
  for (const auto& row : cell_integrals_by_path) {
    min_cells = std::min(min_cells, row.size());
    double sum = 0.0;
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("check_t3_continuous: integrals must be finite");
      sum += v;
    }
    averages.push_back(sum / total_time);
  }
  if (min_cells < 30) throw std::invalid_argument("check_t3_continuous: horizon under 30 cells");

  ContractionVerdict verdict;
  verdict.theorem = "T3";
  const MeanCi ci = group_mean_ci(averages, false, "check_t3_continuous");
  verdict.n_samples = ci.n;
  verdict.verdict = ci_below_cap(ci.lo, ci.hi, rate_cap);
  verdict.conditions.push_back({"time_avg_eta", ci.mean, ci.lo, ci.hi, rate_cap, verdict.verdict});
  verdict.diagnostics["cells_per_path"] = static_cast<double>(min_cells);
  return verdict;
}

ContractionVerdict check_t4_coarse_grain(const std::vector<std::vector<double>>& integral_groups,
                                         double rate_cap) {
  if (!(rate_cap >= 0.0 && rate_cap < 1.0))
    throw std::invalid_argument("check_t4_coarse_grain: rate cap must be in [0, 1)");
  if (integral_groups.empty()) throw std::invalid_argument("check_t4_coarse_grain: empty sample set");
  std::vector<std::vector<double>> transformed;
  transformed.reserve(integral_groups.size());
  for (const auto& g : integral_groups) {
    std::vector<double> tg;
    tg.reserve(g.size());
    for (double v : g) {
      if (!std::isfinite(v)) throw std::invalid_argument("check_t4_coarse_grain: integrals must be finite");
      tg.push_back(std::exp(2.0 * v));
    }
    transformed.push_back(std::move(tg));
  }
  return uniform_bound_verdict("T4", "max_E_exp_2int", transformed, rate_cap, false,
                               "check_t4_coarse_grain");
}

EnvelopeCheck check_envelope_dominance(const std::vector<double>& dz_log_at_cells,
                                       const EnvelopeSequence& envelope, double tolerance) {
  if (dz_log_at_cells.size() != envelope.log_z.size())
    throw std::invalid_argument("check_envelope_dominance: length mismatch with envelope");
  EnvelopeCheck check;
  check.dominated = true;
  check.max_log_excess = -kInf;
  const double slack = std::log1p(tolerance);
  for (size_t i = 0; i < dz_log_at_cells.size(); ++i) {
    const double dz = dz_log_at_cells[i];
    const double cap = envelope.log_z[i] + slack;
    const double excess = dz == -kInf ? -kInf : dz - cap;  // -inf <= anything
    check.max_log_excess = std::max(check.max_log_excess, excess);
    if (excess > 0.0 && check.first_violation < 0) {
      check.first_violation = static_cast<long>(i);
      check.dominated = false;
    }
  }
  return check;
}

StepInequalityCheck check_step_inequality(const Trajectory& traj, double tolerance) {
  if (traj.step_log_sigmas.empty() || traj.dz_log_norms.size() != traj.step_log_sigmas.size() + 1)
    throw std::invalid_argument("check_step_inequality: trajectory lacks per-step sigmas");
  StepInequalityCheck check;
  check.steps = static_cast<long>(traj.step_log_sigmas.size());
  check.max_log_excess = -kInf;
  const double slack = std::log1p(tolerance);
  for (size_t i = 0; i < traj.step_log_sigmas.size(); ++i) {
    const double before = traj.dz_log_norms[i];
    const double after = traj.dz_log_norms[i + 1];
    const double log_sigma = traj.step_log_sigmas[i];
    double excess;
    if (before == -kInf || log_sigma == -kInf) {
      // sigma or dz vanished: the next dz must vanish too
      excess = after == -kInf ? -kInf : kInf;
    } else {
      excess = (after - before) - (log_sigma + slack);
    }
    check.max_log_excess = std::max(check.max_log_excess, excess);
    if (excess > 0.0) ++check.violations;
  }
  return check;
}

namespace {

/// Saved states per path, reduced in path order so results are independent
/// of the worker count.
struct EnsembleStates {
  std::vector<double> times;
  std::vector<std::vector<Vec>> by_path;  // [path][saved point]
};

EnsembleStates run_noisy_ensemble(const AdditiveNoiseSystem& sys, const Vec& x0, double horizon,
                                  double base_step, int paths, std::uint64_t seed, int save_stride,
                                  int threads) {
  EnsembleStates out;
  out.by_path.resize(static_cast<size_t>(paths));
  parallel_for_index(paths, threads, [&](long p) {
    const Trajectory traj =
        integrate_continuous(sys.noisy, x0, horizon, base_step,
                             sys.make_path(seed, static_cast<std::uint64_t>(p)), save_stride);
    out.by_path[static_cast<size_t>(p)] = traj.states;
    if (p == 0) out.times = traj.times;
  });
  return out;
}

}  // namespace

MeanTrajectoryReport mean_trajectory_test(const AdditiveNoiseSystem& sys, const Vec& x0, double horizon,
                                          double base_step, int paths, std::uint64_t seed,
                                          int save_stride, int threads) {
  if (paths < 2) throw std::invalid_argument("mean_trajectory_test: needs >= 2 paths");
  const EnsembleStates ens =
      run_noisy_ensemble(sys, x0, horizon, base_step, paths, seed, save_stride, threads);

  // Reference trajectory on the same jump-aligned grid: a degenerate
  // zero-noise path with the same cell structure.
  const NoisePath zero = NoisePath::bounded_zero_mean(Distribution::uniform(0.0, 0.0), seed,
                                                      0xdeadu, sys.cell_dt, sys.dim);
  const Trajectory det = integrate_continuous(sys.deterministic, x0, horizon, base_step, zero, save_stride);

  MeanTrajectoryReport report;
  report.times = ens.times;
  const size_t points = ens.times.size();
  const size_t dim = x0.size();
  report.max_excess = -kInf;
  for (size_t i = 0; i < points; ++i) {
    Vec mean(dim, 0.0);
    for (const auto& path : ens.by_path)
      for (size_t c = 0; c < dim; ++c) mean[c] += path[i][c];
    for (double& m : mean) m /= static_cast<double>(paths);
    double var_sum = 0.0;
    for (const auto& path : ens.by_path)
      for (size_t c = 0; c < dim; ++c) {
        const double d = path[i][c] - mean[c];
        var_sum += d * d;
      }
    const double se =
        std::sqrt(var_sum / (static_cast<double>(paths) - 1.0) / static_cast<double>(paths));
    const double disc = norm(mean - det.states[i]);
    report.discrepancy.push_back(disc);
    report.se.push_back(se);
    report.max_discrepancy = std::max(report.max_discrepancy, disc);
    report.max_excess = std::max(report.max_excess, disc - 3.0 * se);
  }
  report.pass = report.max_excess <= 0.0;
  return report;
}

DeviationBoundReport deviation_bound_test(const AdditiveNoiseSystem& sys, const Vec& x0a, const Vec& x0b,
                                          double horizon, double base_step, int paths, std::uint64_t seed,
                                          int save_stride, int threads) {
  if (paths < 2) throw std::invalid_argument("deviation_bound_test: needs >= 2 pairs");
  if (!(sys.lambda_max < 0.0))
    throw std::invalid_argument("deviation_bound_test: system lacks a negative rate certificate");

  std::vector<std::vector<double>> sep_by_pair(static_cast<size_t>(paths));
  std::vector<double> times;
  parallel_for_index(paths, threads, [&](long p) {
    // Two independent noise paths per pair, as in the deviation theorem.
    const NoisePath pa = sys.make_path(seed, 2 * static_cast<std::uint64_t>(p));
    const NoisePath pb = sys.make_path(seed, 2 * static_cast<std::uint64_t>(p) + 1);
    const PairTrajectories pair =
        propagate_pair_continuous(sys.noisy, x0a, x0b, horizon, base_step, pa, pb, save_stride);
    sep_by_pair[static_cast<size_t>(p)] = pair.separation;
    if (p == 0) times = pair.first.times;
  });

  DeviationBoundReport report;
  report.times = times;
  report.asymptote = 2.0 * sys.sigma / std::abs(sys.lambda_max);
  const double e0 = norm(x0a - x0b);
  report.max_excess = -kInf;
  for (size_t i = 0; i < times.size(); ++i) {
    std::vector<double> seps;
    seps.reserve(static_cast<size_t>(paths));
    for (const auto& row : sep_by_pair) seps.push_back(row[i]);
    const MeanCi ci = mean_ci(seps);
    const double decay = std::exp(sys.lambda_max * times[i]);
    const double bound = e0 * decay + report.asymptote * (1.0 - decay);
    report.mean_separation.push_back(ci.mean);
    report.se.push_back(ci.se);
    report.bound.push_back(bound);
    report.max_excess = std::max(report.max_excess, ci.mean - bound - 3.0 * ci.se);
  }
  report.pass = report.max_excess <= 0.0;
  return report;
}

}  // namespace stocon
