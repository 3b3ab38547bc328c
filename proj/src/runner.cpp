#include "stocon/runner.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stocon/analysis.hpp"
#include "stocon/csv.hpp"
#include "stocon/parallel.hpp"
#include "stocon/rng.hpp"

namespace stocon {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Vec default_dz0(int dim, std::uint64_t seed) {
  // Unit vector in a seed-derived random direction.
  RngStream rng = noise_stream(seed, 0xd20u, 0);
  Vec dz(static_cast<size_t>(dim));
  double n = 0.0;
  do {
    for (double& v : dz) {
      const double u1 = rng.next_unit(), u2 = rng.next_unit();
      v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    n = norm(dz);
  } while (n == 0.0);
  for (double& v : dz) v /= n;
  return dz;
}

Vec resolve_vec(const Vec& configured, int dim, double fill, const char* key) {
  if (configured.empty()) return Vec(static_cast<size_t>(dim), fill);
  if (static_cast<int>(configured.size()) != dim)
    throw ConfigError(std::string("config key '") + key + "': expected dimension " + std::to_string(dim));
  return configured;
}

VerdictRow row_from_condition(const std::string& analysis, const ConditionEstimate& c) {
  return {analysis, c.quantity, c.estimate, c.ci_lo, c.ci_hi, c.threshold, c.pass ? 1 : 0};
}

VerdictRow info_row(const std::string& analysis, const std::string& quantity, double estimate,
                    double lo = kNan, double hi = kNan, double threshold = kNan) {
  return {analysis, quantity, estimate, lo, hi, threshold, -1};
}

bool wants(const ExperimentConfig& cfg, Analysis a) {
  for (Analysis x : cfg.analyses)
    if (x == a) return true;
  return false;
}

/// Reduced per-grid-point ensemble columns; empty column = written as nan.
struct EnsembleSeries {
  std::vector<double> times;
  std::vector<double> dz_mean, dz_se;
  std::vector<double> sep_mean, sep_se;
};

/// Mean/se columns from per-path rows, reduced in path order.
void reduce_columns(const std::vector<std::vector<double>>& by_path, std::vector<double>& mean_col,
                    std::vector<double>& se_col) {
  if (by_path.empty()) return;
  const size_t points = by_path.front().size();
  const double n = static_cast<double>(by_path.size());
  mean_col.assign(points, 0.0);
  se_col.assign(points, 0.0);
  for (const auto& row : by_path)
    for (size_t i = 0; i < points; ++i) mean_col[i] += row[i];
  for (double& m : mean_col) m /= n;
  if (by_path.size() == 1) {
    se_col.assign(points, 0.0);
    return;
  }
  for (const auto& row : by_path)
    for (size_t i = 0; i < points; ++i) {
      const double d = row[i] - mean_col[i];
      se_col[i] += d * d;
    }
  for (double& s : se_col) s = std::sqrt(s / (n - 1.0) / n);
}

std::string ensemble_csv(const EnsembleSeries& s) {
  std::ostringstream out;
  out << "t,mean_dz_norm_sq,se,mean_sep,se_sep\n";
  auto cell = [&](const std::vector<double>& col, size_t i) {
    return col.empty() ? std::string("nan") : fmt_double(col[i]);
  };
  for (size_t i = 0; i < s.times.size(); ++i) {
    out << fmt_double(s.times[i]) << ',' << cell(s.dz_mean, i) << ',' << cell(s.dz_se, i) << ','
        << cell(s.sep_mean, i) << ',' << cell(s.sep_se, i) << '\n';
  }
  return out.str();
}

void add_lyapunov_rows(std::vector<VerdictRow>& rows, const std::vector<double>& slopes) {
  if (slopes.size() == 1) {
    rows.push_back(info_row("lyapunov", "slope", slopes[0]));
    return;
  }
  const MeanCi ci = mean_ci(slopes);
  rows.push_back(info_row("lyapunov", "slope", ci.mean, ci.lo, ci.hi));
}

// ---------------------------------------------------------------------------
// Scenario drivers
// ---------------------------------------------------------------------------

struct ScenarioResult {
  EnsembleSeries ensemble;
  std::vector<VerdictRow> rows;
  std::vector<std::string> notes;
  Trajectory first_path;  // for trajectories.csv
};

ScenarioResult run_discrete(const ExperimentConfig& cfg) {
  const bool is_sg = cfg.scenario == "stochastic_gradient";
  DiscreteSystem sys;
  int dim = 1;
  SgConditionReport sg_report;
  if (is_sg) {
    dim = static_cast<int>(cfg.sg_hessian_diag.size());
    Mat h(dim, dim);
    for (int i = 0; i < dim; ++i) h(i, i) = cfg.sg_hessian_diag[static_cast<size_t>(i)];
    StochasticGradientScenario sg =
        stochastic_gradient(quadratic_objective(h), cfg.sg_mu, *cfg.noise_dist, {}, cfg.seed);
    sys = std::move(sg.system);
    sg_report = sg.report;
  } else {
    sys = linear_random_gain(*cfg.noise_dist);
  }

  const Vec x0 = resolve_vec(cfg.x0, dim, 1.0, "x0");
  const Vec dz0 = cfg.dz0.empty() ? default_dz0(dim, cfg.seed) : resolve_vec(cfg.dz0, dim, 1.0, "dz0");
  const Metric metric = make_metric_identity(dim);
  const long steps = cfg.horizon_steps;
  const bool track_sigma = wants(cfg, Analysis::T1) || wants(cfg, Analysis::T2);
  const bool want_lyap = wants(cfg, Analysis::Lyapunov);
  // dz^2 per step feeds both ms-rate and the ensemble.csv columns

  VariationalOptions opts;
  opts.track_sigma = track_sigma;
  opts.save_stride = 1;

  struct PerPath {
    std::vector<double> dz_sq;
    std::vector<double> log_sigmas;
    double lyap_slope = kNan;
  };
  std::vector<PerPath> results(static_cast<size_t>(cfg.paths));

  ScenarioResult out;
  parallel_for_index(cfg.paths, cfg.threads, [&](long p) {
    const NoisePath path = NoisePath::iid_sequence(*cfg.noise_dist, cfg.seed,
                                                   static_cast<std::uint64_t>(p), sys.noise_dim);
    const Trajectory traj = propagate_variational_discrete(
        sys, metric, VariationalState(StateVector(x0), dz0), steps, path, opts);
    PerPath& slot = results[static_cast<size_t>(p)];
    slot.dz_sq.reserve(traj.dz_log_norms.size());
    for (double lg : traj.dz_log_norms) slot.dz_sq.push_back(std::exp(2.0 * lg));
    if (track_sigma) slot.log_sigmas = traj.step_log_sigmas;
    if (want_lyap) slot.lyap_slope = finite_time_lyapunov(traj, cfg.tail_fraction).slope;
    if (p == 0) {
      out.ensemble.times = traj.times;
      out.first_path = traj;
    }
  });

  std::vector<std::vector<double>> dz_sq_by_path;
  dz_sq_by_path.reserve(results.size());
  for (auto& r : results) dz_sq_by_path.push_back(std::move(r.dz_sq));
  reduce_columns(dz_sq_by_path, out.ensemble.dz_mean, out.ensemble.dz_se);

  if (want_lyap) {
    std::vector<double> slopes;
    for (const auto& r : results) slopes.push_back(r.lyap_slope);
    add_lyapunov_rows(out.rows, slopes);
  }
  if (track_sigma) {
    // Stationary bound process: pool all (path, step) sigma samples.
    std::vector<double> pooled_log;
    pooled_log.reserve(static_cast<size_t>(cfg.paths) * static_cast<size_t>(steps));
    for (const auto& r : results)
      pooled_log.insert(pooled_log.end(), r.log_sigmas.begin(), r.log_sigmas.end());
    if (wants(cfg, Analysis::T1)) {
      const ContractionVerdict v = check_t1_discrete({pooled_log}, cfg.t1_cap);
      out.rows.push_back(row_from_condition("t1", v.conditions.front()));
      if (v.diagnostics.count("lln_half_vs_full_gap"))
        out.notes.push_back("t1: LLN half-vs-full running average gap = " +
                            fmt_double(v.diagnostics.at("lln_half_vs_full_gap")));
    }
    if (wants(cfg, Analysis::T2)) {
      std::vector<double> eta_sq;
      eta_sq.reserve(pooled_log.size());
      for (double lg : pooled_log) eta_sq.push_back(std::exp(2.0 * lg));
      const ContractionVerdict v = check_t2_discrete({eta_sq}, cfg.t2_cap);
      out.rows.push_back(row_from_condition("t2", v.conditions.front()));
    }
  }
  if (wants(cfg, Analysis::MsRate)) {
    const RateEstimate est = ms_rate_fit(dz_sq_by_path, splitmix64(cfg.seed ^ 0xb007u));
    out.rows.push_back(info_row("ms-rate", "ms_factor", est.factor(), std::exp(est.ci_lo),
                                std::exp(est.ci_hi), kNan));
  }
  if (is_sg) {
    out.rows.push_back({"sg-condition", "contraction_factor", sg_report.contraction_factor, kNan, kNan,
                        1.0, sg_report.ok() && !sg_report.diverges() ? 1 : 0});
    std::ostringstream note;
    note << "stochastic gradient: mu*sigma^2 = " << fmt_double(sg_report.mu_sigma_sq)
         << ", hessian eigenvalues in [" << fmt_double(sg_report.lambda_min_h) << ", "
         << fmt_double(sg_report.lambda_max_h)
         << "], factor max|1 - mu sigma^2 lambda| = " << fmt_double(sg_report.contraction_factor)
         << (sg_report.diverges() ? " (divergence flagged)" : "");
    out.notes.push_back(note.str());
  }
  return out;
}

ScenarioResult run_rate(const ExperimentConfig& cfg) {
  const ContinuousSystem sys = linear_random_rate();
  const Metric metric = make_metric_identity(1);
  const Vec x0 = resolve_vec(cfg.x0, 1, 1.0, "x0");
  const Vec dz0 = cfg.dz0.empty() ? Vec{1.0} : resolve_vec(cfg.dz0, 1, 1.0, "dz0");
  const Partition part = cfg.partition();
  const double h = cfg.resolved_step();
  const double horizon = cfg.horizon_time;
  long cells = 0;
  while (part.cell_end(cells) <= horizon * (1.0 + 1e-12)) ++cells;
  if (cells < 1) throw ConfigError("config: horizon.time shorter than one noise cell");

  struct PerPath {
    std::vector<double> dz_sq;
    std::vector<double> integrals;
    double lyap_slope = kNan;
  };
  std::vector<PerPath> results(static_cast<size_t>(cfg.paths));
  const bool want_lyap = wants(cfg, Analysis::Lyapunov);

  ScenarioResult out;
  parallel_for_index(cfg.paths, cfg.threads, [&](long p) {
    const NoisePath path =
        NoisePath::coarse_grain(part, *cfg.noise_dist, cfg.seed, static_cast<std::uint64_t>(p));
    const Trajectory traj =
        integrate_continuous(sys, metric, VariationalState(StateVector(x0), dz0), horizon, h, path,
                             static_cast<int>(cfg.save_stride));
    PerPath& slot = results[static_cast<size_t>(p)];
    slot.dz_sq.reserve(traj.dz_log_norms.size());
    for (double lg : traj.dz_log_norms) slot.dz_sq.push_back(std::exp(2.0 * lg));
    slot.integrals.reserve(static_cast<size_t>(cells));
    for (long n = 0; n < cells; ++n) slot.integrals.push_back(path.integral_over_cell(n));
    if (want_lyap) slot.lyap_slope = finite_time_lyapunov(traj, cfg.tail_fraction).slope;
    if (p == 0) {
      out.ensemble.times = traj.times;
      out.first_path = traj;
    }
  });

  std::vector<std::vector<double>> dz_sq_by_path, integrals_by_path;
  for (auto& r : results) {
    dz_sq_by_path.push_back(std::move(r.dz_sq));
    integrals_by_path.push_back(std::move(r.integrals));
  }
  reduce_columns(dz_sq_by_path, out.ensemble.dz_mean, out.ensemble.dz_se);

  if (want_lyap) {
    std::vector<double> slopes;
    for (const auto& r : results) slopes.push_back(r.lyap_slope);
    add_lyapunov_rows(out.rows, slopes);
  }
  if (wants(cfg, Analysis::T3)) {
    const double covered = part.cell_end(cells - 1);
    const ContractionVerdict v = check_t3_continuous(integrals_by_path, covered, cfg.t3_cap);
    out.rows.push_back(row_from_condition("t3", v.conditions.front()));
  }
  if (wants(cfg, Analysis::T4)) {
    // Stationary cells: pool every (path, cell) integral into one group.
    std::vector<double> pooled;
    pooled.reserve(integrals_by_path.size() * static_cast<size_t>(cells));
    for (const auto& row : integrals_by_path) pooled.insert(pooled.end(), row.begin(), row.end());
    const ContractionVerdict v = check_t4_coarse_grain({pooled}, cfg.t4_cap);
    out.rows.push_back(row_from_condition("t4", v.conditions.front()));

    // Envelope dominance at cell boundaries on a sample of paths.
    const long steps_per_cell =
        std::max<long>(1, static_cast<long>(std::ceil(cfg.noise_delta / h - 1e-9)));
    const long sample_paths = std::min<long>(cfg.paths, 8);
    double max_excess = -std::numeric_limits<double>::infinity();
    bool dominated = true;
    for (long p = 0; p < sample_paths; ++p) {
      const NoisePath path =
          NoisePath::coarse_grain(part, *cfg.noise_dist, cfg.seed, static_cast<std::uint64_t>(p));
      const Trajectory traj =
          integrate_continuous(sys, metric, VariationalState(StateVector(x0), dz0),
                               part.cell_end(cells - 1), h, path, static_cast<int>(steps_per_cell));
      const EnvelopeSequence env = envelope_sequence(integrals_by_path[static_cast<size_t>(p)], norm(dz0));
      const EnvelopeCheck check = check_envelope_dominance(traj.dz_log_norms, env);
      dominated = dominated && check.dominated;
      max_excess = std::max(max_excess, check.max_log_excess);
    }
    out.rows.push_back({"t4", "envelope_log_excess", max_excess, kNan, kNan, 0.0, dominated ? 1 : 0});
  }
  return out;
}

ScenarioResult run_additive(const ExperimentConfig& cfg) {
  const int dim = static_cast<int>(cfg.additive_dim);
  const double lambda = cfg.additive_lambda;
  DeterministicField field;
  field.dim = dim;
  field.f = [lambda](const Vec& x, double) { return scaled(x, lambda); };
  field.jacobian = [lambda, dim](const Vec&, double) {
    Mat j(dim, dim);
    for (int i = 0; i < dim; ++i) j(i, i) = lambda;
    return j;
  };
  const AdditiveNoiseSystem ans = additive_noise_system(field, *cfg.noise_dist, cfg.noise_delta, lambda);

  const Vec x0 = resolve_vec(cfg.x0, dim, 1.0, "x0");
  const Vec x0b = cfg.x0b.empty() ? x0 : resolve_vec(cfg.x0b, dim, 1.0, "x0b");
  const double h = cfg.resolved_step();

  ScenarioResult out;
  if (wants(cfg, Analysis::MeanTrajectory)) {
    const MeanTrajectoryReport rep =
        mean_trajectory_test(ans, x0, cfg.horizon_time, h, static_cast<int>(cfg.paths), cfg.seed,
                             static_cast<int>(cfg.save_stride), cfg.threads);
    out.rows.push_back({"mean-trajectory", "max_discrepancy_minus_3se", rep.max_excess, kNan, kNan, 0.0,
                        rep.pass ? 1 : 0});
    out.rows.push_back(info_row("mean-trajectory", "max_discrepancy", rep.max_discrepancy));
    out.ensemble.times = rep.times;
  }
  if (wants(cfg, Analysis::DeviationBound)) {
    const DeviationBoundReport rep =
        deviation_bound_test(ans, x0, x0b, cfg.horizon_time, h, static_cast<int>(cfg.paths), cfg.seed,
                             static_cast<int>(cfg.save_stride), cfg.threads);
    out.rows.push_back({"deviation-bound", "max_mean_sep_minus_bound_minus_3se", rep.max_excess, kNan,
                        kNan, 0.0, rep.pass ? 1 : 0});
    out.rows.push_back(info_row("deviation-bound", "asymptote_2sigma_over_lambda", rep.asymptote));
    out.ensemble.times = rep.times;
    out.ensemble.sep_mean = rep.mean_separation;
    out.ensemble.sep_se = rep.se;
    out.notes.push_back("deviation-bound: sigma = " + fmt_double(ans.sigma) +
                        ", lambda = " + fmt_double(ans.lambda_max));
  }
  if (cfg.save_trajectories || out.ensemble.times.empty()) {
    // trajectories.csv sample: one noisy path
    out.first_path = integrate_continuous(ans.noisy, x0, cfg.horizon_time, h,
                                          ans.make_path(cfg.seed, 0),
                                          static_cast<int>(cfg.save_stride));
    if (out.ensemble.times.empty()) out.ensemble.times = out.first_path.times;
  }
  return out;
}

ScenarioResult run_vdp(const ExperimentConfig& cfg) {
  const ContinuousSystem sys = vdp_coupled(cfg.vdp_alpha, cfg.vdp_w);
  const Distribution eps1 = *cfg.noise_dist;
  const Distribution eps2 = cfg.noise2_dist ? *cfg.noise2_dist : eps1;
  const Partition part = cfg.partition();
  const double h = cfg.resolved_step();
  Vec x0 = cfg.x0.empty() ? Vec{1.5, 0.0, -1.5, 0.0} : cfg.x0;
  if (x0.size() != 4) throw ConfigError("config key 'x0': vdp_coupled needs dimension 4");

  std::vector<std::vector<double>> sep_by_path(static_cast<size_t>(cfg.paths));
  std::vector<double> tail_avgs(static_cast<size_t>(cfg.paths));
  ScenarioResult out;

  parallel_for_index(cfg.paths, cfg.threads, [&](long p) {
    const NoisePath path = NoisePath::coarse_grain(part, std::vector<Distribution>{eps1, eps2}, cfg.seed,
                                                   static_cast<std::uint64_t>(p));
    const Trajectory traj =
        integrate_continuous(sys, x0, cfg.horizon_time, h, path, static_cast<int>(cfg.save_stride));
    std::vector<double> sep(traj.states.size());
    for (size_t i = 0; i < traj.states.size(); ++i) sep[i] = vdp_separation(traj.states[i]);
    // Tail average over the last 20% of the horizon.
    double sum = 0.0;
    long count = 0;
    const double t_tail = 0.8 * cfg.horizon_time;
    for (size_t i = 0; i < sep.size(); ++i)
      if (traj.times[i] >= t_tail) {
        sum += sep[i];
        ++count;
      }
    tail_avgs[static_cast<size_t>(p)] = count ? sum / static_cast<double>(count) : kNan;
    sep_by_path[static_cast<size_t>(p)] = std::move(sep);
    if (p == 0) {
      out.ensemble.times = traj.times;
      out.first_path = traj;
    }
  });

  reduce_columns(sep_by_path, out.ensemble.sep_mean, out.ensemble.sep_se);
  if (wants(cfg, Analysis::Sync)) {
    long synced = 0;
    for (double avg : tail_avgs)
      if (avg < cfg.sync_threshold) ++synced;
    const double fraction = static_cast<double>(synced) / static_cast<double>(cfg.paths);
    out.rows.push_back({"sync", "synced_fraction", fraction, kNan, kNan, cfg.sync_fraction,
                        fraction >= cfg.sync_fraction ? 1 : 0});
    const double esum = eps1.mean() + eps2.mean();
    out.rows.push_back(info_row("sync", "mean_coupling_sum", esum, kNan, kNan, 1.0));
    out.notes.push_back(std::string("sync: E(eps1) + E(eps2) = ") + fmt_double(esum) +
                        (vdp_sync_predicted(eps1.mean(), eps2.mean())
                             ? " > 1: synchronization predicted"
                             : " <= 1: no synchronization predicted"));
  }
  return out;
}

}  // namespace

std::string verdicts_csv(const std::vector<VerdictRow>& rows) {
  std::ostringstream out;
  out << "analysis,quantity,estimate,ci_lo,ci_hi,threshold,verdict\n";
  for (const auto& r : rows) {
    out << r.analysis << ',' << r.quantity << ',' << fmt_double(r.estimate) << ',' << fmt_double(r.ci_lo)
        << ',' << fmt_double(r.ci_hi) << ',' << fmt_double(r.threshold) << ','
        << (r.verdict < 0 ? "na" : (r.verdict ? "true" : "false")) << '\n';
  }
  return out.str();
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();

  ScenarioResult result;
  if (cfg.is_discrete_scenario()) {
    result = run_discrete(cfg);
  } else if (cfg.scenario == "linear_random_rate") {
    result = run_rate(cfg);
  } else if (cfg.scenario == "additive_linear") {
    result = run_additive(cfg);
  } else if (cfg.scenario == "vdp_coupled") {
    result = run_vdp(cfg);
  } else {
    throw ConfigError("run_experiment: unknown scenario '" + cfg.scenario + "'");
  }

  RunReport report;
  report.config_echo = cfg.echo();
  report.rows = std::move(result.rows);
  report.notes = std::move(result.notes);
  for (const auto& row : report.rows)
    if (row.verdict == 0) report.exit_code = 2;

  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.out_dir);
  write_file_atomic(out_dir / "ensemble.csv", ensemble_csv(result.ensemble));
  report.files.push_back("ensemble.csv");
  write_file_atomic(out_dir / "verdicts.csv", verdicts_csv(report.rows));
  report.files.push_back("verdicts.csv");
  if (cfg.save_trajectories) {
    std::ostringstream traj;
    write_trajectory_csv(traj, result.first_path);
    write_file_atomic(out_dir / "trajectories.csv", traj.str());
    report.files.push_back("trajectories.csv");
  }

  const auto t_end = std::chrono::steady_clock::now();
  report.wall_seconds = std::chrono::duration<double>(t_end - t_start).count();

  std::ostringstream txt;
  txt << "stocon run report\n=================\n\nconfig (defaults resolved):\n";
  for (const auto& [k, v] : report.config_echo) txt << "  " << k << " = " << v << '\n';
  txt << "\nresults:\n";
  for (const auto& r : report.rows) {
    txt << "  [" << r.analysis << "] " << r.quantity << " = " << fmt_double(r.estimate);
    if (std::isfinite(r.ci_lo) || std::isfinite(r.ci_hi))
      txt << "  ci95 = [" << fmt_double(r.ci_lo) << ", " << fmt_double(r.ci_hi) << "]";
    if (!std::isnan(r.threshold)) txt << "  threshold = " << fmt_double(r.threshold);
    txt << "  verdict = " << (r.verdict < 0 ? "na" : (r.verdict ? "true" : "false")) << '\n';
  }
  for (const auto& note : report.notes) txt << '\n' << note << '\n';
  txt << "\nwall clock: " << report.wall_seconds << " s\nfiles:\n";
  for (const auto& f : report.files) txt << "  " << f << '\n';
  txt << "exit code: " << report.exit_code << '\n';
  write_file_atomic(out_dir / "report.txt", txt.str());
  report.files.push_back("report.txt");

  return report;
}

}  // namespace stocon
