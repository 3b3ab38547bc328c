#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stocon/propagate.hpp"
#include "stocon/scenarios.hpp"

namespace stocon {

struct MeanCi {
  double mean = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  long n = 0;
};

/// Sample mean with a 95% normal-approximation interval.
MeanCi mean_ci(const std::vector<double>& samples);

/// Least-squares rate in log scale; slope is per step or per unit time
/// depending on the trajectory's clock.
struct RateEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  long n_points = 0;
  /// Max over the tail of (log||dz_t|| - log||dz_0||) / t.
  double max_running_rate = 0.0;
  /// Bootstrap interval on the slope where one is computed, else NaN.
  double ci_lo = 0.0;
  double ci_hi = 0.0;

  /// Geometric factor per step, exp(slope).
  double factor() const;
};

struct ConditionEstimate {
  std::string quantity;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Estimates for one theorem's condition plus the boolean verdict. The
/// verdict is true only when the 95% CI upper bound sits strictly below the
/// threshold, uniformly over the sample groups supplied.
struct ContractionVerdict {
  std::string theorem;
  std::vector<ConditionEstimate> conditions;
  bool verdict = false;
  long n_samples = 0;
  std::map<std::string, double> diagnostics;
};

/// Tail-window regression slope of log||dz|| versus time: the numerical proxy
/// for limsup (1/t) log||dz||. Any exact zero norm in the tail forces slope
/// -inf (contracting), per the analytic-extension convention.
RateEstimate finite_time_lyapunov(const Trajectory& traj, double tail_fraction = 0.5);

/// Theorem "E(log eta_i) <= eta < 0". Each group holds samples of log eta_i
/// for one step (or a pooled stationary block); uniformity over steps is the
/// max over groups. Samples may be -inf.
ContractionVerdict check_t1_discrete(const std::vector<std::vector<double>>& log_eta_groups,
                                     double rate_cap);

/// Theorem "E(eta_i^2) <= eta < 1", same grouping conventions.
ContractionVerdict check_t2_discrete(const std::vector<std::vector<double>>& eta_sq_groups,
                                     double rate_cap);

/// Weighted least-squares geometric fit to log(values) with per-point
/// standard errors (weights 1 / relative-variance). A zero value forces
/// slope -inf.
RateEstimate fit_geometric(const std::vector<double>& values, const std::vector<double>& ses);

/// Fits the geometric decay rate of the Monte Carlo mean of ||dz_i||^2 over
/// an ensemble of paths; bootstrap (200 resamples over paths) gives the CI.
RateEstimate ms_rate_fit(const std::vector<std::vector<double>>& dz_sq_by_path,
                         std::uint64_t bootstrap_seed = 0);

/// Continuous a.s. condition: per-path time averages (1/T) integral of eta,
/// ensemble CI against the cap eta < 0. Integrals must be exact cell
/// integrals of a coarse-grain process.
ContractionVerdict check_t3_continuous(const std::vector<std::vector<double>>& cell_integrals_by_path,
                                       double total_time, double rate_cap);

/// Coarse-grain condition: E((e^{int_{P_n} eta})^2) <= eta < 1. Groups hold
/// cell-integral samples (per cell, or pooled when stationary).
ContractionVerdict check_t4_coarse_grain(const std::vector<std::vector<double>>& integral_groups,
                                         double rate_cap);

struct EnvelopeCheck {
  bool dominated = false;
  double max_log_excess = 0.0;  // max of log||dz|| - log Z - log1p(tol)
  long first_violation = -1;
};

/// Sample-wise check that ||dz_{t_n}|| <= Z_n (1 + tol) at cell boundaries.
EnvelopeCheck check_envelope_dominance(const std::vector<double>& dz_log_at_cells,
                                       const EnvelopeSequence& envelope, double tolerance = 1e-6);

struct StepInequalityCheck {
  long violations = 0;
  double max_log_excess = 0.0;
  long steps = 0;
};

/// Per-step proof inequality ||dz_{i+1}|| <= sigma_{f_i} ||dz_i|| (1 + tol),
/// on a trajectory recorded with sigma tracking.
StepInequalityCheck check_step_inequality(const Trajectory& traj, double tolerance = 1e-9);

struct MeanTrajectoryReport {
  std::vector<double> times;
  std::vector<double> discrepancy;  // ||MC mean - deterministic|| per sampled t
  std::vector<double> se;
  double max_discrepancy = 0.0;
  double max_excess = 0.0;  // max of discrepancy - 3 se
  bool pass = false;
};

/// Additive-noise mean-trajectory test: the Monte Carlo mean over paths is
/// compared against the unperturbed trajectory; passes when the discrepancy
/// stays within 3 standard errors at every sampled time.
MeanTrajectoryReport mean_trajectory_test(const AdditiveNoiseSystem& sys, const Vec& x0, double horizon,
                                          double base_step, int paths, std::uint64_t seed,
                                          int save_stride = 1, int threads = 0);

struct DeviationBoundReport {
  std::vector<double> times;
  std::vector<double> mean_separation;
  std::vector<double> se;
  std::vector<double> bound;  // E0 e^{lambda t} + (2 sigma/|lambda|)(1 - e^{lambda t})
  double asymptote = 0.0;     // 2 sigma / |lambda|
  double max_excess = 0.0;    // max of mean - bound - 3 se
  bool pass = false;
};

/// Deviation bound under independent noise paths per trajectory pair:
/// E||x1 - x2|| against the closed-form majorant, with 3-SE slack.
DeviationBoundReport deviation_bound_test(const AdditiveNoiseSystem& sys, const Vec& x0a, const Vec& x0b,
                                          double horizon, double base_step, int paths, std::uint64_t seed,
                                          int save_stride = 1, int threads = 0);

}  // namespace stocon
