#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stocon/linalg.hpp"

namespace stocon {

/// Point in R^n. Dimension and finiteness are checked once, at construction;
/// propagation engines re-check finiteness per step with run diagnostics.
class StateVector {
 public:
  explicit StateVector(Vec entries);
  int dim() const { return static_cast<int>(entries_.size()); }
  const Vec& entries() const { return entries_; }
  double operator[](int i) const { return entries_[static_cast<size_t>(i)]; }

 private:
  Vec entries_;
};

/// Trajectory point plus virtual displacement in metric coordinates.
/// A zero displacement is legal; downstream log quantities map it to -inf.
struct VariationalState {
  StateVector x;
  Vec dz;

  VariationalState(StateVector x_, Vec dz_);
};

/// x_{i+1} = f(x_i, i, xi_i). The map must be a pure function of its
/// arguments; noise enters by value only.
struct DiscreteSystem {
  int dim = 0;
  int noise_dim = 1;
  std::function<Vec(const Vec& x, long step, const Vec& noise)> map;
  /// Optional analytic Jacobian d f / d x; finite differences are used when absent.
  std::function<Mat(const Vec& x, long step, const Vec& noise)> jacobian;

  bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// dx/dt = f(x, t, xi_t), same purity contract as DiscreteSystem.
struct ContinuousSystem {
  int dim = 0;
  int noise_dim = 1;
  std::function<Vec(const Vec& x, double t, const Vec& noise)> field;
  std::function<Mat(const Vec& x, double t, const Vec& noise)> jacobian;

  bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

/// Time-dependent coordinate transform Theta(t) with M(t) = Theta^T Theta
/// uniformly positive definite: min eig M(t) >= lambda_min everywhere.
/// State-dependent metrics are out of scope.
struct Metric {
  int dim = 0;
  double lambda_min = 0.0;
  std::function<Mat(double t)> theta;
  std::function<Mat(double t)> theta_dot;  // required for continuous-time analysis
  bool identity = false;                   // fast path: Theta == I, Theta_dot == 0

  bool has_theta_dot() const { return static_cast<bool>(theta_dot); }
};

/// Theta(t) = I, lambda_min = 1, Theta_dot = 0.
Metric make_metric_identity(int n);

struct ValidationProbe {
  Vec x;
  double time = 0.0;  // step index for discrete systems
  Vec noise;
};

struct ValidationReport {
  bool has_analytic = false;
  /// Max over probes of ||J_analytic - J_fd||_inf / max(1, ||J_analytic||_inf).
  double max_rel_discrepancy = 0.0;
  std::vector<std::string> issues;

  bool fd_only() const { return !has_analytic; }
  bool ok(double tol = 1e-5) const {
    return issues.empty() && (!has_analytic || max_rel_discrepancy <= tol);
  }
};

/// Probes the system map for NaN/Inf outputs and, when an analytic Jacobian
/// is present, compares it against central differences. Non-finite values are
/// reported in the result, not thrown.
ValidationReport validate_system(const DiscreteSystem& sys, const std::vector<ValidationProbe>& probes);
ValidationReport validate_system(const ContinuousSystem& sys, const std::vector<ValidationProbe>& probes);

struct MetricCheck {
  double min_eigenvalue;  // min over sampled t of eig_min(Theta^T Theta)
  double worst_time;
  bool uniformly_positive;  // min_eigenvalue >= lambda_min - 1e-9
};

/// Samples Theta on [t_lo, t_hi] and checks uniform positive definiteness.
MetricCheck validate_metric(const Metric& metric, double t_lo, double t_hi, int samples = 1000);

}  // namespace stocon
