#include "stocon/core.hpp"

#include <cmath>
#include <utility>

#include "stocon/spectral.hpp"

namespace stocon {

StateVector::StateVector(Vec entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("StateVector: dimension must be >= 1");
  if (!is_finite(entries_)) throw std::invalid_argument("StateVector: entries must be finite");
}

VariationalState::VariationalState(StateVector x_, Vec dz_) : x(std::move(x_)), dz(std::move(dz_)) {
  if (static_cast<int>(dz.size()) != x.dim())
    throw std::invalid_argument("VariationalState: x and dz dimensions differ");
  if (!is_finite(dz)) throw std::invalid_argument("VariationalState: dz must be finite");
}

Metric make_metric_identity(int n) {
  if (n < 1) throw std::invalid_argument("make_metric_identity: dimension must be >= 1");
  Metric m;
  m.dim = n;
  m.lambda_min = 1.0;
  m.theta = [n](double) { return Mat::identity(n); };
  m.theta_dot = [n](double) { return Mat(n, n); };
  m.identity = true;
  return m;
}

namespace {

template <typename MapFn, typename JacFn>
ValidationReport run_probes(int dim, const std::vector<ValidationProbe>& probes, const MapFn& map_at,
                            const JacFn& jac_at, bool has_jacobian) {
  if (probes.empty()) throw std::invalid_argument("validate_system: probes must be nonempty");
  ValidationReport report;
  report.has_analytic = has_jacobian;
  report.max_rel_discrepancy = has_jacobian ? 0.0 : std::nan("");

  for (size_t p = 0; p < probes.size(); ++p) {
    const auto& probe = probes[p];
    if (static_cast<int>(probe.x.size()) != dim) {
      report.issues.push_back("probe " + std::to_string(p) + ": state dimension mismatch");
      continue;
    }
    if (!is_finite(probe.x) || !is_finite(probe.noise) || !std::isfinite(probe.time))
      throw std::invalid_argument("validate_system: probes must be finite");

    Vec out;
    try {
      out = map_at(probe);
    } catch (const std::exception& e) {
      report.issues.push_back("probe " + std::to_string(p) + ": map threw: " + e.what());
      continue;
    }
    if (static_cast<int>(out.size()) != dim) {
      report.issues.push_back("probe " + std::to_string(p) + ": output dimension mismatch");
      continue;
    }
    if (!is_finite(out)) {
      report.issues.push_back("probe " + std::to_string(p) + ": non-finite map output");
      continue;
    }

    Mat fd;
    try {
      fd = jacobian_fd([&](const Vec& x) { ValidationProbe q = probe; q.x = x; return map_at(q); },
                       probe.x, fd_default_eps(probe.x));
    } catch (const NonFiniteError& e) {
      report.issues.push_back("probe " + std::to_string(p) + ": " + e.what());
      continue;
    }

    if (has_jacobian) {
      const Mat analytic = jac_at(probe);
      if (!is_finite(analytic)) {
        report.issues.push_back("probe " + std::to_string(p) + ": non-finite analytic Jacobian");
        continue;
      }
      const double denom = std::max(1.0, norm_inf(analytic));
      const double rel = norm_inf(analytic - fd) / denom;
      report.max_rel_discrepancy = std::max(report.max_rel_discrepancy, rel);
    }
  }
  return report;
}

}  // namespace

ValidationReport validate_system(const DiscreteSystem& sys, const std::vector<ValidationProbe>& probes) {
  if (!sys.map) throw std::invalid_argument("validate_system: system has no map");
  return run_probes(
      sys.dim, probes,
      [&](const ValidationProbe& q) { return sys.map(q.x, static_cast<long>(q.time), q.noise); },
      [&](const ValidationProbe& q) { return sys.jacobian(q.x, static_cast<long>(q.time), q.noise); },
      sys.has_jacobian());
}

ValidationReport validate_system(const ContinuousSystem& sys, const std::vector<ValidationProbe>& probes) {
  if (!sys.field) throw std::invalid_argument("validate_system: system has no field");
  return run_probes(
      sys.dim, probes, [&](const ValidationProbe& q) { return sys.field(q.x, q.time, q.noise); },
      [&](const ValidationProbe& q) { return sys.jacobian(q.x, q.time, q.noise); }, sys.has_jacobian());
}

MetricCheck validate_metric(const Metric& metric, double t_lo, double t_hi, int samples) {
  if (!metric.theta) throw std::invalid_argument("validate_metric: metric has no transform");
  if (samples < 1 || !(t_hi >= t_lo)) throw std::invalid_argument("validate_metric: bad sampling window");
  MetricCheck check{std::numeric_limits<double>::infinity(), t_lo, true};
  for (int k = 0; k < samples; ++k) {
    const double t = samples == 1 ? t_lo : t_lo + (t_hi - t_lo) * k / (samples - 1);
    const Mat th = metric.theta(t);
    const double eig_min = lambda_min_symmetric(transpose(th) * th);
    if (eig_min < check.min_eigenvalue) {
      check.min_eigenvalue = eig_min;
      check.worst_time = t;
    }
  }
  check.uniformly_positive = check.min_eigenvalue >= metric.lambda_min - 1e-9;
  return check;
}

}  // namespace stocon
