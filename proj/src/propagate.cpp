#include "stocon/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "stocon/csv.hpp"
#include "stocon/spectral.hpp"

namespace stocon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string run_tag(const char* what, double when, const NoisePath& path) {
  return std::string(what) + " at t=" + std::to_string(when) + " (seed=" + std::to_string(path.seed()) +
         ", path_index=" + std::to_string(path.path_index()) + ")";
}

/// Unit direction + log magnitude representation of dz.
struct LogVec {
  Vec u;
  double log_norm;

  static LogVec from(const Vec& dz) {
    const double n = norm(dz);
    if (n == 0.0) return {Vec(dz.size(), 0.0), kNegInf};
    Vec u = dz;
    for (double& v : u) v /= n;
    return {std::move(u), std::log(n)};
  }

  /// Replace u by w, accumulating log ||w||; w should be O(1) in norm.
  void renormalize(Vec w, const char* what, double when, const NoisePath& path) {
    const double n = norm(w);
    if (!std::isfinite(n)) throw NonFiniteError(run_tag(what, when, path));
    if (n == 0.0 || log_norm == kNegInf) {
      log_norm = kNegInf;
      std::fill(w.begin(), w.end(), 0.0);
    } else {
      log_norm += std::log(n);
      for (double& v : w) v /= n;
    }
    u = std::move(w);
  }
};

Mat discrete_jacobian(const DiscreteSystem& sys, const Vec& x, long step, const Vec& xi) {
  if (sys.has_jacobian()) return sys.jacobian(x, step, xi);
  return jacobian_fd([&](const Vec& y) { return sys.map(y, step, xi); }, x, fd_default_eps(x));
}

Mat continuous_jacobian(const ContinuousSystem& sys, const Vec& x, double t, const Vec& xi) {
  if (sys.has_jacobian()) return sys.jacobian(x, t, xi);
  return jacobian_fd([&](const Vec& y) { return sys.field(y, t, xi); }, x, fd_default_eps(x));
}

bool save_index(size_t idx, size_t last, int stride) {
  return idx == last || idx % static_cast<size_t>(stride) == 0;
}

void check_dims(int sys_dim, const Vec& x0, const char* what) {
  if (static_cast<int>(x0.size()) != sys_dim)
    throw std::invalid_argument(std::string(what) + ": initial state dimension mismatch");
}

}  // namespace

std::vector<double> Trajectory::dz_norms() const {
  std::vector<double> out(dz_log_norms.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(dz_log_norms[i]);
  return out;
}

Vec step_discrete(const DiscreteSystem& sys, const Vec& x, long step, const NoisePath& path) {
  const Vec xi = path.at_step(step);
  Vec next = sys.map(x, step, xi);
  if (static_cast<int>(next.size()) != sys.dim)
    throw std::invalid_argument("step_discrete: map output dimension mismatch");
  if (!is_finite(next))
    throw NonFiniteError(run_tag("step_discrete: non-finite state", static_cast<double>(step), path));
  return next;
}

Trajectory propagate_discrete(const DiscreteSystem& sys, const Vec& x0, long steps, const NoisePath& path,
                              int save_stride) {
  check_dims(sys.dim, x0, "propagate_discrete");
  if (steps < 0 || save_stride < 1) throw std::invalid_argument("propagate_discrete: bad steps/stride");
  Trajectory traj;
  traj.seed = path.seed();
  traj.path_index = path.path_index();
  Vec x = x0;
  for (long i = 0; i <= steps; ++i) {
    if (save_index(static_cast<size_t>(i), static_cast<size_t>(steps), save_stride)) {
      traj.times.push_back(static_cast<double>(i));
      traj.states.push_back(x);
    }
    if (i < steps) x = step_discrete(sys, x, i, path);
  }
  return traj;
}

Trajectory propagate_variational_discrete(const DiscreteSystem& sys, const Metric& metric,
                                          const VariationalState& init, long steps, const NoisePath& path,
                                          const VariationalOptions& opts) {
  check_dims(sys.dim, init.x.entries(), "propagate_variational_discrete");
  if (metric.dim != sys.dim) throw std::invalid_argument("propagate_variational_discrete: metric dimension");
  if (steps < 0 || opts.save_stride < 1)
    throw std::invalid_argument("propagate_variational_discrete: bad steps/stride");
  if (opts.track_sigma && opts.save_stride != 1)
    throw std::invalid_argument("propagate_variational_discrete: sigma tracking needs save_stride 1");

  Trajectory traj;
  traj.seed = path.seed();
  traj.path_index = path.path_index();
  Vec x = init.x.entries();
  LogVec dz = LogVec::from(init.dz);

  for (long i = 0; i <= steps; ++i) {
    if (save_index(static_cast<size_t>(i), static_cast<size_t>(steps), opts.save_stride)) {
      traj.times.push_back(static_cast<double>(i));
      traj.states.push_back(x);
      traj.dz_log_norms.push_back(dz.log_norm);
    }
    if (i == steps) break;

    const Vec xi = path.at_step(i);
    const Mat jac = discrete_jacobian(sys, x, i, xi);
    Mat f;
    if (metric.identity) {
      f = jac;
    } else {
      const Mat theta_i = metric.theta(static_cast<double>(i));
      const Mat theta_next = metric.theta(static_cast<double>(i + 1));
      f = generalized_jacobian_discrete(jac, theta_i, theta_next).f;
    }
    if (opts.track_sigma) {
      const double sigma = largest_singular_value(f);
      traj.step_log_sigmas.push_back(sigma == 0.0 ? kNegInf : std::log(sigma));
    }
    dz.renormalize(f * dz.u, "variational step: non-finite dz", static_cast<double>(i), path);

    Vec next = sys.map(x, i, xi);
    if (static_cast<int>(next.size()) != sys.dim)
      throw std::invalid_argument("propagate_variational_discrete: map output dimension mismatch");
    if (!is_finite(next))
      throw NonFiniteError(run_tag("discrete step: non-finite state", static_cast<double>(i), path));
    x = std::move(next);
  }
  return traj;
}

std::vector<double> build_step_grid(double horizon, double base_step,
                                    const std::vector<double>& interior_boundaries) {
  if (!(horizon > 0.0) || !(base_step > 0.0))
    throw std::invalid_argument("build_step_grid: horizon and step must be positive");
  std::vector<double> anchors;
  anchors.push_back(0.0);
  for (double b : interior_boundaries) {
    if (b <= 0.0 || b >= horizon) continue;
    anchors.push_back(b);
  }
  anchors.push_back(horizon);
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());

  std::vector<double> grid;
  grid.push_back(0.0);
  for (size_t s = 0; s + 1 < anchors.size(); ++s) {
    const double a = anchors[s], b = anchors[s + 1];
    const long m = std::max<long>(1, static_cast<long>(std::ceil((b - a) / base_step - 1e-9)));
    for (long k = 1; k < m; ++k) grid.push_back(a + (b - a) * static_cast<double>(k) / static_cast<double>(m));
    grid.push_back(b);  // anchor hit exactly
  }
  return grid;
}

double default_continuous_step(double cell_delta) {
  if (!(cell_delta > 0.0)) throw std::invalid_argument("default_continuous_step: delta must be positive");
  return std::min(cell_delta / 50.0, 1e-2);
}

namespace {

/// Shared RK4 driver; tracks dz when `variational` is set.
Trajectory integrate_impl(const ContinuousSystem& sys, const Metric* metric, const Vec& x0, const Vec& dz0,
                          bool variational, double horizon, double base_step, const NoisePath& path,
                          int save_stride) {
  check_dims(sys.dim, x0, "integrate_continuous");
  if (save_stride < 1) throw std::invalid_argument("integrate_continuous: bad save stride");
  if (!path.is_continuous())
    throw std::invalid_argument("integrate_continuous: discrete noise path given to an ODE integrator");
  const bool identity_metric = metric == nullptr || metric->identity;
  if (variational && !identity_metric && !metric->has_theta_dot())
    throw std::invalid_argument("integrate_continuous: metric needs theta_dot for continuous analysis");

  const std::vector<double> grid = build_step_grid(horizon, base_step, path.jump_times_in(horizon));

  Trajectory traj;
  traj.seed = path.seed();
  traj.path_index = path.path_index();

  Vec x = x0;
  LogVec dz = variational ? LogVec::from(dz0) : LogVec{Vec{}, 0.0};

  auto gen_jac = [&](const Vec& xs, double ts, const Vec& xi) -> Mat {
    const Mat jac = continuous_jacobian(sys, xs, ts, xi);
    if (identity_metric) return jac;
    return generalized_jacobian_continuous(jac, metric->theta(ts), metric->theta_dot(ts)).f;
  };

  const size_t last = grid.size() - 1;
  for (size_t j = 0; j <= last; ++j) {
    if (save_index(j, last, save_stride)) {
      traj.times.push_back(grid[j]);
      traj.states.push_back(x);
      if (variational) traj.dz_log_norms.push_back(dz.log_norm);
    }
    if (j == last) break;

    const double t0 = grid[j];
    const double h = grid[j + 1] - t0;
    const Vec xi = path.at_time(t0);  // constant across the step by construction
    const double tm = t0 + 0.5 * h;
    const double t1 = grid[j + 1];

    const Vec k1 = sys.field(x, t0, xi);
    const Vec x2 = add_scaled(x, 0.5 * h, k1);
    const Vec k2 = sys.field(x2, tm, xi);
    const Vec x3 = add_scaled(x, 0.5 * h, k2);
    const Vec k3 = sys.field(x3, tm, xi);
    const Vec x4 = add_scaled(x, h, k3);
    const Vec k4 = sys.field(x4, t1, xi);

    if (variational) {
      const Vec z1 = gen_jac(x, t0, xi) * dz.u;
      const Vec z2 = gen_jac(x2, tm, xi) * add_scaled(dz.u, 0.5 * h, z1);
      const Vec z3 = gen_jac(x3, tm, xi) * add_scaled(dz.u, 0.5 * h, z2);
      const Vec z4 = gen_jac(x4, t1, xi) * add_scaled(dz.u, h, z3);
      Vec w = dz.u;
      for (size_t c = 0; c < w.size(); ++c)
        w[c] += h / 6.0 * (z1[c] + 2.0 * z2[c] + 2.0 * z3[c] + z4[c]);
      dz.renormalize(std::move(w), "integrate_continuous: non-finite dz", t0, path);
    }

    for (size_t c = 0; c < x.size(); ++c)
      x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    if (!is_finite(x)) throw NonFiniteError(run_tag("integrate_continuous: non-finite state", t1, path));
  }
  return traj;
}

}  // namespace

Trajectory integrate_continuous(const ContinuousSystem& sys, const Metric& metric,
                                const VariationalState& init, double horizon, double base_step,
                                const NoisePath& path, int save_stride) {
  if (metric.dim != sys.dim) throw std::invalid_argument("integrate_continuous: metric dimension");
  return integrate_impl(sys, &metric, init.x.entries(), init.dz, true, horizon, base_step, path,
                        save_stride);
}

Trajectory integrate_continuous(const ContinuousSystem& sys, const Vec& x0, double horizon,
                                double base_step, const NoisePath& path, int save_stride) {
  return integrate_impl(sys, nullptr, x0, Vec{}, false, horizon, base_step, path, save_stride);
}

PairTrajectories propagate_pair_discrete(const DiscreteSystem& sys, const Vec& x0a, const Vec& x0b,
                                         long steps, const NoisePath& path_a, const NoisePath& path_b,
                                         int save_stride) {
  check_dims(sys.dim, x0a, "propagate_pair_discrete");
  check_dims(sys.dim, x0b, "propagate_pair_discrete");
  if (steps < 0 || save_stride < 1) throw std::invalid_argument("propagate_pair_discrete: bad steps/stride");
  PairTrajectories out;
  out.first.seed = path_a.seed();
  out.first.path_index = path_a.path_index();
  out.second.seed = path_b.seed();
  out.second.path_index = path_b.path_index();
  Vec xa = x0a, xb = x0b;
  for (long i = 0; i <= steps; ++i) {
    if (save_index(static_cast<size_t>(i), static_cast<size_t>(steps), save_stride)) {
      out.first.times.push_back(static_cast<double>(i));
      out.second.times.push_back(static_cast<double>(i));
      out.first.states.push_back(xa);
      out.second.states.push_back(xb);
      out.separation.push_back(norm(xa - xb));
    }
    if (i == steps) break;
    xa = step_discrete(sys, xa, i, path_a);
    xb = step_discrete(sys, xb, i, path_b);
  }
  return out;
}

PairTrajectories propagate_pair_continuous(const ContinuousSystem& sys, const Vec& x0a, const Vec& x0b,
                                           double horizon, double base_step, const NoisePath& path_a,
                                           const NoisePath& path_b, int save_stride) {
  check_dims(sys.dim, x0a, "propagate_pair_continuous");
  check_dims(sys.dim, x0b, "propagate_pair_continuous");
  if (save_stride < 1) throw std::invalid_argument("propagate_pair_continuous: bad save stride");
  if (!path_a.is_continuous() || !path_b.is_continuous())
    throw std::invalid_argument("propagate_pair_continuous: continuous noise paths required");

  // Shared grid aligned to the jumps of both paths.
  std::vector<double> bounds = path_a.jump_times_in(horizon);
  const std::vector<double> bb = path_b.jump_times_in(horizon);
  bounds.insert(bounds.end(), bb.begin(), bb.end());
  const std::vector<double> grid = build_step_grid(horizon, base_step, bounds);

  PairTrajectories out;
  out.first.seed = path_a.seed();
  out.first.path_index = path_a.path_index();
  out.second.seed = path_b.seed();
  out.second.path_index = path_b.path_index();

  Vec xa = x0a, xb = x0b;
  const size_t last = grid.size() - 1;
  auto rk4 = [&](Vec& x, const NoisePath& path, double t0, double h) {
    const Vec xi = path.at_time(t0);
    const double tm = t0 + 0.5 * h, t1 = t0 + h;
    const Vec k1 = sys.field(x, t0, xi);
    const Vec k2 = sys.field(add_scaled(x, 0.5 * h, k1), tm, xi);
    const Vec k3 = sys.field(add_scaled(x, 0.5 * h, k2), tm, xi);
    const Vec k4 = sys.field(add_scaled(x, h, k3), t1, xi);
    for (size_t c = 0; c < x.size(); ++c) x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    if (!is_finite(x)) throw NonFiniteError(run_tag("propagate_pair: non-finite state", t1, path));
  };

  for (size_t j = 0; j <= last; ++j) {
    if (save_index(j, last, save_stride)) {
      out.first.times.push_back(grid[j]);
      out.second.times.push_back(grid[j]);
      out.first.states.push_back(xa);
      out.second.states.push_back(xb);
      out.separation.push_back(norm(xa - xb));
    }
    if (j == last) break;
    const double h = grid[j + 1] - grid[j];
    rk4(xa, path_a, grid[j], h);
    rk4(xb, path_b, grid[j], h);
  }
  return out;
}

EnvelopeSequence envelope_sequence(const std::vector<double>& cell_integrals, double z0) {
  if (!(z0 >= 0.0) || !std::isfinite(z0))
    throw std::invalid_argument("envelope_sequence: z0 must be finite and >= 0");
  if (!is_finite(cell_integrals)) throw std::invalid_argument("envelope_sequence: integrals must be finite");
  EnvelopeSequence env;
  env.cell_integrals = cell_integrals;
  env.z.reserve(cell_integrals.size() + 1);
  env.log_z.reserve(cell_integrals.size() + 1);
  env.z.push_back(z0);
  env.log_z.push_back(std::log(z0));  // log(0) = -inf by analytic extension
  for (double integral : cell_integrals) {
    env.z.push_back(std::exp(integral) * env.z.back());
    env.log_z.push_back(env.log_z.back() + integral);
  }
  return env;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int dim = traj.states.empty() ? 0 : static_cast<int>(traj.states.front().size());
  out << "t";
  for (int c = 1; c <= dim; ++c) out << ",x" << c;
  out << ",dz_norm\n";
  const std::vector<double> dz = traj.dz_norms();
  for (size_t i = 0; i < traj.times.size(); ++i) {
    out << fmt_double(traj.times[i]);
    for (int c = 0; c < dim; ++c) out << ',' << fmt_double(traj.states[i][static_cast<size_t>(c)]);
    out << ',' << (dz.empty() ? "nan" : fmt_double(dz[i])) << '\n';
  }
}

}  // namespace stocon
