#include "stocon/scenarios.hpp"

#include <cmath>
#include <sstream>

#include "stocon/rng.hpp"
#include "stocon/spectral.hpp"

namespace stocon {

DiscreteSystem linear_random_gain(const Distribution& gain) {
  (void)gain;  // the law lives in the noise path; the map only consumes values
  DiscreteSystem sys;
  sys.dim = 1;
  sys.noise_dim = 1;
  sys.map = [](const Vec& x, long, const Vec& xi) { return Vec{xi[0] * x[0]}; };
  sys.jacobian = [](const Vec&, long, const Vec& xi) {
    Mat j(1, 1);
    j(0, 0) = xi[0];
    return j;
  };
  return sys;
}

ContinuousSystem linear_random_rate() {
  ContinuousSystem sys;
  sys.dim = 1;
  sys.noise_dim = 1;
  sys.field = [](const Vec& x, double, const Vec& xi) { return Vec{xi[0] * x[0]}; };
  sys.jacobian = [](const Vec&, double, const Vec& xi) {
    Mat j(1, 1);
    j(0, 0) = xi[0];
    return j;
  };
  return sys;
}

Objective quadratic_objective(Mat hessian) {
  if (!hessian.square() || hessian.rows() == 0)
    throw std::invalid_argument("quadratic_objective: square Hessian required");
  const int n = hessian.rows();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (hessian(i, j) != hessian(j, i))
        throw std::invalid_argument("quadratic_objective: Hessian must be symmetric");
  Objective obj;
  obj.dim = n;
  obj.value = [hessian](const Vec& p) { return 0.5 * dot(p, hessian * p); };
  obj.gradient = [hessian](const Vec& p) { return hessian * p; };
  obj.hessian = [hessian](const Vec&) { return hessian; };
  return obj;
}

StochasticGradientScenario stochastic_gradient(const Objective& objective, double mu,
                                               const Distribution& pi_dist,
                                               const std::vector<Vec>& hessian_probes,
                                               std::uint64_t validation_seed) {
  if (!(mu > 0.0)) throw std::invalid_argument("stochastic_gradient: mu must be positive");
  if (!objective.value || !objective.hessian)
    throw std::invalid_argument("stochastic_gradient: objective needs value and hessian");
  if (std::abs(pi_dist.mean()) > 1e-12 * std::max(1.0, pi_dist.support_bound()))
    throw std::invalid_argument("stochastic_gradient: perturbation must have zero mean");
  const int n = objective.dim;
  const double sigma_sq = pi_dist.second_moment();

  StochasticGradientScenario scenario;
  scenario.sigma_sq = sigma_sq;

  DiscreteSystem sys;
  sys.dim = n;
  sys.noise_dim = n;
  const auto value = objective.value;
  sys.map = [value, mu](const Vec& p, long, const Vec& pi) {
    const double rise = value(p + pi) - value(p);
    Vec next = p;
    for (size_t k = 0; k < next.size(); ++k) next[k] -= mu * rise * pi[k];
    return next;
  };
  if (objective.gradient) {
    const auto gradient = objective.gradient;
    sys.jacobian = [gradient, mu, n](const Vec& p, long, const Vec& pi) {
      const Vec dg = gradient(p + pi) - gradient(p);
      Mat j = Mat::identity(n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) j(r, c) -= mu * pi[static_cast<size_t>(r)] * dg[static_cast<size_t>(c)];
      return j;
    };
  }
  scenario.system = std::move(sys);

  // Condition report: Hessian definiteness and spectral radius of
  // I - mu sigma^2 H over the probe set.
  std::vector<Vec> probes = hessian_probes;
  if (probes.empty()) probes.push_back(Vec(static_cast<size_t>(n), 0.0));
  SgConditionReport report;
  report.mu_sigma_sq = mu * sigma_sq;
  report.hessian_positive_definite = true;
  report.step_size_ok = true;
  double lambda_lo = std::numeric_limits<double>::infinity();
  double lambda_hi = -std::numeric_limits<double>::infinity();
  double factor = 0.0;
  for (const Vec& p : probes) {
    const Mat h = objective.hessian(p);
    const double lo = lambda_min_symmetric(h);
    const double hi = lambda_max_symmetric(h);
    lambda_lo = std::min(lambda_lo, lo);
    lambda_hi = std::max(lambda_hi, hi);
    if (!(lo > 0.0)) report.hessian_positive_definite = false;
    if (!(report.mu_sigma_sq * hi < 1.0)) report.step_size_ok = false;
    factor = std::max({factor, std::abs(1.0 - report.mu_sigma_sq * lo),
                       std::abs(1.0 - report.mu_sigma_sq * hi)});
  }
  report.lambda_min_h = lambda_lo;
  report.lambda_max_h = lambda_hi;
  report.contraction_factor = factor;

  // Empirical check that the perturbation components are uncorrelated with
  // common autocorrelation sigma^2.
  if (n >= 1) {
    const int draws = 10'000;
    const NoisePath pi_path = NoisePath::iid_sequence(pi_dist, validation_seed, 0x5147u, n);
    std::vector<double> sum(static_cast<size_t>(n), 0.0);
    Mat cross(n, n);
    for (int d = 0; d < draws; ++d) {
      const Vec pi = pi_path.at_step(d);
      for (int r = 0; r < n; ++r) {
        sum[static_cast<size_t>(r)] += pi[static_cast<size_t>(r)];
        for (int c = 0; c < n; ++c) cross(r, c) += pi[static_cast<size_t>(r)] * pi[static_cast<size_t>(c)];
      }
    }
    double worst = 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const double cov = cross(r, c) / draws - (sum[static_cast<size_t>(r)] / draws) *
                                                     (sum[static_cast<size_t>(c)] / draws);
        if (r != c) worst = std::max(worst, std::abs(cov) / std::max(1e-30, sigma_sq));
      }
    report.max_offdiag_corr = worst;
    report.components_uncorrelated = worst < 0.05;
  }

  scenario.report = report;
  return scenario;
}

ContinuousSystem vdp_coupled(double alpha, double omega) {
  if (!(alpha > 0.0) || !(omega > 0.0))
    throw std::invalid_argument("vdp_coupled: alpha and w must be positive");
  ContinuousSystem sys;
  sys.dim = 4;
  sys.noise_dim = 2;
  const double w2 = omega * omega;
  sys.field = [alpha, w2](const Vec& s, double, const Vec& eps) {
    const double x1 = s[0], v1 = s[1], x2 = s[2], v2 = s[3];
    return Vec{v1, -alpha * (x1 * x1 - 1.0) * v1 - w2 * x1 + alpha * eps[0] * (v2 - v1),  //
               v2, -alpha * (x2 * x2 - 1.0) * v2 - w2 * x2 + alpha * eps[1] * (v1 - v2)};
  };
  sys.jacobian = [alpha, w2](const Vec& s, double, const Vec& eps) {
    const double x1 = s[0], v1 = s[1], x2 = s[2], v2 = s[3];
    Mat j(4, 4);
    j(0, 1) = 1.0;
    j(1, 0) = -2.0 * alpha * x1 * v1 - w2;
    j(1, 1) = -alpha * (x1 * x1 - 1.0) - alpha * eps[0];
    j(1, 3) = alpha * eps[0];
    j(2, 3) = 1.0;
    j(3, 2) = -2.0 * alpha * x2 * v2 - w2;
    j(3, 3) = -alpha * (x2 * x2 - 1.0) - alpha * eps[1];
    j(3, 1) = alpha * eps[1];
    return j;
  };
  return sys;
}

bool vdp_sync_predicted(double eps1_mean, double eps2_mean) { return eps1_mean + eps2_mean > 1.0; }

double vdp_separation(const Vec& state) {
  if (state.size() != 4) throw std::invalid_argument("vdp_separation: state must have dimension 4");
  const double dx = state[0] - state[2];
  const double dv = state[1] - state[3];
  return std::sqrt(dx * dx + dv * dv);
}

NoisePath AdditiveNoiseSystem::make_path(std::uint64_t seed, std::uint64_t path_index) const {
  return NoisePath::bounded_zero_mean(xi, seed, path_index, cell_dt, dim);
}

AdditiveNoiseSystem additive_noise_system(const DeterministicField& field, const Distribution& xi,
                                          double cell_dt, std::optional<double> lambda_certificate,
                                          const StateBox& probe_box, int probe_count,
                                          double probe_horizon) {
  if (field.dim < 1 || !field.f) throw std::invalid_argument("additive_noise_system: bad field");
  if (!(cell_dt > 0.0)) throw std::invalid_argument("additive_noise_system: cell_dt must be positive");
  const int n = field.dim;

  double lambda_max;
  if (lambda_certificate) {
    lambda_max = *lambda_certificate;
  } else {
    if (static_cast<int>(probe_box.lo.size()) != n || static_cast<int>(probe_box.hi.size()) != n)
      throw std::invalid_argument("additive_noise_system: probe box must match the field dimension");
    lambda_max = -std::numeric_limits<double>::infinity();
    RngStream rng = noise_stream(0x90b5a7u, 0, 0);
    for (int k = 0; k < probe_count; ++k) {
      Vec x(static_cast<size_t>(n));
      for (int c = 0; c < n; ++c)
        x[static_cast<size_t>(c)] =
            probe_box.lo[static_cast<size_t>(c)] +
            rng.next_unit() * (probe_box.hi[static_cast<size_t>(c)] - probe_box.lo[static_cast<size_t>(c)]);
      const double t = rng.next_unit() * probe_horizon;
      Mat jac = field.jacobian
                    ? field.jacobian(x, t)
                    : jacobian_fd([&](const Vec& y) { return field.f(y, t); }, x, fd_default_eps(x));
      const double lam = lambda_max_symmetric(jac);
      if (lam > lambda_max) lambda_max = lam;
      if (!(lam < 0.0)) {
        std::ostringstream msg;
        msg << "additive_noise_system: field not contracting at probe (t=" << t << ", x=[";
        for (int c = 0; c < n; ++c) msg << (c ? ", " : "") << x[static_cast<size_t>(c)];
        msg << "]): lambda_f = " << lam;
        throw std::invalid_argument(msg.str());
      }
    }
  }
  if (!(lambda_max < 0.0))
    throw std::invalid_argument("additive_noise_system: lambda certificate must be negative");

  const auto mean_abs = xi.mean_abs();
  if (std::abs(xi.mean()) > 1e-12 * std::max(1.0, xi.support_bound()))
    throw std::invalid_argument("additive_noise_system: noise must have zero mean");

  AdditiveNoiseSystem out{.noisy = {}, .deterministic = {}, .xi = xi, .cell_dt = cell_dt,
                          .sigma = 0.0, .lambda_max = lambda_max, .dim = n};
  out.sigma = n == 1 && mean_abs ? *mean_abs : std::sqrt(n * xi.second_moment());

  const auto f = field.f;
  out.deterministic.dim = n;
  out.deterministic.noise_dim = 1;
  out.deterministic.field = [f](const Vec& x, double t, const Vec&) { return f(x, t); };
  out.noisy.dim = n;
  out.noisy.noise_dim = n;
  out.noisy.field = [f](const Vec& x, double t, const Vec& noise) { return f(x, t) + noise; };
  if (field.jacobian) {
    const auto jac = field.jacobian;
    out.deterministic.jacobian = [jac](const Vec& x, double t, const Vec&) { return jac(x, t); };
    out.noisy.jacobian = [jac](const Vec& x, double t, const Vec&) { return jac(x, t); };
  }
  return out;
}

}  // namespace stocon
