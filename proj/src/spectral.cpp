#include "stocon/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stocon {

namespace {

constexpr long kMaxPowerIterations = 2'000'000;
constexpr double kRayleighTol = 1e-13;

/// Top eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration with Rayleigh-quotient convergence.
double psd_top_eigenvalue(const Mat& g) {
  const int n = g.rows();
  Vec v(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = 1.0 + 1e-3 * i;
  double nv = norm(v);
  for (double& x : v) x /= nv;

  double lambda = 0.0;
  int stall = 0;
  for (long it = 0; it < kMaxPowerIterations; ++it) {
    Vec w = g * v;
    const double nw = norm(w);
    if (nw == 0.0) return 0.0;
    for (double& x : w) x /= nw;
    const Vec gw = g * w;
    const double next = dot(w, gw);
    const double change = std::abs(next - lambda);
    v = std::move(w);
    if (change <= kRayleighTol * std::max(1.0, std::abs(next))) {
      if (++stall >= 2) return next;
    } else {
      stall = 0;
    }
    lambda = next;
  }
  return lambda;
}

double sym2_eig_max(double a, double b, double c) {
  const double mid = 0.5 * (a + c);
  const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  return mid + rad;
}

void require_square_finite(const Mat& f, const char* op) {
  if (!f.square() || f.rows() == 0) throw std::invalid_argument(std::string(op) + ": square matrix required");
  if (!is_finite(f)) throw NonFiniteError(std::string(op) + ": non-finite entries");
}

}  // namespace

double fd_default_eps(const Vec& x) { return 1e-6 * std::max(1.0, norm(x)); }

Mat jacobian_fd(const std::function<Vec(const Vec&)>& g, const Vec& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("jacobian_fd: eps must be positive");
  if (!is_finite(x)) throw NonFiniteError("jacobian_fd: non-finite state");
  const int n = static_cast<int>(x.size());
  Mat jac;
  Vec xp = x, xm = x;
  for (int k = 0; k < n; ++k) {
    xp[k] = x[k] + eps;
    xm[k] = x[k] - eps;
    const Vec fp = g(xp);
    const Vec fm = g(xm);
    xp[k] = x[k];
    xm[k] = x[k];
    if (!is_finite(fp) || !is_finite(fm))
      throw NonFiniteError("jacobian_fd: non-finite map value near probe column " + std::to_string(k));
    if (k == 0) jac = Mat(static_cast<int>(fp.size()), n);
    if (static_cast<int>(fp.size()) != jac.rows() || fp.size() != fm.size())
      throw std::invalid_argument("jacobian_fd: map output dimension changed across probes");
    for (int i = 0; i < jac.rows(); ++i) jac(i, k) = (fp[i] - fm[i]) / (2.0 * eps);
  }
  return jac;
}

GeneralizedJacobianDiscrete generalized_jacobian_discrete(const Mat& jac, const Mat& theta_i,
                                                          const Mat& theta_next) {
  require_square_finite(jac, "generalized_jacobian_discrete");
  return {theta_next * jac * inverse(theta_i)};
}

GeneralizedJacobianContinuous generalized_jacobian_continuous(const Mat& jac, const Mat& theta,
                                                              const Mat& theta_dot) {
  require_square_finite(jac, "generalized_jacobian_continuous");
  return {(theta_dot + theta * jac) * inverse(theta)};
}

double largest_singular_value(const Mat& f) {
  require_square_finite(f, "largest_singular_value");
  const int n = f.rows();
  const double scale = max_abs(f);
  if (scale == 0.0) return 0.0;
  const Mat fs = scaled(f, 1.0 / scale);
  if (n == 1) return scale * std::abs(fs(0, 0));
  const Mat g = transpose(fs) * fs;
  if (n == 2) return scale * std::sqrt(sym2_eig_max(g(0, 0), g(0, 1), g(1, 1)));
  return scale * std::sqrt(psd_top_eigenvalue(g));
}

double lambda_max_symmetric(const Mat& f) {
  require_square_finite(f, "lambda_max_symmetric");
  const int n = f.rows();
  if (n == 1) return f(0, 0);
  Mat s = scaled(f + transpose(f), 0.5);
  const double scale = max_abs(s);
  if (scale == 0.0) return 0.0;
  s = scaled(s, 1.0 / scale);
  if (n == 2) return scale * sym2_eig_max(s(0, 0), s(0, 1), s(1, 1));
  // Shift by a Gershgorin bound so the dominant eigenvalue of the shifted
  // matrix is the signed maximum, then undo the shift.
  const double shift = norm_inf(s) + 1.0;
  Mat shifted = s;
  for (int i = 0; i < n; ++i) shifted(i, i) += shift;
  return scale * (psd_top_eigenvalue(shifted) - shift);
}

double lambda_min_symmetric(const Mat& f) { return -lambda_max_symmetric(scaled(f, -1.0)); }

}  // namespace stocon
