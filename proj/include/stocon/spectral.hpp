#pragma once

#include <functional>

#include "stocon/linalg.hpp"

namespace stocon {

/// Jacobian conjugated into metric coordinates, discrete step:
/// F_i = Theta_{i+1} * J * Theta_i^{-1}.
struct GeneralizedJacobianDiscrete {
  Mat f;
};

/// Continuous-time counterpart: F = (Theta_dot + Theta * J) * Theta^{-1}.
struct GeneralizedJacobianContinuous {
  Mat f;
};

/// Default central-difference perturbation scale for a state x.
double fd_default_eps(const Vec& x);

/// Central-difference Jacobian of g at x, column k = (g(x+eps e_k) - g(x-eps e_k)) / (2 eps).
/// Throws NonFiniteError if g is non-finite at any probe point.
Mat jacobian_fd(const std::function<Vec(const Vec&)>& g, const Vec& x, double eps);

GeneralizedJacobianDiscrete generalized_jacobian_discrete(const Mat& jac, const Mat& theta_i,
                                                          const Mat& theta_next);
GeneralizedJacobianContinuous generalized_jacobian_continuous(const Mat& jac, const Mat& theta,
                                                              const Mat& theta_dot);

/// Largest singular value: sqrt of the top eigenvalue of F^T F. Closed form
/// for n <= 2, power iteration (relative tolerance 1e-12) beyond that.
double largest_singular_value(const Mat& f);

/// Largest eigenvalue of the symmetric part (F + F^T)/2. Closed form for
/// n <= 2, shifted power iteration beyond that.
double lambda_max_symmetric(const Mat& f);

/// Smallest eigenvalue of the symmetric part; -lambda_max_symmetric(-F).
double lambda_min_symmetric(const Mat& f);

}  // namespace stocon
