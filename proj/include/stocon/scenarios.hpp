#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "stocon/core.hpp"
#include "stocon/noise.hpp"

namespace stocon {

/// Scalar testbed for the discrete theorems: x_{i+1} = a_i x_i with a_i iid.
/// In the identity metric sigma_{f_i} = |a_i|, so the gain plays the bound
/// process directly.
DiscreteSystem linear_random_gain(const Distribution& gain);

/// Scalar testbed for the continuous theorems: dx/dt = gamma_t x, with
/// gamma_t supplied by a (coarse-grain) noise path; lambda_f = gamma_t.
ContinuousSystem linear_random_rate();

/// Objective with optional derivatives; quadratic_objective fills all three.
struct Objective {
  int dim = 0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;   // optional
  std::function<Mat(const Vec&)> hessian;    // required for the condition report
};

Objective quadratic_objective(Mat hessian);

struct SgConditionReport {
  bool hessian_positive_definite = false;
  /// The conservative small-step condition mu*sigma^2*lambda_max(H) < 1.
  bool step_size_ok = false;
  bool components_uncorrelated = false;
  double mu_sigma_sq = 0.0;
  double lambda_min_h = 0.0;
  double lambda_max_h = 0.0;
  /// Spectral radius of I - mu*sigma^2*H over the probes: max_k |1 - mu sigma^2 lambda_k|.
  double contraction_factor = 0.0;
  double max_offdiag_corr = 0.0;
  bool diverges() const { return contraction_factor >= 1.0; }
  /// The mean recursion E(dP_{n+1}) = (I - mu sigma^2 H) E(dP_n) contracts
  /// exactly when the spectral radius stays below one.
  bool ok() const { return hessian_positive_definite && components_uncorrelated && !diverges(); }
};

struct StochasticGradientScenario {
  DiscreteSystem system;  // noise value is the perturbation vector Pi_n
  SgConditionReport report;
  double sigma_sq = 0.0;
};

/// Gradient-free descent P_{n+1} = P_n - mu (E(P+Pi) - E(P)) Pi with Pi a
/// zero-mean perturbation whose components are mutually uncorrelated with
/// common second moment sigma^2. The report mirrors the mean-square
/// contraction condition on I - mu sigma^2 Hessian.
StochasticGradientScenario stochastic_gradient(const Objective& objective, double mu,
                                               const Distribution& pi_dist,
                                               const std::vector<Vec>& hessian_probes = {},
                                               std::uint64_t validation_seed = 0);

/// Two coupled Van der Pol oscillators, state (x1, v1, x2, v2); the noise
/// value is (eps1, eps2) scaling the velocity-coupling terms.
ContinuousSystem vdp_coupled(double alpha, double omega);

/// The synchronization condition E(eps1) + E(eps2) > 1.
bool vdp_sync_predicted(double eps1_mean, double eps2_mean);

/// ||(x1, v1) - (x2, v2)|| for a coupled-oscillator state.
double vdp_separation(const Vec& state);

struct DeterministicField {
  int dim = 0;
  std::function<Vec(const Vec&, double)> f;
  std::function<Mat(const Vec&, double)> jacobian;  // optional
};

struct StateBox {
  Vec lo, hi;
};

/// dx/dt = f(x, t) + xi_t with bounded zero-mean noise added componentwise.
/// Carries the certificates the additive-noise analyses need.
struct AdditiveNoiseSystem {
  ContinuousSystem noisy;
  ContinuousSystem deterministic;  // same field with the noise dropped
  Distribution xi;
  double cell_dt = 0.0;
  double sigma = 0.0;       // E||xi_t|| (exact for dim 1, upper bound above)
  double lambda_max = 0.0;  // certified contraction rate of f, < 0
  int dim = 0;

  NoisePath make_path(std::uint64_t seed, std::uint64_t path_index) const;
};

/// Wraps a contracting deterministic field with additive noise. The rate
/// certificate is either supplied or probed over the state box; a
/// non-contracting probe rejects the construction and names the point.
AdditiveNoiseSystem additive_noise_system(const DeterministicField& field, const Distribution& xi,
                                          double cell_dt,
                                          std::optional<double> lambda_certificate = std::nullopt,
                                          const StateBox& probe_box = {}, int probe_count = 256,
                                          double probe_horizon = 10.0);

}  // namespace stocon
