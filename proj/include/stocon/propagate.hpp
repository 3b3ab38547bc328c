#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stocon/core.hpp"
#include "stocon/noise.hpp"

namespace stocon {

/// Sampled solution path. Virtual-displacement magnitudes are carried as
/// log norms so that long contracting runs do not underflow; dz_norms()
/// recovers the linear values (0 allowed, inf never stored).
struct Trajectory {
  std::vector<double> times;  // step indices for discrete runs
  std::vector<Vec> states;
  std::vector<double> dz_log_norms;     // log ||dz|| at saved points; may be -inf
  std::vector<double> step_log_sigmas;  // log sigma_{f_i} per transition (discrete, on request)
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  std::vector<double> dz_norms() const;
  bool has_variational() const { return !dz_log_norms.empty(); }
};

struct VariationalOptions {
  int save_stride = 1;
  /// Record log sigma_{f_i} per step (forces save_stride == 1).
  bool track_sigma = false;
};

/// One application of the system map; aborts with (step, seed, path-index)
/// diagnostics on a non-finite result.
Vec step_discrete(const DiscreteSystem& sys, const Vec& x, long step, const NoisePath& path);

Trajectory propagate_discrete(const DiscreteSystem& sys, const Vec& x0, long steps, const NoisePath& path,
                              int save_stride = 1);

/// Joint propagation of (x, dz): x by the system map, dz by the exact linear
/// recursion dz_{i+1} = F_i dz_i with F_i the generalized Jacobian at
/// (x_i, i, xi_i).
Trajectory propagate_variational_discrete(const DiscreteSystem& sys, const Metric& metric,
                                          const VariationalState& init, long steps, const NoisePath& path,
                                          const VariationalOptions& opts = {});

/// Fixed-step grid over [0, horizon] refined so that every interior boundary
/// is a grid point and no step exceeds base_step.
std::vector<double> build_step_grid(double horizon, double base_step,
                                    const std::vector<double>& interior_boundaries);

/// h = min(delta / 50, 1e-2): at least 50 RK4 steps per noise cell.
double default_continuous_step(double cell_delta);

/// Classical RK4 on the joint system (dx/dt = f, d dz/dt = F dz) with the
/// step grid aligned to the path's jump times; the noise value inside a step
/// is the (constant) cell value.
Trajectory integrate_continuous(const ContinuousSystem& sys, const Metric& metric,
                                const VariationalState& init, double horizon, double base_step,
                                const NoisePath& path, int save_stride = 1);

/// State-only integration (no variational tracking).
Trajectory integrate_continuous(const ContinuousSystem& sys, const Vec& x0, double horizon,
                                double base_step, const NoisePath& path, int save_stride = 1);

struct PairTrajectories {
  Trajectory first;
  Trajectory second;
  std::vector<double> separation;  // ||x_a - x_b|| at saved points
};

/// Two trajectories on shared grids; pass the same path twice for
/// common-noise pairs or two paths for independent driving.
PairTrajectories propagate_pair_discrete(const DiscreteSystem& sys, const Vec& x0a, const Vec& x0b,
                                         long steps, const NoisePath& path_a, const NoisePath& path_b,
                                         int save_stride = 1);
PairTrajectories propagate_pair_continuous(const ContinuousSystem& sys, const Vec& x0a, const Vec& x0b,
                                           double horizon, double base_step, const NoisePath& path_a,
                                           const NoisePath& path_b, int save_stride = 1);

/// Dominating recursion Z_{n+1} = exp(I_n) Z_n, Z_0 = ||dz_0||. Works for
/// either the eta-process cell integrals or lambda_f integrals (the discrete
/// envelope of a continuous run).
struct EnvelopeSequence {
  std::vector<double> z;       // exact recursion in linear scale
  std::vector<double> log_z;   // log Z_n; -inf when z0 == 0
  std::vector<double> cell_integrals;
};

EnvelopeSequence envelope_sequence(const std::vector<double>& cell_integrals, double z0);

/// CSV export: header `t,x1..xn,dz_norm`, one row per saved grid point.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace stocon
