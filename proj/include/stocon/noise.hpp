#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stocon/linalg.hpp"
#include "stocon/rng.hpp"

namespace stocon {

/// Scalar law with closed-form moments exposed for oracle tests.
class Distribution {
 public:
  enum class Kind { Uniform, TwoPoint, ClippedGaussian };

  /// Uniform on [lo, hi]; sampling lands strictly inside the open interval
  /// unless lo == hi, which gives the constant lo.
  static Distribution uniform(double lo, double hi);
  /// v1 with probability p, v2 with probability 1-p.
  static Distribution two_point(double v1, double v2, double p = 0.5);
  /// Normal(mean, stdev) clamped to [mean - clip, mean + clip].
  static Distribution clipped_gaussian(double mean, double stdev, double clip);

  Kind kind() const { return kind_; }
  double mean() const;
  double second_moment() const;
  double variance() const;
  /// Largest |value| the law can produce.
  double support_bound() const;
  /// E log|X|; may be -inf (mass at zero); nullopt where no closed form exists.
  std::optional<double> mean_log_abs() const;
  /// E |X|; nullopt where no closed form exists (clipped gaussian off zero mean).
  std::optional<double> mean_abs() const;

  double draw(RngStream& rng) const;
  std::string describe() const;

  double param(int i) const { return p_[i]; }

 private:
  Distribution(Kind kind, double a, double b, double c) : kind_(kind), p_{a, b, c} {}
  Kind kind_;
  double p_[3];
};

/// Partition of [0, inf) into cells [t_n, t_{n+1}); t_0 = 0 implied. Explicit
/// boundary lists continue past the last boundary with the final cell length.
class Partition {
 public:
  static Partition uniform_cells(double delta);
  static Partition from_boundaries(std::vector<double> boundaries);

  /// Cell containing t (t >= 0); boundaries belong to the right cell.
  long cell_index(double t) const;
  double cell_start(long n) const;
  double cell_end(long n) const { return cell_start(n + 1); }
  double cell_length(long n) const { return cell_end(n) - cell_start(n); }
  /// Boundaries strictly inside (0, horizon), in increasing order.
  std::vector<double> boundaries_in(double horizon) const;

  bool is_uniform() const { return boundaries_.empty(); }
  double delta() const { return delta_; }

 private:
  Partition() = default;
  double delta_ = 0.0;                // uniform cell length when boundaries_ empty
  std::vector<double> boundaries_;    // explicit t_1 < t_2 < ...
};

/// One sample path xi(omega): a deterministic function of (seed, path-index).
/// Continuous kinds are piecewise constant on partition cells, evaluated
/// right-continuously, so they are cadlag by construction and their cell
/// integrals are exact. Components are independent and may carry distinct laws.
class NoisePath {
 public:
  enum class Kind { DiscreteIid, CoarseGrain, BoundedZeroMean, Constant };

  static NoisePath iid_sequence(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                                int components = 1);
  static NoisePath coarse_grain(const Partition& part, const Distribution& dist, std::uint64_t seed,
                                std::uint64_t path_index, int components = 1);
  static NoisePath coarse_grain(const Partition& part, std::vector<Distribution> component_dists,
                                std::uint64_t seed, std::uint64_t path_index);
  /// Piecewise-constant path on a uniform grid of spacing dt; requires a
  /// zero-mean law with finite support bound.
  static NoisePath bounded_zero_mean(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                                     double sample_dt, int components = 1);
  static NoisePath constant(Vec value);

  Kind kind() const { return kind_; }
  int components() const { return components_; }
  bool is_continuous() const { return kind_ != Kind::DiscreteIid; }

  /// Discrete sequences: value at step i >= 0.
  Vec at_step(long i) const;
  /// Continuous paths: value at time t >= 0.
  Vec at_time(double t) const;
  /// Piecewise-constant kinds: the constant value on cell n.
  Vec cell_value(long n) const;
  /// |P_n| * G_n, exact; scalar piecewise-constant paths only.
  double integral_over_cell(long n) const;

  /// Cell boundaries of the path inside (0, horizon); empty for constant paths.
  std::vector<double> jump_times_in(double horizon) const;
  const Partition* partition() const { return has_partition_ ? &part_ : nullptr; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }
  const std::vector<Distribution>& component_dists() const { return dists_; }
  /// Hard bound on |value| per component (support bound of the law).
  double support_bound() const;

 private:
  NoisePath() = default;
  Vec draw_cell(long cell) const;

  Kind kind_ = Kind::Constant;
  int components_ = 1;
  std::uint64_t seed_ = 0;
  std::uint64_t path_index_ = 0;
  std::vector<Distribution> dists_;
  Partition part_ = Partition::uniform_cells(1.0);
  bool has_partition_ = false;
  Vec constant_value_;
};

/// Free-function spellings of the path constructors.
NoisePath iid_sequence(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                       int components = 1);
NoisePath coarse_grain_process(const Partition& part, const Distribution& dist, std::uint64_t seed,
                               std::uint64_t path_index, int components = 1);
NoisePath bounded_zero_mean(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                            double sample_dt, int components = 1);
double integral_over_cell(const NoisePath& path, long cell);

}  // namespace stocon
