#include "stocon/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace stocon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Antiderivative of log|x|, extended continuously through 0.
double xlogx_minus_x(double x) {
  if (x == 0.0) return 0.0;
  return x * std::log(std::abs(x)) - x;
}

}  // namespace

Distribution Distribution::uniform(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw std::invalid_argument("Distribution::uniform: requires finite lo <= hi");
  return Distribution(Kind::Uniform, lo, hi, 0.0);
}

Distribution Distribution::two_point(double v1, double v2, double p) {
  if (!std::isfinite(v1) || !std::isfinite(v2))
    throw std::invalid_argument("Distribution::two_point: values must be finite");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("Distribution::two_point: p must be in [0,1]");
  return Distribution(Kind::TwoPoint, v1, v2, p);
}

Distribution Distribution::clipped_gaussian(double mean, double stdev, double clip) {
  if (!std::isfinite(mean) || !std::isfinite(stdev) || stdev < 0.0)
    throw std::invalid_argument("Distribution::clipped_gaussian: bad mean/stdev");
  if (!(clip > 0.0) || !std::isfinite(clip))
    throw std::invalid_argument("Distribution::clipped_gaussian: clip bound must be positive");
  return Distribution(Kind::ClippedGaussian, mean, stdev, clip);
}

double Distribution::mean() const {
  switch (kind_) {
    case Kind::Uniform: return 0.5 * (p_[0] + p_[1]);
    case Kind::TwoPoint: return p_[2] * p_[0] + (1.0 - p_[2]) * p_[1];
    case Kind::ClippedGaussian: return p_[0];  // symmetric clamp keeps the mean
  }
  return 0.0;
}

double Distribution::second_moment() const {
  switch (kind_) {
    case Kind::Uniform: {
      const double a = p_[0], b = p_[1];
      return (a * a + a * b + b * b) / 3.0;
    }
    case Kind::TwoPoint:
      return p_[2] * p_[0] * p_[0] + (1.0 - p_[2]) * p_[1] * p_[1];
    case Kind::ClippedGaussian: {
      const double mu = p_[0], s = p_[1], c = p_[2];
      if (s == 0.0) return mu * mu;
      const double u = c / s;
      const double var =
          s * s * (2.0 * std_normal_cdf(u) - 1.0 - 2.0 * u * std_normal_pdf(u)) +
          c * c * 2.0 * (1.0 - std_normal_cdf(u));
      return mu * mu + var;
    }
  }
  return 0.0;
}

double Distribution::variance() const {
  const double m = mean();
  return second_moment() - m * m;
}

double Distribution::support_bound() const {
  switch (kind_) {
    case Kind::Uniform: return std::max(std::abs(p_[0]), std::abs(p_[1]));
    case Kind::TwoPoint: return std::max(std::abs(p_[0]), std::abs(p_[1]));
    case Kind::ClippedGaussian: return std::abs(p_[0]) + p_[2];
  }
  return 0.0;
}

std::optional<double> Distribution::mean_log_abs() const {
  switch (kind_) {
    case Kind::Uniform: {
      const double a = p_[0], b = p_[1];
      if (a == b) return a == 0.0 ? -kInf : std::log(std::abs(a));
      return (xlogx_minus_x(b) - xlogx_minus_x(a)) / (b - a);
    }
    case Kind::TwoPoint: {
      const double p = p_[2];
      double acc = 0.0;
      if (p > 0.0) {
        if (p_[0] == 0.0) return -kInf;
        acc += p * std::log(std::abs(p_[0]));
      }
      if (p < 1.0) {
        if (p_[1] == 0.0) return -kInf;
        acc += (1.0 - p) * std::log(std::abs(p_[1]));
      }
      return acc;
    }
    case Kind::ClippedGaussian: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> Distribution::mean_abs() const {
  switch (kind_) {
    case Kind::Uniform: {
      const double a = p_[0], b = p_[1];
      if (a >= 0.0) return 0.5 * (a + b);
      if (b <= 0.0) return -0.5 * (a + b);
      return (a * a + b * b) / (2.0 * (b - a));
    }
    case Kind::TwoPoint:
      return p_[2] * std::abs(p_[0]) + (1.0 - p_[2]) * std::abs(p_[1]);
    case Kind::ClippedGaussian: {
      const double mu = p_[0], s = p_[1], c = p_[2];
      if (mu != 0.0) return std::nullopt;
      if (s == 0.0) return 0.0;
      const double u = c / s;
      return s * std::sqrt(2.0 / std::numbers::pi) * (1.0 - std::exp(-0.5 * u * u)) +
             2.0 * c * (1.0 - std_normal_cdf(u));
    }
  }
  return std::nullopt;
}

double Distribution::draw(RngStream& rng) const {
  switch (kind_) {
    case Kind::Uniform: return p_[0] + rng.next_unit() * (p_[1] - p_[0]);
    case Kind::TwoPoint: return rng.next_unit() < p_[2] ? p_[0] : p_[1];
    case Kind::ClippedGaussian: {
      const double u1 = rng.next_unit();
      const double u2 = rng.next_unit();
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      return p_[0] + std::clamp(p_[1] * z, -p_[2], p_[2]);
    }
  }
  return 0.0;
}

std::string Distribution::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::Uniform: out << "uniform(" << p_[0] << ", " << p_[1] << ")"; break;
    case Kind::TwoPoint: out << "two_point(" << p_[0] << ", " << p_[1] << ", " << p_[2] << ")"; break;
    case Kind::ClippedGaussian:
      out << "clipped_gaussian(" << p_[0] << ", " << p_[1] << ", " << p_[2] << ")";
      break;
  }
  return out.str();
}

Partition Partition::uniform_cells(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("Partition: cell length must be positive and finite");
  Partition p;
  p.delta_ = delta;
  return p;
}

Partition Partition::from_boundaries(std::vector<double> boundaries) {
  if (boundaries.empty()) throw std::invalid_argument("Partition: boundary list must be nonempty");
  double prev = 0.0;
  for (double t : boundaries) {
    if (!(t > prev) || !std::isfinite(t))
      throw std::invalid_argument("Partition: boundaries must be finite and strictly increasing from 0");
    prev = t;
  }
  Partition p;
  p.boundaries_ = std::move(boundaries);
  const size_t m = p.boundaries_.size();
  p.delta_ = m >= 2 ? p.boundaries_[m - 1] - p.boundaries_[m - 2] : p.boundaries_[0];
  return p;
}

double Partition::cell_start(long n) const {
  if (n <= 0) return 0.0;
  if (is_uniform()) return static_cast<double>(n) * delta_;
  const long m = static_cast<long>(boundaries_.size());
  if (n <= m) return boundaries_[static_cast<size_t>(n - 1)];
  // extend past the explicit list with the final cell length
  return boundaries_.back() + static_cast<double>(n - m) * delta_;
}

long Partition::cell_index(double t) const {
  if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("Partition: time must be finite and >= 0");
  long n;
  if (is_uniform()) {
    n = static_cast<long>(std::floor(t / delta_));
  } else {
    const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), t);
    n = static_cast<long>(it - boundaries_.begin());
    if (it == boundaries_.end())
      n = static_cast<long>(boundaries_.size()) +
          static_cast<long>(std::floor((t - boundaries_.back()) / delta_));
  }
  // Settle floating-point edge cases so boundaries always land in the right cell.
  while (cell_start(n + 1) <= t) ++n;
  while (n > 0 && cell_start(n) > t) --n;
  return n;
}

std::vector<double> Partition::boundaries_in(double horizon) const {
  std::vector<double> out;
  for (long n = 1;; ++n) {
    const double t = cell_start(n);
    if (!(t < horizon)) break;
    out.push_back(t);
  }
  return out;
}

NoisePath NoisePath::iid_sequence(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                                  int components) {
  if (components < 1) throw std::invalid_argument("NoisePath: components must be >= 1");
  NoisePath p;
  p.kind_ = Kind::DiscreteIid;
  p.components_ = components;
  p.seed_ = seed;
  p.path_index_ = path_index;
  p.dists_.assign(static_cast<size_t>(components), dist);
  return p;
}

NoisePath NoisePath::coarse_grain(const Partition& part, const Distribution& dist, std::uint64_t seed,
                                  std::uint64_t path_index, int components) {
  return coarse_grain(part, std::vector<Distribution>(static_cast<size_t>(components), dist), seed,
                      path_index);
}

NoisePath NoisePath::coarse_grain(const Partition& part, std::vector<Distribution> component_dists,
                                  std::uint64_t seed, std::uint64_t path_index) {
  if (component_dists.empty()) throw std::invalid_argument("NoisePath: components must be >= 1");
  NoisePath p;
  p.kind_ = Kind::CoarseGrain;
  p.components_ = static_cast<int>(component_dists.size());
  p.seed_ = seed;
  p.path_index_ = path_index;
  p.dists_ = std::move(component_dists);
  p.part_ = part;
  p.has_partition_ = true;
  return p;
}

NoisePath NoisePath::bounded_zero_mean(const Distribution& dist, std::uint64_t seed,
                                       std::uint64_t path_index, double sample_dt, int components) {
  const double bound = dist.support_bound();
  if (std::abs(dist.mean()) > 1e-12 * std::max(1.0, bound))
    throw std::invalid_argument("bounded_zero_mean: distribution mean must be zero");
  if (!std::isfinite(bound)) throw std::invalid_argument("bounded_zero_mean: unbounded distribution");
  NoisePath p = coarse_grain(Partition::uniform_cells(sample_dt), dist, seed, path_index, components);
  p.kind_ = Kind::BoundedZeroMean;
  return p;
}

NoisePath NoisePath::constant(Vec value) {
  if (value.empty()) throw std::invalid_argument("NoisePath::constant: empty value");
  if (!is_finite(value)) throw std::invalid_argument("NoisePath::constant: non-finite value");
  NoisePath p;
  p.kind_ = Kind::Constant;
  p.components_ = static_cast<int>(value.size());
  p.constant_value_ = std::move(value);
  return p;
}

Vec NoisePath::draw_cell(long cell) const {
  Vec out(static_cast<size_t>(components_));
  for (int c = 0; c < components_; ++c) {
    RngStream rng = noise_stream(seed_, path_index_, static_cast<std::uint64_t>(cell),
                                 static_cast<std::uint32_t>(c));
    out[static_cast<size_t>(c)] = dists_[static_cast<size_t>(c)].draw(rng);
  }
  return out;
}

Vec NoisePath::at_step(long i) const {
  if (i < 0) throw std::invalid_argument("NoisePath: step index must be >= 0");
  if (kind_ == Kind::Constant) return constant_value_;
  if (kind_ != Kind::DiscreteIid)
    throw std::invalid_argument("NoisePath: at_step requires a discrete or constant path");
  return draw_cell(i);
}

Vec NoisePath::at_time(double t) const {
  if (kind_ == Kind::DiscreteIid)
    throw std::invalid_argument("NoisePath: at_time requires a continuous path");
  if (t < 0.0 || !std::isfinite(t)) throw std::invalid_argument("NoisePath: time must be finite and >= 0");
  if (kind_ == Kind::Constant) return constant_value_;
  return draw_cell(part_.cell_index(t));
}

Vec NoisePath::cell_value(long n) const {
  if (kind_ == Kind::Constant) return constant_value_;
  if (kind_ == Kind::DiscreteIid) return at_step(n);
  if (n < 0) throw std::invalid_argument("NoisePath: cell index must be >= 0");
  return draw_cell(n);
}

double NoisePath::integral_over_cell(long n) const {
  if (kind_ != Kind::CoarseGrain && kind_ != Kind::BoundedZeroMean)
    throw std::invalid_argument("integral_over_cell: path is not coarse-grain");
  if (components_ != 1)
    throw std::invalid_argument("integral_over_cell: scalar paths only");
  if (n < 0) throw std::invalid_argument("integral_over_cell: cell index must be >= 0");
  return part_.cell_length(n) * draw_cell(n)[0];
}

std::vector<double> NoisePath::jump_times_in(double horizon) const {
  if (!has_partition_) return {};
  return part_.boundaries_in(horizon);
}

double NoisePath::support_bound() const {
  if (kind_ == Kind::Constant) {
    double b = 0.0;
    for (double v : constant_value_) b = std::max(b, std::abs(v));
    return b;
  }
  double b = 0.0;
  for (const auto& d : dists_) b = std::max(b, d.support_bound());
  return b;
}

NoisePath iid_sequence(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                       int components) {
  return NoisePath::iid_sequence(dist, seed, path_index, components);
}

NoisePath coarse_grain_process(const Partition& part, const Distribution& dist, std::uint64_t seed,
                               std::uint64_t path_index, int components) {
  return NoisePath::coarse_grain(part, dist, seed, path_index, components);
}

NoisePath bounded_zero_mean(const Distribution& dist, std::uint64_t seed, std::uint64_t path_index,
                            double sample_dt, int components) {
  return NoisePath::bounded_zero_mean(dist, seed, path_index, sample_dt, components);
}

double integral_over_cell(const NoisePath& path, long cell) { return path.integral_over_cell(cell); }

}  // namespace stocon
