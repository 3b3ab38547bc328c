#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stocon/noise.hpp"

namespace stocon {

/// Config syntax or schema problem; message carries the line number or the
/// offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Analysis {
  Lyapunov,
  T1,
  T2,
  T3,
  T4,
  MsRate,
  MeanTrajectory,
  DeviationBound,
  Sync,
};

std::string analysis_name(Analysis a);

/// Fully validated experiment description with defaults resolved. The echo()
/// map lists every effective key, so a run can be reproduced from its report.
struct ExperimentConfig {
  std::string scenario;
  std::optional<Distribution> noise_dist;
  std::optional<Distribution> noise2_dist;  // vdp second oscillator; defaults to noise.dist
  double noise_delta = 1.0;
  bool has_noise_delta = false;
  std::vector<double> noise_boundaries;  // explicit partition, alternative to noise.delta

  Partition partition() const;           // from delta or boundaries
  double min_cell_length() const;

  long horizon_steps = 0;    // discrete scenarios
  double horizon_time = 0;   // continuous scenarios
  double step = 0;           // integrator step; 0 = derive from noise_delta
  long paths = 1;
  std::uint64_t seed = 0;
  int threads = 0;           // 0 = available parallelism
  std::string out_dir = ".";
  std::vector<Analysis> analyses;
  long save_stride = 1;
  bool save_trajectories = false;
  double tail_fraction = 0.5;

  double t1_cap = -0.05;
  double t2_cap = 0.9;
  double t3_cap = -0.05;
  double t4_cap = 0.9;
  double sync_threshold = 1e-3;
  double sync_fraction = 0.95;

  Vec x0;   // empty = scenario default
  Vec x0b;  // second initial condition (pairs); empty = x0
  Vec dz0;  // empty = unit vector in a seed-derived random direction

  double additive_lambda = -1.0;
  long additive_dim = 1;
  Vec sg_hessian_diag = {1.0, 4.0};
  double sg_mu = 0.1;
  double vdp_alpha = 1.0;
  double vdp_w = 1.0;

  bool is_discrete_scenario() const;
  double resolved_step() const;
  std::map<std::string, std::string> echo() const;
};

/// Parses the flat `key = value` format (UTF-8, '#' comments). Unknown keys,
/// type errors and range violations raise ConfigError naming the key; syntax
/// errors name the line.
ExperimentConfig parse_config(const std::string& text);

/// Convenience: read a file and parse it.
ExperimentConfig parse_config_file(const std::string& path);

/// Names and one-line descriptions of the scenario builders, for the CLI.
std::vector<std::pair<std::string, std::string>> list_scenarios();

}  // namespace stocon
