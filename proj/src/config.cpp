#include "stocon/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stocon/csv.hpp"

namespace stocon {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing garbage");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

long parse_long(const std::string& key, const std::string& v) {
  const double x = parse_double(key, v);
  const long l = static_cast<long>(x);
  if (static_cast<double>(l) != x)
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return l;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> parse_args(const std::string& key, const std::string& inside) {
  std::vector<double> args;
  for (const auto& piece : split(inside, ',')) args.push_back(parse_double(key, piece));
  return args;
}

Distribution parse_dist(const std::string& key, const std::string& v) {
  const size_t open = v.find('(');
  if (open == std::string::npos || v.back() != ')')
    throw ConfigError("config key '" + key + "': expected name(args), got '" + v + "'");
  const std::string name = trim(v.substr(0, open));
  const std::vector<double> a = parse_args(key, v.substr(open + 1, v.size() - open - 2));
  try {
    if (name == "uniform" && a.size() == 2) return Distribution::uniform(a[0], a[1]);
    if (name == "two_point" && a.size() == 2) return Distribution::two_point(a[0], a[1]);
    if (name == "two_point" && a.size() == 3) return Distribution::two_point(a[0], a[1], a[2]);
    if (name == "clipped_gaussian" && a.size() == 3)
      return Distribution::clipped_gaussian(a[0], a[1], a[2]);
    if (name == "constant" && a.size() == 1) return Distribution::uniform(a[0], a[0]);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
  throw ConfigError("config key '" + key + "': unknown distribution '" + v +
                    "' (uniform(a,b) | two_point(v1,v2[,p]) | clipped_gaussian(m,s,c) | constant(c))");
}

Vec parse_vec(const std::string& key, const std::string& v) {
  if (!v.empty() && v.front() == '(') {
    if (v.back() != ')') throw ConfigError("config key '" + key + "': unbalanced parentheses");
    return parse_args(key, v.substr(1, v.size() - 2));
  }
  return {parse_double(key, v)};
}

Analysis parse_analysis(const std::string& token) {
  if (token == "lyapunov") return Analysis::Lyapunov;
  if (token == "t1") return Analysis::T1;
  if (token == "t2") return Analysis::T2;
  if (token == "t3") return Analysis::T3;
  if (token == "t4") return Analysis::T4;
  if (token == "ms-rate") return Analysis::MsRate;
  if (token == "mean-trajectory") return Analysis::MeanTrajectory;
  if (token == "deviation-bound") return Analysis::DeviationBound;
  if (token == "sync") return Analysis::Sync;
  throw ConfigError("config key 'analyses': unknown analysis '" + token + "'");
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "scenario",     "noise.dist",    "noise2.dist",     "noise.delta",
      "noise.boundaries",
      "horizon.steps", "horizon.time", "step",            "paths",
      "seed",          "threads",      "out",             "analyses",
      "save.stride",   "save.trajectories", "tail.fraction",
      "t1.cap",        "t2.cap",       "t3.cap",          "t4.cap",
      "sync.threshold", "sync.fraction",
      "x0",            "x0b",          "dz0",
      "additive.lambda", "additive.dim",
      "sg.hessian",    "sg.mu",
      "vdp.alpha",     "vdp.w",
  };
  return keys;
}

void require_range(bool ok, const std::string& key, const std::string& what, const std::string& value) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what + " (got " + value + ")");
}

std::string vec_text(const Vec& v) {
  if (v.size() == 1) return fmt_double(v[0]);
  std::string out = "(";
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt_double(v[i]);
  return out + ")";
}

}  // namespace

std::string analysis_name(Analysis a) {
  switch (a) {
    case Analysis::Lyapunov: return "lyapunov";
    case Analysis::T1: return "t1";
    case Analysis::T2: return "t2";
    case Analysis::T3: return "t3";
    case Analysis::T4: return "t4";
    case Analysis::MsRate: return "ms-rate";
    case Analysis::MeanTrajectory: return "mean-trajectory";
    case Analysis::DeviationBound: return "deviation-bound";
    case Analysis::Sync: return "sync";
  }
  return "?";
}

bool ExperimentConfig::is_discrete_scenario() const {
  return scenario == "linear_random_gain" || scenario == "stochastic_gradient";
}

Partition ExperimentConfig::partition() const {
  if (!noise_boundaries.empty()) return Partition::from_boundaries(noise_boundaries);
  return Partition::uniform_cells(noise_delta);
}

double ExperimentConfig::min_cell_length() const {
  if (noise_boundaries.empty()) return noise_delta;
  double shortest = noise_boundaries.front();
  for (size_t i = 1; i < noise_boundaries.size(); ++i)
    shortest = std::min(shortest, noise_boundaries[i] - noise_boundaries[i - 1]);
  return shortest;
}

double ExperimentConfig::resolved_step() const {
  if (step > 0) return step;
  return std::min(min_cell_length() / 50.0, 1e-2);
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> m;
  m["scenario"] = scenario;
  if (noise_dist) m["noise.dist"] = noise_dist->describe();
  if (scenario == "vdp_coupled" && noise2_dist) m["noise2.dist"] = noise2_dist->describe();
  if (!is_discrete_scenario()) {
    if (noise_boundaries.empty()) {
      m["noise.delta"] = fmt_double(noise_delta);
    } else {
      m["noise.boundaries"] = vec_text(noise_boundaries);
    }
    m["horizon.time"] = fmt_double(horizon_time);
    m["step"] = fmt_double(resolved_step());
  } else {
    m["horizon.steps"] = std::to_string(horizon_steps);
  }
  m["paths"] = std::to_string(paths);
  m["seed"] = std::to_string(seed);
  m["threads"] = std::to_string(threads);
  m["out"] = out_dir;
  std::string names;
  for (size_t i = 0; i < analyses.size(); ++i) names += (i ? ", " : "") + analysis_name(analyses[i]);
  m["analyses"] = names;
  m["save.stride"] = std::to_string(save_stride);
  m["save.trajectories"] = save_trajectories ? "true" : "false";
  m["tail.fraction"] = fmt_double(tail_fraction);
  for (Analysis a : analyses) {
    if (a == Analysis::T1) m["t1.cap"] = fmt_double(t1_cap);
    if (a == Analysis::T2) m["t2.cap"] = fmt_double(t2_cap);
    if (a == Analysis::T3) m["t3.cap"] = fmt_double(t3_cap);
    if (a == Analysis::T4) m["t4.cap"] = fmt_double(t4_cap);
    if (a == Analysis::Sync) {
      m["sync.threshold"] = fmt_double(sync_threshold);
      m["sync.fraction"] = fmt_double(sync_fraction);
    }
  }
  if (!x0.empty()) m["x0"] = vec_text(x0);
  if (!x0b.empty()) m["x0b"] = vec_text(x0b);
  if (!dz0.empty()) m["dz0"] = vec_text(dz0);
  if (scenario == "additive_linear") {
    m["additive.lambda"] = fmt_double(additive_lambda);
    m["additive.dim"] = std::to_string(additive_dim);
  }
  if (scenario == "stochastic_gradient") {
    m["sg.hessian"] = vec_text(sg_hessian_diag);
    m["sg.mu"] = fmt_double(sg_mu);
  }
  if (scenario == "vdp_coupled") {
    m["vdp.alpha"] = fmt_double(vdp_alpha);
    m["vdp.w"] = fmt_double(vdp_w);
  }
  return m;
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config syntax error at line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config syntax error at line " + std::to_string(line_no) +
                        ": empty key or value");
    if (!known_keys().count(key)) throw ConfigError("config: unknown key '" + key + "'");
    if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  ExperimentConfig cfg;
  const auto scenario = take("scenario");
  if (!scenario) throw ConfigError("config: missing required key 'scenario'");
  cfg.scenario = *scenario;
  static const std::set<std::string> scenarios = {"linear_random_gain", "linear_random_rate",
                                                  "additive_linear", "stochastic_gradient",
                                                  "vdp_coupled"};
  if (!scenarios.count(cfg.scenario))
    throw ConfigError("config key 'scenario': unknown scenario '" + cfg.scenario + "'");

  if (auto v = take("noise.dist")) cfg.noise_dist = parse_dist("noise.dist", *v);
  if (auto v = take("noise2.dist")) cfg.noise2_dist = parse_dist("noise2.dist", *v);
  if (auto v = take("noise.delta")) {
    cfg.noise_delta = parse_double("noise.delta", *v);
    cfg.has_noise_delta = true;
    require_range(cfg.noise_delta > 0, "noise.delta", "must be > 0", *v);
  }
  if (auto v = take("noise.boundaries")) {
    cfg.noise_boundaries = parse_vec("noise.boundaries", *v);
    try {
      Partition::from_boundaries(cfg.noise_boundaries);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config key 'noise.boundaries': ") + e.what());
    }
  }
  if (auto v = take("horizon.steps")) {
    cfg.horizon_steps = parse_long("horizon.steps", *v);
    require_range(cfg.horizon_steps > 0, "horizon.steps", "must be >= 1", *v);
  }
  if (auto v = take("horizon.time")) {
    cfg.horizon_time = parse_double("horizon.time", *v);
    require_range(cfg.horizon_time > 0, "horizon.time", "must be > 0", *v);
  }
  if (auto v = take("step")) {
    cfg.step = parse_double("step", *v);
    require_range(cfg.step > 0, "step", "must be > 0", *v);
  }
  if (auto v = take("paths")) {
    cfg.paths = parse_long("paths", *v);
    require_range(cfg.paths >= 1, "paths", "must be >= 1", *v);
  }
  if (auto v = take("seed")) cfg.seed = parse_u64("seed", *v);
  if (auto v = take("threads")) {
    cfg.threads = static_cast<int>(parse_long("threads", *v));
    require_range(cfg.threads >= 0, "threads", "must be >= 0", *v);
  }
  if (auto v = take("out")) cfg.out_dir = *v;
  if (auto v = take("analyses")) {
    for (const auto& token : split(*v, ',')) {
      if (token.empty()) continue;
      const Analysis a = parse_analysis(token);
      for (Analysis seen : cfg.analyses)
        if (seen == a)
          throw ConfigError("config key 'analyses': duplicate entry '" + token + "'");
      cfg.analyses.push_back(a);
    }
  }
  if (auto v = take("save.stride")) {
    cfg.save_stride = parse_long("save.stride", *v);
    require_range(cfg.save_stride >= 1, "save.stride", "must be >= 1", *v);
  }
  if (auto v = take("save.trajectories")) cfg.save_trajectories = parse_bool("save.trajectories", *v);
  if (auto v = take("tail.fraction")) {
    cfg.tail_fraction = parse_double("tail.fraction", *v);
    require_range(cfg.tail_fraction > 0 && cfg.tail_fraction <= 1, "tail.fraction", "must be in (0, 1]",
                  *v);
  }
  if (auto v = take("t1.cap")) {
    cfg.t1_cap = parse_double("t1.cap", *v);
    require_range(cfg.t1_cap < 0, "t1.cap", "must be < 0", *v);
  }
  if (auto v = take("t2.cap")) {
    cfg.t2_cap = parse_double("t2.cap", *v);
    require_range(cfg.t2_cap >= 0 && cfg.t2_cap < 1, "t2.cap", "must be in [0, 1)", *v);
  }
  if (auto v = take("t3.cap")) {
    cfg.t3_cap = parse_double("t3.cap", *v);
    require_range(cfg.t3_cap < 0, "t3.cap", "must be < 0", *v);
  }
  if (auto v = take("t4.cap")) {
    cfg.t4_cap = parse_double("t4.cap", *v);
    require_range(cfg.t4_cap >= 0 && cfg.t4_cap < 1, "t4.cap", "must be in [0, 1)", *v);
  }
  if (auto v = take("sync.threshold")) {
    cfg.sync_threshold = parse_double("sync.threshold", *v);
    require_range(cfg.sync_threshold > 0, "sync.threshold", "must be > 0", *v);
  }
  if (auto v = take("sync.fraction")) {
    cfg.sync_fraction = parse_double("sync.fraction", *v);
    require_range(cfg.sync_fraction > 0 && cfg.sync_fraction <= 1, "sync.fraction", "must be in (0, 1]",
                  *v);
  }
  if (auto v = take("x0")) cfg.x0 = parse_vec("x0", *v);
  if (auto v = take("x0b")) cfg.x0b = parse_vec("x0b", *v);
  if (auto v = take("dz0")) cfg.dz0 = parse_vec("dz0", *v);
  if (auto v = take("additive.lambda")) {
    cfg.additive_lambda = parse_double("additive.lambda", *v);
    require_range(cfg.additive_lambda < 0, "additive.lambda", "must be < 0", *v);
  }
  if (auto v = take("additive.dim")) {
    cfg.additive_dim = parse_long("additive.dim", *v);
    require_range(cfg.additive_dim >= 1, "additive.dim", "must be >= 1", *v);
  }
  if (auto v = take("sg.hessian")) cfg.sg_hessian_diag = parse_vec("sg.hessian", *v);
  if (auto v = take("sg.mu")) {
    cfg.sg_mu = parse_double("sg.mu", *v);
    require_range(cfg.sg_mu > 0, "sg.mu", "must be > 0", *v);
  }
  if (auto v = take("vdp.alpha")) {
    cfg.vdp_alpha = parse_double("vdp.alpha", *v);
    require_range(cfg.vdp_alpha > 0, "vdp.alpha", "must be > 0", *v);
  }
  if (auto v = take("vdp.w")) {
    cfg.vdp_w = parse_double("vdp.w", *v);
    require_range(cfg.vdp_w > 0, "vdp.w", "must be > 0", *v);
  }

  // Cross-field checks.
  const bool discrete = cfg.is_discrete_scenario();
  if (!cfg.noise_dist) throw ConfigError("config: missing required key 'noise.dist'");
  if (cfg.analyses.empty()) throw ConfigError("config: missing or empty key 'analyses'");
  if (discrete) {
    if (cfg.horizon_steps == 0) throw ConfigError("config: missing required key 'horizon.steps'");
    if (cfg.horizon_time > 0)
      throw ConfigError("config key 'horizon.time': not applicable to a discrete scenario");
    if (cfg.has_noise_delta)
      throw ConfigError("config key 'noise.delta': not applicable to a discrete scenario");
  } else {
    if (!(cfg.horizon_time > 0)) throw ConfigError("config: missing required key 'horizon.time'");
    if (cfg.horizon_steps > 0)
      throw ConfigError("config key 'horizon.steps': not applicable to a continuous scenario");
    const bool has_boundaries = !cfg.noise_boundaries.empty();
    if (cfg.has_noise_delta && has_boundaries)
      throw ConfigError("config key 'noise.boundaries': give either noise.delta or noise.boundaries");
    if (!cfg.has_noise_delta && !has_boundaries)
      throw ConfigError("config: missing required key 'noise.delta' (or 'noise.boundaries')");
    if (has_boundaries && cfg.scenario == "additive_linear")
      throw ConfigError(
          "config key 'noise.boundaries': additive_linear uses a uniform sample grid (noise.delta)");
  }
  if (!cfg.noise_boundaries.empty() && cfg.is_discrete_scenario())
    throw ConfigError("config key 'noise.boundaries': not applicable to a discrete scenario");
  if (cfg.noise2_dist && cfg.scenario != "vdp_coupled")
    throw ConfigError("config key 'noise2.dist': only applicable to vdp_coupled");

  static const std::map<std::string, std::set<Analysis>> allowed = {
      {"linear_random_gain", {Analysis::Lyapunov, Analysis::T1, Analysis::T2, Analysis::MsRate}},
      {"stochastic_gradient", {Analysis::Lyapunov, Analysis::T1, Analysis::T2, Analysis::MsRate}},
      {"linear_random_rate", {Analysis::Lyapunov, Analysis::T3, Analysis::T4}},
      {"additive_linear", {Analysis::MeanTrajectory, Analysis::DeviationBound}},
      {"vdp_coupled", {Analysis::Sync}},
  };
  for (Analysis a : cfg.analyses)
    if (!allowed.at(cfg.scenario).count(a))
      throw ConfigError("config key 'analyses': '" + analysis_name(a) + "' is not applicable to scenario '" +
                        cfg.scenario + "'");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::pair<std::string, std::string>> list_scenarios() {
  return {
      {"linear_random_gain",
       "x_{i+1} = a_i x_i, a_i iid from noise.dist; analyses: lyapunov, t1, t2, ms-rate"},
      {"linear_random_rate",
       "dx/dt = g_t x, g_t coarse-grain from noise.dist over noise.delta cells; analyses: lyapunov, t3, t4"},
      {"additive_linear",
       "dx/dt = lambda x + xi_t, bounded zero-mean xi; analyses: mean-trajectory, deviation-bound"},
      {"stochastic_gradient",
       "gradient-free descent on a quadratic objective (sg.hessian, sg.mu, perturbation noise.dist); "
       "analyses: lyapunov, t1, t2, ms-rate"},
      {"vdp_coupled",
       "two coupled Van der Pol oscillators with stochastic coupling gains; analyses: sync"},
  };
}

}  // namespace stocon
