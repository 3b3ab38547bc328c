#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stocon/analysis.hpp"
#include "stocon/config.hpp"
#include "stocon/runner.hpp"
#include "stocon/spectral.hpp"

namespace py = pybind11;
using namespace stocon;

namespace {

Mat mat_from_rows(const std::vector<std::vector<double>>& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r ? static_cast<int>(rows.front().size()) : 0;
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != c)
      throw std::invalid_argument("matrix rows must have equal length");
    for (int j = 0; j < c; ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  return m;
}

std::vector<std::vector<double>> mat_to_rows(const Mat& m) {
  std::vector<std::vector<double>> rows(static_cast<size_t>(m.rows()));
  for (int i = 0; i < m.rows(); ++i) {
    rows[static_cast<size_t>(i)].resize(static_cast<size_t>(m.cols()));
    for (int j = 0; j < m.cols(); ++j) rows[static_cast<size_t>(i)][static_cast<size_t>(j)] = m(i, j);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_stocon, m) {
  m.doc() = "Stochastic contraction analysis for random dynamical systems";

  py::class_<Distribution>(m, "Distribution")
      .def_static("uniform", &Distribution::uniform, py::arg("lo"), py::arg("hi"))
      .def_static("two_point", &Distribution::two_point, py::arg("v1"), py::arg("v2"),
                  py::arg("p") = 0.5)
      .def_static("clipped_gaussian", &Distribution::clipped_gaussian, py::arg("mean"),
                  py::arg("stdev"), py::arg("clip"))
      .def_property_readonly("mean", &Distribution::mean)
      .def_property_readonly("second_moment", &Distribution::second_moment)
      .def_property_readonly("variance", &Distribution::variance)
      .def_property_readonly("support_bound", &Distribution::support_bound)
      .def_property_readonly("mean_log_abs", &Distribution::mean_log_abs)
      .def_property_readonly("mean_abs", &Distribution::mean_abs)
      .def("__repr__", &Distribution::describe);

  py::class_<Partition>(m, "Partition")
      .def_static("uniform_cells", &Partition::uniform_cells, py::arg("delta"))
      .def_static("from_boundaries", &Partition::from_boundaries, py::arg("boundaries"))
      .def("cell_index", &Partition::cell_index)
      .def("cell_start", &Partition::cell_start)
      .def("cell_length", &Partition::cell_length);

  py::class_<NoisePath>(m, "NoisePath")
      .def_static("iid_sequence", &NoisePath::iid_sequence, py::arg("dist"), py::arg("seed"),
                  py::arg("path_index"), py::arg("components") = 1)
      .def_static("coarse_grain",
                  py::overload_cast<const Partition&, const Distribution&, std::uint64_t, std::uint64_t,
                                    int>(&NoisePath::coarse_grain),
                  py::arg("partition"), py::arg("dist"), py::arg("seed"), py::arg("path_index"),
                  py::arg("components") = 1)
      .def_static("bounded_zero_mean", &NoisePath::bounded_zero_mean, py::arg("dist"), py::arg("seed"),
                  py::arg("path_index"), py::arg("sample_dt"), py::arg("components") = 1)
      .def_static("constant", &NoisePath::constant, py::arg("value"))
      .def("at_step", &NoisePath::at_step)
      .def("at_time", &NoisePath::at_time)
      .def("integral_over_cell", &NoisePath::integral_over_cell);

  py::class_<Metric>(m, "Metric");
  m.def("make_metric_identity", &make_metric_identity, py::arg("n"));

  py::class_<DiscreteSystem>(m, "DiscreteSystem");
  py::class_<ContinuousSystem>(m, "ContinuousSystem");
  m.def(
      "make_discrete_system",
      [](int dim, std::function<Vec(const Vec&, long, const Vec&)> map, int noise_dim) {
        DiscreteSystem sys;
        sys.dim = dim;
        sys.noise_dim = noise_dim;
        sys.map = std::move(map);
        return sys;
      },
      py::arg("dim"), py::arg("map"), py::arg("noise_dim") = 1,
      "Discrete system from a python map (x, i, noise) -> x'; Jacobians fall back to finite differences");
  m.def(
      "make_continuous_system",
      [](int dim, std::function<Vec(const Vec&, double, const Vec&)> field, int noise_dim) {
        ContinuousSystem sys;
        sys.dim = dim;
        sys.noise_dim = noise_dim;
        sys.field = std::move(field);
        return sys;
      },
      py::arg("dim"), py::arg("field"), py::arg("noise_dim") = 1);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("states", &Trajectory::states)
      .def_readonly("dz_log_norms", &Trajectory::dz_log_norms)
      .def("dz_norms", &Trajectory::dz_norms);

  m.def(
      "propagate_variational_discrete",
      [](const DiscreteSystem& sys, const Metric& metric, const Vec& x0, const Vec& dz0, long steps,
         const NoisePath& path, int save_stride, bool track_sigma) {
        VariationalOptions opts;
        opts.save_stride = save_stride;
        opts.track_sigma = track_sigma;
        return propagate_variational_discrete(sys, metric, VariationalState(StateVector(x0), dz0), steps,
                                              path, opts);
      },
      py::arg("sys"), py::arg("metric"), py::arg("x0"), py::arg("dz0"), py::arg("steps"),
      py::arg("path"), py::arg("save_stride") = 1, py::arg("track_sigma") = false);
  m.def(
      "integrate_continuous",
      [](const ContinuousSystem& sys, const Metric& metric, const Vec& x0, const Vec& dz0,
         double horizon, double step, const NoisePath& path, int save_stride) {
        return integrate_continuous(sys, metric, VariationalState(StateVector(x0), dz0), horizon, step,
                                    path, save_stride);
      },
      py::arg("sys"), py::arg("metric"), py::arg("x0"), py::arg("dz0"), py::arg("horizon"),
      py::arg("step"), py::arg("path"), py::arg("save_stride") = 1);
  m.def("default_continuous_step", &default_continuous_step, py::arg("cell_delta"));

  m.def(
      "jacobian_fd",
      [](const std::function<Vec(const Vec&)>& f, const Vec& x, double eps) {
        return mat_to_rows(jacobian_fd(f, x, eps > 0 ? eps : fd_default_eps(x)));
      },
      py::arg("f"), py::arg("x"), py::arg("eps") = 0.0);
  m.def("largest_singular_value",
        [](const std::vector<std::vector<double>>& rows) { return largest_singular_value(mat_from_rows(rows)); });
  m.def("lambda_max_symmetric",
        [](const std::vector<std::vector<double>>& rows) { return lambda_max_symmetric(mat_from_rows(rows)); });

  py::class_<RateEstimate>(m, "RateEstimate")
      .def_readonly("slope", &RateEstimate::slope)
      .def_readonly("intercept", &RateEstimate::intercept)
      .def_readonly("residual_rms", &RateEstimate::residual_rms)
      .def_readonly("ci_lo", &RateEstimate::ci_lo)
      .def_readonly("ci_hi", &RateEstimate::ci_hi)
      .def("factor", &RateEstimate::factor);

  py::class_<ConditionEstimate>(m, "ConditionEstimate")
      .def_readonly("quantity", &ConditionEstimate::quantity)
      .def_readonly("estimate", &ConditionEstimate::estimate)
      .def_readonly("ci_lo", &ConditionEstimate::ci_lo)
      .def_readonly("ci_hi", &ConditionEstimate::ci_hi)
      .def_readonly("threshold", &ConditionEstimate::threshold)
      .def_readonly("passed", &ConditionEstimate::pass);

  py::class_<ContractionVerdict>(m, "ContractionVerdict")
      .def_readonly("theorem", &ContractionVerdict::theorem)
      .def_readonly("conditions", &ContractionVerdict::conditions)
      .def_readonly("verdict", &ContractionVerdict::verdict)
      .def_readonly("n_samples", &ContractionVerdict::n_samples);

  m.def("finite_time_lyapunov", &finite_time_lyapunov, py::arg("trajectory"),
        py::arg("tail_fraction") = 0.5);
  m.def("check_t1_discrete", &check_t1_discrete, py::arg("log_eta_groups"), py::arg("rate_cap"));
  m.def("check_t2_discrete", &check_t2_discrete, py::arg("eta_sq_groups"), py::arg("rate_cap"));
  m.def("check_t3_continuous", &check_t3_continuous, py::arg("cell_integrals_by_path"),
        py::arg("total_time"), py::arg("rate_cap"));
  m.def("check_t4_coarse_grain", &check_t4_coarse_grain, py::arg("integral_groups"),
        py::arg("rate_cap"));
  m.def("ms_rate_fit", &ms_rate_fit, py::arg("dz_sq_by_path"), py::arg("bootstrap_seed") = 0);

  py::class_<EnvelopeSequence>(m, "EnvelopeSequence")
      .def_readonly("z", &EnvelopeSequence::z)
      .def_readonly("log_z", &EnvelopeSequence::log_z);
  m.def("envelope_sequence", &envelope_sequence, py::arg("cell_integrals"), py::arg("z0"));

  m.def("linear_random_gain", &linear_random_gain, py::arg("gain"));
  m.def("linear_random_rate", &linear_random_rate);
  m.def("vdp_coupled", &vdp_coupled, py::arg("alpha"), py::arg("w"));
  m.def("vdp_sync_predicted", &vdp_sync_predicted, py::arg("eps1_mean"), py::arg("eps2_mean"));
  m.def("vdp_separation", &vdp_separation, py::arg("state"));

  m.def(
      "run_experiment_file",
      [](const std::string& config_path, const std::string& out_dir) {
        ExperimentConfig cfg = parse_config_file(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        const RunReport report = run_experiment(cfg);
        py::dict d;
        d["exit_code"] = report.exit_code;
        d["files"] = report.files;
        py::list rows;
        for (const auto& r : report.rows) {
          py::dict row;
          row["analysis"] = r.analysis;
          row["quantity"] = r.quantity;
          row["estimate"] = r.estimate;
          row["verdict"] = r.verdict;
          rows.append(row);
        }
        d["rows"] = rows;
        return d;
      },
      py::arg("config_path"), py::arg("out_dir") = std::string(),
      "Parse a config file, run the experiment, and return a result summary");
}
