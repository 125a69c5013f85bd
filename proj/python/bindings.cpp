#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nestkrig/aggregated_process.hpp"
#include "nestkrig/cli_io.hpp"
#include "nestkrig/diagnostics.hpp"
#include "nestkrig/errors.hpp"
#include "nestkrig/experiments.hpp"
#include "nestkrig/gp_core.hpp"
#include "nestkrig/nested_aggregator.hpp"
#include "nestkrig/variance_aggregators.hpp"

namespace py = pybind11;
using namespace nestkrig;

namespace {

using BankPtr = std::shared_ptr<SubmodelBank>;

BankPtr mutable_bank(std::shared_ptr<const SubmodelBank> bank) {
  return std::const_pointer_cast<SubmodelBank>(std::move(bank));
}

py::dict nested_dict(const NestedPrediction &np) {
  py::dict d;
  d["mean"] = np.mean;
  d["variance"] = np.variance;
  d["kM"] = np.kM;
  d["KM"] = np.KM;
  d["submodel_weights"] = np.submodel_weights;
  d["effective_weights"] = np.effective_weights;
  d["submodel_means"] = np.submodel_means;
  d["submodel_vars"] = np.submodel_vars;
  d["ridge_used"] = np.ridge_used;
  return d;
}

py::dict report_dict(const ExperimentReport &report) {
  py::list records;
  for (const auto &r : report.records) {
    py::dict d;
    d["n"] = r.n;
    d["p"] = r.p;
    d["mse_method"] = r.mse_method;
    d["mse_nested"] = r.mse_nested;
    d["mse_full"] = r.mse_full;
    d["sup_grid_mse_nested"] = r.sup_grid_mse_nested;
    d["sup_grid_mse_full"] = r.sup_grid_mse_full;
    d["nn_bound"] = r.nn_bound;
    d["delta"] = r.delta;
    d["eps1"] = r.eps1;
    d["eps2"] = r.eps2;
    d["note"] = r.note;
    records.append(d);
  }
  py::list verdicts;
  for (const auto &v : report.verdicts) {
    verdicts.append(py::make_tuple(v.name, v.passed, v.detail));
  }
  py::dict out;
  out["kind"] = report.kind;
  out["method"] = report.method;
  out["records"] = records;
  out["verdicts"] = verdicts;
  out["all_passed"] = report.all_passed();
  return out;
}

} // namespace

PYBIND11_MODULE(_nestkrig, m) {
  m.doc() = "Nested Kriging core bindings";

  static py::exception<Error> error_type(m, "NestkrigError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) {
        std::rethrow_exception(p);
      }
    } catch (const Error &e) {
      const std::string message =
          std::string(category_name(e.category())) + ": " + e.what();
      PyErr_SetString(error_type.ptr(), message.c_str());
    }
  });

  py::class_<KernelSpec>(m, "KernelSpec")
      .def(py::init([](const std::string &family, double variance,
                       const Vector &lengthscales) {
             return KernelSpec(parse_kernel_family(family), variance, lengthscales);
           }),
           py::arg("family"), py::arg("variance"), py::arg("lengthscales"))
      .def_static(
          "isotropic",
          [](const std::string &family, double variance, double lengthscale,
             Eigen::Index dim) {
            return KernelSpec::isotropic(parse_kernel_family(family), variance,
                                         lengthscale, dim);
          },
          py::arg("family"), py::arg("variance"), py::arg("lengthscale"),
          py::arg("dim") = 1)
      .def_property_readonly("family",
                             [](const KernelSpec &k) { return std::string(to_string(k.family())); })
      .def_property_readonly("variance", &KernelSpec::variance)
      .def_property_readonly("lengthscales", &KernelSpec::lengthscales)
      .def_property_readonly("dim", &KernelSpec::dim)
      .def_property_readonly("neb_qualified", [](const KernelSpec &k) { return neb_qualified(k); })
      .def("__call__", [](const KernelSpec &k, const Point &x, const Point &xp) {
        return k(x, xp);
      });

  m.def("kernel_matrix",
        [](const KernelSpec &spec, const PointSet &a, std::optional<PointSet> b) {
          return b ? kernel_matrix(spec, a, *b) : kernel_matrix(spec, a);
        },
        py::arg("spec"), py::arg("a"), py::arg("b") = std::nullopt);

  py::class_<FullModel>(m, "FullModel")
      .def("predict",
           [](const FullModel &f, const Point &x) {
             const Prediction p = f.predict(x);
             return py::make_tuple(p.mean, p.variance);
           })
      .def("weights", [](const FullModel &f, const Point &x) { return f.weights(x); })
      .def("covariance",
           [](const FullModel &f, const Point &x, const Point &xp) {
             return f.covariance(x, xp);
           })
      .def_property_readonly("jitter_used", &FullModel::jitter_used);

  m.def("fit_full", &fit_full, py::arg("spec"), py::arg("design"),
        py::arg("observations"));

  m.def("make_partition",
        [](Eigen::Index n, Eigen::Index p, const std::string &strategy,
           std::uint64_t seed, std::optional<PointSet> design) {
          return make_partition(n, p, parse_partition_strategy(strategy), seed,
                                design.value_or(PointSet()))
              .groups;
        },
        py::arg("n"), py::arg("p"), py::arg("strategy") = "contiguous",
        py::arg("seed") = 1, py::arg("design") = std::nullopt);

  py::class_<SubmodelBank, BankPtr>(m, "SubmodelBank")
      .def_static(
          "fit",
          [](const KernelSpec &spec, const PointSet &design, const Vector &y,
             const std::vector<IndexGroup> &groups) {
            return mutable_bank(SubmodelBank::fit(spec, design, y, Partition{groups}));
          },
          py::arg("spec"), py::arg("design"), py::arg("observations"),
          py::arg("groups"))
      .def_property_readonly("num_submodels", &SubmodelBank::num_submodels)
      .def_property_readonly("groups",
                             [](const SubmodelBank &b) { return b.partition().groups; })
      .def("design_covariance", &SubmodelBank::design_covariance)
      .def("predict", [](const SubmodelBank &b, const Point &x) {
        const SubmodelPrediction p = b.predict(x);
        return py::make_tuple(p.means, p.vars, p.lambda);
      });

  m.def("nested_predict",
        [](const BankPtr &bank, const Point &x) {
          return nested_dict(nested_predict(*bank, x));
        },
        py::arg("bank"), py::arg("x"));

  m.def("aggregate",
        [](const BankPtr &bank, const std::string &method, const Point &x) {
          const AggregationMethod am = parse_aggregation_method(method);
          if (am == AggregationMethod::Nested) {
            return nested_dict(nested_predict(*bank, x));
          }
          const VarianceAggregate agg = aggregate_variance_based(*bank, am, x);
          const SubmodelWeights w = bank->weights(x);
          py::dict d;
          d["mean"] = agg.mean;
          d["alphas"] = agg.alphas;
          d["effective_weights"] = agg.effective_weights;
          d["mse"] = exact_mse(agg.effective_weights, w.prior_variance, w.k_design,
                               bank->design_covariance());
          return d;
        },
        py::arg("bank"), py::arg("method"), py::arg("x"));

  m.def("exact_mse",
        [](const Vector &weights, const Point &x0, const KernelSpec &spec,
           const PointSet &design) { return exact_mse(weights, x0, spec, design); },
        py::arg("weights"), py::arg("x0"), py::arg("spec"), py::arg("design"));

  py::class_<AggregatedProcess>(m, "AggregatedProcess")
      .def(py::init([](const BankPtr &bank) { return AggregatedProcess(bank); }),
           py::arg("bank"))
      .def("nested_weights",
           [](const AggregatedProcess &a, const Point &x) { return a.nested_weights(x); })
      .def("prior_covariance",
           [](const AggregatedProcess &a, const Point &x, const Point &xp) {
             return a.prior_covariance(x, xp);
           })
      .def("prior_covariance_matrix", &AggregatedProcess::prior_covariance_matrix)
      .def("posterior_covariance",
           [](const AggregatedProcess &a, const Point &x, const Point &xp) {
             return a.posterior_covariance(x, xp);
           })
      .def("posterior_covariance_matrix", &AggregatedProcess::posterior_covariance_matrix)
      .def("conditional_means", &AggregatedProcess::conditional_means)
      .def("design_prior_covariance", &AggregatedProcess::design_prior_covariance)
      .def_property_readonly("design_jitter", &AggregatedProcess::design_jitter);

  m.def("k_agg",
        [](const AggregatedProcess &a, const Point &x, const Point &xp) {
          return k_agg(a, x, xp);
        });
  m.def("c_agg",
        [](const AggregatedProcess &a, const Point &x, const Point &xp) {
          return c_agg(a, x, xp);
        });
  m.def("sample_paths", &sample_paths, py::arg("model"), py::arg("grid"),
        py::arg("count"), py::arg("seed"), py::arg("conditional") = false,
        py::arg("design_values") = std::nullopt,
        py::call_guard<py::gil_scoped_release>());

  py::class_<ErrorAnalysis>(m, "ErrorAnalysis")
      .def(py::init([](const BankPtr &bank) { return ErrorAnalysis(bank); }),
           py::arg("bank"))
      .def_property_readonly("lambda_min", &ErrorAnalysis::lambda_min)
      .def("delta_matrix",
           [](const ErrorAnalysis &e, const Point &x) { return e.delta_matrix(x); })
      .def("k_norm_squared", &ErrorAnalysis::k_norm_squared)
      .def("covariance_identities",
           [](const ErrorAnalysis &e, const Point &x) {
             const CovarianceIdentities c = e.covariance_identities(x);
             py::dict d;
             d["lhs_mean"] = c.lhs_mean;
             d["rhs_mean"] = c.rhs_mean;
             d["lhs_var"] = c.lhs_var;
             d["rhs_var"] = c.rhs_var;
             return d;
           })
      .def("error_bound_check",
           [](const ErrorAnalysis &e, const Point &x) {
             const BoundCheck b = e.error_bound_check(x);
             py::dict d;
             d["mean_gap"] = b.mean_gap;
             d["var_gap"] = b.var_gap;
             d["delta_norm"] = b.delta_norm;
             d["mean_bound"] = b.mean_bound;
             d["var_bound"] = b.var_bound;
             d["sandwich_high"] = b.sandwich_high;
             d["mean_ok"] = b.mean_ok;
             d["var_ok"] = b.var_ok;
             d["sandwich_ok"] = b.sandwich_ok;
             return d;
           })
      .def("bounds_row", [](const ErrorAnalysis &e, const Point &x) {
        const BoundsRow b = e.bounds_row(x);
        py::dict d;
        d["mean_gap"] = b.mean_gap;
        d["mean_gap_rms"] = b.mean_gap_rms;
        d["mean_gap_bound"] = b.mean_gap_bound;
        d["var_gap"] = b.var_gap;
        d["var_gap_upper"] = b.var_gap_upper;
        return d;
      });

  m.def("run_consistency",
        [](const KernelSpec &spec, const std::vector<Eigen::Index> &n_values,
           const PointSet &grid, const std::string &partition, std::uint64_t seed,
           Eigen::Index p) {
          ConsistencyConfig cfg{spec, grid, n_values,
                                parse_partition_strategy(partition), seed, p};
          ExperimentReport report;
          {
            py::gil_scoped_release release;
            report = run_consistency(cfg);
          }
          return report_dict(report);
        },
        py::arg("spec"), py::arg("n_values"), py::arg("grid"),
        py::arg("partition") = "random", py::arg("seed") = 1, py::arg("p") = 0);

  m.def("run_nonconsistency",
        [](const KernelSpec &spec, const Point &x0, const Point &xbar, double r,
           const std::vector<Eigen::Index> &n_values, const std::string &method,
           double delta_scale, std::optional<PointSet> grid) {
          NonConsistencyConfig cfg{spec,
                                   x0,
                                   xbar,
                                   r,
                                   n_values,
                                   parse_aggregation_method(method),
                                   delta_scale,
                                   grid.value_or(PointSet(0, spec.dim()))};
          ExperimentReport report;
          {
            py::gil_scoped_release release;
            report = run_nonconsistency(cfg);
          }
          return report_dict(report);
        },
        py::arg("spec"), py::arg("x0"), py::arg("xbar"), py::arg("r"),
        py::arg("n_values"), py::arg("method") = "poe", py::arg("delta_scale") = 1.0,
        py::arg("grid") = std::nullopt);

  m.def(
      "run_cli",
      [](const std::vector<std::string> &args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_command(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "Runs the nestkrig command line; returns (exit_code, stdout, stderr).");
}
