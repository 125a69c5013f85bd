#include "nestkrig/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nestkrig/aggregated_process.hpp"
#include "nestkrig/diagnostics.hpp"
#include "nestkrig/errors.hpp"
#include "nestkrig/experiments.hpp"
#include "nestkrig/gp_core.hpp"
#include "nestkrig/nested_aggregator.hpp"
#include "nestkrig/parallel.hpp"
#include "nestkrig/variance_aggregators.hpp"

namespace nestkrig {

using nlohmann::json;

namespace {

std::string trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return {};
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string &line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

std::optional<double> parse_number(const std::string &text) {
  if (text.empty()) {
    return std::nullopt;
  }
  char *end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    return std::nullopt;
  }
  return v;
}

void check_keys(const json &j, std::initializer_list<const char *> allowed,
                const std::string &context) {
  if (!j.is_object()) {
    throw ParseError(context + " must be a JSON object");
  }
  for (const auto &item : j.items()) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char *key) { return item.key() == key; });
    if (!known) {
      throw ParseError("unknown key '" + item.key() + "' in " + context);
    }
  }
}

template <typename T>
std::vector<T> scalar_or_array(const json &j) {
  if (j.is_array()) {
    return j.get<std::vector<T>>();
  }
  return {j.get<T>()};
}

GridSpec grid_from_json(const json &j) {
  check_keys(j, {"min", "max", "count"}, "grid");
  GridSpec grid;
  if (j.contains("min")) {
    grid.min = scalar_or_array<double>(j.at("min"));
  }
  if (j.contains("max")) {
    grid.max = scalar_or_array<double>(j.at("max"));
  }
  if (j.contains("count")) {
    grid.count = scalar_or_array<Eigen::Index>(j.at("count"));
  }
  return grid;
}

json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path.string() + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    throw ParseError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

// Matches the kernel dimension to the data: an isotropic one-dimensional
// kernel is broadcast, anything else must agree exactly.
KernelSpec kernel_for_dim(const KernelSpec &spec, Eigen::Index dim) {
  if (spec.dim() == dim) {
    return spec;
  }
  if (spec.dim() == 1) {
    return KernelSpec::isotropic(spec.family(), spec.variance(),
                                 spec.lengthscales()[0], dim);
  }
  throw ArgumentError("kernel has " + std::to_string(spec.dim()) +
                      " lengthscales but the data are " + std::to_string(dim) +
                      "-dimensional");
}

std::vector<std::string> coordinate_names(Eigen::Index dim,
                                          const std::string &prefix) {
  if (dim == 1) {
    return {prefix};
  }
  std::vector<std::string> names;
  for (Eigen::Index i = 1; i <= dim; ++i) {
    names.push_back(prefix + std::to_string(i));
  }
  return names;
}

std::vector<double> row_values(const PointSet &points, Eigen::Index r) {
  return {points.row(r).data(), points.row(r).data() + points.cols()};
}

PointSet linspace(double a, double b, Eigen::Index m) {
  PointSet out(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    out(i, 0) = m == 1 ? a : a + (b - a) * static_cast<double>(i) /
                                     static_cast<double>(m - 1);
  }
  return out;
}

bool given(const CLI::Option *opt) { return opt != nullptr && opt->count() > 0; }

// ---------------------------------------------------------------------------
// Flag groups shared by several subcommands.

struct KernelFlags {
  std::string family;
  double variance = 1.0;
  std::vector<double> lengthscale;
  CLI::Option *family_opt = nullptr;
  CLI::Option *variance_opt = nullptr;
  CLI::Option *lengthscale_opt = nullptr;

  void add(CLI::App *app, const std::string &default_family,
           double default_lengthscale) {
    family = default_family;
    lengthscale = {default_lengthscale};
    family_opt = app->add_option("--kernel", family,
                                 "Kernel family: squared_exponential, matern12, "
                                 "matern32, matern52")
                     ->capture_default_str();
    variance_opt = app->add_option("--variance", variance, "Kernel variance")
                       ->capture_default_str();
    lengthscale_opt =
        app->add_option("--lengthscale", lengthscale,
                        "Lengthscale, or comma-separated list (one per dimension)")
            ->delimiter(',')
            ->capture_default_str();
  }

  KernelSpec apply(const KernelSpec &base) const {
    const KernelFamily f = given(family_opt) ? parse_kernel_family(family)
                                             : base.family();
    const double v = given(variance_opt) ? variance : base.variance();
    Vector ls = base.lengthscales();
    if (given(lengthscale_opt)) {
      ls = Eigen::Map<const Vector>(lengthscale.data(),
                                    static_cast<Eigen::Index>(lengthscale.size()));
    }
    return KernelSpec(f, v, ls);
  }

  KernelSpec defaults() const {
    return KernelSpec(parse_kernel_family(family), variance,
                      Eigen::Map<const Vector>(
                          lengthscale.data(),
                          static_cast<Eigen::Index>(lengthscale.size())));
  }
};

struct GridFlags {
  std::vector<double> min{0.0};
  std::vector<double> max{1.0};
  std::vector<Eigen::Index> count{101};
  CLI::Option *min_opt = nullptr;
  CLI::Option *max_opt = nullptr;
  CLI::Option *count_opt = nullptr;

  void add(CLI::App *app, Eigen::Index default_count) {
    count = {default_count};
    min_opt = app->add_option("--grid-min", min,
                              "Grid lower bound (scalar or per dimension)")
                  ->delimiter(',')
                  ->capture_default_str();
    max_opt = app->add_option("--grid-max", max,
                              "Grid upper bound (scalar or per dimension)")
                  ->delimiter(',')
                  ->capture_default_str();
    count_opt = app->add_option("--grid-count", count,
                                "Grid points per dimension (scalar or list)")
                    ->delimiter(',')
                    ->capture_default_str();
  }

  GridSpec apply(GridSpec base) const {
    if (given(min_opt)) {
      base.min = min;
    }
    if (given(max_opt)) {
      base.max = max;
    }
    if (given(count_opt)) {
      base.count = count;
    }
    return base;
  }
};

// Flags of the subcommands driven by a RunConfig.
struct RunFlags {
  std::string config;
  KernelFlags kernel;
  std::string data;
  Eigen::Index p = 2;
  std::string strategy = "contiguous";
  std::uint64_t seed = 1;
  std::string method = "nested";
  GridFlags grid;
  std::string out = "out.csv";
  CLI::Option *config_opt = nullptr;
  CLI::Option *data_opt = nullptr;
  CLI::Option *p_opt = nullptr;
  CLI::Option *strategy_opt = nullptr;
  CLI::Option *seed_opt = nullptr;
  CLI::Option *method_opt = nullptr;
  CLI::Option *out_opt = nullptr;

  void add(CLI::App *app, bool with_method) {
    config_opt = app->add_option("--config", config,
                                 "JSON run configuration (flags take precedence)");
    kernel.add(app, "squared_exponential", 0.2);
    data_opt = app->add_option("--data", data,
                               "CSV dataset (header, coordinates, value); "
                               "default: five-point synthetic sin(2 pi x) + x");
    p_opt = app->add_option("--p", p, "Number of submodels")->capture_default_str();
    strategy_opt = app->add_option("--partition", strategy,
                                   "Partition strategy: contiguous, random, nearest")
                       ->capture_default_str();
    seed_opt = app->add_option("--seed", seed, "Partition seed")->capture_default_str();
    if (with_method) {
      method_opt = app->add_option("--method", method,
                                   "Aggregation: nested, poe, gpoe, bcm, rbcm")
                       ->capture_default_str();
    }
    grid.add(app, 101);
    out_opt = app->add_option("--out", out, "Output CSV path")->capture_default_str();
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (given(config_opt)) {
      cfg = load_run_config(config);
    }
    cfg.kernel = kernel.apply(cfg.kernel);
    if (given(data_opt)) {
      cfg.data_path = data;
    }
    if (given(p_opt)) {
      cfg.partition_p = p;
    }
    if (given(strategy_opt)) {
      cfg.partition_strategy = parse_partition_strategy(strategy);
    }
    if (given(seed_opt)) {
      cfg.partition_seed = seed;
    }
    if (given(method_opt)) {
      cfg.method = parse_aggregation_method(method);
    }
    cfg.grid = grid.apply(cfg.grid);
    if (given(out_opt)) {
      cfg.output = out;
    }
    return cfg;
  }
};

struct FittedRun {
  RunConfig cfg;
  Dataset data;
  std::shared_ptr<const SubmodelBank> bank;
  PointSet grid;
};

FittedRun fit_run(const RunConfig &cfg) {
  FittedRun run{cfg, cfg.dataset(), nullptr, {}};
  const Eigen::Index n = run.data.design.rows();
  const Eigen::Index d = run.data.design.cols();
  run.cfg.kernel = kernel_for_dim(cfg.kernel, d);
  if (cfg.partition_p < 1 || cfg.partition_p > n) {
    throw ArgumentError("partition p must lie in [1, " + std::to_string(n) + "]");
  }
  Partition partition = make_partition(n, cfg.partition_p, cfg.partition_strategy,
                                       cfg.partition_seed, run.data.design);
  run.bank = SubmodelBank::fit(run.cfg.kernel, run.data.design, run.data.values,
                               std::move(partition));
  run.grid = cfg.grid.points(d);
  return run;
}

// ---------------------------------------------------------------------------
// Subcommands.

void cmd_predict(const RunFlags &flags, bool verbose, std::ostream &out) {
  const FittedRun run = fit_run(flags.resolve());
  const SubmodelBank &bank = *run.bank;
  const auto p = static_cast<Eigen::Index>(bank.num_submodels());
  const Eigen::Index d = run.grid.cols();
  const AggregationMethod method = run.cfg.method;

  std::vector<std::string> header = coordinate_names(d, "x");
  header.push_back("mean");
  header.push_back("variance");
  if (verbose) {
    for (Eigen::Index i = 1; i <= p; ++i) {
      header.push_back("M_" + std::to_string(i));
    }
    for (Eigen::Index i = 1; i <= p; ++i) {
      header.push_back("v_" + std::to_string(i));
    }
  }

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(run.grid.rows()));
  parallel_for(rows.size(), [&](std::size_t r) {
    const auto idx = static_cast<Eigen::Index>(r);
    const SubmodelWeights w = bank.weights(run.grid.row(idx));
    double mean = 0.0;
    double variance = 0.0;
    if (method == AggregationMethod::Nested) {
      const NestedPrediction np = nested_predict(bank, w);
      mean = np.mean;
      variance = np.variance;
    } else {
      const Vector alphas = variance_weights(method, w.vars, w.prior_variance);
      mean = alphas.dot(w.means);
      variance = exact_mse(bank.scatter(w, alphas), w.prior_variance, w.k_design,
                           bank.design_covariance());
    }
    std::vector<double> row = row_values(run.grid, idx);
    row.push_back(mean);
    row.push_back(variance);
    if (verbose) {
      row.insert(row.end(), w.means.data(), w.means.data() + p);
      row.insert(row.end(), w.vars.data(), w.vars.data() + p);
    }
    rows[r] = std::move(row);
  });
  write_csv(run.cfg.output, header, rows);
  out << "predict: wrote " << rows.size() << " rows to " << run.cfg.output.string()
      << "\n";
}

void cmd_covariance_report(const RunFlags &flags, std::ostream &out) {
  const FittedRun run = fit_run(flags.resolve());
  const AggregatedProcess process(run.bank);
  const PointSet &g = run.grid;
  const Matrix k = kernel_matrix(run.cfg.kernel, g);
  const Matrix ka = process.prior_covariance_matrix(g, g);
  const Matrix ca = process.posterior_covariance_matrix(g);
  const Eigen::Index d = g.cols();

  std::vector<std::string> header = coordinate_names(d, "x");
  for (const auto &name : coordinate_names(d, "x_prime")) {
    header.push_back(name);
  }
  header.insert(header.end(), {"k", "kA", "cA"});
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(g.rows() * g.rows()));
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
      std::vector<double> row = row_values(g, i);
      const std::vector<double> second = row_values(g, j);
      row.insert(row.end(), second.begin(), second.end());
      row.insert(row.end(), {k(i, j), ka(i, j), ca(i, j)});
      rows.push_back(std::move(row));
    }
  }
  write_csv(run.cfg.output, header, rows);
  out << "covariance-report: wrote " << rows.size() << " rows to "
      << run.cfg.output.string() << "\n";
}

std::vector<std::vector<double>> bounds_rows(const ErrorAnalysis &analysis,
                                             const PointSet &grid) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(grid.rows()));
  parallel_for(rows.size(), [&](std::size_t r) {
    const auto idx = static_cast<Eigen::Index>(r);
    const BoundsRow b = analysis.bounds_row(grid.row(idx));
    std::vector<double> row = row_values(grid, idx);
    row.insert(row.end(), {b.mean_gap, b.mean_gap_rms, b.mean_gap_bound, b.var_gap,
                           b.var_gap_upper});
    rows[r] = std::move(row);
  });
  return rows;
}

std::vector<std::string> bounds_header(Eigen::Index d) {
  std::vector<std::string> header = coordinate_names(d, "x");
  header.insert(header.end(),
                {"mean_gap", "mean_gap_rms", "mean_gap_bound", "var_gap",
                 "var_gap_upper"});
  return header;
}

void cmd_bounds_report(const RunFlags &flags, std::ostream &out) {
  const FittedRun run = fit_run(flags.resolve());
  const ErrorAnalysis analysis(run.bank);
  const auto rows = bounds_rows(analysis, run.grid);
  write_csv(run.cfg.output, bounds_header(run.grid.cols()), rows);
  out << "bounds-report: wrote " << rows.size() << " rows to "
      << run.cfg.output.string() << "\n";
}

void cmd_sample(const RunFlags &flags, std::size_t count, std::uint64_t seed,
                bool conditional, std::ostream &out) {
  if (count < 1) {
    throw ArgumentError("--count must be at least 1");
  }
  const FittedRun run = fit_run(flags.resolve());
  const AggregatedProcess process(run.bank);
  const Matrix paths =
      sample_paths(process, run.grid, count, seed, conditional,
                   conditional ? std::optional<Vector>(run.data.values)
                               : std::nullopt);
  std::vector<std::string> header = coordinate_names(run.grid.cols(), "x");
  for (std::size_t s = 1; s <= count; ++s) {
    header.push_back("sample_" + std::to_string(s));
  }
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < run.grid.rows(); ++i) {
    std::vector<double> row = row_values(run.grid, i);
    for (Eigen::Index s = 0; s < paths.rows(); ++s) {
      row.push_back(paths(s, i));
    }
    rows.push_back(std::move(row));
  }
  write_csv(run.cfg.output, header, rows);
  out << "sample: wrote " << count << " paths on " << rows.size() << " points to "
      << run.cfg.output.string() << "\n";
}

void cmd_demo_figure1(const std::filesystem::path &dir, std::size_t samples,
                      std::uint64_t seed, Eigen::Index grid_count,
                      std::ostream &out) {
  if (grid_count < 2) {
    throw ArgumentError("--grid-count must be at least 2");
  }
  if (samples < 1) {
    throw ArgumentError("--samples must be at least 1");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir.string() +
                  "': " + ec.message());
  }

  const KernelSpec spec =
      KernelSpec::isotropic(KernelFamily::SquaredExponential, 1.0, 0.2, 1);
  const Dataset data = generate_dataset(SyntheticData{});
  Partition partition;
  partition.groups = {{0, 1, 2}, {3, 4}};
  auto bank = SubmodelBank::fit(spec, data.design, data.values, partition);
  const ErrorAnalysis analysis(bank);
  const AggregatedProcess &process = analysis.process();
  const FullModel &full = analysis.full_model();
  const PointSet grid = linspace(0.0, 1.0, grid_count);
  const Eigen::Index m = grid.rows();

  {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < data.design.rows(); ++i) {
      rows.push_back({data.design(i, 0), data.values[i]});
    }
    write_csv(dir / "data.csv", {"x", "y"}, rows);
  }
  {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m));
    parallel_for(rows.size(), [&](std::size_t r) {
      const auto i = static_cast<Eigen::Index>(r);
      const Prediction fp = full.predict(grid.row(i));
      const NestedPrediction np = nested_predict(*bank, grid.row(i));
      rows[r] = {grid(i, 0),
                 evaluate_synthetic("sin2pi_plus_x", grid(i, 0)),
                 fp.mean,
                 fp.variance,
                 np.mean,
                 np.variance,
                 np.submodel_means[0],
                 np.submodel_vars[0],
                 np.submodel_means[1],
                 np.submodel_vars[1]};
    });
    write_csv(dir / "prediction.csv",
              {"x", "f", "full_mean", "full_variance", "nested_mean",
               "nested_variance", "M_1", "v_1", "M_2", "v_2"},
              rows);
  }
  {
    const Matrix uncond = sample_paths(process, grid, samples, seed, false);
    const Matrix cond =
        sample_paths(process, grid, samples, seed + 1, true, data.values);
    std::vector<std::string> header{"x"};
    for (std::size_t s = 1; s <= samples; ++s) {
      header.push_back("unconditional_" + std::to_string(s));
    }
    for (std::size_t s = 1; s <= samples; ++s) {
      header.push_back("conditional_" + std::to_string(s));
    }
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < m; ++i) {
      std::vector<double> row{grid(i, 0)};
      for (Eigen::Index s = 0; s < uncond.rows(); ++s) {
        row.push_back(uncond(s, i));
      }
      for (Eigen::Index s = 0; s < cond.rows(); ++s) {
        row.push_back(cond(s, i));
      }
      rows.push_back(std::move(row));
    }
    write_csv(dir / "samples.csv", header, rows);
  }
  {
    const Matrix k = kernel_matrix(spec, grid);
    const Matrix ka = process.prior_covariance_matrix(grid, grid);
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        rows.push_back({grid(i, 0), grid(j, 0), k(i, j), ka(i, j), ka(i, j) - k(i, j)});
      }
    }
    write_csv(dir / "kA_grid.csv", {"x", "x_prime", "k", "kA", "kA_minus_k"}, rows);

    PointSet anchors(2, 1);
    anchors << 0.3, 0.85;
    const Matrix ka_slice = process.prior_covariance_matrix(grid, anchors);
    const Matrix k_slice = kernel_matrix(spec, grid, anchors);
    std::vector<std::vector<double>> slices;
    for (Eigen::Index i = 0; i < m; ++i) {
      slices.push_back({grid(i, 0), k_slice(i, 0), ka_slice(i, 0), k_slice(i, 1),
                        ka_slice(i, 1)});
    }
    write_csv(dir / "kA_slices.csv",
              {"x", "k_at_0.3", "kA_at_0.3", "k_at_0.85", "kA_at_0.85"}, slices);
  }
  write_csv(dir / "bounds.csv", bounds_header(1), bounds_rows(analysis, grid));
  out << "demo-figure1: wrote data.csv, prediction.csv, samples.csv, kA_grid.csv, "
         "kA_slices.csv, bounds.csv to "
      << dir.string() << "\n";
}

// Shared settings of the two experiment subcommands.
struct ExperimentFlags {
  std::string config;
  KernelFlags kernel;
  std::vector<Eigen::Index> n;
  GridFlags grid;
  std::string out = "report.csv";
  CLI::Option *config_opt = nullptr;
  CLI::Option *n_opt = nullptr;
  CLI::Option *out_opt = nullptr;

  void add(CLI::App *app, double default_lengthscale,
           std::vector<Eigen::Index> default_n, Eigen::Index default_grid) {
    config_opt = app->add_option("--config", config,
                                 "JSON experiment configuration (flags take precedence)");
    kernel.add(app, "matern32", default_lengthscale);
    n = std::move(default_n);
    n_opt = app->add_option("--n", n, "Comma-separated design sizes")
                ->delimiter(',')
                ->capture_default_str();
    grid.add(app, default_grid);
    out_opt = app->add_option("--out", out, "Output CSV path")->capture_default_str();
  }
};

json load_experiment_json(const ExperimentFlags &flags,
                          std::initializer_list<const char *> allowed,
                          const std::string &context) {
  if (!given(flags.config_opt)) {
    return json::object();
  }
  json j = read_json_file(flags.config);
  check_keys(j, allowed, context);
  return j;
}

void write_report(const ExperimentReport &report, const std::filesystem::path &path,
                  std::ostream &out) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  file << "n,p,mse_method,mse_nested,mse_full,sup_grid_mse_nested,"
          "sup_grid_mse_full,nn_bound,delta,eps1,eps2,note\n";
  for (const auto &r : report.records) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), '"', '\'');
    file << r.n << ',' << r.p << ',' << format_double(r.mse_method) << ','
         << format_double(r.mse_nested) << ',' << format_double(r.mse_full) << ','
         << format_double(r.sup_grid_mse_nested) << ','
         << format_double(r.sup_grid_mse_full) << ',' << format_double(r.nn_bound)
         << ',' << format_double(r.delta) << ',' << format_double(r.eps1) << ','
         << format_double(r.eps2) << ',' << (note.empty() ? "" : "\"" + note + "\"")
         << '\n';
  }
  if (!file) {
    throw IoError("failed writing '" + path.string() + "'");
  }
  out << report.kind << " (" << report.method << "): wrote "
      << report.records.size() << " rows to " << path.string() << "\n";
  for (const auto &v : report.verdicts) {
    out << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  }
}

struct ExperimentBase {
  KernelSpec spec;
  std::vector<Eigen::Index> n;
  GridSpec grid;
  std::filesystem::path out;
};

ExperimentBase resolve_experiment(const ExperimentFlags &flags, const json &j,
                                  GridSpec default_grid) {
  ExperimentBase base{flags.kernel.defaults(), flags.n, default_grid, flags.out};
  try {
    if (j.contains("kernel")) {
      base.spec = kernel_spec_from_json(j.at("kernel"));
    }
    if (j.contains("n")) {
      base.n = j.at("n").get<std::vector<Eigen::Index>>();
    }
    if (j.contains("grid")) {
      base.grid = grid_from_json(j.at("grid"));
    }
    if (j.contains("output")) {
      base.out = j.at("output").get<std::string>();
    }
  } catch (const json::exception &e) {
    throw ParseError(std::string("invalid experiment configuration: ") + e.what());
  }
  base.spec = flags.kernel.apply(base.spec);
  if (given(flags.n_opt)) {
    base.n = flags.n;
  }
  base.grid = flags.grid.apply(base.grid);
  if (given(flags.out_opt)) {
    base.out = flags.out;
  }
  return base;
}

} // namespace

// ---------------------------------------------------------------------------
// Data and configuration.

Dataset parse_dataset(std::istream &in, const std::string &source_name) {
  std::string line;
  std::size_t line_number = 0;
  std::size_t columns = 0;
  while (columns == 0 && std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) {
      continue;
    }
    columns = split_fields(trim(line)).size();
  }
  if (columns == 0) {
    throw ParseError(source_name + ": missing header row");
  }
  if (columns < 2) {
    throw ParseError(source_name + ": need at least one coordinate and one value column");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string text = trim(line);
    if (text.empty()) {
      continue;
    }
    const auto fields = split_fields(text);
    const std::string where = source_name + ":" + std::to_string(line_number) + ": ";
    if (fields.size() != columns) {
      throw ParseError(where + "expected " + std::to_string(columns) +
                       " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> values;
    for (const auto &field : fields) {
      const auto v = parse_number(field);
      if (!v) {
        throw ParseError(where + "malformed number '" + field + "'");
      }
      if (!std::isfinite(*v)) {
        throw ParseError(where + "non-finite value '" + field + "'");
      }
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) {
    throw ParseError(source_name + ": dataset has no data rows");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(columns - 1);
  Dataset out{PointSet(n, d), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < d; ++c) {
      out.design(i, c) = row[static_cast<std::size_t>(c)];
    }
    out.values[i] = row.back();
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open dataset '" + path.string() + "'");
  }
  return parse_dataset(in, path.string());
}

double evaluate_synthetic(const std::string &function, double x) {
  if (function == "sin2pi_plus_x") {
    return std::sin(2.0 * M_PI * x) + x;
  }
  throw ArgumentError("unknown synthetic function '" + function + "'");
}

Dataset generate_dataset(const SyntheticData &synthetic) {
  if (synthetic.n < 1) {
    throw ArgumentError("synthetic dataset needs n >= 1");
  }
  if (!(synthetic.min <= synthetic.max)) {
    throw ArgumentError("synthetic dataset needs min <= max");
  }
  Dataset out{linspace(synthetic.min, synthetic.max, synthetic.n),
              Vector(synthetic.n)};
  for (Eigen::Index i = 0; i < synthetic.n; ++i) {
    out.values[i] = evaluate_synthetic(synthetic.function, out.design(i, 0));
  }
  return out;
}

PointSet GridSpec::points(Eigen::Index dim) const {
  auto pick = [dim](const auto &values, const char *name) {
    using T = typename std::decay_t<decltype(values)>::value_type;
    if (values.size() == 1) {
      return std::vector<T>(static_cast<std::size_t>(dim), values.front());
    }
    if (static_cast<Eigen::Index>(values.size()) != dim) {
      throw ArgumentError(std::string("grid ") + name + " has " +
                          std::to_string(values.size()) + " entries for dimension " +
                          std::to_string(dim));
    }
    return values;
  };
  const auto lo = pick(min, "min");
  const auto hi = pick(max, "max");
  const auto counts = pick(count, "count");
  Eigen::Index total = 1;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] < 1) {
      throw ArgumentError("grid count must be at least 1");
    }
    if (!(lo[c] <= hi[c])) {
      throw ArgumentError("grid min must not exceed grid max");
    }
    total *= counts[c];
  }
  PointSet out(total, dim);
  for (Eigen::Index r = 0; r < total; ++r) {
    Eigen::Index rest = r;
    for (Eigen::Index c = dim - 1; c >= 0; --c) {
      const auto uc = static_cast<std::size_t>(c);
      const Eigen::Index i = rest % counts[uc];
      rest /= counts[uc];
      out(r, c) = counts[uc] == 1
                      ? lo[uc]
                      : lo[uc] + (hi[uc] - lo[uc]) * static_cast<double>(i) /
                                     static_cast<double>(counts[uc] - 1);
    }
  }
  return out;
}

Dataset RunConfig::dataset() const {
  return data_path ? load_dataset(*data_path) : generate_dataset(synthetic);
}

RunConfig run_config_from_json(const json &j) {
  check_keys(j, {"kernel", "data", "partition", "method", "grid", "output"},
             "run configuration");
  RunConfig cfg;
  try {
    if (j.contains("kernel")) {
      cfg.kernel = kernel_spec_from_json(j.at("kernel"));
    }
    if (j.contains("data")) {
      const json &data = j.at("data");
      check_keys(data, {"path", "synthetic"}, "data");
      if (data.contains("path") == data.contains("synthetic")) {
        throw ParseError("data needs exactly one of 'path' or 'synthetic'");
      }
      if (data.contains("path")) {
        cfg.data_path = data.at("path").get<std::string>();
      } else {
        const json &syn = data.at("synthetic");
        check_keys(syn, {"function", "n", "min", "max"}, "data.synthetic");
        cfg.synthetic.function = syn.value("function", cfg.synthetic.function);
        cfg.synthetic.n = syn.value("n", cfg.synthetic.n);
        cfg.synthetic.min = syn.value("min", cfg.synthetic.min);
        cfg.synthetic.max = syn.value("max", cfg.synthetic.max);
      }
    }
    if (j.contains("partition")) {
      const json &part = j.at("partition");
      check_keys(part, {"p", "strategy", "seed"}, "partition");
      cfg.partition_p = part.value("p", cfg.partition_p);
      if (part.contains("strategy")) {
        cfg.partition_strategy =
            parse_partition_strategy(part.at("strategy").get<std::string>());
      }
      cfg.partition_seed = part.value("seed", cfg.partition_seed);
    }
    if (j.contains("method")) {
      cfg.method = parse_aggregation_method(j.at("method").get<std::string>());
    }
    if (j.contains("grid")) {
      cfg.grid = grid_from_json(j.at("grid"));
    }
    if (j.contains("output")) {
      cfg.output = j.at("output").get<std::string>();
    }
  } catch (const json::exception &e) {
    throw ParseError(std::string("invalid run configuration: ") + e.what());
  } catch (const ArgumentError &e) {
    throw ParseError(std::string("invalid run configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path &path) {
  return run_config_from_json(read_json_file(path));
}

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  if (value == 0.0) {
    return "0";
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_csv(const std::filesystem::path &path,
               const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    file << (c ? "," : "") << header[c];
  }
  file << '\n';
  for (const auto &row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      file << (c ? "," : "") << format_double(row[c]);
    }
    file << '\n';
  }
  if (!file) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// Command line.

int run_command(const std::vector<std::string> &args, std::ostream &out,
                std::ostream &err) {
  CLI::App app{"Nested Kriging: aggregation of Gaussian process submodels, "
               "error diagnostics and consistency experiments",
               "nestkrig"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "nestkrig 0.1.0");

  RunFlags predict_flags;
  bool verbose = false;
  CLI::App *predict =
      app.add_subcommand("predict", "Aggregated prediction on a grid (CSV: mean, variance)");
  predict_flags.add(predict, true);
  predict->add_flag("--verbose", verbose, "Also write every submodel's mean and variance");

  std::string figure_dir = "figure1";
  std::size_t figure_samples = 5;
  std::uint64_t figure_seed = 1;
  Eigen::Index figure_grid = 101;
  CLI::App *figure = app.add_subcommand(
      "demo-figure1", "Five-point illustration: samples, predictions, k_A and bounds");
  figure->add_option("--out-dir", figure_dir, "Output directory")->capture_default_str();
  figure->add_option("--samples", figure_samples, "Sample paths per kind")
      ->capture_default_str();
  figure->add_option("--seed", figure_seed, "Sampling seed")->capture_default_str();
  figure->add_option("--grid-count", figure_grid, "Points of the [0, 1] grid")
      ->capture_default_str();

  RunFlags cov_flags;
  CLI::App *cov = app.add_subcommand(
      "covariance-report", "k, k_A and c_A over all pairs of grid points");
  cov_flags.add(cov, false);

  RunFlags bounds_flags;
  CLI::App *bounds = app.add_subcommand(
      "bounds-report", "Nested versus full-model gaps and their bounds on a grid");
  bounds_flags.add(bounds, false);

  RunFlags sample_flags;
  std::size_t sample_count = 5;
  std::uint64_t sample_seed = 1;
  bool conditional = false;
  CLI::App *sample =
      app.add_subcommand("sample", "Sample paths of the aggregated process on a grid");
  sample_flags.add(sample, false);
  sample->add_option("--count", sample_count, "Number of paths")->capture_default_str();
  sample->add_option("--sample-seed", sample_seed, "Sampling seed")
      ->capture_default_str();
  sample->add_flag("--conditional", conditional,
                   "Condition on the dataset values at the design points");

  ExperimentFlags cons_flags;
  std::string cons_partition = "random";
  std::uint64_t cons_seed = 1;
  Eigen::Index cons_p = 0;
  CLI::App *cons = app.add_subcommand(
      "consistency", "Nested sup-grid MSE on dense equispaced or Halton designs");
  cons_flags.add(cons, 0.2, {10, 20, 40, 80, 160}, 101);
  CLI::Option *cons_partition_opt =
      cons->add_option("--partition", cons_partition,
                       "Partition strategy: contiguous, random, nearest")
          ->capture_default_str();
  CLI::Option *cons_seed_opt =
      cons->add_option("--seed", cons_seed, "Partition seed")->capture_default_str();
  CLI::Option *cons_p_opt =
      cons->add_option("--p", cons_p, "Fixed number of submodels (0: ceil(sqrt(n)))")
          ->capture_default_str();

  ExperimentFlags non_flags;
  std::string non_method = "poe";
  std::vector<double> non_x0{0.2};
  std::vector<double> non_xbar{0.8};
  double non_r = 0.1;
  double non_delta = 1.0;
  CLI::App *non = app.add_subcommand(
      "nonconsistency", "Adversarial designs: variance-based rules versus nested");
  non_flags.add(non, 0.15, {50, 100, 200, 400, 800}, 0);
  CLI::Option *non_method_opt =
      non->add_option("--method", non_method, "poe, gpoe, bcm or rbcm")
          ->capture_default_str();
  CLI::Option *non_x0_opt =
      non->add_option("--x0", non_x0, "Target point")->delimiter(',')->capture_default_str();
  CLI::Option *non_xbar_opt =
      non->add_option("--xbar", non_xbar, "Accumulation point of the w-points")
          ->delimiter(',')
          ->capture_default_str();
  CLI::Option *non_r_opt =
      non->add_option("--r", non_r, "Cluster radius")->capture_default_str();
  CLI::Option *non_delta_opt =
      non->add_option("--delta-scale", non_delta,
                      "Excluded radius around x0 is delta_scale / sqrt(n)")
          ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::Success &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "ERROR:argument:" << e.what() << "\n";
    return 1;
  }

  try {
    if (predict->parsed()) {
      cmd_predict(predict_flags, verbose, out);
    } else if (figure->parsed()) {
      cmd_demo_figure1(figure_dir, figure_samples, figure_seed, figure_grid, out);
    } else if (cov->parsed()) {
      cmd_covariance_report(cov_flags, out);
    } else if (bounds->parsed()) {
      cmd_bounds_report(bounds_flags, out);
    } else if (sample->parsed()) {
      cmd_sample(sample_flags, sample_count, sample_seed, conditional, out);
    } else if (cons->parsed()) {
      const json j = load_experiment_json(
          cons_flags, {"kernel", "n", "grid", "output", "partition"},
          "consistency configuration");
      ExperimentBase base = resolve_experiment(cons_flags, j, GridSpec{});
      ConsistencyConfig cfg{base.spec, {}, base.n};
      cfg.partition_rule = parse_partition_strategy(cons_partition);
      cfg.seed = cons_seed;
      cfg.fixed_num_groups = cons_p;
      if (j.contains("partition")) {
        const json &part = j.at("partition");
        check_keys(part, {"p", "strategy", "seed"}, "partition");
        try {
          if (part.contains("strategy") && !given(cons_partition_opt)) {
            cfg.partition_rule =
                parse_partition_strategy(part.at("strategy").get<std::string>());
          }
          if (part.contains("seed") && !given(cons_seed_opt)) {
            cfg.seed = part.at("seed").get<std::uint64_t>();
          }
          if (part.contains("p") && !given(cons_p_opt)) {
            cfg.fixed_num_groups = part.at("p").get<Eigen::Index>();
          }
        } catch (const json::exception &e) {
          throw ParseError(std::string("invalid partition: ") + e.what());
        }
      }
      if (cfg.fixed_num_groups < 0) {
        throw ArgumentError("--p must be non-negative");
      }
      cfg.domain_grid = base.grid.points(base.spec.dim());
      write_report(run_consistency(cfg), base.out, out);
    } else if (non->parsed()) {
      const json j = load_experiment_json(
          non_flags,
          {"kernel", "n", "grid", "output", "method", "x0", "xbar", "r", "delta_scale"},
          "nonconsistency configuration");
      GridSpec no_grid;
      no_grid.count = {0};
      ExperimentBase base = resolve_experiment(non_flags, j, no_grid);
      std::vector<double> x0 = non_x0;
      std::vector<double> xbar = non_xbar;
      double r = non_r;
      double delta = non_delta;
      std::string method = non_method;
      try {
        if (j.contains("x0") && !given(non_x0_opt)) {
          x0 = scalar_or_array<double>(j.at("x0"));
        }
        if (j.contains("xbar") && !given(non_xbar_opt)) {
          xbar = scalar_or_array<double>(j.at("xbar"));
        }
        if (j.contains("r") && !given(non_r_opt)) {
          r = j.at("r").get<double>();
        }
        if (j.contains("delta_scale") && !given(non_delta_opt)) {
          delta = j.at("delta_scale").get<double>();
        }
        if (j.contains("method") && !given(non_method_opt)) {
          method = j.at("method").get<std::string>();
        }
      } catch (const json::exception &e) {
        throw ParseError(std::string("invalid nonconsistency configuration: ") +
                         e.what());
      }
      const auto dim = static_cast<Eigen::Index>(x0.size());
      NonConsistencyConfig cfg{kernel_for_dim(base.spec, dim),
                               Eigen::Map<const Point>(x0.data(), dim),
                               Eigen::Map<const Point>(
                                   xbar.data(), static_cast<Eigen::Index>(xbar.size())),
                               r,
                               base.n,
                               parse_aggregation_method(method),
                               delta,
                               {}};
      const bool empty_grid = std::any_of(base.grid.count.begin(), base.grid.count.end(),
                                          [](Eigen::Index c) { return c == 0; });
      cfg.grid = empty_grid ? PointSet(0, dim) : base.grid.points(dim);
      write_report(run_nonconsistency(cfg), base.out, out);
    }
  } catch (const Error &e) {
    err << "ERROR:" << category_name(e.category()) << ":" << e.what() << "\n";
    return is_numerical(e.category()) ? 2 : 1;
  } catch (const std::exception &e) {
    err << "ERROR:internal:" << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run_command(int argc, const char *const *argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    args.emplace_back(argv[i]);
  }
  return run_command(args, std::cout, std::cerr);
}

} // namespace nestkrig
