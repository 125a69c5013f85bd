#ifndef NESTKRIG_CLI_IO_HPP
#define NESTKRIG_CLI_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nestkrig/aggregation.hpp"
#include "nestkrig/kernels.hpp"
#include "nestkrig/submodels.hpp"
#include "nestkrig/types.hpp"

namespace nestkrig {

struct Dataset {
  PointSet design;
  Vector values;
};

/// CSV with a header row, d coordinate columns, then one value column.
/// Rejects NaN/Inf and ragged rows, reporting the 1-based line number.
Dataset load_dataset(const std::filesystem::path &path);
Dataset parse_dataset(std::istream &in, const std::string &source_name);

/// 1-d equispaced synthetic data.
struct SyntheticData {
  std::string function = "sin2pi_plus_x"; ///< f(x) = sin(2 pi x) + x
  Eigen::Index n = 5;
  double min = 0.1;
  double max = 0.9;
};

double evaluate_synthetic(const std::string &function, double x);
Dataset generate_dataset(const SyntheticData &synthetic);

struct GridSpec {
  std::vector<double> min{0.0};
  std::vector<double> max{1.0};
  std::vector<Eigen::Index> count{101};

  /// Tensor grid in `dim` dimensions (scalars broadcast).
  PointSet points(Eigen::Index dim) const;
};

/// Validated run configuration; JSON keys are parsed strictly.
struct RunConfig {
  KernelSpec kernel = KernelSpec::isotropic(KernelFamily::SquaredExponential,
                                            1.0, 0.2, 1);
  std::optional<std::filesystem::path> data_path;
  SyntheticData synthetic;
  Eigen::Index partition_p = 2;
  PartitionStrategy partition_strategy = PartitionStrategy::ContiguousBlocks;
  std::uint64_t partition_seed = 1;
  AggregationMethod method = AggregationMethod::Nested;
  GridSpec grid;
  std::filesystem::path output = "out.csv";

  Dataset dataset() const;
};

/// Throws ParseError on unknown keys or malformed values.
RunConfig run_config_from_json(const nlohmann::json &j);
RunConfig load_run_config(const std::filesystem::path &path);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

/// Writes a header and rows; values formatted with format_double.
void write_csv(const std::filesystem::path &path,
               const std::vector<std::string> &header,
               const std::vector<std::vector<double>> &rows);

/*
 * Entry point of the `nestkrig` tool. Subcommands: predict, demo-figure1,
 * covariance-report, bounds-report, consistency, nonconsistency, sample.
 * Returns 0 on success, 1 on validation errors, 2 on numerical failures.
 * Errors go to `err` as "ERROR:<category>:<message>".
 */
int run_command(const std::vector<std::string> &args, std::ostream &out,
                std::ostream &err);

int run_command(int argc, const char *const *argv);

} // namespace nestkrig

#endif
