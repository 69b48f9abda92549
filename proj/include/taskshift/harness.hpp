#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "taskshift/config.hpp"
#include "taskshift/csv.hpp"
#include "taskshift/rng.hpp"

namespace taskshift {

inline constexpr int kSchemaVersion = 1;

enum class SweepKind { N, M };

std::string to_string(SweepKind kind);

/// Metric column names for a configuration. Per-support columns carry the
/// 1-based support index, e.g. su_1, abs_theta_2, b_emp_1.
struct RowSchema {
  std::vector<std::string> metrics;
  std::vector<std::size_t> support_labels;  // 1-based

  std::size_t index(const std::string& name) const;  // throws InvalidConfig
  bool contains(const std::string& name) const;
};

RowSchema row_schema(const ExperimentConfig& cfg);

struct ResultRow {
  SweepKind sweep = SweepKind::N;
  std::size_t n = 0;
  std::optional<std::size_t> m;
  std::size_t draw = 0;
  EstimatorId estimator = EstimatorId::RegMni;
  std::vector<std::optional<double>> values;  // aligned with RowSchema::metrics
  std::string error;                          // empty on success
  double wall_seconds = 0.0;                  // whole cell, repeated on its rows

  bool ok() const noexcept { return error.empty(); }
};

std::optional<double> value(const RowSchema& schema, const ResultRow& row, const std::string& name);

struct RunOptions {
  std::size_t jobs = 0;            // 0: hardware concurrency
  bool record_wall_time = true;    // false zeroes wall_seconds for byte-level comparisons
  std::ostream* log = nullptr;     // one line per finished cell
};

// Seed of the training set for (n, draw): stream_id hashes the config hash,
// the grid point and the draw index.
SeedRecord cell_seed(const ExperimentConfig& cfg, std::size_t n, std::size_t draw);
SeedRecord fewshot_seed(const ExperimentConfig& cfg, SweepKind sweep, std::size_t point,
                        std::size_t draw);

/// One n-sweep cell: every configured estimator on one training draw.
/// Module errors propagate with the (n, draw) context prepended.
std::vector<ResultRow> run_point(const ExperimentConfig& cfg, std::size_t n, std::size_t draw);

/// One m-sweep cell at n = fixed_n_for_m_sweep: one classification dataset
/// per draw, a fresh few-shot set for every m.
std::vector<ResultRow> run_m_point(const ExperimentConfig& cfg, std::size_t draw);

struct AggregateRow {
  SweepKind sweep = SweepKind::N;
  std::size_t n = 0;
  std::optional<std::size_t> m;
  EstimatorId estimator = EstimatorId::RegMni;
  std::size_t count = 0;   // successful rows
  std::size_t failed = 0;  // rows carrying an error
  std::vector<std::optional<double>> mean;
  std::vector<std::optional<double>> std;  // unbiased (divides by count - 1)
  std::vector<std::optional<double>> median;
};

std::vector<AggregateRow> aggregate(const RowSchema& schema, const std::vector<ResultRow>& rows);

double median_of(std::vector<double> values);

struct SweepResult {
  RowSchema schema;
  std::vector<ResultRow> rows;  // sorted by (sweep, n, m, draw, estimator)
  std::vector<AggregateRow> agg;
  nlohmann::json meta;
  std::size_t failed_cells = 0;
};

SweepResult run_sweep(const ExperimentConfig& cfg, const RunOptions& options = {});

Table rows_table(const ExperimentConfig& cfg, const RowSchema& schema,
                 const std::vector<ResultRow>& rows);
Table agg_table(const RowSchema& schema, const std::vector<AggregateRow>& agg);

/// Writes rows.csv, agg.csv, config.json and meta.json into `dir`.
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                   const SweepResult& result);

// out/<name>/<UTC timestamp>
std::filesystem::path default_output_dir(const std::filesystem::path& root, const std::string& name);

}  // namespace taskshift
