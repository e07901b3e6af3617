#pragma once

#include <sketchsvd/hadamard.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sketchsvd {

/// One grid point.
struct ExperimentCell {
  int q = 0;
  Index n_sketches = 1;
  Index ell = 22;
  Index k = 10;

  bool operator==(const ExperimentCell&) const = default;
};

/// Cartesian product, q outermost and k innermost.
std::vector<ExperimentCell> make_grid(const std::vector<int>& q_list, const std::vector<Index>& n_list,
                                      const std::vector<Index>& ell_list, const std::vector<Index>& k_list);

struct ExperimentSpec {
  TestMatrixSpec matrix = make_test_matrix_spec(9);
  std::vector<ExperimentCell> cells;
  int replicates = 30;
  std::uint64_t base_seed = 0;
  double tau = 1.0;
  double tol = 1e-5;
  int max_iter = 256;
  bool record_timing = false;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct ExperimentRow {
  int d = 0;
  int q = 0;
  Index n_sketches = 0;
  Index ell = 0;
  Index k = 0;
  int replicate = 0;
  double error_frobenius = 0.0;
  std::vector<double> similarities;
  int kn_iterations = 0;
  std::optional<double> wall_time_ms;
  double excess_residual = 0.0;
  /// "ok", "not_converged" or "failed: <reason>".
  std::string status = "ok";

  bool operator==(const ExperimentRow&) const = default;
};

struct SummaryRow {
  int d = 0;
  int q = 0;
  Index n_sketches = 0;
  Index ell = 0;
  Index k = 0;
  int count = 0;  ///< rows that produced an error value
  double mean_error = 0.0;
  double std_error = 0.0;  ///< sample std; NaN when count < 2
  double mean_excess_residual = 0.0;
  double mean_kn_iterations = 0.0;
  int not_converged = 0;
  int failed = 0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<SummaryRow> summary;
};

/// Seed of replicate r of a cell: base_seed xor a hash of (d, cell, r).
std::uint64_t cell_seed(std::uint64_t base_seed, int d, const ExperimentCell& cell, int replicate);

/// Runs every (cell, replicate) on the worker pool. Rows come back in
/// (cell, replicate) order; a failing row is recorded and the run goes on.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Mean and sample standard deviation per cell, in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows);

// CSV: header row, RFC-4180 quoting, shortest round-trip floats.
void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
std::vector<ExperimentRow> parse_rows_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary);
/// Columns d,q,N,replicate,j,similarity with j 1-based.
void write_similarity_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

std::string format_double(double value);
double parse_double(const std::string& text);
std::string csv_escape(const std::string& field);
/// Splits one record; quoted fields may span lines.
std::optional<std::vector<std::string>> read_csv_record(std::istream& in);

/// Dense matrix file: "rows cols" then row-major values.
Matrix<double> read_dense_matrix(std::istream& in);

}  // namespace sketchsvd
