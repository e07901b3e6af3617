#include <sketchsvd/bench.hpp>
#include <sketchsvd/isvd.hpp>
#include <sketchsvd/selftest.hpp>
#include <sketchsvd/stats.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

using namespace sketchsvd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct DecompOptions {
  int d = 9;
  Index k = 10;
  Index p = 12;
  int q = 0;
  std::uint64_t seed = 0;
  std::string input;
  Index n_sketches = 1;
  double tau = 1.0;
  double tol = 1e-5;
  int max_iter = 256;
  bool stabilize = false;
  std::string out;
  std::string vectors;
};

struct BenchOptions {
  int d = 9;
  std::vector<int> q{0};
  std::vector<Index> n_list{1, 10, 50, 100, 200};
  std::vector<Index> ell{22};
  std::vector<Index> k{10};
  int replicates = 30;
  std::uint64_t seed = 0;
  double tau = 1.0;
  double tol = 1e-5;
  int max_iter = 256;
  bool timing = false;
  std::string out;
  std::string summary;
  std::string similarity;
};

struct LambdaOptions {
  std::vector<double> diag{25, 5, 1, 0.2};
  Index ell = 2;
  int q = 0;
  Index n_sketches = 100;
  int seeds = 10;
  std::uint64_t seed = 0;
  std::string out;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open '" + path + "' for writing");
  return f;
}

void add_decomp_options(CLI::App* cmd, DecompOptions& o, bool multi) {
  auto* d = cmd->add_option("--d", o.d, "Test matrix 2^d x 2^(d+1)")->capture_default_str();
  cmd->add_option("--k", o.k, "Target rank")->capture_default_str();
  cmd->add_option("--p", o.p, "Oversampling")->capture_default_str();
  cmd->add_option("--q", o.q, "Power exponent")->capture_default_str();
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--input", o.input, "Dense matrix file (first line 'rows cols', then row-major values)")
      ->check(CLI::ExistingFile)
      ->excludes(d);
  cmd->add_flag("--stabilize-power", o.stabilize, "Orthonormalize between power steps");
  cmd->add_option("--out", o.out, "CSV of singular values (and similarities for test matrices)");
  cmd->add_option("--vectors", o.vectors, "CSV of the left singular vectors");
  if (!multi) return;
  cmd->add_option("--n-sketches", o.n_sketches, "Number of sketches")->capture_default_str();
  cmd->add_option("--tau", o.tau, "Retraction step in (0, 1]")->capture_default_str();
  cmd->add_option("--tol", o.tol, "Stop when ||C - I||_F < tol")->capture_default_str();
  cmd->add_option("--max-iter", o.max_iter, "Integration iteration cap")->capture_default_str();
}

void write_decomposition(const DecompOptions& o, const SvdApprox<double>& approx,
                         const std::optional<TestMatrix<double>>& tm) {
  std::optional<Vector<double>> sim;
  if (tm) {
    const auto truth = tm->truth(approx.rank());
    sim = similarity(approx.U, truth.U);
    std::cout << "error_frobenius " << format_double(rank_k_error(truth, approx)) << '\n';
  }
  std::cout << "sigma";
  for (Index j = 0; j < approx.rank(); ++j) std::cout << ' ' << format_double(approx.S(j));
  std::cout << '\n';

  if (!o.out.empty()) {
    auto f = open_output(o.out);
    f << "j,sigma,similarity\r\n";
    for (Index j = 0; j < approx.rank(); ++j)
      f << j + 1 << ',' << format_double(approx.S(j)) << ',' << (sim ? format_double((*sim)(j)) : "") << "\r\n";
  }
  if (!o.vectors.empty()) {
    auto f = open_output(o.vectors);
    for (Index j = 0; j < approx.rank(); ++j) f << (j ? "," : "") << 'u' << j + 1;
    f << "\r\n";
    for (Index i = 0; i < approx.U.rows(); ++i) {
      for (Index j = 0; j < approx.rank(); ++j) f << (j ? "," : "") << format_double(approx.U(i, j));
      f << "\r\n";
    }
  }
}

int run_decomposition(const DecompOptions& o, bool multi) {
  SketchConfig cfg;
  cfg.k = o.k;
  cfg.p = o.p;
  cfg.q = o.q;
  cfg.seed = o.seed;
  cfg.stabilize_power = o.stabilize;
  if (multi) {
    cfg.n_sketches = o.n_sketches;
    cfg.tau = o.tau;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
  }

  std::optional<TestMatrix<double>> tm;
  std::optional<LinearOperator<double>> dense;
  if (o.input.empty()) {
    tm.emplace(make_test_matrix_spec(o.d));
  } else {
    std::ifstream f(o.input);
    dense.emplace(dense_operator(read_dense_matrix(f)));
  }
  const LinearOperator<double>& op = tm ? tm->op() : *dense;

  if (!multi) {
    write_decomposition(o, rsvd(op, cfg), tm);
    return kExitOk;
  }
  const auto result = isvd_flagged(op, cfg);
  std::cout << "kn_iterations " << result.trace.iterations << '\n'
            << "final_c_residual " << format_double(result.trace.final_c_residual) << '\n'
            << "converged " << (result.trace.converged ? "true" : "false") << '\n';
  write_decomposition(o, result.approx, tm);
  if (!result.trace.converged) {
    std::cerr << "warning: integration stopped at the iteration cap; results use the last iterate\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int run_bench(const BenchOptions& o) {
  ExperimentSpec spec;
  spec.matrix = make_test_matrix_spec(o.d);
  spec.cells = make_grid(o.q, o.n_list, o.ell, o.k);
  spec.replicates = o.replicates;
  spec.base_seed = o.seed;
  spec.tau = o.tau;
  spec.tol = o.tol;
  spec.max_iter = o.max_iter;
  spec.record_timing = o.timing;
  spec.validate();

  const auto result = run_experiment(spec);
  if (!o.out.empty()) {
    auto f = open_output(o.out);
    write_rows_csv(f, result.rows);
  }
  if (!o.similarity.empty()) {
    auto f = open_output(o.similarity);
    write_similarity_csv(f, result.rows);
  }
  if (!o.summary.empty()) {
    auto f = open_output(o.summary);
    write_summary_csv(f, result.summary);
  } else {
    write_summary_csv(std::cout, result.summary);
  }
  return kExitOk;
}

int run_lambda_check(const LambdaOptions& o) {
  const Index m = static_cast<Index>(o.diag.size());
  if (m < 1) throw std::invalid_argument("--diag needs at least one value");
  if (o.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
  const Vector<double> diag = Eigen::Map<const Vector<double>>(o.diag.data(), m);
  const auto op = dense_operator(Matrix<double>(diag.asDiagonal()));

  // True left singular vectors are the axes in order of decreasing |diag|.
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(diag(a)) > std::abs(diag(b)); });

  Vector<double> lambda_sum = Vector<double>::Zero(m);
  Vector<double> align_sum = Vector<double>::Zero(m);
  std::ofstream csv;
  if (!o.out.empty()) {
    csv = open_output(o.out);
    csv << "seed,j,lambda_hat,alignment\r\n";
  }
  for (int s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(s);
    const auto est = estimate_lambda(op, o.ell, o.q, o.n_sketches, seed);
    for (Index j = 0; j < m; ++j) {
      const double align = std::abs(est.u_hat(order[static_cast<std::size_t>(j)], j));
      lambda_sum(j) += est.lambda_hat(j);
      align_sum(j) += align;
      if (csv.is_open())
        csv << seed << ',' << j + 1 << ',' << format_double(est.lambda_hat(j)) << ',' << format_double(align) << "\r\n";
    }
  }
  std::cout << "lambda_hat";
  for (Index j = 0; j < m; ++j) std::cout << ' ' << format_double(lambda_sum(j) / o.seeds);
  std::cout << "\nalignment";
  for (Index j = 0; j < m; ++j) std::cout << ' ' << format_double(align_sum(j) / o.seeds);
  std::cout << '\n';
  return kExitOk;
}

int run_selftest() {
  int failures = 0;
  for (const auto& check : selftest_checks()) {
    const auto r = check.run();
    std::printf("%s %s measured=%.3e bound=%.3e\n", r.passed() ? "PASS" : "FAIL", check.name.c_str(), r.measured,
                r.bound);
    if (!r.passed()) ++failures;
  }
  std::printf("%d failure(s)\n", failures);
  return failures ? kExitNumerical : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized SVD from one or many Gaussian sketches"};
  app.require_subcommand(1);

  DecompOptions rsvd_opts;
  auto* rsvd_cmd = app.add_subcommand("rsvd", "Single-sketch randomized SVD");
  add_decomp_options(rsvd_cmd, rsvd_opts, false);

  DecompOptions isvd_opts;
  auto* isvd_cmd = app.add_subcommand("isvd", "Integrated SVD over several sketches");
  add_decomp_options(isvd_cmd, isvd_opts, true);

  BenchOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "Replicated experiment grid on a Hadamard test matrix");
  std::string bench_config;
  bench_cmd->add_option("--config", bench_config, "key = value file; lists comma-separated")
      ->check(CLI::ExistingFile)
      ->configurable(false);
  bench_cmd->allow_config_extras(CLI::config_extras_mode::error);
  bench_cmd->add_option("--d", bench_opts.d, "Test matrix 2^d x 2^(d+1)")->capture_default_str();
  bench_cmd->add_option("--q", bench_opts.q, "Power exponents")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--n-list", bench_opts.n_list, "Sketch counts")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--ell", bench_opts.ell, "Sketch widths")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--k", bench_opts.k, "Target ranks")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--replicates", bench_opts.replicates, "Replicates per cell")->capture_default_str();
  bench_cmd->add_option("--seed", bench_opts.seed, "Base seed")->capture_default_str();
  bench_cmd->add_option("--tau", bench_opts.tau, "Retraction step in (0, 1]")->capture_default_str();
  bench_cmd->add_option("--tol", bench_opts.tol, "Stop when ||C - I||_F < tol")->capture_default_str();
  bench_cmd->add_option("--max-iter", bench_opts.max_iter, "Integration iteration cap")->capture_default_str();
  bench_cmd->add_flag("--timing", bench_opts.timing, "Fill the wall_time_ms column");
  bench_cmd->add_option("--out", bench_opts.out, "Rows CSV");
  bench_cmd->add_option("--summary", bench_opts.summary, "Summary CSV (standard output if omitted)");
  bench_cmd->add_option("--similarity", bench_opts.similarity, "Per-vector similarity CSV");

  LambdaOptions lambda_opts;
  auto* lambda_cmd = app.add_subcommand("lambda-check", "Eigenvalues of the mean sketch projector of diag(values)");
  lambda_cmd->add_option("--diag", lambda_opts.diag, "Diagonal entries")->delimiter(',')->capture_default_str();
  lambda_cmd->add_option("--ell", lambda_opts.ell, "Sketch width")->capture_default_str();
  lambda_cmd->add_option("--q", lambda_opts.q, "Power exponent")->capture_default_str();
  lambda_cmd->add_option("--n-sketches", lambda_opts.n_sketches, "Sketches per estimate")->capture_default_str();
  lambda_cmd->add_option("--seeds", lambda_opts.seeds, "Estimates to average")->capture_default_str();
  lambda_cmd->add_option("--seed", lambda_opts.seed, "First seed")->capture_default_str();
  lambda_cmd->add_option("--out", lambda_opts.out, "Per-seed CSV");

  auto* selftest_cmd = app.add_subcommand("selftest", "Run the oracle self-checks");

  try {
    app.parse(argc, argv);
    if (!bench_config.empty()) {
      // Command-line values win: the config only fills options left unset.
      std::ifstream cfg(bench_config);
      bench_cmd->parse_from_stream(cfg);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (rsvd_cmd->parsed()) return run_decomposition(rsvd_opts, false);
    if (isvd_cmd->parsed()) return run_decomposition(isvd_opts, true);
    if (bench_cmd->parsed()) return run_bench(bench_opts);
    if (lambda_cmd->parsed()) return run_lambda_check(lambda_opts);
    if (selftest_cmd->parsed()) return run_selftest();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
