#include <doctest.h>

#include <sketchsvd/bench.hpp>
#include <sketchsvd/stats.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace sketchsvd;
using Mat = Matrix<double>;
using Vec = Vector<double>;

TEST_CASE("hadamard_operator") {
  const Mat h1 = to_dense(hadamard_operator(1));
  CHECK(h1(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(h1(1, 1) == doctest::Approx(-1 / std::sqrt(2.0)));
  const Mat e1 = hadamard_operator(2).apply(Mat(Mat::Identity(4, 1)));
  CHECK((e1 - Vec::Constant(4, 0.5)).norm() < 1e-15);
  const Mat raw = to_dense(hadamard_operator(2, false));
  CHECK((raw.cwiseAbs() - Mat::Ones(4, 4)).norm() == 0.0);
  CHECK((raw - raw.transpose()).norm() == 0.0);
  CHECK_THROWS_AS(hadamard_operator(27), DimensionTooLarge);
  CHECK_THROWS_AS(hadamard_operator(-1), std::invalid_argument);
}

TEST_CASE("build_sigma") {
  const Vec s = build_sigma(9);
  CHECK(s.size() == 512);
  CHECK(s(0) == 1.0);
  CHECK(s(10) == doctest::Approx(0.001));
  CHECK(s(511) == 0.0);
  CHECK(s.minCoeff() >= 0.0);
  for (Index j = 1; j < s.size(); ++j) CHECK(s(j) <= s(j - 1));
  CHECK_THROWS_AS(build_sigma(3), std::invalid_argument);
  CHECK_THROWS_AS(build_sigma(9, 3), std::invalid_argument);
}

TEST_CASE("test_matrix ground truth") {
  const auto tm = test_matrix(make_test_matrix_spec(9));
  CHECK(tm.op().rows() == 512);
  CHECK(tm.op().cols() == 1024);
  const auto t = tm.truth(5);
  for (Index j = 0; j < 5; ++j) CHECK((tm.op().apply(Mat(t.V.col(j))) - t.S(j) * t.U.col(j)).norm() < 1e-10);
  for (Index j = 0; j < 5; ++j)
    CHECK((tm.op().apply_transpose(Mat(t.U.col(j))) - t.S(j) * t.V.col(j)).norm() < 1e-10);
  TestMatrixSpec bad{4, Vec::Ones(3)};
  CHECK_THROWS_AS(test_matrix(bad), std::invalid_argument);
}

TEST_CASE("seed schedule has no collisions over the full grid") {
  std::set<std::uint64_t> seen;
  std::size_t total = 0;
  for (int d = 9; d <= 19; d += 2)
    for (const auto& cell : make_grid({0, 1}, {1, 10, 50, 100, 200}, {22, 110, 500, 1000, 3000, 4400}, {10}))
      for (int r = 0; r < 30; ++r) {
        seen.insert(cell_seed(42, d, cell, r));
        ++total;
      }
  CHECK(seen.size() == total);
  CHECK(cell_seed(1, 9, {0, 10, 22, 10}, 0) != cell_seed(2, 9, {0, 10, 22, 10}, 0));
}

TEST_CASE("csv primitives") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  for (double v : {0.1, 1.0 / 3.0, 8.71e-4, 6.02214076e23, -2.5e-310})
    CHECK(parse_double(format_double(v)) == v);
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);

  std::istringstream in("a,\"b,\"\"c\"\"\nd\",e\r\nx,y\n");
  CHECK(*read_csv_record(in) == std::vector<std::string>{"a", "b,\"c\"\nd", "e"});
  CHECK(*read_csv_record(in) == std::vector<std::string>{"x", "y"});
  CHECK_FALSE(read_csv_record(in).has_value());
}

TEST_CASE("rows csv round-trips") {
  ExperimentRow a;
  a.d = 9;
  a.q = 1;
  a.n_sketches = 200;
  a.ell = 22;
  a.k = 10;
  a.replicate = 29;
  a.error_frobenius = 8.712345678901234e-4;
  a.similarities = {0.9999999, 1.0 / 3.0, 0.5};
  a.kn_iterations = 143;
  a.excess_residual = 1.25e-7;
  ExperimentRow b = a;
  b.replicate = 3;
  b.wall_time_ms = 12.5;
  b.status = "failed: bad, \"quoted\"\nnewline";
  b.similarities.clear();
  const std::vector<ExperimentRow> rows{a, b};
  std::stringstream buf;
  write_rows_csv(buf, rows);
  CHECK(parse_rows_csv(buf) == rows);
}

TEST_CASE("run_experiment") {
  ExperimentSpec spec;
  spec.matrix = make_test_matrix_spec(5);
  spec.cells = make_grid({0}, {1, 4}, {12}, {10});
  spec.replicates = 3;
  spec.base_seed = 3;
  const auto res = run_experiment(spec);
  REQUIRE(res.rows.size() == 6);
  CHECK(res.rows[0].n_sketches == 1);
  CHECK(res.rows[2].replicate == 2);
  CHECK(res.rows[3].n_sketches == 4);
  for (const auto& r : res.rows) {
    CHECK(r.status == "ok");
    CHECK(r.similarities.size() == 10);
    for (double s : r.similarities) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0 + 1e-12);
    }
    CHECK_FALSE(r.wall_time_ms.has_value());
    CHECK(r.excess_residual >= -1e-9);
  }
  REQUIRE(res.summary.size() == 2);
  CHECK(res.summary[0].count == 3);
  const double mean = (res.rows[0].error_frobenius + res.rows[1].error_frobenius + res.rows[2].error_frobenius) / 3;
  CHECK(res.summary[0].mean_error == doctest::Approx(mean));

  const auto again = run_experiment(spec);
  CHECK(again.rows == res.rows);

  SUBCASE("single replicate") {
    spec.replicates = 1;
    const auto one = run_experiment(spec);
    CHECK(std::isnan(one.summary[0].std_error));
    CHECK(one.summary[0].mean_error == one.rows[0].error_frobenius);
  }
  SUBCASE("timing column") {
    spec.record_timing = true;
    spec.replicates = 1;
    CHECK(run_experiment(spec).rows[0].wall_time_ms.has_value());
  }
  SUBCASE("failing rows are recorded and the run continues") {
    Vec sigma = Vec::Zero(32);
    sigma.head(5).setOnes();
    spec.matrix = TestMatrixSpec{5, sigma};
    spec.cells = make_grid({0}, {1}, {8}, {4});
    spec.replicates = 2;
    const auto r = run_experiment(spec);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].status.rfind("failed:", 0) == 0);
    CHECK(r.summary[0].failed == 2);
    CHECK(std::isnan(r.summary[0].mean_error));
  }
  SUBCASE("invalid specs") {
    spec.replicates = 0;
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    spec.replicates = 1;
    spec.cells = make_grid({0}, {1}, {40}, {10});
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
  }
}

TEST_CASE("dense matrix files") {
  std::istringstream ok("2 3\n1 2 3\n4 5 6.5\n");
  const Mat a = read_dense_matrix(ok);
  CHECK(a(1, 2) == 6.5);
  CHECK(a(0, 1) == 2.0);
  std::istringstream short_input("2 2\n1 2 3\n");
  CHECK_THROWS_AS(read_dense_matrix(short_input), std::invalid_argument);
  std::istringstream extra("1 1\n1 2\n");
  CHECK_THROWS_AS(read_dense_matrix(extra), std::invalid_argument);
  std::istringstream bad("x y\n");
  CHECK_THROWS_AS(read_dense_matrix(bad), std::invalid_argument);
}

namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(SKETCHSVD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST_CASE("cli exit codes") {
  const auto dir = std::filesystem::temp_directory_path() / "sketchsvd_cli_test";
  std::filesystem::create_directories(dir);
  CHECK(run_cli("") == 1);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("rsvd --bogus") == 1);
  CHECK(run_cli("rsvd --d 6 --k 10 --p 60") == 1);
  CHECK(run_cli("rsvd --d 7 --k 10 --p 12 --q 1 --seed 3") == 0);
  CHECK(run_cli("isvd --d 7 --n-sketches 4 --seed 3") == 0);
  CHECK(run_cli("isvd --d 7 --n-sketches 4 --seed 3 --max-iter 1 --tol 1e-300") == 2);
  CHECK(run_cli("lambda-check --n-sketches 20 --seeds 2") == 0);

  const auto matrix = dir / "a.txt";
  std::ofstream(matrix) << "3 4\n3 0 0 0\n0 2 0 0\n0 0 1 0\n";
  CHECK(run_cli("rsvd --input " + matrix.string() + " --k 2 --p 1 --out " + (dir / "s.csv").string()) == 0);
  std::ifstream s(dir / "s.csv");
  std::string header, first;
  std::getline(s, header);
  std::getline(s, first);
  CHECK(first.rfind("1,3", 0) == 0);

  const auto rank_one = dir / "b.txt";
  std::ofstream(rank_one) << "3 3\n1 1 1\n1 1 1\n1 1 1\n";
  CHECK(run_cli("rsvd --input " + rank_one.string() + " --k 2 --p 0") == 2);

  const auto cfg = dir / "bench.cfg";
  std::ofstream(cfg) << "d = 5\nq = 0,1\nn-list = 1,3\nell = 12\nk = 10\nreplicates = 2\nseed = 9\n";
  const auto summary = dir / "summary.csv";
  CHECK(run_cli("bench --config " + cfg.string() + " --summary " + summary.string()) == 0);
  std::ifstream sum(summary);
  int lines = 0;
  for (std::string line; std::getline(sum, line);) ++lines;
  CHECK(lines == 5);
  std::ofstream(dir / "bad.cfg") << "replicates = 2\nbogus = 1\n";
  CHECK(run_cli("bench --config " + (dir / "bad.cfg").string()) == 1);
  CHECK(run_cli("bench --config " + (dir / "missing.cfg").string()) == 1);
  std::filesystem::remove_all(dir);
}
