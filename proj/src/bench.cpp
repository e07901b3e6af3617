#include <sketchsvd/bench.hpp>
#include <sketchsvd/isvd.hpp>
#include <sketchsvd/stats.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace sketchsvd {

std::vector<ExperimentCell> make_grid(const std::vector<int>& q_list, const std::vector<Index>& n_list,
                                      const std::vector<Index>& ell_list, const std::vector<Index>& k_list) {
  std::vector<ExperimentCell> cells;
  for (int q : q_list)
    for (Index n : n_list)
      for (Index ell : ell_list)
        for (Index k : k_list) cells.push_back({q, n, ell, k});
  return cells;
}

void ExperimentSpec::validate() const {
  if (replicates < 1) throw std::invalid_argument("ExperimentSpec: replicates must be >= 1");
  if (cells.empty()) throw std::invalid_argument("ExperimentSpec: empty grid");
  if (matrix.sigma.size() != matrix.rows())
    throw std::invalid_argument("ExperimentSpec: spectrum does not match 2^d");
  for (const auto& c : cells) {
    SketchConfig cfg;
    cfg.k = c.k;
    cfg.p = c.ell - c.k;
    cfg.q = c.q;
    cfg.n_sketches = c.n_sketches;
    cfg.tau = tau;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.validate(matrix.rows(), matrix.cols());
  }
}

std::uint64_t cell_seed(std::uint64_t base_seed, int d, const ExperimentCell& cell, int replicate) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(d));
  for (std::uint64_t field : {static_cast<std::uint64_t>(cell.q), static_cast<std::uint64_t>(cell.n_sketches),
                              static_cast<std::uint64_t>(cell.ell), static_cast<std::uint64_t>(cell.k),
                              static_cast<std::uint64_t>(replicate)})
    h = mix64(h ^ field);
  return base_seed ^ h;
}

namespace {

ExperimentRow run_one(const ExperimentSpec& spec, const TestMatrix<double>& tm, const SvdApprox<double>& truth,
                      const ExperimentCell& cell, int replicate) {
  ExperimentRow row;
  row.d = spec.matrix.d;
  row.q = cell.q;
  row.n_sketches = cell.n_sketches;
  row.ell = cell.ell;
  row.k = cell.k;
  row.replicate = replicate;

  SketchConfig cfg;
  cfg.k = cell.k;
  cfg.p = cell.ell - cell.k;
  cfg.q = cell.q;
  cfg.n_sketches = cell.n_sketches;
  cfg.tau = spec.tau;
  cfg.tol = spec.tol;
  cfg.max_iter = spec.max_iter;
  cfg.seed = cell_seed(spec.base_seed, spec.matrix.d, cell, replicate);

  const auto start = std::chrono::steady_clock::now();
  try {
    const auto result = isvd_flagged(tm.op(), cfg);
    const SvdApprox<double> ref = truncate(truth, cell.k);
    row.error_frobenius = rank_k_error(ref, result.approx);
    const Vector<double> sim = similarity(result.approx.U, ref.U);
    row.similarities.assign(sim.data(), sim.data() + sim.size());
    row.kn_iterations = result.trace.iterations;
    row.excess_residual = residual_decomposition(tm.op(), tm.sigma(), result.qbar).excess;
    row.status = result.trace.converged ? "ok" : "not_converged";
  } catch (const std::exception& e) {
    row.error_frobenius = std::numeric_limits<double>::quiet_NaN();
    row.excess_residual = std::numeric_limits<double>::quiet_NaN();
    row.status = std::string("failed: ") + e.what();
  }
  if (spec.record_timing)
    row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const TestMatrix<double> tm(spec.matrix);
  Index kmax = 0;
  for (const auto& c : spec.cells) kmax = std::max(kmax, c.k);
  const SvdApprox<double> truth = tm.truth(kmax);

  const std::size_t reps = static_cast<std::size_t>(spec.replicates);
  ExperimentResult result;
  result.rows.resize(spec.cells.size() * reps);
  parallel_for(result.rows.size(), [&](std::size_t t) {
    result.rows[t] = run_one(spec, tm, truth, spec.cells[t / reps], static_cast<int>(t % reps));
  });
  result.summary = summarize(result.rows);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRow>& rows) {
  using Key = std::tuple<int, int, Index, Index, Index>;
  std::vector<SummaryRow> out;
  std::map<Key, std::size_t> slot;
  std::vector<std::vector<const ExperimentRow*>> members;
  for (const auto& r : rows) {
    const Key key{r.d, r.q, r.n_sketches, r.ell, r.k};
    auto [it, fresh] = slot.emplace(key, out.size());
    if (fresh) {
      SummaryRow s;
      s.d = r.d;
      s.q = r.q;
      s.n_sketches = r.n_sketches;
      s.ell = r.ell;
      s.k = r.k;
      out.push_back(s);
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    double sum = 0.0, excess = 0.0, iters = 0.0;
    for (const auto* r : members[i]) {
      if (r->status.rfind("failed", 0) == 0) {
        ++s.failed;
        continue;
      }
      if (r->status == "not_converged") ++s.not_converged;
      ++s.count;
      sum += r->error_frobenius;
      excess += r->excess_residual;
      iters += r->kn_iterations;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (s.count == 0) {
      s.mean_error = s.std_error = s.mean_excess_residual = s.mean_kn_iterations = nan;
      continue;
    }
    s.mean_error = sum / s.count;
    s.mean_excess_residual = excess / s.count;
    s.mean_kn_iterations = iters / s.count;
    if (s.count < 2) {
      s.std_error = nan;
      continue;
    }
    double ss = 0.0;
    for (const auto* r : members[i])
      if (r->status.rfind("failed", 0) != 0) ss += (r->error_frobenius - s.mean_error) * (r->error_frobenius - s.mean_error);
    s.std_error = std::sqrt(ss / (s.count - 1));
  }
  return out;
}

//--------------------------------------------------------------------------//
// CSV
//--------------------------------------------------------------------------//

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "NaN" || text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "Inf" || text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-Inf" || text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("csv: not a number: '" + text + "'");
  return value;
}

namespace {

template <typename Int>
Int parse_int(const std::string& text) {
  Int value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("csv: not an integer: '" + text + "'");
  return value;
}

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << "\r\n";
}

const std::vector<std::string> kRowHeader = {"d", "q", "N", "ell", "k", "replicate", "error_frobenius",
                                             "similarities", "kn_iterations", "wall_time_ms",
                                             "excess_residual", "status"};

}  // namespace

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::optional<std::vector<std::string>> read_csv_record(std::istream& in) {
  if (in.peek() == std::char_traits<char>::eof()) return std::nullopt;
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (int ch = in.get(); ch != std::char_traits<char>::eof(); ch = in.get()) {
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          fields.back() += '"';
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      return fields;
    } else if (c == '\n') {
      return fields;
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw std::invalid_argument("csv: unterminated quoted field");
  return fields;
}

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  write_record(out, kRowHeader);
  for (const auto& r : rows) {
    std::string sims;
    for (std::size_t j = 0; j < r.similarities.size(); ++j) {
      if (j) sims += ';';
      sims += format_double(r.similarities[j]);
    }
    write_record(out, {std::to_string(r.d), std::to_string(r.q), std::to_string(r.n_sketches),
                       std::to_string(r.ell), std::to_string(r.k), std::to_string(r.replicate),
                       format_double(r.error_frobenius), sims, std::to_string(r.kn_iterations),
                       r.wall_time_ms ? format_double(*r.wall_time_ms) : std::string(),
                       format_double(r.excess_residual), r.status});
  }
}

std::vector<ExperimentRow> parse_rows_csv(std::istream& in) {
  const auto header = read_csv_record(in);
  if (!header || *header != kRowHeader) throw std::invalid_argument("csv: unexpected rows header");
  std::vector<ExperimentRow> rows;
  while (auto rec = read_csv_record(in)) {
    const auto& f = *rec;
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != kRowHeader.size()) throw std::invalid_argument("csv: wrong field count");
    ExperimentRow r;
    r.d = parse_int<int>(f[0]);
    r.q = parse_int<int>(f[1]);
    r.n_sketches = parse_int<Index>(f[2]);
    r.ell = parse_int<Index>(f[3]);
    r.k = parse_int<Index>(f[4]);
    r.replicate = parse_int<int>(f[5]);
    r.error_frobenius = parse_double(f[6]);
    std::istringstream sims(f[7]);
    for (std::string item; std::getline(sims, item, ';');) r.similarities.push_back(parse_double(item));
    r.kn_iterations = parse_int<int>(f[8]);
    if (!f[9].empty()) r.wall_time_ms = parse_double(f[9]);
    r.excess_residual = parse_double(f[10]);
    r.status = f[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& summary) {
  write_record(out, {"d", "q", "N", "ell", "k", "count", "mean_error", "std_error", "mean_excess_residual",
                     "mean_kn_iterations", "not_converged", "failed"});
  for (const auto& s : summary)
    write_record(out, {std::to_string(s.d), std::to_string(s.q), std::to_string(s.n_sketches),
                       std::to_string(s.ell), std::to_string(s.k), std::to_string(s.count),
                       format_double(s.mean_error), format_double(s.std_error),
                       format_double(s.mean_excess_residual), format_double(s.mean_kn_iterations),
                       std::to_string(s.not_converged), std::to_string(s.failed)});
}

void write_similarity_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  write_record(out, {"d", "q", "N", "replicate", "j", "similarity"});
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.similarities.size(); ++j)
      write_record(out, {std::to_string(r.d), std::to_string(r.q), std::to_string(r.n_sketches),
                         std::to_string(r.replicate), std::to_string(j + 1), format_double(r.similarities[j])});
}

Matrix<double> read_dense_matrix(std::istream& in) {
  Index rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1)
    throw std::invalid_argument("matrix file: bad header, expected 'rows cols'");
  Matrix<double> a(rows, cols);
  std::string token;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      if (!(in >> token)) throw std::invalid_argument("matrix file: too few values");
      a(i, j) = parse_double(token);
    }
  if (in >> token) throw std::invalid_argument("matrix file: trailing data");
  return a;
}

}  // namespace sketchsvd
