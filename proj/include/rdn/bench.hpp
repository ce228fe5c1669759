#pragma once

// Seeded experiments over (family, ratio, dimension, method) and their CSV
// output.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/objectives.hpp"
#include "rdn/solver.hpp"
#include "rdn/spd_manifold.hpp"

namespace rdn {

struct ExperimentSpec {
  Family family = Family::F1;
  double ratio = 1.0;  // b/a for both families
  int dim = 1;
  Method method = Method::Damped;
  std::uint64_t seed = 42;
  double sigma = 1e-4;
  double grad_tol = 1e-8;
  int max_iters = 500;
  double init_low = 1.0;
  double init_high = 10.0;

  void validate() const {
    if (!(ratio > 0.0 && std::isfinite(ratio))) throw InvalidRange("ratio must be positive");
    if (dim < 1) throw InvalidRange("dim must be >= 1");
  }

  SolverConfig solver_config() const {
    SolverConfig c;
    c.sigma = sigma;
    c.grad_tol = grad_tol;
    c.max_iters = max_iters;
    c.method = method;
    return c;
  }

  /// Objective with a = 1, b = ratio.
  ObjectiveFamily objective() const { return ObjectiveFamily{family, 1.0, ratio}; }
};

struct ExperimentResult {
  ExperimentSpec spec;
  Status status = Status::MaxIters;
  int nit = 0;
  int he = 0;
  int ge = 0;
  double time_s = 0.0;
  double final_grad_norm = 0.0;
  double final_dist = 0.0;
};

struct ExperimentRun {
  ExperimentResult result;
  SolveTrace trace;
};

/// Solves from random_spd(dim, init range, seed) and measures the final
/// distance to the known minimizer.
inline ExperimentRun run_experiment_traced(const ExperimentSpec& spec) {
  spec.validate();
  const ObjectiveProblem problem(spec.objective());
  const SpdPoint p0 = random_spd(spec.dim, spec.init_low, spec.init_high, spec.seed);
  SolveResult solved = solve(problem, p0, spec.solver_config());
  ExperimentResult r;
  r.spec = spec;
  r.status = solved.trace.status;
  r.nit = solved.trace.nit;
  r.he = solved.trace.he;
  r.ge = solved.trace.ge;
  r.time_s = solved.trace.elapsed_s;
  r.final_grad_norm = solved.trace.final_grad_norm;
  r.final_dist = distance(solved.point, minimizer(spec.objective(), spec.dim));
  return ExperimentRun{r, std::move(solved.trace)};
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  return run_experiment_traced(spec).result;
}

/// Worker count: RDN_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned grid_threads() {
  if (const char* env = std::getenv("RDN_THREADS")) {
    unsigned n = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec == std::errc() && ptr == s.data() + s.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs every spec; results are in input order.
inline std::vector<ExperimentResult> run_grid(const std::vector<ExperimentSpec>& specs,
                                              unsigned threads = grid_threads()) {
  std::vector<ExperimentResult> results(specs.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(specs.size())));
  if (threads <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) results[i] = run_experiment(specs[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(specs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        results[i] = run_experiment(specs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// Rows of the comparison table: f1 with ratios {0.1, 1.0, 1.5}, f2 with
/// {0.001, 0.002, 0.01}, each at n in {1, 100, 1000} (capped by max_dim), each
/// run with the full and the damped method.
inline std::vector<ExperimentSpec> table1_grid(const ExperimentSpec& base, int max_dim = 1000) {
  struct Row {
    Family family;
    double ratio;
  };
  const Row rows[] = {{Family::F1, 0.1},   {Family::F1, 1.0},   {Family::F1, 1.5},
                      {Family::F2, 0.001}, {Family::F2, 0.002}, {Family::F2, 0.01}};
  std::vector<ExperimentSpec> specs;
  for (const Row& row : rows) {
    for (int dim : {1, 100, 1000}) {
      if (dim > max_dim) continue;
      for (Method m : {Method::Full, Method::Damped}) {
        ExperimentSpec s = base;
        s.family = row.family;
        s.ratio = row.ratio;
        s.dim = dim;
        s.method = m;
        specs.push_back(s);
      }
    }
  }
  return specs;
}

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return x;
}

inline constexpr std::string_view kResultsHeader =
    "family,ratio,dim,method,seed,sigma,status,nit,he,ge,time_s,final_grad_norm,final_dist";
inline constexpr std::string_view kTraceHeader = "k,grad_norm,merit,alpha,direction_kind,backtracks";

/// Results CSV. Wall-clock times vary between runs, so time_s is left empty
/// unless include_time is set.
inline std::string results_csv(const std::vector<ExperimentResult>& results, bool include_time = false) {
  std::ostringstream out;
  out << kResultsHeader << '\n';
  for (const ExperimentResult& r : results) {
    out << to_string(r.spec.family) << ',' << format_double(r.spec.ratio) << ',' << r.spec.dim << ','
        << to_string(r.spec.method) << ',' << r.spec.seed << ',' << format_double(r.spec.sigma) << ','
        << to_string(r.status) << ',' << r.nit << ',' << r.he << ',' << r.ge << ','
        << (include_time ? format_double(r.time_s) : std::string()) << ','
        << format_double(r.final_grad_norm) << ',' << format_double(r.final_dist) << '\n';
  }
  return out.str();
}

/// One row per iteration plus a closing row for the final iterate, which has
/// no step: alpha 0, direction_kind "none".
inline std::string trace_csv(const SolveTrace& trace) {
  std::ostringstream out;
  out << kTraceHeader << '\n';
  for (const IterationRecord& r : trace.records) {
    out << r.k << ',' << format_double(r.grad_norm) << ',' << format_double(r.merit) << ','
        << format_double(r.alpha) << ',' << to_string(r.direction_kind) << ',' << r.backtracks << '\n';
  }
  out << trace.nit << ',' << format_double(trace.final_grad_norm) << ','
      << format_double(trace.final_merit) << ",0,none,0\n";
  return out.str();
}

namespace detail {

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

inline Status parse_status(std::string_view s) {
  for (Status st : {Status::Converged, Status::MaxIters, Status::LineSearchFailed,
                    Status::StationaryOfMerit, Status::Diverged})
    if (to_string(st) == s) return st;
  throw std::invalid_argument("unknown status '" + std::string(s) + "'");
}

}  // namespace detail

inline void emit_csv(const std::vector<ExperimentResult>& results, const std::string& path,
                     bool include_time = false) {
  detail::write_file(path, results_csv(results, include_time));
}

inline void emit_trace(const SolveTrace& trace, const std::string& path) {
  detail::write_file(path, trace_csv(trace));
}

/// Inverse of results_csv for the columns it writes. An empty time_s reads as 0.
inline std::vector<ExperimentResult> parse_results_csv(std::string_view text) {
  std::vector<ExperimentResult> out;
  bool header = true;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (header) {
      if (line != kResultsHeader) throw std::invalid_argument("unexpected results header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 13) throw std::invalid_argument("results row has " + std::to_string(f.size()) + " fields");
    ExperimentResult r;
    r.spec.family = parse_family(f[0]);
    r.spec.ratio = parse_double(f[1]);
    r.spec.dim = detail::parse_int<int>(f[2]);
    r.spec.method = parse_method(f[3]);
    r.spec.seed = detail::parse_int<std::uint64_t>(f[4]);
    r.spec.sigma = parse_double(f[5]);
    r.status = detail::parse_status(f[6]);
    r.nit = detail::parse_int<int>(f[7]);
    r.he = detail::parse_int<int>(f[8]);
    r.ge = detail::parse_int<int>(f[9]);
    r.time_s = f[10].empty() ? 0.0 : parse_double(f[10]);
    r.final_grad_norm = parse_double(f[11]);
    r.final_dist = parse_double(f[12]);
    out.push_back(r);
  }
  return out;
}

}  // namespace rdn
