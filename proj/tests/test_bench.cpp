#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "rdn/bench.hpp"

namespace rdn {
namespace {

ExperimentSpec small_spec(Family f, double ratio, int dim, Method m) {
  ExperimentSpec s;
  s.family = f;
  s.ratio = ratio;
  s.dim = dim;
  s.method = m;
  return s;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

TEST(Experiment, DampedF1ConvergesQuickly) {
  const ExperimentResult r = run_experiment(small_spec(Family::F1, 0.1, 20, Method::Damped));
  EXPECT_EQ(r.status, Status::Converged);
  EXPECT_LE(r.nit, 15);
  EXPECT_LE(r.final_grad_norm, 1e-8);
  EXPECT_LE(r.final_dist, 1e-6);
}

TEST(Experiment, CollapsedRangeAtMinimizerNeedsNoIterations) {
  ExperimentSpec s = small_spec(Family::F2, 0.5, 1, Method::Damped);
  s.init_low = s.init_high = 2.0;
  const ExperimentResult r = run_experiment(s);
  EXPECT_EQ(r.status, Status::Converged);
  EXPECT_EQ(r.nit, 0);
  EXPECT_EQ(r.final_dist, 0.0);
}

TEST(Experiment, FailureStatusIsCarried) {
  ExperimentSpec s = small_spec(Family::F1, 0.1, 3, Method::Full);
  s.max_iters = 2;
  const ExperimentResult r = run_experiment(s);
  EXPECT_EQ(r.status, Status::MaxIters);
  EXPECT_EQ(r.nit, 2);
}

TEST(Experiment, InvalidSpecThrows) {
  EXPECT_THROW(run_experiment(small_spec(Family::F1, 0.0, 3, Method::Full)), InvalidRange);
  EXPECT_THROW(run_experiment(small_spec(Family::F1, 1.0, 0, Method::Full)), InvalidRange);
  ExperimentSpec s = small_spec(Family::F1, 1.0, 2, Method::Full);
  s.init_low = 5.0;
  s.init_high = 1.0;
  EXPECT_THROW(run_experiment(s), InvalidRange);
}

TEST(Experiment, Deterministic) {
  const ExperimentSpec s = small_spec(Family::F2, 0.01, 8, Method::Damped);
  const ExperimentResult a = run_experiment(s);
  const ExperimentResult b = run_experiment(s);
  EXPECT_EQ(results_csv({a}), results_csv({b}));
}

TEST(Grid, Table1Shape) {
  const auto full = table1_grid(ExperimentSpec{});
  EXPECT_EQ(full.size(), 36u);
  std::set<std::tuple<Family, double, int>> keys;
  for (const auto& s : full) keys.insert({s.family, s.ratio, s.dim});
  EXPECT_EQ(keys.size(), 18u);
  const auto capped = table1_grid(ExperimentSpec{}, 100);
  EXPECT_EQ(capped.size(), 24u);
  for (const auto& s : capped) EXPECT_LE(s.dim, 100);
  EXPECT_EQ(table1_grid(ExperimentSpec{}, 1).size(), 12u);
}

TEST(Grid, ParallelMatchesSequential) {
  std::vector<ExperimentSpec> specs = table1_grid(ExperimentSpec{}, 1);
  for (auto& s : specs) s.dim = 4;
  const auto seq = run_grid(specs, 1);
  const auto par = run_grid(specs, 4);
  EXPECT_EQ(results_csv(seq), results_csv(par));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(par[i].spec.family, specs[i].family);
    EXPECT_EQ(par[i].spec.method, specs[i].method);
  }
}

TEST(Grid, EmptyAndErrors) {
  EXPECT_TRUE(run_grid({}, 4).empty());
  std::vector<ExperimentSpec> specs(3, small_spec(Family::F1, 1.0, 2, Method::Damped));
  specs[1].dim = 0;
  EXPECT_THROW(run_grid(specs, 2), InvalidRange);
}

TEST(Csv, Headers) {
  EXPECT_EQ(results_csv({}),
            "family,ratio,dim,method,seed,sigma,status,nit,he,ge,time_s,final_grad_norm,final_dist\n");
  const std::string t = trace_csv(SolveTrace{});
  EXPECT_EQ(t.substr(0, t.find('\n')), "k,grad_norm,merit,alpha,direction_kind,backtracks");
}

TEST(Csv, ShortestRoundTripFloats) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-4), "1e-04");
  EXPECT_EQ(format_double(2.0), "2");
  for (double x : {1.0 / 3.0, 6.02214076e23, 5e-324, -0.0, 1e-300}) EXPECT_EQ(parse_double(format_double(x)), x);
  EXPECT_THROW(parse_double("1.0x"), std::invalid_argument);
}

TEST(Csv, ResultsRoundTrip) {
  std::vector<ExperimentResult> rs;
  for (Method m : {Method::Full, Method::Damped}) rs.push_back(run_experiment(small_spec(Family::F1, 1.5, 6, m)));
  rs[0].time_s = 0.125;
  const std::string text = results_csv(rs, true);
  const auto back = parse_results_csv(text);
  ASSERT_EQ(back.size(), rs.size());
  EXPECT_EQ(results_csv(back, true), text);
  EXPECT_EQ(back[0].time_s, 0.125);
  EXPECT_EQ(back[1].final_dist, rs[1].final_dist);
  EXPECT_EQ(back[1].final_grad_norm, rs[1].final_grad_norm);
}

TEST(Csv, TimeColumnEmptyUnlessRequested) {
  ExperimentResult r = run_experiment(small_spec(Family::F1, 1.0, 2, Method::Damped));
  r.time_s = 1.5;
  const std::string row = results_csv({r}).substr(results_csv({}).size());
  EXPECT_NE(row.find(",,"), std::string::npos);
  EXPECT_EQ(parse_results_csv(results_csv({r}))[0].time_s, 0.0);
  EXPECT_NE(results_csv({r}, true).find(",1.5,"), std::string::npos);
}

TEST(Csv, TraceRows) {
  ExperimentSpec s = small_spec(Family::F1, 1.0, 1, Method::Damped);
  s.init_low = s.init_high = 1.0;
  const std::string zero = trace_csv(run_experiment_traced(s).trace);
  EXPECT_EQ(zero, "k,grad_norm,merit,alpha,direction_kind,backtracks\n0,0,0,0,none,0\n");

  const ExperimentRun run = run_experiment_traced(small_spec(Family::F1, 0.1, 5, Method::Damped));
  const std::string text = trace_csv(run.trace);
  EXPECT_EQ(static_cast<int>(std::count(text.begin(), text.end(), '\n')), run.trace.nit + 2);
  EXPECT_NE(text.find(",newton,"), std::string::npos);
}

TEST(Csv, WriteErrorsNameThePath) {
  const std::string bad = "/nonexistent-dir/results.csv";
  try {
    emit_csv({}, bad);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(bad), std::string::npos);
  }
}

TEST(Csv, EmitWritesFile) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "rdn_bench_emit_test.csv";
  const std::vector<ExperimentResult> rs = {run_experiment(small_spec(Family::F2, 0.01, 3, Method::Damped))};
  emit_csv(rs, path.string());
  EXPECT_EQ(read_file(path), results_csv(rs));
  std::filesystem::remove(path);
}

TEST(Csv, ParseRejectsMalformed) {
  EXPECT_THROW(parse_results_csv("a,b\n"), std::invalid_argument);
  EXPECT_THROW(parse_results_csv(std::string(kResultsHeader) + "\nf1,1\n"), std::invalid_argument);
}

}  // namespace
}  // namespace rdn
