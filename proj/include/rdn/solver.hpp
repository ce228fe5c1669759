#pragma once

// Damped Newton method for singularities of a vector field X on the SPD cone,
// globalized by Armijo backtracking on the merit function phi = ||X||^2 / 2,
// and the plain Newton iteration it reduces to near a singularity.

#include <chrono>
#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/spd_manifold.hpp"

namespace rdn {

/// A vector field with its covariant derivative, as consumed by solve().
///   field(P)          X(P)
///   hess_apply(P, V)  nabla X(P)[V]
///   newton_solve(P)   v with X(P) + nabla X(P)[v] = 0; throws SingularOperator
///                     when no solution exists
///   merit_value(P)    ||X(P)||^2 / 2
///   merit_gradient(P) nabla X(P)^* X(P)
template <class P>
concept VectorFieldProblem = requires(const P& prob, const SpdPoint& x, const SymTangent& v) {
  { prob.field(x) } -> std::convertible_to<SymTangent>;
  { prob.hess_apply(x, v) } -> std::convertible_to<SymTangent>;
  { prob.newton_solve(x) } -> std::convertible_to<SymTangent>;
  { prob.merit_value(x) } -> std::convertible_to<double>;
  { prob.merit_gradient(x) } -> std::convertible_to<SymTangent>;
};

enum class Method { Damped, Full };
enum class DirectionKind { Newton, GradientFallback };
enum class Status { Converged, MaxIters, LineSearchFailed, StationaryOfMerit, Diverged };

inline std::string_view to_string(Method m) { return m == Method::Damped ? "damped" : "full"; }

inline std::string_view to_string(DirectionKind k) {
  return k == DirectionKind::Newton ? "newton" : "gradient";
}

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIters: return "max_iters";
    case Status::LineSearchFailed: return "line_search_failed";
    case Status::StationaryOfMerit: return "stationary_of_merit";
    case Status::Diverged: return "diverged";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "damped") return Method::Damped;
  if (s == "full") return Method::Full;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

struct SolverConfig {
  double sigma = 1e-4;
  double grad_tol = 1e-8;
  int max_iters = 500;
  int max_backtracks = 60;
  Method method = Method::Damped;
  /// Keep every iterate P_0, ..., P_NIT in the trace.
  bool record_iterates = false;

  void validate() const {
    if (!(sigma > 0.0 && sigma < 0.5)) {
      throw InvalidRange("sigma must lie in (0, 1/2), got " + std::to_string(sigma));
    }
    if (!(grad_tol > 0.0)) throw InvalidRange("grad_tol must be positive");
    if (max_iters < 0) throw InvalidRange("max_iters must be non-negative");
    if (max_backtracks < 0) throw InvalidRange("max_backtracks must be non-negative");
  }
};

/// State at P_k and the step taken from it.
struct IterationRecord {
  int k = 0;
  double grad_norm = 0.0;
  double merit = 0.0;
  double alpha = 1.0;
  DirectionKind direction_kind = DirectionKind::Newton;
  int backtracks = 0;
};

/// NIT, HE and GE cover completed iterations: each evaluates the field once
/// and the Hessian once, and GE also counts every merit evaluation made by the
/// line search. A terminal iteration that fails to produce a step is not
/// counted.
struct SolveTrace {
  std::vector<IterationRecord> records;
  Status status = Status::MaxIters;
  int nit = 0;
  int he = 0;
  int ge = 0;
  double elapsed_s = 0.0;
  double final_grad_norm = 0.0;
  double final_merit = 0.0;
  std::vector<SpdPoint> iterates;
};

struct SolveResult {
  SpdPoint point;
  SolveTrace trace;
};

struct Direction {
  SymTangent v;
  DirectionKind kind;
};

/// Newton direction when the Newton equation is solvable and its solution
/// descends on phi; otherwise v = -grad phi(P). Throws StationaryOfMerit when
/// the fallback vanishes while X(P) does not.
template <VectorFieldProblem Problem>
Direction direction(const Problem& problem, const SpdPoint& p) {
  std::optional<SymTangent> newton;
  try {
    newton.emplace(problem.newton_solve(p));
  } catch (const SingularOperator&) {
  }
  if (newton) {
    const double slope = inner(p, problem.merit_gradient(p), *newton);
    if (slope < 0.0 || norm(p, *newton) == 0.0) return {std::move(*newton), DirectionKind::Newton};
  }
  SymTangent v = -problem.merit_gradient(p);
  if (norm(p, v) == 0.0 && norm(p, problem.field(p)) > 0.0) {
    throw StationaryOfMerit("direction: grad phi vanishes at a point where X does not");
  }
  return {std::move(v), DirectionKind::GradientFallback};
}

struct ArmijoStep {
  double alpha = 1.0;
  int backtracks = 0;
  SpdPoint next;
  double next_merit = 0.0;
};

/// Largest t = 2^-j, j = 0..j_max, with
///   phi(exp_P(t v)) <= phi(P) + sigma t <grad phi(P), v>.
/// For a Newton direction <grad phi(P), v> = -2 phi(P), and the test reads
///   phi(exp_P(t v)) <= (1 - 2 sigma t) phi(P).
/// Trial points that overflow are rejected. Each trial counts one evaluation in
/// *merit_evals when given. Throws LineSearchFailed.
template <VectorFieldProblem Problem>
ArmijoStep armijo_stepsize(const Problem& problem, const SpdPoint& p, const Direction& dir,
                           double merit, double sigma, int j_max, int* merit_evals = nullptr) {
  double slope = 0.0;
  if (dir.kind == DirectionKind::GradientFallback) slope = inner(p, problem.merit_gradient(p), dir.v);
  double t = 1.0;
  for (int j = 0; j <= j_max; ++j, t *= 0.5) {
    std::optional<SpdPoint> trial;
    try {
      trial.emplace(exp_map(p, t * dir.v));
    } catch (const StepOverflow&) {
    } catch (const InvalidPoint&) {
    }
    if (merit_evals) ++*merit_evals;
    if (!trial) continue;
    const double trial_merit = problem.merit_value(*trial);
    const double bound = dir.kind == DirectionKind::Newton ? (1.0 - 2.0 * sigma * t) * merit
                                                           : merit + sigma * t * slope;
    if (std::isfinite(trial_merit) && trial_merit <= bound) {
      return ArmijoStep{t, j, std::move(*trial), trial_merit};
    }
  }
  throw LineSearchFailed("armijo_stepsize: no step 2^-j with j <= " + std::to_string(j_max) +
                         " gives sufficient decrease");
}

/// Runs the damped (Armijo) or full-step Newton iteration from p0 until
/// ||X(P_k)||_{P_k} <= grad_tol. Failures are reported in trace.status.
template <VectorFieldProblem Problem>
SolveResult solve(const Problem& problem, const SpdPoint& p0, const SolverConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  SolveTrace trace;
  SpdPoint p = p0;
  if (config.record_iterates) trace.iterates.push_back(p);

  auto finish = [&](Status status, double grad_norm) {
    trace.status = status;
    trace.nit = static_cast<int>(trace.records.size());
    trace.final_grad_norm = grad_norm;
    trace.final_merit = 0.5 * grad_norm * grad_norm;
    trace.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return SolveResult{p, std::move(trace)};
  };

  for (int k = 0;; ++k) {
    const double grad_norm = norm(p, problem.field(p));
    if (!std::isfinite(grad_norm)) return finish(Status::Diverged, grad_norm);
    if (grad_norm <= config.grad_tol) return finish(Status::Converged, grad_norm);
    if (k >= config.max_iters) return finish(Status::MaxIters, grad_norm);
    const double merit = 0.5 * grad_norm * grad_norm;

    IterationRecord rec;
    rec.k = k;
    rec.grad_norm = grad_norm;
    rec.merit = merit;

    if (config.method == Method::Full) {
      std::optional<SpdPoint> next;
      try {
        SymTangent v = problem.newton_solve(p);
        next.emplace(exp_map(p, v));
      } catch (const SingularOperator&) {
        return finish(Status::Diverged, grad_norm);
      } catch (const StepOverflow&) {
        return finish(Status::Diverged, grad_norm);
      } catch (const InvalidPoint&) {
        return finish(Status::Diverged, grad_norm);
      }
      trace.ge += 1;
      trace.he += 1;
      p = std::move(*next);
    } else {
      std::optional<Direction> dir;
      try {
        dir.emplace(direction(problem, p));
      } catch (const StationaryOfMerit&) {
        return finish(Status::StationaryOfMerit, grad_norm);
      }
      int evals = 0;
      std::optional<ArmijoStep> step;
      try {
        step.emplace(armijo_stepsize(problem, p, *dir, merit, config.sigma, config.max_backtracks, &evals));
      } catch (const LineSearchFailed&) {
        return finish(Status::LineSearchFailed, grad_norm);
      }
      trace.ge += 1 + evals;
      trace.he += 1;
      rec.alpha = step->alpha;
      rec.backtracks = step->backtracks;
      rec.direction_kind = dir->kind;
      p = std::move(step->next);
    }
    trace.records.push_back(rec);
    if (config.record_iterates) trace.iterates.push_back(p);
  }
}

}  // namespace rdn
