#pragma once

// Two objective families on the SPD cone and the gradient vector fields whose
// singularities are their minimizers:
//
//   F1: f(P) = a ln det P + b tr P^-1,   grad f = a P - b I,    minimizer (b/a) I
//   F2: f(P) = a ln det P - b tr P,      grad f = a P - b P^2,  minimizer (a/b) I
//
// Everything is evaluated through the spectrum of P. Riemannian quantities are
// returned as tangents in scaled coordinates at P.

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rdn/errors.hpp"
#include "rdn/linalg.hpp"
#include "rdn/spd_manifold.hpp"

namespace rdn {

enum class Family { F1, F2 };

inline std::string_view to_string(Family f) { return f == Family::F1 ? "f1" : "f2"; }

inline Family parse_family(std::string_view s) {
  if (s == "f1" || s == "F1") return Family::F1;
  if (s == "f2" || s == "F2") return Family::F2;
  throw std::invalid_argument("unknown objective family '" + std::string(s) + "'");
}

/// One member of a family. Problems require a > 0 and b > 0; the plain
/// evaluation functions accept any finite coefficients.
struct ObjectiveFamily {
  Family kind = Family::F1;
  double a = 1.0;
  double b = 1.0;

  void validate() const {
    if (!(std::isfinite(a) && std::isfinite(b) && a > 0.0 && b > 0.0)) {
      throw InvalidRange("objective coefficients must satisfy a > 0 and b > 0, got a=" +
                         std::to_string(a) + ", b=" + std::to_string(b));
    }
  }
};

namespace detail {

// Diagonal of f'(P) in the eigenbasis of P.
inline Vector euclidean_grad_spectrum(const ObjectiveFamily& obj, const Vector& lam) {
  const Vector inv = lam.cwiseInverse();
  if (obj.kind == Family::F1) return obj.a * inv - obj.b * inv.cwiseProduct(inv);
  return (obj.a * inv.array() - obj.b).matrix();
}

// f''(P)[V] in the eigenbasis of P, given C = Q^T V Q.
inline Matrix euclidean_hess_coords(const ObjectiveFamily& obj, const Vector& lam, const Matrix& c) {
  const Eigen::Index n = lam.size();
  Matrix h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pij = 1.0 / (lam(i) * lam(j));
      double w = -obj.a * pij;
      if (obj.kind == Family::F1) w += obj.b * pij * (1.0 / lam(i) + 1.0 / lam(j));
      h(i, j) = w * c(i, j);
    }
  }
  return h;
}

}  // namespace detail

inline double value(const ObjectiveFamily& obj, const SpdPoint& p) {
  const Vector& lam = p.eigen().values;
  const double logdet = lam.array().log().sum();
  if (obj.kind == Family::F1) return obj.a * logdet + obj.b * lam.cwiseInverse().sum();
  return obj.a * logdet - obj.b * lam.sum();
}

/// Euclidean gradient f'(P).
inline SymMatrix euclidean_grad(const ObjectiveFamily& obj, const SpdPoint& p) {
  const EigenPair& e = p.eigen();
  return SymMatrix(from_basis(e.vectors, detail::euclidean_grad_spectrum(obj, e.values)));
}

/// Euclidean Hessian f''(P)[V].
inline SymMatrix euclidean_hess_apply(const ObjectiveFamily& obj, const SpdPoint& p, const SymMatrix& v) {
  if (v.dim() != p.dim()) throw DimMismatch("euclidean_hess_apply: dimension mismatch");
  const EigenPair& e = p.eigen();
  const Matrix c = to_basis(e.vectors, v.mat());
  return SymMatrix(e.vectors * detail::euclidean_hess_coords(obj, e.values, c) * e.vectors.transpose());
}

/// grad f(P) = P f'(P) P, in closed form.
inline SymTangent riemannian_grad(const ObjectiveFamily& obj, const SpdPoint& p) {
  // Scaled coordinates P^-1/2 grad f P^-1/2: F1 a I - b P^-1, F2 a I - b P.
  const Vector& lam = p.eigen().values;
  Vector d(lam.size());
  if (obj.kind == Family::F1) {
    d = (obj.a - obj.b * lam.cwiseInverse().array()).matrix();
  } else {
    d = (obj.a - obj.b * lam.array()).matrix();
  }
  return SymTangent::scaled_at(p, Matrix(d.asDiagonal()));
}

/// Hess f(P)[V] = P f''(P)[V] P + (V f'(P) P + P f'(P) V) / 2.
inline SymTangent hess_apply(const ObjectiveFamily& obj, const SpdPoint& p, const SymTangent& v) {
  if (v.dim() != p.dim()) {
    throw DimMismatch("hess_apply: point dimension " + std::to_string(p.dim()) + ", tangent " +
                      std::to_string(v.dim()));
  }
  // In the eigenbasis both terms act entrywise, C_ij -> m_ij C_ij, so the same
  // multipliers apply to scaled coordinates.
  const Vector& lam = p.eigen().values;
  const Eigen::Index n = lam.size();
  const Vector g = detail::euclidean_grad_spectrum(obj, lam).cwiseProduct(lam);  // f'(P) P
  const Matrix ones = Matrix::Ones(n, n);
  Matrix m = lam.asDiagonal() * detail::euclidean_hess_coords(obj, lam, ones) * lam.asDiagonal();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) += 0.5 * (g(i) + g(j));
  return SymTangent::scaled_at(p, m.cwiseProduct(v.scaled(p)));
}

/// Solution v of Hess f(P)[v] = -grad f(P), through the reduced Lyapunov
/// equations  F1: P V + V P = 2 (P^2 - (a/b) P^3),  F2: P V + V P = 2 ((a/b) P - P^2).
/// Throws SingularOperator when the Lyapunov operator is numerically singular.
inline SymTangent newton_solve(const ObjectiveFamily& obj, const SpdPoint& p) {
  const EigenPair& e = p.eigen();
  const Vector& lam = e.values;
  const double ratio = obj.a / obj.b;
  if (!std::isfinite(ratio)) throw SingularOperator("newton_solve: Hessian vanishes (b = 0)");
  // Right-hand side in scaled coordinates P^-1/2 R P^-1/2.
  Vector rhs(lam.size());
  if (obj.kind == Family::F1) {
    rhs = 2.0 * (lam.array() - ratio * lam.array().square()).matrix();
  } else {
    rhs = 2.0 * (ratio - lam.array()).matrix();
  }
  return SymTangent::scaled_at(p, lyapunov_solve_in_basis(e, Matrix(rhs.asDiagonal())));
}

/// phi(P) = ||grad f(P)||_P^2 / 2.
inline double merit_value(const ObjectiveFamily& obj, const SpdPoint& p) {
  const double g = norm(p, riemannian_grad(obj, p));
  return 0.5 * g * g;
}

/// grad phi:  F1: a b I - b^2 P^-1,   F2: b^2 P^3 - a b P^2.
inline SymTangent merit_gradient(const ObjectiveFamily& obj, const SpdPoint& p) {
  const Vector& lam = p.eigen().values;
  const double a = obj.a;
  const double b = obj.b;
  Vector d(lam.size());
  if (obj.kind == Family::F1) {
    const Vector inv = lam.cwiseInverse();
    d = (a * b * inv.array() - b * b * inv.array().square()).matrix();
  } else {
    d = (b * lam.array() * (b * lam.array() - a)).matrix();
  }
  return SymTangent::scaled_at(p, Matrix(d.asDiagonal()));
}

/// The global minimizer: (b/a) I for F1, (a/b) I for F2.
inline SpdPoint minimizer(const ObjectiveFamily& obj, int dim) {
  obj.validate();
  const double s = obj.kind == Family::F1 ? obj.b / obj.a : obj.a / obj.b;
  return SpdPoint::from_eigen(EigenPair{Vector::Constant(dim, s), Matrix::Identity(dim, dim)});
}

/// Gradient field of one objective, in the shape the solver consumes.
class ObjectiveProblem {
 public:
  explicit ObjectiveProblem(ObjectiveFamily obj) : obj_(obj) { obj_.validate(); }

  const ObjectiveFamily& objective() const noexcept { return obj_; }

  SymTangent field(const SpdPoint& p) const { return riemannian_grad(obj_, p); }
  SymTangent hess_apply(const SpdPoint& p, const SymTangent& v) const { return rdn::hess_apply(obj_, p, v); }
  SymTangent newton_solve(const SpdPoint& p) const { return rdn::newton_solve(obj_, p); }
  double merit_value(const SpdPoint& p) const { return rdn::merit_value(obj_, p); }
  SymTangent merit_gradient(const SpdPoint& p) const { return rdn::merit_gradient(obj_, p); }

 private:
  ObjectiveFamily obj_;
};

}  // namespace rdn
