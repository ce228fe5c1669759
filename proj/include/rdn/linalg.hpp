#pragma once

// Dense symmetric-matrix primitives: eigendecomposition, spectral matrix
// functions, the Lyapunov operator P X + X P and definiteness checks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "rdn/errors.hpp"

namespace rdn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (A + A^T) / 2, written so that entry (i,j) and (j,i) are bitwise equal.
inline Matrix symmetrize(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw InvalidMatrix("symmetrize: matrix is " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()));
  }
  Matrix s(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    s(j, j) = a(j, j);
    for (Eigen::Index i = j + 1; i < a.rows(); ++i) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

/// A real symmetric n x n matrix, n >= 1. Symmetry is exact: the input is
/// symmetrized on construction.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& a) : m_(symmetrize(a)) {
    if (m_.rows() < 1) throw InvalidMatrix("SymMatrix: dimension must be >= 1");
  }

  static SymMatrix identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }
  static SymMatrix zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

  const Matrix& mat() const noexcept { return m_; }
  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }

  double frobenius() const { return m_.norm(); }
  double trace() const { return m_.trace(); }
  bool all_finite() const { return m_.allFinite(); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    check_same(a, b);
    return SymMatrix(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    check_same(a, b);
    return SymMatrix(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }
  SymMatrix operator-() const { return SymMatrix(-m_); }

 private:
  static void check_same(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
      throw DimMismatch("SymMatrix: " + std::to_string(a.dim()) + " vs " +
                        std::to_string(b.dim()));
    }
  }

  Matrix m_;
};

/// Spectral factorization A = Q diag(values) Q^T with ascending values and
/// orthonormal columns in Q.
struct EigenPair {
  Vector values;
  Matrix vectors;

  int dim() const noexcept { return static_cast<int>(values.size()); }
  double min() const { return values(0); }
  double max() const { return values(values.size() - 1); }
};

namespace detail {

inline bool is_diagonal(const Matrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j && a(i, j) != 0.0) return false;
  return true;
}

// Exact factorization of a diagonal matrix: sorted diagonal, permutation basis.
inline EigenPair diagonal_eigen(const Matrix& a) {
  const Eigen::Index n = a.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) < a(y, y); });
  EigenPair e{Vector(n), Matrix::Zero(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    e.values(k) = a(order[k], order[k]);
    e.vectors(order[k], k) = 1.0;
  }
  return e;
}

}  // namespace detail

inline EigenPair sym_eigen(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) throw InvalidMatrix("sym_eigen: not square");
  if (!a.allFinite()) throw InvalidMatrix("sym_eigen: non-finite entries");
  if (detail::is_diagonal(a)) return detail::diagonal_eigen(a);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw InvalidMatrix("sym_eigen: solver did not converge");
  return EigenPair{solver.eigenvalues(), solver.eigenvectors()};
}

inline EigenPair sym_eigen(const SymMatrix& a) { return sym_eigen(a.mat()); }

/// Q diag(d) Q^T, symmetrized.
inline Matrix from_basis(const Matrix& q, const Vector& d) {
  return symmetrize(q * d.asDiagonal() * q.transpose());
}

/// Coordinates of a symmetric matrix in the basis q: q^T A q, symmetrized.
inline Matrix to_basis(const Matrix& q, const Matrix& a) {
  return symmetrize(q.transpose() * a * q);
}

/// Q diag(f(lambda)) Q^T. Throws SpectrumDomainError when f is undefined
/// (non-finite) at some eigenvalue.
template <class F>
SymMatrix mat_func(const EigenPair& e, F&& f) {
  Vector fv(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    fv(i) = f(e.values(i));
    if (!std::isfinite(fv(i))) {
      throw SpectrumDomainError("mat_func: function undefined at eigenvalue " +
                                std::to_string(e.values(i)));
    }
  }
  return SymMatrix(from_basis(e.vectors, fv));
}

template <class F>
SymMatrix mat_func(const SymMatrix& a, F&& f) {
  return mat_func(sym_eigen(a), std::forward<F>(f));
}

/// Solves P V + V P = R in the eigenbasis of P, with P = Q diag(lambda) Q^T and
/// R given as coordinates Q^T R Q. Returns the coordinates Q^T V Q. The map is
/// entrywise, so it also carries scaled coordinates D (Q^T R Q) D, D diagonal,
/// to D (Q^T V Q) D.
///
/// A strictly positive spectrum never makes the operator singular. Otherwise it
/// is treated as singular when min |lambda_i + lambda_j| <= 1e-14 max |lambda|.
inline Matrix lyapunov_solve_in_basis(const EigenPair& p, const Matrix& rhs_coords) {
  const Eigen::Index n = p.values.size();
  if (rhs_coords.rows() != n || rhs_coords.cols() != n) {
    throw DimMismatch("lyapunov_solve: operator is " + std::to_string(n) + "x" +
                      std::to_string(n) + ", rhs is " + std::to_string(rhs_coords.rows()) +
                      "x" + std::to_string(rhs_coords.cols()));
  }
  if (!(p.values.minCoeff() > 0.0)) {
    const double scale = p.values.cwiseAbs().maxCoeff();
    double min_sum = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i <= j; ++i)
        min_sum = std::min(min_sum, std::abs(p.values(i) + p.values(j)));
    if (!(min_sum > 1e-14 * scale)) {
      throw SingularOperator("lyapunov_solve: min |lambda_i + lambda_j| = " +
                             std::to_string(min_sum) + " relative to max |lambda| = " +
                             std::to_string(scale));
    }
  }
  Matrix v(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) v(i, j) = rhs_coords(i, j) / (p.values(i) + p.values(j));
  return symmetrize(v);
}

inline SymMatrix lyapunov_solve(const EigenPair& p, const SymMatrix& rhs) {
  if (rhs.dim() != p.dim()) {
    throw DimMismatch("lyapunov_solve: P is " + std::to_string(p.dim()) + ", rhs is " +
                      std::to_string(rhs.dim()));
  }
  const Matrix coords = lyapunov_solve_in_basis(p, to_basis(p.vectors, rhs.mat()));
  return SymMatrix(p.vectors * coords * p.vectors.transpose());
}

/// Unique symmetric V with P V + V P = rhs.
inline SymMatrix lyapunov_solve(const SymMatrix& p, const SymMatrix& rhs) {
  return lyapunov_solve(sym_eigen(p), rhs);
}

/// True iff the smallest eigenvalue of a exceeds eps. Non-finite input is
/// reported as not positive definite.
inline bool assert_spd(const SymMatrix& a, double eps) {
  if (!a.all_finite()) return false;
  return sym_eigen(a).min() > eps;
}

}  // namespace rdn
