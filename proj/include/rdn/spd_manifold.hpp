#pragma once

// The cone of symmetric positive definite matrices with the affine-invariant
// metric <U, V>_P = tr(V P^-1 U P^-1).
//
// Every point carries its eigendecomposition P = Q diag(lambda) Q^T, computed
// once and shared by copies. Tangent vectors built from a point's spectrum keep
// their coordinates Q^T V Q in that basis, so the metric, the exponential map and
// the Lyapunov solves stay accurate to relative precision even when P is far
// more ill-conditioned than a dense matrix could resolve.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rdn/errors.hpp"
#include "rdn/linalg.hpp"

namespace rdn {

namespace detail {

struct EigenCache {
  std::once_flag once;
  EigenPair pair;
};

inline void check_spectrum(const Vector& values, const char* where) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values(i)) || !(values(i) > 0.0)) {
      throw InvalidPoint(std::string(where) + ": eigenvalue " + std::to_string(values(i)) +
                         " is not positive");
    }
  }
}

}  // namespace detail

class SymTangent;

/// A point of the SPD cone.
class SpdPoint {
 public:
  /// Throws InvalidPoint when m is not positive definite (Cholesky fails).
  explicit SpdPoint(SymMatrix m) : m_(std::move(m)), cache_(std::make_shared<detail::EigenCache>()) {
    if (!m_.all_finite()) throw InvalidPoint("SpdPoint: non-finite entries");
    Eigen::LLT<Matrix> llt(m_.mat());
    if (llt.info() != Eigen::Success) throw InvalidPoint("SpdPoint: matrix is not positive definite");
  }

  /// Builds the point Q diag(values) Q^T from a factorization with positive
  /// ascending values; the factorization becomes the point's cached spectrum.
  static SpdPoint from_eigen(EigenPair e) {
    detail::check_spectrum(e.values, "SpdPoint::from_eigen");
    SymMatrix m(from_basis(e.vectors, e.values));
    return SpdPoint(std::move(m), std::move(e));
  }

  const SymMatrix& matrix() const noexcept { return m_; }
  int dim() const noexcept { return m_.dim(); }

  const EigenPair& eigen() const {
    std::call_once(cache_->once, [this] {
      EigenPair e = sym_eigen(m_);
      detail::check_spectrum(e.values, "SpdPoint::eigen");
      cache_->pair = std::move(e);
    });
    return cache_->pair;
  }

  /// True when both handles share one cached spectrum (copies of one point).
  bool same_as(const SpdPoint& other) const noexcept { return cache_ == other.cache_; }

 private:
  friend class SymTangent;

  SpdPoint(SymMatrix m, EigenPair e) : m_(std::move(m)), cache_(std::make_shared<detail::EigenCache>()) {
    std::call_once(cache_->once, [&] { cache_->pair = std::move(e); });
  }

  SymMatrix m_;
  std::shared_ptr<detail::EigenCache> cache_;
};

namespace detail {

struct AmbientCache {
  std::once_flag once;
  std::optional<SymMatrix> matrix;
};

}  // namespace detail

/// A symmetric matrix viewed as a tangent vector at some point of the cone.
///
/// A tangent is either given by its ambient matrix V or, relative to a base
/// point P = Q diag(lambda) Q^T, by its scaled coordinates
///   W = Lambda^-1/2 (Q^T V Q) Lambda^-1/2,
/// in which the metric at P is the Frobenius inner product. The ambient matrix
/// of a scaled tangent is formed on first use.
class SymTangent {
 public:
  explicit SymTangent(SymMatrix m)
      : dim_(m.dim()), ambient_(std::make_shared<detail::AmbientCache>()) {
    std::call_once(ambient_->once, [&] { ambient_->matrix.emplace(std::move(m)); });
  }

  /// Tangent with scaled coordinates w at base.
  static SymTangent scaled_at(const SpdPoint& base, const Matrix& w) {
    if (w.rows() != base.dim() || w.cols() != base.dim()) {
      throw DimMismatch("SymTangent: coordinates do not match base point dimension " +
                        std::to_string(base.dim()));
    }
    base.eigen();
    return SymTangent(base.cache_, symmetrize(w));
  }

  /// Tangent given by its coordinates C = Q^T V Q in the eigenbasis of base.
  static SymTangent in_basis_of(const SpdPoint& base, const Matrix& coords) {
    if (coords.rows() != base.dim() || coords.cols() != base.dim()) {
      throw DimMismatch("SymTangent: coordinates do not match base point dimension " +
                        std::to_string(base.dim()));
    }
    const Vector s = base.eigen().values.cwiseSqrt().cwiseInverse();
    return SymTangent(base.cache_, symmetrize(s.asDiagonal() * coords * s.asDiagonal()));
  }

  static SymTangent zero(const SpdPoint& base) {
    return scaled_at(base, Matrix::Zero(base.dim(), base.dim()));
  }

  int dim() const noexcept { return dim_; }

  /// Ambient matrix V. Entries may be infinite when V is not representable.
  const SymMatrix& matrix() const {
    std::call_once(ambient_->once, [this] {
      const EigenPair& e = frame_->pair;
      const Vector s = e.values.cwiseSqrt();
      const Matrix c = s.asDiagonal() * w_ * s.asDiagonal();
      ambient_->matrix.emplace(e.vectors * c * e.vectors.transpose());
    });
    return *ambient_->matrix;
  }

  /// Scaled coordinates at base.
  Matrix scaled(const SpdPoint& base) const {
    check_base(base);
    if (frame_ && frame_ == base.cache_) return w_;
    const EigenPair& e = base.eigen();
    const Vector s = e.values.cwiseSqrt().cwiseInverse();
    return symmetrize(s.asDiagonal() * (e.vectors.transpose() * matrix().mat() * e.vectors) *
                      s.asDiagonal());
  }

  /// Coordinates Q^T V Q in the eigenbasis of base.
  Matrix coords(const SpdPoint& base) const {
    check_base(base);
    const EigenPair& e = base.eigen();
    if (frame_ && frame_ == base.cache_) {
      const Vector s = e.values.cwiseSqrt();
      return s.asDiagonal() * w_ * s.asDiagonal();
    }
    return to_basis(e.vectors, matrix().mat());
  }

  friend SymTangent operator*(double s, const SymTangent& v) {
    if (v.frame_) return SymTangent(v.frame_, s * v.w_);
    return SymTangent(s * v.matrix());
  }
  SymTangent operator-() const { return -1.0 * *this; }

  friend SymTangent operator+(const SymTangent& u, const SymTangent& v) { return combine(u, v, 1.0); }
  friend SymTangent operator-(const SymTangent& u, const SymTangent& v) { return combine(u, v, -1.0); }

 private:
  SymTangent(std::shared_ptr<detail::EigenCache> frame, Matrix w)
      : dim_(static_cast<int>(w.rows())),
        ambient_(std::make_shared<detail::AmbientCache>()),
        frame_(std::move(frame)),
        w_(std::move(w)) {}

  void check_base(const SpdPoint& base) const {
    if (base.dim() != dim_) {
      throw DimMismatch("SymTangent: dimension " + std::to_string(dim_) +
                        " paired with point of dimension " + std::to_string(base.dim()));
    }
  }

  static SymTangent combine(const SymTangent& u, const SymTangent& v, double sign) {
    if (u.dim_ != v.dim_) {
      throw DimMismatch("SymTangent: " + std::to_string(u.dim_) + " vs " + std::to_string(v.dim_));
    }
    if (u.frame_ && u.frame_ == v.frame_) return SymTangent(u.frame_, u.w_ + sign * v.w_);
    return SymTangent(u.matrix() + sign * v.matrix());
  }

  int dim_;
  std::shared_ptr<detail::AmbientCache> ambient_;
  std::shared_ptr<detail::EigenCache> frame_;
  Matrix w_;
};

/// <U, V>_P = tr(V P^-1 U P^-1).
inline double inner(const SpdPoint& p, const SymTangent& u, const SymTangent& v) {
  if (u.dim() != p.dim() || v.dim() != p.dim()) {
    throw DimMismatch("inner: point dimension " + std::to_string(p.dim()) + ", tangents " +
                      std::to_string(u.dim()) + " and " + std::to_string(v.dim()));
  }
  return u.scaled(p).cwiseProduct(v.scaled(p)).sum();
}

inline double norm(const SpdPoint& p, const SymTangent& v) {
  if (v.dim() != p.dim()) {
    throw DimMismatch("norm: point dimension " + std::to_string(p.dim()) + ", tangent " +
                      std::to_string(v.dim()));
  }
  return v.scaled(p).stableNorm();
}

/// exp_P(V) = P^1/2 exp(P^-1/2 V P^-1/2) P^1/2. Throws StepOverflow when the
/// result is not representable in double precision.
inline SpdPoint exp_map(const SpdPoint& p, const SymTangent& v) {
  if (v.dim() != p.dim()) {
    throw DimMismatch("exp_map: point dimension " + std::to_string(p.dim()) + ", tangent " +
                      std::to_string(v.dim()));
  }
  const EigenPair& e = p.eigen();
  const Matrix m = v.scaled(p);
  if (!m.allFinite()) throw StepOverflow("exp_map: non-finite tangent coordinates");
  if (m.isZero(0.0)) return p;

  const EigenPair em = sym_eigen(symmetrize(m));
  const Vector half = (0.5 * em.values).array().exp();
  if (!half.allFinite() || !(half.array() > 0.0).all()) {
    throw StepOverflow("exp_map: exponent " + std::to_string(em.max()) +
                       " overflows double precision");
  }
  // Result in the basis of p is C C^T with C = Lambda^1/2 U exp(M/2).
  const Matrix c = e.values.cwiseSqrt().asDiagonal() * em.vectors * half.asDiagonal();
  const Matrix cct = c * c.transpose();
  if (!cct.allFinite()) throw StepOverflow("exp_map: result overflows double precision");
  EigenPair es = sym_eigen(symmetrize(cct));
  if (!(es.min() > 0.0)) {
    // Spectrum spread beyond what the symmetric solver resolves; the singular
    // values of the factor keep relative accuracy.
    Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullU);
    const Eigen::Index n = c.rows();
    es.values.resize(n);
    es.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double sv = svd.singularValues()(n - 1 - k);
      es.values(k) = sv * sv;
      es.vectors.col(k) = svd.matrixU().col(n - 1 - k);
    }
    if (!es.values.allFinite()) throw StepOverflow("exp_map: result overflows double precision");
  }
  es.vectors = e.vectors * es.vectors;
  return SpdPoint::from_eigen(std::move(es));
}

/// Geodesic distance ||log(A^-1/2 B A^-1/2)||_F.
inline double distance(const SpdPoint& a, const SpdPoint& b) {
  if (a.dim() != b.dim()) {
    throw DimMismatch("distance: dimensions " + std::to_string(a.dim()) + " and " +
                      std::to_string(b.dim()));
  }
  if (a.same_as(b)) return 0.0;
  const EigenPair& ea = a.eigen();
  const EigenPair& eb = b.eigen();
  // A^-1/2 B A^-1/2 is similar to G G^T.
  const Matrix g = ea.values.cwiseSqrt().cwiseInverse().asDiagonal() *
                   (ea.vectors.transpose() * eb.vectors) * eb.values.cwiseSqrt().asDiagonal();
  const EigenPair eg = sym_eigen(symmetrize(g * g.transpose()));
  Vector logs(eg.dim());
  if (eg.min() > 0.0) {
    logs = eg.values.array().log();
  } else {
    Eigen::JacobiSVD<Matrix> svd(g);
    if (!(svd.singularValues().minCoeff() > 0.0)) throw InvalidPoint("distance: degenerate point");
    logs = 2.0 * svd.singularValues().array().log();
  }
  return logs.norm();
}

/// Q diag(u) Q^T with u_i uniform in [eig_low, eig_high] and Q the orthogonal
/// factor of a Gaussian matrix, both drawn from a generator seeded with seed.
inline SpdPoint random_spd(int dim, double eig_low, double eig_high, std::uint64_t seed) {
  if (dim < 1) throw InvalidRange("random_spd: dimension must be >= 1");
  if (!(std::isfinite(eig_low) && std::isfinite(eig_high) && eig_low > 0.0 && eig_low <= eig_high)) {
    throw InvalidRange("random_spd: need 0 < eig_low <= eig_high, got [" + std::to_string(eig_low) +
                       ", " + std::to_string(eig_high) + "]");
  }
  if (eig_low == eig_high) {
    return SpdPoint::from_eigen(EigenPair{Vector::Constant(dim, eig_low), Matrix::Identity(dim, dim)});
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(eig_low, eig_high);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Vector u(dim);
  for (int i = 0; i < dim; ++i) u(i) = uniform(rng);
  Matrix z(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) z(i, j) = gauss(rng);

  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < dim; ++k)
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);

  std::vector<int> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return u(x) < u(y); });
  EigenPair e{Vector(dim), Matrix(dim, dim)};
  for (int k = 0; k < dim; ++k) {
    e.values(k) = u(order[static_cast<std::size_t>(k)]);
    e.vectors.col(k) = q.col(order[static_cast<std::size_t>(k)]);
  }
  return SpdPoint::from_eigen(std::move(e));
}

}  // namespace rdn
