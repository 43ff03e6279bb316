#pragma once

#include "baroid/types.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace baroid {

/// Symmetric 3x3 tensor stored as its six independent components
/// (xx, yy, zz, xy, xz, yz).  Symmetry is structural: there is no way to
/// construct an asymmetric value.
class SymTensor3 {
 public:
  SymTensor3() : v_(Vec6::Zero()) {}
  explicit SymTensor3(const Vec6& v) : v_(v) {}

  static SymTensor3 zero() { return SymTensor3(); }

  static SymTensor3 identity() {
    SymTensor3 t;
    t.v_ << 1, 1, 1, 0, 0, 0;
    return t;
  }

  static SymTensor3 diagonal(Scalar a, Scalar b, Scalar c) {
    SymTensor3 t;
    t.v_ << a, b, c, 0, 0, 0;
    return t;
  }

  static SymTensor3 isotropic(Scalar s) { return diagonal(s, s, s); }

  /// Builds from a full matrix, symmetrizing to absorb roundoff in
  /// products that are symmetric only up to floating point.
  static SymTensor3 from_matrix(const Mat3& m) {
    SymTensor3 t;
    t.v_ << m(0, 0), m(1, 1), m(2, 2),
        0.5 * (m(0, 1) + m(1, 0)),
        0.5 * (m(0, 2) + m(2, 0)),
        0.5 * (m(1, 2) + m(2, 1));
    return t;
  }

  Mat3 matrix() const {
    Mat3 m;
    m << v_[0], v_[3], v_[4],
         v_[3], v_[1], v_[5],
         v_[4], v_[5], v_[2];
    return m;
  }

  Scalar xx() const { return v_[0]; }
  Scalar yy() const { return v_[1]; }
  Scalar zz() const { return v_[2]; }
  Scalar xy() const { return v_[3]; }
  Scalar xz() const { return v_[4]; }
  Scalar yz() const { return v_[5]; }

  const Vec6& components() const { return v_; }

  Scalar trace() const { return v_[0] + v_[1] + v_[2]; }

  bool is_diagonal() const { return v_[3] == 0.0 && v_[4] == 0.0 && v_[5] == 0.0; }

  bool all_finite() const { return v_.allFinite(); }

  SymTensor3 operator+(const SymTensor3& o) const { return SymTensor3(v_ + o.v_); }
  SymTensor3 operator-(const SymTensor3& o) const { return SymTensor3(v_ - o.v_); }
  SymTensor3 operator*(Scalar s) const { return SymTensor3(v_ * s); }
  SymTensor3 operator/(Scalar s) const { return SymTensor3(v_ / s); }
  SymTensor3& operator+=(const SymTensor3& o) {
    v_ += o.v_;
    return *this;
  }

  friend SymTensor3 operator*(Scalar s, const SymTensor3& t) { return t * s; }

 private:
  Vec6 v_;
};

/// Antisymmetric 3x3 tensor stored as its three independent components
/// (xy, xz, yz); the full tensor is [[0, xy, xz], [-xy, 0, yz], [-xz, -yz, 0]].
class SkewTensor3 {
 public:
  SkewTensor3() : v_(Vec3::Zero()) {}
  SkewTensor3(Scalar xy, Scalar xz, Scalar yz) { v_ << xy, xz, yz; }

  static SkewTensor3 zero() { return SkewTensor3(); }

  Mat3 matrix() const {
    Mat3 m;
    m << 0, v_[0], v_[1],
        -v_[0], 0, v_[2],
        -v_[1], -v_[2], 0;
    return m;
  }

  bool is_zero() const { return v_[0] == 0.0 && v_[1] == 0.0 && v_[2] == 0.0; }

  const Vec3& components() const { return v_; }

 private:
  Vec3 v_;
};

/// Frobenius norm sqrt(tr(T^2)); off-diagonal components enter twice.
inline Scalar tensor_norm(const SymTensor3& t) {
  const Vec6& v = t.components();
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] +
                   2.0 * (v[3] * v[3] + v[4] * v[4] + v[5] * v[5]));
}

/// T / |T|.  Throws NormTooSmall when the norm is degenerate.
inline SymTensor3 normalize(const SymTensor3& t) {
  const Scalar n = tensor_norm(t);
  if (n <= kNormEps) {
    throw NormTooSmall("cannot normalize tensor with norm " + std::to_string(n));
  }
  return t / n;
}

/// Matrix exponential of a symmetric tensor via eigendecomposition
/// A = Q diag(w) Q^T  =>  exp(A) = Q diag(exp(w)) Q^T.
/// Diagonal input short-circuits to a componentwise exponential, which keeps
/// diagonal driving paths exactly diagonal.
inline SymTensor3 sym_exp(const SymTensor3& a) {
  if (a.is_diagonal()) {
    return SymTensor3::diagonal(std::exp(a.xx()), std::exp(a.yy()), std::exp(a.zz()));
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(a.matrix());
  const Vec3 w = es.eigenvalues().array().exp();
  const Mat3 q = es.eigenvectors();
  return SymTensor3::from_matrix(q * w.asDiagonal() * q.transpose());
}

}  // namespace baroid
