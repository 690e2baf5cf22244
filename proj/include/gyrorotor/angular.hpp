#pragma once

#include <array>
#include <cmath>

#include "gyrorotor/basis.hpp"
#include "gyrorotor/errors.hpp"

namespace gyrorotor {

enum class AngularKind { J2, Jz, Jplus, Jminus, Jx, Jy };

/// Angular-momentum operators in units of hbar.
inline Operator op_angular(AngularKind kind, const RotorBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.dim());
  ComplexMatrix jp = ComplexMatrix::Zero(n, n);
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  for (int J = 0; J <= basis.j_max(); ++J) {
    for (int M = -J; M < J; ++M) {
      const double c = std::sqrt(double(J) * (J + 1) - double(M) * (M + 1));
      jp(static_cast<Eigen::Index>(basis.index(J, M + 1)),
         static_cast<Eigen::Index>(basis.index(J, M))) = c;
    }
  }
  const complex i(0.0, 1.0);
  switch (kind) {
    case AngularKind::J2:
      for (int J = 0; J <= basis.j_max(); ++J)
        for (int M = -J; M <= J; ++M) {
          const auto k = static_cast<Eigen::Index>(basis.index(J, M));
          m(k, k) = double(J) * (J + 1);
        }
      return Operator(basis, std::move(m), {.hermitian = true});
    case AngularKind::Jz:
      for (int J = 0; J <= basis.j_max(); ++J)
        for (int M = -J; M <= J; ++M) {
          const auto k = static_cast<Eigen::Index>(basis.index(J, M));
          m(k, k) = M;
        }
      return Operator(basis, std::move(m), {.hermitian = true});
    case AngularKind::Jplus:
      return Operator(basis, std::move(jp));
    case AngularKind::Jminus:
      return Operator(basis, jp.adjoint());
    case AngularKind::Jx:
      return Operator(basis, 0.5 * (jp + jp.adjoint()), {.hermitian = true});
    case AngularKind::Jy:
      return Operator(basis, (jp - jp.adjoint()) / (2.0 * i), {.hermitian = true});
  }
  throw InvalidArgument("op_angular: unknown kind");
}

namespace detail {

// Matrices of the unit-vector components n_x, n_y, n_z (molecular axis in the
// lab frame) on a basis, built from the dipole recursions of Y_JM.
inline std::array<ComplexMatrix, 3> direction_matrices(const RotorBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.dim());
  ComplexMatrix nz = ComplexMatrix::Zero(n, n);
  ComplexMatrix np = ComplexMatrix::Zero(n, n);  // sin(theta) e^{i phi}
  auto idx = [&](int J, int M) { return static_cast<Eigen::Index>(basis.index(J, M)); };
  for (int l = 0; l <= basis.j_max(); ++l) {
    for (int m = -l; m <= l; ++m) {
      if (l + 1 <= basis.j_max()) {
        const double a = std::sqrt(((l + 1.0) * (l + 1.0) - double(m) * m) /
                                   ((2.0 * l + 1.0) * (2.0 * l + 3.0)));
        nz(idx(l + 1, m), idx(l, m)) = a;
        nz(idx(l, m), idx(l + 1, m)) = a;
        np(idx(l + 1, m + 1), idx(l, m)) =
            -std::sqrt((l + m + 1.0) * (l + m + 2.0) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)));
      }
      if (l >= 1 && m + 1 <= l - 1) {
        np(idx(l - 1, m + 1), idx(l, m)) =
            std::sqrt((l - m) * (l - m - 1.0) / ((2.0 * l - 1.0) * (2.0 * l + 1.0)));
      }
    }
  }
  const complex i(0.0, 1.0);
  ComplexMatrix nx = 0.5 * (np + np.adjoint());
  ComplexMatrix ny = (np - np.adjoint()) / (2.0 * i);
  return {nx, ny, nz};
}

}  // namespace detail

/// The six second moments n_i n_j of the molecular axis. Products are formed
/// on a basis one shell larger and then truncated, so every retained matrix
/// element is exact and n_x^2 + n_y^2 + n_z^2 = I.
class SymmetricTensorOps {
 public:
  explicit SymmetricTensorOps(const RotorBasis& basis) : basis_(basis) {
    const RotorBasis ext(basis.j_max() + 1);
    const auto d = detail::direction_matrices(ext);
    const auto n = static_cast<Eigen::Index>(basis.dim());
    for (int a = 0; a < 3; ++a) {
      for (int b = a; b < 3; ++b) {
        ComplexMatrix prod = (d[a] * d[b]).topLeftCorner(n, n);
        prod = 0.5 * (prod + prod.adjoint()).eval();
        m_[pair_index(a, b)] = prod;
      }
    }
  }

  const RotorBasis& basis() const noexcept { return basis_; }

  /// n_a n_b with a, b in {0, 1, 2} for x, y, z.
  Operator component(int a, int b) const {
    return Operator(basis_, m_[pair_index(a, b)], {.hermitian = true});
  }

  Operator xx() const { return component(0, 0); }
  Operator yy() const { return component(1, 1); }
  Operator zz() const { return component(2, 2); }
  Operator xy() const { return component(0, 1); }
  Operator yz() const { return component(1, 2); }
  Operator zx() const { return component(2, 0); }

  /// (p . n)^2 = sum_ab p_a p_b n_a n_b for an arbitrary (not necessarily
  /// unit) vector p.
  ComplexMatrix projected_square(const Vector3& p) const {
    const auto n = static_cast<Eigen::Index>(basis_.dim());
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out += (p(a) * p(b)) * m_[pair_index(a, b)];
    return out;
  }

 private:
  static std::size_t pair_index(int a, int b) {
    if (a > b) std::swap(a, b);
    // (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
    static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return static_cast<std::size_t>(table[a][b]);
  }

  RotorBasis basis_;
  std::array<ComplexMatrix, 6> m_;
};

inline SymmetricTensorOps symmetric_tensor_ops(const RotorBasis& basis) {
  return SymmetricTensorOps(basis);
}

/// cos^2 of the angle between the molecular axis and a unit lab vector.
inline Operator cos2theta_op(const Vector3& axis, const RotorBasis& basis) {
  if (std::abs(axis.norm() - 1.0) > 1e-12) {
    throw InvalidArgument("cos2theta_op: axis must be a unit vector");
  }
  const SymmetricTensorOps ops(basis);
  ComplexMatrix m = ops.projected_square(axis);
  m = 0.5 * (m + m.adjoint()).eval();
  return Operator(basis, std::move(m), {.hermitian = true});
}

}  // namespace gyrorotor
