#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "gyrorotor/basis.hpp"
#include "gyrorotor/constants.hpp"

namespace gyrorotor {

/// Proper rotation of R^3 (active convention).
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Rotation(const Eigen::Matrix3d& m) : m_(m) {}

  static Rotation identity() { return Rotation(); }

  static Rotation axis_angle(const Vector3& axis, double angle) {
    const double n = axis.norm();
    if (n == 0.0) throw InvalidArgument("Rotation: zero rotation axis");
    return Rotation(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix());
  }

  /// R = Rz(alpha) Ry(beta) Rz(gamma).
  static Rotation euler_zyz(double alpha, double beta, double gamma) {
    const Eigen::Matrix3d m = (Eigen::AngleAxisd(alpha, Vector3::UnitZ()) *
                               Eigen::AngleAxisd(beta, Vector3::UnitY()) *
                               Eigen::AngleAxisd(gamma, Vector3::UnitZ()))
                                  .toRotationMatrix();
    return Rotation(m);
  }

  /// Some rotation taking the z axis onto `target`.
  static Rotation z_to(const Vector3& target) {
    const Vector3 t = target.normalized();
    const double beta = std::acos(std::clamp(t.z(), -1.0, 1.0));
    const double alpha = std::atan2(t.y(), t.x());
    return euler_zyz(alpha, beta, 0.0);
  }

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }

  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vector3 operator*(const Vector3& v) const { return m_ * v; }

  struct Euler {
    double alpha, beta, gamma;
  };

  Euler to_euler_zyz() const {
    const double beta = std::atan2(std::hypot(m_(0, 2), m_(1, 2)), m_(2, 2));
    if (std::sin(beta) > 1e-12) {
      return {std::atan2(m_(1, 2), m_(0, 2)), beta, std::atan2(m_(2, 1), -m_(2, 0))};
    }
    if (m_(2, 2) > 0.0) return {std::atan2(m_(1, 0), m_(0, 0)), 0.0, 0.0};
    return {std::atan2(-m_(0, 1), m_(1, 1)), pi, 0.0};
  }

 private:
  Eigen::Matrix3d m_;
};

/// Wigner small-d matrix d^J_{M'M}(beta) = <J M'| exp(-i beta J_y) |J M>,
/// rows and columns ordered M = -J..J.
inline Eigen::MatrixXd wigner_small_d(int J, double beta) {
  static thread_local std::vector<double> log_fact;
  if (static_cast<int>(log_fact.size()) < 2 * J + 2) {
    log_fact.assign(static_cast<std::size_t>(2 * J + 2), 0.0);
    for (std::size_t k = 1; k < log_fact.size(); ++k)
      log_fact[k] = log_fact[k - 1] + std::log(static_cast<double>(k));
  }
  auto lf = [&](int k) { return log_fact[static_cast<std::size_t>(k)]; };
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);
  const int dim = 2 * J + 1;
  Eigen::MatrixXd d(dim, dim);
  for (int mp = -J; mp <= J; ++mp) {
    for (int m = -J; m <= J; ++m) {
      const double pre = 0.5 * (lf(J + mp) + lf(J - mp) + lf(J + m) + lf(J - m));
      double sum = 0.0;
      const int kmin = std::max(0, m - mp);
      const int kmax = std::min(J + m, J - mp);
      for (int k = kmin; k <= kmax; ++k) {
        const double log_den = lf(J + m - k) + lf(k) + lf(J - k - mp) + lf(k - m + mp);
        const int pc = 2 * J + m - mp - 2 * k;
        const int ps = 2 * k - m + mp;
        const double term = std::exp(pre - log_den) * std::pow(c, pc) * std::pow(s, ps);
        sum += ((k - m + mp) % 2 == 0) ? term : -term;
      }
      d(mp + J, m + J) = sum;
    }
  }
  return d;
}

/// Block-diagonal representation of a rotation on the rotor basis:
/// D^J_{M'M}(alpha, beta, gamma) = exp(-i M' alpha) d^J_{M'M}(beta) exp(-i M gamma).
/// The rotated state's angular density satisfies rho'(n) = rho(R^-1 n).
inline Operator wigner_rotation(const Rotation& rotation, const RotorBasis& basis) {
  const auto e = rotation.to_euler_zyz();
  const auto n = static_cast<Eigen::Index>(basis.dim());
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  for (int J = 0; J <= basis.j_max(); ++J) {
    const Eigen::MatrixXd d = wigner_small_d(J, e.beta);
    const auto off = static_cast<Eigen::Index>(J * J);
    for (int mp = -J; mp <= J; ++mp)
      for (int mm = -J; mm <= J; ++mm)
        m(off + mp + J, off + mm + J) = std::polar(1.0, -mp * e.alpha) *
                                        d(mp + J, mm + J) *
                                        std::polar(1.0, -mm * e.gamma);
  }
  return Operator(basis, std::move(m), {.unitary = true});
}

/// Rotation of a state by a rotation about the z axis only; diagonal, cheap.
inline RotorState rotate_about_z(const RotorState& s, double angle) {
  const RotorBasis& b = s.basis();
  ComplexVector c = s.amplitudes();
  for (int J = 0; J <= b.j_max(); ++J)
    for (int M = -J; M <= J; ++M)
      c(static_cast<Eigen::Index>(b.index(J, M))) *= std::polar(1.0, -M * angle);
  return RotorState(b, std::move(c));
}

/// Applies rotations to amplitude vectors block by block, with
/// exp(-i beta J_y) taken from a cached eigendecomposition of each J_y block.
/// Much cheaper than building wigner_rotation() when many rotations of the
/// same basis are needed.
class StateRotator {
 public:
  explicit StateRotator(const RotorBasis& basis) : basis_(basis) {
    const complex i(0.0, 1.0);
    for (int J = 0; J <= basis.j_max(); ++J) {
      const int dim = 2 * J + 1;
      ComplexMatrix jy = ComplexMatrix::Zero(dim, dim);
      for (int M = -J; M < J; ++M) {
        const double c = std::sqrt(double(J) * (J + 1) - double(M) * (M + 1));
        // J_y = (J_+ - J_-) / 2i
        jy(M + 1 + J, M + J) += c / (2.0 * i);
        jy(M + J, M + 1 + J) -= c / (2.0 * i);
      }
      const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(jy);
      vectors_.push_back(es.eigenvectors());
      Eigen::VectorXd ev = es.eigenvalues();
      for (auto& e : ev) e = std::round(e);
      eigenvalues_.push_back(ev);
    }
  }

  const RotorBasis& basis() const noexcept { return basis_; }

  ComplexVector apply(const Rotation& r, const ComplexVector& c) const {
    const auto e = r.to_euler_zyz();
    ComplexVector out(c.size());
    for (int J = 0; J <= basis_.j_max(); ++J) {
      const auto j = static_cast<std::size_t>(J);
      const int dim = 2 * J + 1;
      ComplexVector block = c.segment(J * J, dim);
      for (int k = 0; k < dim; ++k) block(k) *= std::polar(1.0, -(k - J) * e.gamma);
      ComplexVector tmp = vectors_[j].adjoint() * block;
      for (int k = 0; k < dim; ++k) tmp(k) *= std::polar(1.0, -eigenvalues_[j](k) * e.beta);
      block = vectors_[j] * tmp;
      for (int k = 0; k < dim; ++k) block(k) *= std::polar(1.0, -(k - J) * e.alpha);
      out.segment(J * J, dim) = block;
    }
    return out;
  }

  RotorState apply(const Rotation& r, const RotorState& s) const {
    if (!(s.basis() == basis_)) throw InvalidArgument("StateRotator: basis mismatch");
    return RotorState(basis_, apply(r, s.amplitudes()));
  }

 private:
  RotorBasis basis_;
  std::vector<ComplexMatrix> vectors_;
  std::vector<Eigen::VectorXd> eigenvalues_;
};

}  // namespace gyrorotor
