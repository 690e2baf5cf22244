#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gyrorotor/errors.hpp"

namespace gyrorotor {

using complex = std::complex<double>;
using Vector3 = Eigen::Vector3d;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Truncated rigid-rotor basis |J,M> for 0 <= J <= j_max, ordered J-major with
/// M ascending, so the flat index of |J,M> is J^2 + J + M.
class RotorBasis {
 public:
  explicit RotorBasis(int j_max) : j_max_(j_max) {
    if (j_max < 0) throw InvalidArgument("RotorBasis: j_max must be >= 0");
  }

  int j_max() const noexcept { return j_max_; }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>((j_max_ + 1) * (j_max_ + 1));
  }

  bool contains(int J, int M) const noexcept {
    return J >= 0 && J <= j_max_ && M >= -J && M <= J;
  }

  std::size_t index(int J, int M) const {
    if (!contains(J, M)) {
      throw InvalidArgument("RotorBasis: |" + std::to_string(J) + "," +
                            std::to_string(M) + "> outside basis");
    }
    return static_cast<std::size_t>(J * J + J + M);
  }

  /// Inverse of index(): (J, M) for a flat index.
  std::pair<int, int> quantum_numbers(std::size_t i) const {
    if (i >= dim()) throw InvalidArgument("RotorBasis: index out of range");
    const int J = static_cast<int>(std::sqrt(static_cast<double>(i)));
    // guard against sqrt rounding for perfect squares
    int j = J;
    while ((j + 1) * (j + 1) <= static_cast<int>(i)) ++j;
    while (j * j > static_cast<int>(i)) --j;
    return {j, static_cast<int>(i) - j * j - j};
  }

  friend bool operator==(const RotorBasis&, const RotorBasis&) = default;

 private:
  int j_max_;
};

inline RotorBasis build_basis(int j_max) { return RotorBasis(j_max); }

/// Complex amplitudes over a RotorBasis. Amplitudes with J > j_max are
/// implicitly zero.
class RotorState {
 public:
  RotorState(RotorBasis basis, ComplexVector amplitudes)
      : basis_(basis), amplitudes_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != basis_.dim()) {
      throw InvalidArgument("RotorState: amplitude vector does not match basis");
    }
  }

  /// The eigenstate |J,M>.
  static RotorState eigenstate(RotorBasis basis, int J, int M) {
    ComplexVector c = ComplexVector::Zero(static_cast<Eigen::Index>(basis.dim()));
    c(static_cast<Eigen::Index>(basis.index(J, M))) = 1.0;
    return RotorState(basis, std::move(c));
  }

  const RotorBasis& basis() const noexcept { return basis_; }
  const ComplexVector& amplitudes() const noexcept { return amplitudes_; }

  complex amplitude(int J, int M) const {
    return amplitudes_(static_cast<Eigen::Index>(basis_.index(J, M)));
  }
  double population(int J, int M) const { return std::norm(amplitude(J, M)); }

  double norm() const { return amplitudes_.norm(); }

  RotorState normalized() const {
    const double n = norm();
    if (n == 0.0) throw InvalidArgument("RotorState: cannot normalize zero state");
    return RotorState(basis_, amplitudes_ / n);
  }

  /// Total population in shell J.
  double shell_population(int J) const {
    double p = 0.0;
    for (int M = -J; M <= J; ++M) p += population(J, M);
    return p;
  }

  /// Population in the two highest shells; a proxy for truncation error.
  double edge_population() const {
    double p = shell_population(basis_.j_max());
    if (basis_.j_max() > 0) p += shell_population(basis_.j_max() - 1);
    return p;
  }

 private:
  RotorBasis basis_;
  ComplexVector amplitudes_;
};

/// Threshold above which propagation reports possible basis truncation.
inline constexpr double truncation_warning_threshold = 1e-8;

struct OperatorFlags {
  bool hermitian = false;
  bool unitary = false;
};

/// Dense operator on a RotorBasis. The hermitian/unitary flags are checked
/// on construction.
class Operator {
 public:
  Operator(RotorBasis basis, ComplexMatrix matrix, OperatorFlags flags = OperatorFlags{})
      : basis_(basis), matrix_(std::move(matrix)), flags_(flags) {
    const auto n = static_cast<Eigen::Index>(basis_.dim());
    if (matrix_.rows() != n || matrix_.cols() != n) {
      throw InvalidArgument("Operator: matrix does not match basis");
    }
    if (flags_.hermitian && hermiticity_error() >= 1e-12) {
      throw InvalidArgument("Operator: flagged hermitian but A != A^dagger");
    }
    if (flags_.unitary && unitarity_error() >= 1e-10) {
      throw InvalidArgument("Operator: flagged unitary but A^dagger A != I");
    }
  }

  const RotorBasis& basis() const noexcept { return basis_; }
  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  bool hermitian() const noexcept { return flags_.hermitian; }
  bool unitary() const noexcept { return flags_.unitary; }

  complex element(int Jp, int Mp, int J, int M) const {
    return matrix_(static_cast<Eigen::Index>(basis_.index(Jp, Mp)),
                   static_cast<Eigen::Index>(basis_.index(J, M)));
  }

  double hermiticity_error() const {
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  }
  double unitarity_error() const {
    const auto n = matrix_.rows();
    return (matrix_.adjoint() * matrix_ - ComplexMatrix::Identity(n, n))
        .cwiseAbs()
        .maxCoeff();
  }

  RotorState apply(const RotorState& s) const {
    if (!(s.basis() == basis_)) throw InvalidArgument("Operator: basis mismatch");
    return RotorState(basis_, matrix_ * s.amplitudes());
  }

  complex expectation(const RotorState& s) const {
    if (!(s.basis() == basis_)) throw InvalidArgument("Operator: basis mismatch");
    return s.amplitudes().dot(matrix_ * s.amplitudes());
  }

  Operator adjoint() const {
    return Operator(basis_, matrix_.adjoint(), flags_);
  }

  /// U A U^dagger; keeps the hermitian flag of A.
  Operator conjugated_by(const Operator& u) const {
    ComplexMatrix m = u.matrix() * matrix_ * u.matrix().adjoint();
    if (flags_.hermitian) m = 0.5 * (m + m.adjoint()).eval();
    return Operator(basis_, std::move(m), {flags_.hermitian, false});
  }

 private:
  RotorBasis basis_;
  ComplexMatrix matrix_;
  OperatorFlags flags_;
};

/// Mixed rotor state. Used where the detection model averages over phases.
class DensityMatrix {
 public:
  DensityMatrix(RotorBasis basis, ComplexMatrix rho)
      : basis_(basis), rho_(std::move(rho)) {
    const auto n = static_cast<Eigen::Index>(basis_.dim());
    if (rho_.rows() != n || rho_.cols() != n) {
      throw InvalidArgument("DensityMatrix: matrix does not match basis");
    }
  }

  explicit DensityMatrix(const RotorState& pure)
      : basis_(pure.basis()),
        rho_(pure.amplitudes() * pure.amplitudes().adjoint()) {}

  const RotorBasis& basis() const noexcept { return basis_; }
  const ComplexMatrix& matrix() const noexcept { return rho_; }

  double trace() const { return rho_.trace().real(); }

  double expectation(const Operator& a) const {
    return (rho_ * a.matrix()).trace().real();
  }

 private:
  RotorBasis basis_;
  ComplexMatrix rho_;
};

}  // namespace gyrorotor
