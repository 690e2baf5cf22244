#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gyrorotor/angular.hpp"
#include "gyrorotor/basis.hpp"
#include "gyrorotor/optimize.hpp"
#include "gyrorotor/rotation.hpp"
#include "gyrorotor/spherical.hpp"

namespace gyrorotor {

/// Gauss-Legendre nodes in cos(theta) times uniform phi nodes. Nodes are
/// stored with theta ascending.
class AngularGrid {
 public:
  AngularGrid(int n_theta = 64, int n_phi = 128) : n_theta_(n_theta), n_phi_(n_phi) {
    if (n_theta < 1 || n_phi < 1) throw InvalidArgument("AngularGrid: empty grid");
    const QuadratureRule gl = gauss_legendre(n_theta);
    // GL nodes ascend in cos(theta); reverse so theta ascends
    for (int i = n_theta - 1; i >= 0; --i) {
      const auto k = static_cast<std::size_t>(i);
      cos_theta_.push_back(gl.nodes[k]);
      theta_.push_back(std::acos(gl.nodes[k]));
      theta_weight_.push_back(gl.weights[k]);
    }
    for (int k = 0; k < n_phi; ++k) phi_.push_back(two_pi * k / n_phi);
  }

  int n_theta() const noexcept { return n_theta_; }
  int n_phi() const noexcept { return n_phi_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_theta_ * n_phi_); }

  double theta(int i) const { return theta_[static_cast<std::size_t>(i)]; }
  double cos_theta(int i) const { return cos_theta_[static_cast<std::size_t>(i)]; }
  double phi(int k) const { return phi_[static_cast<std::size_t>(k)]; }
  double weight(int i) const {
    return theta_weight_[static_cast<std::size_t>(i)] * two_pi / n_phi_;
  }
  std::size_t flat(int i, int k) const { return static_cast<std::size_t>(i * n_phi_ + k); }
  Vector3 node(int i, int k) const { return direction(theta(i), phi(k)); }

  double total_weight() const {
    double w = 0.0;
    for (int i = 0; i < n_theta_; ++i) w += weight(i) * n_phi_;
    return w;
  }

  friend bool operator==(const AngularGrid& a, const AngularGrid& b) {
    return a.n_theta_ == b.n_theta_ && a.n_phi_ == b.n_phi_;
  }

 private:
  int n_theta_, n_phi_;
  std::vector<double> theta_, cos_theta_, theta_weight_, phi_;
};

/// Psi(theta, phi) = sum c_JM Y_JM at an arbitrary direction.
inline complex wavefunction(const RotorState& s, double theta, double phi) {
  const RotorBasis& b = s.basis();
  const LegendreTable leg(b.j_max(), std::cos(theta));
  complex sum = 0.0;
  for (int M = -b.j_max(); M <= b.j_max(); ++M) {
    complex g = 0.0;
    for (int J = std::abs(M); J <= b.j_max(); ++J) g += s.amplitude(J, M) * leg(J, M);
    sum += g * std::polar(1.0, M * phi);
  }
  return sum;
}

inline complex wavefunction(const RotorState& s, const Vector3& n) {
  const double theta = std::acos(std::clamp(n.z() / n.norm(), -1.0, 1.0));
  return wavefunction(s, theta, std::atan2(n.y(), n.x()));
}

namespace detail {

// Evaluates densities of many states on one grid with shared Legendre and
// phase tables. Summation order per node is fixed.
class GridEvaluator {
 public:
  GridEvaluator(const AngularGrid& grid, int j_max) : grid_(grid), j_max_(j_max) {
    for (int i = 0; i < grid.n_theta(); ++i) legendre_.emplace_back(j_max, grid.cos_theta(i));
    const int nm = 2 * j_max + 1;
    phase_.resize(static_cast<std::size_t>(grid.n_phi() * nm));
    for (int k = 0; k < grid.n_phi(); ++k)
      for (int M = -j_max; M <= j_max; ++M)
        phase_[static_cast<std::size_t>(k * nm + M + j_max)] = std::polar(1.0, M * grid.phi(k));
  }

  std::vector<double> density(const ComplexVector& c) const {
    const int nm = 2 * j_max_ + 1;
    std::vector<double> out(grid_.size());
    std::vector<complex> g(static_cast<std::size_t>(nm));
    for (int i = 0; i < grid_.n_theta(); ++i) {
      const LegendreTable& leg = legendre_[static_cast<std::size_t>(i)];
      for (int M = -j_max_; M <= j_max_; ++M) {
        complex acc = 0.0;
        for (int J = std::abs(M); J <= j_max_; ++J) acc += c(J * J + J + M) * leg(J, M);
        g[static_cast<std::size_t>(M + j_max_)] = acc;
      }
      for (int k = 0; k < grid_.n_phi(); ++k) {
        const complex* ph = &phase_[static_cast<std::size_t>(k * nm)];
        complex psi = 0.0;
        for (int m = 0; m < nm; ++m) psi += g[static_cast<std::size_t>(m)] * ph[m];
        out[grid_.flat(i, k)] = std::norm(psi);
      }
    }
    return out;
  }

 private:
  const AngularGrid& grid_;
  int j_max_;
  std::vector<LegendreTable> legendre_;
  std::vector<complex> phase_;
};

}  // namespace detail

/// Angular probability density of the molecular axis on a grid. Keeps the
/// source state so it can be evaluated off-grid.
class DensityMap {
 public:
  DensityMap(std::shared_ptr<const AngularGrid> grid, std::vector<double> values,
             RotorState source)
      : grid_(std::move(grid)), values_(std::move(values)), source_(std::move(source)) {}

  const AngularGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const AngularGrid>& grid_ptr() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const RotorState& source() const noexcept { return source_; }

  double value(int i, int k) const { return values_[grid_->flat(i, k)]; }

  /// Exact density at an arbitrary direction.
  double at(double theta, double phi) const {
    return std::norm(wavefunction(source_, theta, phi));
  }

  double integral() const {
    double sum = 0.0;
    for (int i = 0; i < grid_->n_theta(); ++i) {
      double ring = 0.0;
      for (int k = 0; k < grid_->n_phi(); ++k) ring += value(i, k);
      sum += grid_->weight(i) * ring;
    }
    return sum;
  }

  /// Integral over phi at each theta node.
  std::vector<double> theta_marginal() const {
    std::vector<double> out;
    for (int i = 0; i < grid_->n_theta(); ++i) {
      double ring = 0.0;
      for (int k = 0; k < grid_->n_phi(); ++k) ring += value(i, k);
      out.push_back(ring * two_pi / grid_->n_phi());
    }
    return out;
  }

 private:
  std::shared_ptr<const AngularGrid> grid_;
  std::vector<double> values_;
  RotorState source_;
};

inline std::shared_ptr<const AngularGrid> default_grid() {
  static const auto grid = std::make_shared<const AngularGrid>(64, 128);
  return grid;
}

inline DensityMap angular_density(const RotorState& state,
                                  std::shared_ptr<const AngularGrid> grid = default_grid()) {
  const detail::GridEvaluator ev(*grid, state.basis().j_max());
  std::vector<double> v = ev.density(state.amplitudes());
  // |psi|^2 is non-negative by construction; keep the documented clip anyway
  for (double& x : v)
    if (x < 0.0) x = 0.0;
  return DensityMap(std::move(grid), std::move(v), state);
}

/// (<J_x>, <J_y>, <J_z>) in units of hbar.
inline Vector3 expectation_J(const RotorState& s) {
  const RotorBasis& b = s.basis();
  complex jplus = 0.0;
  double jz = 0.0;
  for (int J = 0; J <= b.j_max(); ++J) {
    for (int M = -J; M <= J; ++M) {
      jz += M * s.population(J, M);
      if (M < J) {
        jplus += std::conj(s.amplitude(J, M + 1)) * s.amplitude(J, M) *
                 std::sqrt(double(J) * (J + 1) - double(M) * (M + 1));
      }
    }
  }
  return {jplus.real(), jplus.imag(), jz};
}

inline Vector3 expectation_J(const DensityMatrix& rho) {
  return {rho.expectation(op_angular(AngularKind::Jx, rho.basis())),
          rho.expectation(op_angular(AngularKind::Jy, rho.basis())),
          rho.expectation(op_angular(AngularKind::Jz, rho.basis()))};
}

inline double fidelity(const RotorState& a, const RotorState& b) {
  if (!(a.basis() == b.basis())) throw InvalidArgument("fidelity: basis mismatch");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

inline double population(const RotorState& s, int J, int M) { return s.population(J, M); }

/// Orientation tensor integral of n n^T rho over the grid.
inline Eigen::Matrix3d orientation_tensor(const DensityMap& d) {
  Eigen::Matrix3d t = Eigen::Matrix3d::Zero();
  const AngularGrid& g = d.grid();
  for (int i = 0; i < g.n_theta(); ++i)
    for (int k = 0; k < g.n_phi(); ++k) {
      const Vector3 n = g.node(i, k);
      t += (g.weight(i) * d.value(i, k)) * (n * n.transpose());
    }
  return t;
}

/// Orientation tensor Tr(rho n_a n_b) from the operator matrix elements.
inline Eigen::Matrix3d orientation_tensor(const DensityMatrix& rho, const SymmetricTensorOps& ops) {
  Eigen::Matrix3d t;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) t(a, b) = rho.expectation(ops.component(a, b));
  return t;
}

/// Orientation tensor of the state with coherences between different J
/// shells removed, i.e. the long-time average under free rotation. Its
/// smallest principal axis is the normal of the plane the teeth sweep.
inline Eigen::Matrix3d rotation_averaged_tensor(const DensityMatrix& rho,
                                                const SymmetricTensorOps& ops) {
  const RotorBasis& b = rho.basis();
  ComplexMatrix dephased = ComplexMatrix::Zero(rho.matrix().rows(), rho.matrix().cols());
  for (int J = 0; J <= b.j_max(); ++J) {
    const int dim = 2 * J + 1;
    dephased.block(J * J, J * J, dim, dim) = rho.matrix().block(J * J, J * J, dim, dim);
  }
  return orientation_tensor(DensityMatrix(b, std::move(dephased)), ops);
}

/// Plane normal of a tensor: eigenvector of the smallest eigenvalue, signed
/// so its largest component is positive. Empty if the two smallest
/// eigenvalues coincide.
struct PlaneNormal {
  Vector3 normal = Vector3::Zero();
  Vector3 eigenvalues = Vector3::Zero();
  bool degenerate = true;
};

inline PlaneNormal plane_normal(const Eigen::Matrix3d& tensor, double tol = 1e-8) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(tensor);
  PlaneNormal out;
  out.eigenvalues = es.eigenvalues();
  out.degenerate = (out.eigenvalues(1) - out.eigenvalues(0)) <= tol * std::max(1e-300, tensor.trace());
  if (!out.degenerate) {
    Vector3 v = es.eigenvectors().col(0);
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0) v = -v;
    out.normal = v;
  }
  return out;
}

/// Orthonormal in-plane axes (e1, e2) for a plane normal, with e1 the
/// projection of x (or y when the normal is along x) and e2 = normal x e1.
inline std::pair<Vector3, Vector3> in_plane_axes(const Vector3& normal) {
  Vector3 ref = Vector3::UnitX();
  if (std::abs(normal.dot(ref)) > 0.9) ref = Vector3::UnitY();
  const Vector3 e1 = (ref - normal.dot(ref) * normal).normalized();
  return {e1, normal.cross(e1)};
}

/// Azimuth of the density maximum along the great circle perpendicular to
/// `normal`, measured from e1 of in_plane_axes(). Sub-sample resolution by a
/// parabola through the three samples around the peak.
inline double in_plane_azimuth(const RotorState& s, const Vector3& normal, int samples = 1440) {
  const auto [e1, e2] = in_plane_axes(normal);
  std::vector<double> v(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const double a = two_pi * k / samples;
    v[static_cast<std::size_t>(k)] = std::norm(wavefunction(s, std::cos(a) * e1 + std::sin(a) * e2));
  }
  const auto it = std::max_element(v.begin(), v.end());
  const int k = static_cast<int>(it - v.begin());
  const double ym = v[static_cast<std::size_t>((k - 1 + samples) % samples)];
  const double y0 = v[static_cast<std::size_t>(k)];
  const double yp = v[static_cast<std::size_t>((k + 1) % samples)];
  const double den = ym - 2.0 * y0 + yp;
  const double shift = den != 0.0 ? 0.5 * (ym - yp) / den : 0.0;
  double a = two_pi * (k + shift) / samples;
  if (a < 0.0) a += two_pi;
  return a;
}

struct AlignmentAxis {
  Vector3 normal = Vector3::Zero();  // plane normal, unspecified if degenerate
  double azimuth = 0.0;              // in-plane angle of the density maximum
  Vector3 eigenvalues = Vector3::Zero();
  bool degenerate = true;
};

/// Plane normal from the rotation-averaged orientation tensor of the source
/// state, plus the in-plane azimuth of the instantaneous density maximum.
inline AlignmentAxis alignment_axis(const DensityMap& d) {
  const SymmetricTensorOps ops(d.source().basis());
  const PlaneNormal pn = plane_normal(rotation_averaged_tensor(DensityMatrix(d.source()), ops));
  AlignmentAxis out;
  out.eigenvalues = pn.eigenvalues;
  out.degenerate = pn.degenerate;
  if (!pn.degenerate) {
    out.normal = pn.normal;
    out.azimuth = in_plane_azimuth(d.source(), pn.normal);
  }
  return out;
}

namespace detail {

inline Rotation rotation_from_vector(const Vector3& w) {
  const double a = w.norm();
  if (a == 0.0) return Rotation::identity();
  return Rotation::axis_angle(w / a, a);
}

inline Eigen::Matrix3d principal_frame(const Eigen::Matrix3d& t) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(t);
  Eigen::Matrix3d f;
  // columns: largest, middle, smallest eigenvalue (the plane normal last)
  f.col(0) = es.eigenvectors().col(2);
  f.col(1) = es.eigenvectors().col(1);
  f.col(2) = es.eigenvectors().col(0);
  if (f.determinant() < 0) f.col(2) = -f.col(2);
  return f;
}

}  // namespace detail

/// Maximum over rotations R of the Bhattacharyya overlap
/// integral of sqrt(rho1) sqrt(rho2 o R). Equals 1 iff the densities are
/// rigid rotations of each other. The objective is symmetrized between the
/// two orderings so the result does not depend on argument order.
inline double shape_correlation(const DensityMap& d1, const DensityMap& d2) {
  if (!(d1.grid() == d2.grid())) throw InvalidArgument("shape_correlation: grid mismatch");
  if (!(d1.source().basis() == d2.source().basis()))
    throw InvalidArgument("shape_correlation: basis mismatch");
  const AngularGrid& g = d1.grid();
  const RotorBasis& basis = d1.source().basis();
  const detail::GridEvaluator ev(g, basis.j_max());
  const StateRotator rotator(basis);
  const ComplexVector& c1 = d1.source().amplitudes();
  const ComplexVector& c2 = d2.source().amplitudes();

  auto sqrt_density = [&](const ComplexVector& c) {
    std::vector<double> v = ev.density(c);
    for (double& x : v) x = std::sqrt(std::max(0.0, x));
    return v;
  };
  const std::vector<double> s1 = sqrt_density(c1);
  const std::vector<double> s2 = sqrt_density(c2);
  auto overlap = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double sum = 0.0;
    for (int i = 0; i < g.n_theta(); ++i) {
      double ring = 0.0;
      for (int k = 0; k < g.n_phi(); ++k) ring += a[g.flat(i, k)] * b[g.flat(i, k)];
      sum += g.weight(i) * ring;
    }
    return sum;
  };
  // rho2 o R is the density of D(R^-1) psi2; rho1 o R^-1 that of D(R) psi1
  auto objective = [&](const Rotation& r) {
    const ComplexVector c2r = rotator.apply(r.inverse(), c2);
    const ComplexVector c1r = rotator.apply(r, c1);
    return 0.5 * (overlap(s1, sqrt_density(c2r)) + overlap(sqrt_density(c1r), s2));
  };

  // rho1(n) = rho2(Q n) implies T2 = Q T1 Q^T, so Q maps the principal frame
  // of T1 onto that of T2 up to axis flips and, for in-plane degeneracy, a
  // turn about the normal.
  const Eigen::Matrix3d f1 = detail::principal_frame(orientation_tensor(d1));
  const Eigen::Matrix3d f2 = detail::principal_frame(orientation_tensor(d2));
  constexpr double exact = 1.0 - 1e-13;  // a rigid match needs no further search
  std::vector<Rotation> candidates{Rotation::identity()};
  const std::array<Vector3, 4> flips{Vector3(1, 1, 1), Vector3(-1, -1, 1), Vector3(1, -1, -1),
                                     Vector3(-1, 1, -1)};
  constexpr int turns = 12;
  for (int k = 0; k < turns; ++k) {
    const Eigen::Matrix3d rz =
        Eigen::AngleAxisd(two_pi * k / turns, Vector3::UnitZ()).toRotationMatrix();
    for (const Vector3& fl : flips)
      candidates.emplace_back(f2 * fl.asDiagonal() * rz * f1.transpose());
  }
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scored.emplace_back(objective(candidates[i]), i);
    if (scored.back().first >= exact) return std::min(scored.back().first, 1.0);
  }
  std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });

  double best = scored.front().first;
  const std::size_t refine = std::min<std::size_t>(3, scored.size());
  for (std::size_t r = 0; r < refine && best < exact; ++r) {
    const Rotation base = candidates[scored[r].second];
    auto f = [&](const Vector3& w) { return -objective(detail::rotation_from_vector(w) * base); };
    const auto res = nelder_mead<3>(f, Vector3::Zero(), 0.05, 1e-13, 400);
    best = std::max(best, -res.value);
  }
  return std::clamp(best, 0.0, 1.0);
}

struct AzimuthTrack {
  double rate = 0.0;          // rad/s
  double offset = 0.0;        // rad at t = 0
  double max_residual = 0.0;  // rad
  std::vector<double> unwrapped;
};

/// Straight-line fit of an azimuth series whose pattern has n-fold symmetry:
/// consecutive samples are unwrapped modulo 2 pi / n, so the spacing must be
/// below half a period of the pattern.
inline AzimuthTrack fit_azimuth_rate(const std::vector<double>& t, const std::vector<double>& az,
                                     int n) {
  if (t.size() != az.size() || t.size() < 3)
    throw InvalidArgument("fit_azimuth_rate: need at least 3 matching samples");
  if (n < 1) throw InvalidArgument("fit_azimuth_rate: n must be >= 1");
  const double period = two_pi / n;
  AzimuthTrack out;
  out.unwrapped.push_back(az[0]);
  for (std::size_t k = 1; k < az.size(); ++k) {
    const double prev = out.unwrapped.back();
    out.unwrapped.push_back(prev + std::remainder(az[k] - prev, period));
  }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) {
    a(static_cast<Eigen::Index>(k), 0) = 1.0;
    a(static_cast<Eigen::Index>(k), 1) = t[k];
    y(static_cast<Eigen::Index>(k)) = out.unwrapped[k];
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  out.offset = c(0);
  out.rate = c(1);
  out.max_residual = (a * c - y).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace gyrorotor
