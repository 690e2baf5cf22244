#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gyrorotor/dynamics.hpp"
#include "gyrorotor/observables.hpp"
#include "gyrorotor/preparation.hpp"

using namespace gyrorotor;

namespace {

ComplexVector random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  ComplexVector v(static_cast<Eigen::Index>(n));
  for (auto& c : v) c = complex(g(rng), g(rng));
  return v.normalized();
}

double max_abs_diff(const DensityMap& a, const DensityMap& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

const MoleculeParams kMol = MoleculeParams::no2_plus();
const MagneticField kField{1.0};

}  // namespace

TEST(AngularGrid, WeightsSumToSphere) {
  EXPECT_NEAR(AngularGrid().total_weight(), 4 * pi, 1e-10);
  EXPECT_NEAR(AngularGrid(7, 9).total_weight(), 4 * pi, 1e-10);
  EXPECT_THROW(AngularGrid(0, 4), InvalidArgument);
  const AngularGrid g;
  for (int i = 1; i < g.n_theta(); ++i) EXPECT_GT(g.theta(i), g.theta(i - 1));
}

TEST(AngularDensity, GroundStateIsUniform) {
  const DensityMap d = angular_density(RotorState::eigenstate(RotorBasis(3), 0, 0));
  for (double v : d.values()) EXPECT_NEAR(v, 1 / (4 * pi), 1e-12);
  EXPECT_NEAR(1 / (4 * pi), 0.0795775, 1e-7);
}

TEST(AngularDensity, CogwheelTeethInEquatorialPlane) {
  const DensityMap d = angular_density(cogwheel_state({0, 2, 0.0}, RotorBasis(4)));
  const auto it = std::max_element(d.values().begin(), d.values().end());
  const auto flat = static_cast<int>(it - d.values().begin());
  const int i = flat / d.grid().n_phi(), k = flat % d.grid().n_phi();
  EXPECT_NEAR(d.grid().theta(i), pi / 2, pi / 64);
  EXPECT_TRUE(std::abs(d.grid().phi(k)) < 1e-12 || std::abs(d.grid().phi(k) - pi) < 1e-12);
  // equatorial minimum at phi = +-pi/2
  EXPECT_LT(d.at(pi / 2, pi / 2), d.at(pi / 2, 0.3));
  EXPECT_NEAR(d.at(pi / 2, pi / 2), d.at(pi / 2, -pi / 2), 1e-14);
}

TEST(AngularDensity, TeethFollowAzimuthParameter) {
  const DensityMap d = angular_density(cogwheel_state({0, 2, pi / 6}, RotorBasis(4)));
  EXPECT_NEAR(in_plane_azimuth(d.source(), Vector3::UnitZ()), pi / 6, 1e-4);
}

TEST(AngularDensity, SingleMStateIsAzimuthallySymmetric) {
  const DensityMap d = angular_density(RotorState::eigenstate(RotorBasis(2), 1, 1));
  for (int i = 0; i < d.grid().n_theta(); ++i)
    for (int k = 1; k < d.grid().n_phi(); ++k) EXPECT_NEAR(d.value(i, k), d.value(i, 0), 1e-15);
}

TEST(AngularDensity, ParsevalAndRefinement) {
  for (int jm : {2, 6, 10}) {
    const RotorBasis b(jm);
    const RotorState s(b, 0.8 * random_vector(b.dim(), static_cast<unsigned>(jm)));
    const DensityMap d = angular_density(s);
    EXPECT_NEAR(d.integral(), 0.64, 1e-8);
    const DensityMap fine = angular_density(s, std::make_shared<const AngularGrid>(128, 256));
    EXPECT_NEAR(d.integral(), fine.integral(), 1e-12);
    for (double v : d.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(AngularDensity, ThetaMarginalConservedUnderFreeEvolution) {
  // holds whenever no two J levels share an M
  const RotorBasis b(5);
  for (auto [J, n] : {std::pair{0, 2}, {1, 3}}) {
    const RotorState s = cogwheel_state({J, n, 0.3}, b);
    const auto m0 = angular_density(s).theta_marginal();
    const auto m1 = angular_density(free_propagate(s, kMol, 1.234e-11)).theta_marginal();
    for (std::size_t i = 0; i < m0.size(); ++i) EXPECT_NEAR(m0[i], m1[i], 1e-10);
  }
}

TEST(ExpectationJ, EigenstatesAndCogwheels) {
  const RotorBasis b(4);
  EXPECT_LT((expectation_J(RotorState::eigenstate(b, 1, 1)) - Vector3(0, 0, 1)).norm(), 1e-15);
  for (double phi : {0.0, 0.4, 2.0})
    EXPECT_LT((expectation_J(cogwheel_state({0, 2, phi}, b)) - Vector3(0, 0, 1)).norm(), 1e-15);
  // ladder sums against the operator route
  const RotorState s(b, random_vector(b.dim(), 2));
  EXPECT_LT((expectation_J(s) - expectation_J(DensityMatrix(s))).norm(), 1e-13);
}

TEST(ExpectationJ, QuarterPrecessionTurnsAboutY) {
  const RotorBasis b(4);
  const double tp = 1 / std::abs(precession_frequency(kMol, kField));
  const Vector3 j = expectation_J(magnetic_propagate_closed(cogwheel_state({0, 2, 0.0}, b), kMol,
                                                            kField, tp / 4));
  EXPECT_LT((j - Vector3(1, 0, 0)).norm(), 1e-6);
}

TEST(Fidelity, BasicCases) {
  const RotorBasis b(3);
  const RotorState s(b, random_vector(b.dim(), 8));
  EXPECT_NEAR(fidelity(s, s), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(fidelity(RotorState::eigenstate(b, 0, 0), RotorState::eigenstate(b, 2, 2)), 0.0);
  EXPECT_NEAR(population(cogwheel_state({0, 2}, b), 2, 2), 0.5, 1e-15);
  EXPECT_THROW(fidelity(s, RotorState::eigenstate(RotorBasis(2), 0, 0)), InvalidArgument);
}

TEST(OrientationTensor, GridAndOperatorRoutesAgree) {
  const RotorBasis b(5);
  const RotorState s(b, random_vector(b.dim(), 12));
  const Eigen::Matrix3d grid = orientation_tensor(angular_density(s));
  const Eigen::Matrix3d ops = orientation_tensor(DensityMatrix(s), SymmetricTensorOps(b));
  EXPECT_LT((grid - ops).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(grid.trace(), 1.0, 1e-13);
}

TEST(AlignmentAxis, CogwheelNormalAlongZ) {
  const AlignmentAxis a = alignment_axis(angular_density(cogwheel_state({0, 2, 0.5}, RotorBasis(4))));
  ASSERT_FALSE(a.degenerate);
  EXPECT_LT((a.normal - Vector3::UnitZ()).norm(), 1e-12);
  EXPECT_NEAR(a.azimuth, 0.5, 1e-4);
}

TEST(AlignmentAxis, GroundStateIsDegenerate) {
  EXPECT_TRUE(alignment_axis(angular_density(RotorState::eigenstate(RotorBasis(2), 0, 0))).degenerate);
}

TEST(AlignmentAxis, QuarterPrecessionNormalAlongX) {
  const double tp = 1 / std::abs(precession_frequency(kMol, kField));
  const RotorState s =
      magnetic_propagate_closed(cogwheel_state({0, 2, 0.0}, RotorBasis(4)), kMol, kField, tp / 4);
  const AlignmentAxis a = alignment_axis(angular_density(s));
  ASSERT_FALSE(a.degenerate);
  EXPECT_LT(std::acos(std::min(1.0, std::abs(a.normal.x()))), pi / 180);
}

TEST(AzimuthTracking, AdvancesAtRotationFrequency) {
  const RotorBasis b(6);
  for (auto [J, n] : {std::pair{0, 2}, {1, 2}, {0, 4}, {2, 2}}) {
    const RotorState s0 = cogwheel_state({J, n, 0.2}, b);
    const double rate = two_pi * kMol.b_rot_hz * (2 * J + n + 1);
    const double tmax = 3.0 * two_pi / rate;  // three full turns
    std::vector<double> t, az;
    for (int k = 0; k <= 60; ++k) {
      t.push_back(tmax * k / 60);
      az.push_back(in_plane_azimuth(free_propagate(s0, kMol, t.back()), Vector3::UnitZ()));
    }
    const AzimuthTrack tr = fit_azimuth_rate(t, az, n);
    EXPECT_NEAR(tr.rate / rate, 1.0, 1e-6) << "J=" << J << " n=" << n;
    EXPECT_LT(tr.max_residual, 1e-3) << "J=" << J << " n=" << n;
  }
}

TEST(ShapeCorrelation, IdentityAndSymmetry) {
  const RotorBasis b(4);
  const DensityMap a = angular_density(RotorState(b, random_vector(b.dim(), 31)));
  const DensityMap c = angular_density(RotorState(b, random_vector(b.dim(), 32)));
  EXPECT_NEAR(shape_correlation(a, a), 1.0, 1e-10);
  EXPECT_NEAR(shape_correlation(a, c), shape_correlation(c, a), 1e-9);
  EXPECT_LT(shape_correlation(a, c), 0.999);
}

TEST(ShapeCorrelation, RigidRotationsCorrelatePerfectly) {
  const RotorBasis b(4);
  const RotorState s = cogwheel_state({0, 2, 0.0}, b);
  const DensityMap d0 = angular_density(s);
  EXPECT_NEAR(shape_correlation(d0, angular_density(free_propagate(s, kMol, 3.3e-12))), 1.0, 1e-6);
  EXPECT_NEAR(shape_correlation(d0, angular_density(magnetic_propagate_closed(s, kMol, kField, 1.1e-6))),
              1.0, 1e-6);
  const RotorState rnd(b, random_vector(b.dim(), 5));
  const Operator d = wigner_rotation(Rotation::euler_zyz(0.3, 1.0, -0.4), b);
  EXPECT_NEAR(shape_correlation(angular_density(rnd), angular_density(d.apply(rnd))), 1.0, 1e-6);
}

TEST(ShapeCorrelation, CogwheelAgainstUniformMatchesOverlapIntegral) {
  // the uniform density is rotation invariant, so the maximum over rotations
  // is the plain overlap integral; evaluate it on an independent finer grid
  const RotorBasis b(4);
  const RotorState cw = cogwheel_state({0, 2, 0.0}, b);
  const SphereQuadrature q(96, 192);
  double overlap = 0.0;
  for (std::size_t i = 0; i < q.cos_theta.nodes.size(); ++i)
    for (int k = 0; k < q.n_phi; ++k) {
      const double th = std::acos(q.cos_theta.nodes[i]);
      overlap += q.cos_theta.weights[i] * q.phi_weight() *
                 std::abs(wavefunction(cw, th, q.phi(k))) / std::sqrt(4 * pi);
    }
  const double c =
      shape_correlation(angular_density(cw), angular_density(RotorState::eigenstate(b, 0, 0)));
  // sqrt(rho) has kinks at the nodes, so both quadratures converge slowly
  EXPECT_NEAR(c, overlap, 1e-5);
  EXPECT_LT(c, 0.97);
}

TEST(Recurrence, RotorFrameDensityReturnsAfterPrecessionPeriod) {
  const RotorBasis b(4);
  const RotorState s = cogwheel_state({0, 2, 0.0}, b);
  const double tp = 1 / std::abs(precession_frequency(kMol, kField));
  const RotorState lab = magnetic_propagate_closed(s, kMol, kField, tp);
  // rotor frame: free rotation phases removed
  EXPECT_LT(max_abs_diff(angular_density(free_propagate(lab, kMol, -tp)), angular_density(s)), 1e-6);
  // lab frame: same as free rotation alone
  EXPECT_LT(max_abs_diff(angular_density(lab), angular_density(free_propagate(s, kMol, tp))), 1e-6);
  // half period: rigid turn by pi about y
  const RotorState half = free_propagate(magnetic_propagate_closed(s, kMol, kField, tp / 2), kMol, -tp / 2);
  const RotorState flipped = wigner_rotation(Rotation::axis_angle(Vector3::UnitY(), pi), b).apply(s);
  EXPECT_LT(max_abs_diff(angular_density(half), angular_density(flipped)), 1e-6);
  EXPECT_LT((expectation_J(half) + expectation_J(s)).norm(), 1e-9);
}
