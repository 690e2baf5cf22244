#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gyrorotor/angular.hpp"
#include "gyrorotor/basis.hpp"
#include "gyrorotor/constants.hpp"
#include "gyrorotor/dynamics.hpp"
#include "gyrorotor/errors.hpp"
#include "gyrorotor/fitting.hpp"
#include "gyrorotor/observables.hpp"
#include "gyrorotor/rotation.hpp"
#include "gyrorotor/spherical.hpp"

namespace gyrorotor {

// Axial recoil: the fragment flies along the molecular axis, so detector hits
// sample the angular density.

struct DetectorGeometry {
  std::string label;
  Vector3 axis = Vector3::UnitX();
  double half_angle = 20.0 * pi / 180.0;
  bool double_sided = true;

  void validate() const {
    if (std::abs(axis.norm() - 1.0) > 1e-9)
      throw InvalidArgument("DetectorGeometry " + label + ": axis must be a unit vector");
    if (!(half_angle > 0.0 && half_angle < pi / 2))
      throw InvalidArgument("DetectorGeometry " + label + ": half_angle must lie in (0, pi/2)");
  }

  bool accepts(const Vector3& n) const {
    const double c = n.dot(axis);
    const double lim = std::cos(half_angle);
    return double_sided ? std::abs(c) >= lim : c >= lim;
  }
};

/// D1 about +-x, D2 about +-z.
inline std::vector<DetectorGeometry> default_detectors(double half_angle = 20.0 * pi / 180.0) {
  return {{"D1", Vector3::UnitX(), half_angle, true}, {"D2", Vector3::UnitZ(), half_angle, true}};
}

/// Projector-like operator whose expectation is the probability of the axis
/// falling in the detector cap(s). Built about z by a 1D quadrature (the cap
/// is azimuthally symmetric) and rotated onto the detector axis.
inline Operator detector_operator(const DetectorGeometry& det, const RotorBasis& basis) {
  det.validate();
  const int jm = basis.j_max();
  const QuadratureRule rule = gauss_legendre(jm + 8, std::cos(det.half_angle), 1.0);
  std::vector<LegendreTable> leg;
  for (double x : rule.nodes) leg.emplace_back(jm, x);

  const auto n = static_cast<Eigen::Index>(basis.dim());
  ComplexMatrix pz = ComplexMatrix::Zero(n, n);
  for (int M = -jm; M <= jm; ++M) {
    for (int Jp = std::abs(M); Jp <= jm; ++Jp) {
      for (int J = std::abs(M); J <= jm; ++J) {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
          s += rule.weights[q] * leg[q](Jp, M) * leg[q](J, M);
        s *= two_pi;
        // the opposite cap adds (-1)^(J+J') times the same integral
        if (det.double_sided) s *= ((Jp + J) % 2 == 0) ? 2.0 : 0.0;
        pz(static_cast<Eigen::Index>(basis.index(Jp, M)),
           static_cast<Eigen::Index>(basis.index(J, M))) = s;
      }
    }
  }
  const Operator z(basis, std::move(pz), {true, false});
  if ((det.axis - Vector3::UnitZ()).norm() < 1e-15) return z;
  return z.conjugated_by(wigner_rotation(Rotation::z_to(det.axis), basis));
}

/// Cap integral of the angular density by quadrature adapted to the cap: the
/// state is rotated so the detector axis becomes z, then integrated with
/// Gauss-Legendre in cos(theta) on [cos(alpha), 1] and a uniform phi rule.
inline double hit_probability(const RotorState& state, const DetectorGeometry& det) {
  det.validate();
  const RotorBasis& b = state.basis();
  const int jm = b.j_max();
  const StateRotator rotator(b);
  // psi'(n) = psi(R n) with R taking z to the detector axis
  const RotorState s = rotator.apply(Rotation::z_to(det.axis).inverse(), state);
  const QuadratureRule rule = gauss_legendre(jm + 8, std::cos(det.half_angle), 1.0);
  const int n_phi = 4 * jm + 4;

  auto cap = [&](const ComplexVector& c) {
    double total = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const LegendreTable leg(jm, rule.nodes[q]);
      std::vector<complex> g(static_cast<std::size_t>(2 * jm + 1));
      for (int M = -jm; M <= jm; ++M) {
        complex acc = 0.0;
        for (int J = std::abs(M); J <= jm; ++J) acc += c(J * J + J + M) * leg(J, M);
        g[static_cast<std::size_t>(M + jm)] = acc;
      }
      double ring = 0.0;
      for (int k = 0; k < n_phi; ++k) {
        complex psi = 0.0;
        for (int M = -jm; M <= jm; ++M)
          psi += g[static_cast<std::size_t>(M + jm)] * std::polar(1.0, M * two_pi * k / n_phi);
        ring += std::norm(psi);
      }
      total += rule.weights[q] * ring * two_pi / n_phi;
    }
    return total;
  };

  double p = cap(s.amplitudes());
  if (det.double_sided) {
    // the -z cap: inversion maps Y_JM to (-1)^J Y_JM
    ComplexVector inv = s.amplitudes();
    for (int J = 1; J <= jm; J += 2) inv.segment(J * J, 2 * J + 1) *= -1.0;
    p += cap(inv);
  }
  return std::clamp(p, 0.0, 1.0);
}

inline double hit_probability(const DensityMatrix& rho, const Operator& detector) {
  return std::clamp(rho.expectation(detector), 0.0, 1.0);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, a, b).
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed) ^ (a + 1)) ^ (b + 0x51ed27ULL)));
}

inline Vector3 uniform_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, two_pi);
  const double z = u(rng);
  const double phi = a(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

// Rejection sampler for one pure state. The envelope is 1.1x the grid
// maximum; if a proposal ever exceeds it the envelope is raised and sampling
// restarts, so the output is exact and still deterministic.
inline std::vector<Vector3> sample_pure(const RotorState& s, std::size_t n, std::mt19937_64& rng) {
  const std::vector<double> grid_density = angular_density(s).values();
  double bound = 1.1 * *std::max_element(grid_density.begin(), grid_density.end());
  if (!(bound > 0.0)) throw InvalidArgument("sample_explosions: zero density");
  const std::mt19937_64 start = rng;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vector3> out;
  out.reserve(n);
  while (out.size() < n) {
    const Vector3 d = uniform_direction(rng);
    const double rho = std::norm(wavefunction(s, d));
    if (rho > bound) {
      bound = 1.2 * rho;
      out.clear();
      rng = start;
      continue;
    }
    if (u(rng) * bound < rho) out.push_back(d);
  }
  return out;
}

}  // namespace detail

/// Explosion directions drawn i.i.d. from the angular density.
inline std::vector<Vector3> sample_explosions(const RotorState& state, std::size_t n,
                                              std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_explosions: n must be > 0");
  auto rng = detail::stream(seed, 0);
  return detail::sample_pure(state.normalized(), n, rng);
}

/// Mixed state: each shot picks an eigencomponent by weight, then samples it.
inline std::vector<Vector3> sample_explosions(const DensityMatrix& rho, std::size_t n,
                                              std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_explosions: n must be > 0");
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix());
  std::vector<double> weights;
  std::vector<RotorState> parts;
  for (Eigen::Index k = es.eigenvalues().size() - 1; k >= 0; --k) {
    const double w = es.eigenvalues()(k);
    if (w <= 1e-14) continue;
    weights.push_back(w);
    parts.emplace_back(rho.basis(), es.eigenvectors().col(k));
  }
  if (parts.empty()) throw InvalidArgument("sample_explosions: zero density matrix");
  auto rng = detail::stream(seed, 0);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> counts(parts.size(), 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[pick(rng)];
  std::vector<Vector3> out;
  out.reserve(n);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (counts[k] == 0) continue;
    auto sub = detail::stream(seed, 1, k);
    const auto v = detail::sample_pure(parts[k], counts[k], sub);
    out.insert(out.end(), v.begin(), v.end());
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

/// Average of rho over rotations about `axis`: in a frame with axis along z
/// the coherences between different M vanish.
inline DensityMatrix azimuthal_average(const DensityMatrix& rho, const Vector3& axis) {
  const RotorBasis& b = rho.basis();
  const ComplexMatrix d = wigner_rotation(Rotation::z_to(axis.normalized()), b).matrix();
  ComplexMatrix local = d.adjoint() * rho.matrix() * d;
  for (Eigen::Index i = 0; i < local.rows(); ++i) {
    const int mi = b.quantum_numbers(static_cast<std::size_t>(i)).second;
    for (Eigen::Index j = 0; j < local.cols(); ++j)
      if (b.quantum_numbers(static_cast<std::size_t>(j)).second != mi) local(i, j) = 0.0;
  }
  ComplexMatrix out = d * local * d.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(b, std::move(out));
}

enum class FastPhase { exact, randomized };
enum class ShotModel { binomial, per_shot };

inline std::string to_string(FastPhase f) { return f == FastPhase::exact ? "exact" : "randomized"; }

struct ScanConfig {
  std::vector<double> delays;
  long shots_per_delay = 10000;
  std::uint64_t rng_seed = 1;
  std::optional<double> decoherence_tau;
  FastPhase fast_phase = FastPhase::randomized;
  ShotModel shot_model = ShotModel::binomial;
  unsigned threads = 1;  // 0: hardware concurrency

  void validate() const {
    if (delays.empty()) throw InvalidArgument("ScanConfig: no delays");
    for (std::size_t i = 1; i < delays.size(); ++i)
      if (!(delays[i] > delays[i - 1]))
        throw InvalidArgument("ScanConfig: delays must be strictly increasing");
    if (shots_per_delay <= 0) throw InvalidArgument("ScanConfig: shots_per_delay must be > 0");
    if (decoherence_tau && !(*decoherence_tau > 0.0))
      throw InvalidArgument("ScanConfig: decoherence_tau must be > 0");
  }
};

/// k * t_max / n for k = 0..n-1.
inline std::vector<double> uniform_delays(double t_max, int n) {
  if (n < 1 || !(t_max > 0.0)) throw InvalidArgument("uniform_delays: need n >= 1 and t_max > 0");
  std::vector<double> d(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) d[static_cast<std::size_t>(k)] = t_max * k / n;
  return d;
}

struct ScanPoint {
  double delay = 0.0;
  std::vector<double> probability;  // per detector
  std::vector<long> counts;         // per detector
  Vector3 j = Vector3::Zero();
  Vector3 normal = Vector3::Zero();  // zero when undefined
};

struct ScanSeries {
  std::vector<std::string> detector_labels;
  long shots_per_delay = 0;
  std::vector<ScanPoint> points;

  std::vector<double> delays() const {
    std::vector<double> d;
    for (const auto& p : points) d.push_back(p.delay);
    return d;
  }
};

/// Density used for detection at delay t (after precession, fast-phase
/// handling and decoherence).
inline DensityMatrix detection_density(const RotorState& initial, const MoleculeParams& mol,
                                       const MagneticField& field, const ScanConfig& scan,
                                       const SymmetricTensorOps& ops, double t) {
  RotorState s = initial;
  if (field.along_y()) {
    s = magnetic_propagate_closed(initial, mol, field, t);
  } else if (t != 0.0) {
    // time-independent Hamiltonian: one exponential is exact
    const Operator h = magnetic_hamiltonian(mol, field, initial.basis());
    s = generic_propagate(initial, [&](double) { return h; }, 0.0, t, t).state;
  }
  DensityMatrix rho(s);
  if (scan.fast_phase == FastPhase::randomized) {
    const PlaneNormal pn = plane_normal(rotation_averaged_tensor(rho, ops));
    if (!pn.degenerate) rho = azimuthal_average(rho, pn.normal);
  }
  if (scan.decoherence_tau && field.magnitude_tesla > 0.0) {
    const double keep = std::exp(-t / *scan.decoherence_tau);
    const DensityMatrix avg = azimuthal_average(rho, field.axis);
    rho = DensityMatrix(rho.basis(), keep * rho.matrix() + (1.0 - keep) * avg.matrix());
  }
  return rho;
}

/// Pump-probe delay scan. Each delay draws from its own RNG stream derived
/// from (rng_seed, delay index), so results do not depend on thread count.
inline ScanSeries pump_probe_scan(const RotorState& initial, const MoleculeParams& mol,
                                  const MagneticField& field, const ScanConfig& scan,
                                  const std::vector<DetectorGeometry>& detectors) {
  mol.validate();
  field.validate();
  scan.validate();
  if (detectors.empty()) throw InvalidArgument("pump_probe_scan: no detectors");
  if (std::abs(initial.norm() - 1.0) > 1e-9)
    throw InvalidArgument("pump_probe_scan: initial state must be normalized");
  const RotorBasis& basis = initial.basis();
  const SymmetricTensorOps ops(basis);
  std::vector<Operator> pis;
  for (const auto& d : detectors) pis.push_back(detector_operator(d, basis));

  ScanSeries out;
  for (const auto& d : detectors) out.detector_labels.push_back(d.label);
  out.shots_per_delay = scan.shots_per_delay;
  out.points.resize(scan.delays.size());

  auto run = [&](std::size_t k) {
    const double t = scan.delays[k];
    const DensityMatrix rho = detection_density(initial, mol, field, scan, ops, t);
    ScanPoint& pt = out.points[k];
    pt.delay = t;
    pt.j = expectation_J(rho);
    const PlaneNormal pn = plane_normal(rotation_averaged_tensor(rho, ops));
    if (!pn.degenerate) pt.normal = pn.normal;
    for (const auto& pi_op : pis) pt.probability.push_back(hit_probability(rho, pi_op));
    if (scan.shot_model == ShotModel::binomial) {
      for (std::size_t d = 0; d < detectors.size(); ++d) {
        auto rng = detail::stream(scan.rng_seed, k, d);
        std::binomial_distribution<long> draw(scan.shots_per_delay, pt.probability[d]);
        pt.counts.push_back(draw(rng));
      }
    } else {
      const auto dirs = sample_explosions(
          rho, static_cast<std::size_t>(scan.shots_per_delay),
          detail::splitmix64(scan.rng_seed ^ detail::splitmix64(k + 1)));
      for (const auto& det : detectors)
        pt.counts.push_back(std::count_if(dirs.begin(), dirs.end(),
                                          [&](const Vector3& n) { return det.accepts(n); }));
    }
  };

  unsigned threads = scan.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : scan.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, scan.delays.size()));
  if (threads <= 1) {
    for (std::size_t k = 0; k < scan.delays.size(); ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < scan.delays.size(); k += threads) run(k);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

enum class PrecessionModel { jvec, detector };

inline std::string to_string(PrecessionModel m) {
  return m == PrecessionModel::jvec ? "jvec" : "detector";
}

struct PrecessionEstimate {
  double omega_p_hz = 0.0;
  double sigma_hz = 0.0;
  double residual = 0.0;
  std::string sense = "unsigned";  // right-handed / left-handed about B, or unsigned
  PrecessionModel model = PrecessionModel::jvec;
};

/// Direction of the <J> rotation about the field axis from the sign of
/// sum_k (J_k x J_k+1) . b.
inline std::string precession_sense(const ScanSeries& series, const Vector3& field_axis) {
  double s = 0.0, scale = 0.0;
  for (std::size_t k = 0; k + 1 < series.points.size(); ++k) {
    s += series.points[k].j.cross(series.points[k + 1].j).dot(field_axis);
    scale += series.points[k].j.squaredNorm();
  }
  if (!(scale > 0.0) || std::abs(s) <= 1e-9 * scale) return "unsigned";
  return s > 0.0 ? "right-handed" : "left-handed";
}

/// Precession frequency from a scan. jvec: fit <J_z> (or J_x, J_y if J_z is
/// flat) with a single sinusoid. detector: fit each detector's counts with a
/// fundamental plus second harmonic, weights from binomial shot noise; the
/// detector fundamental is twice the precession frequency. Detector
/// estimates are combined by inverse variance.
inline PrecessionEstimate extract_precession(const ScanSeries& series, PrecessionModel model,
                                             const Vector3& field_axis = Vector3::UnitY()) {
  const std::size_t n = series.points.size();
  if (n < 8) {
    throw EstimationFailed("need at least 8 delays", "delays=" + std::to_string(n));
  }
  const std::vector<double> t = series.delays();
  PrecessionEstimate est;
  est.model = model;

  if (model == PrecessionModel::jvec) {
    std::vector<double> y(n);
    std::string diag;
    for (int comp : {2, 0, 1}) {
      for (std::size_t k = 0; k < n; ++k) y[k] = series.points[k].j(comp);
      const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
      if (*hi - *lo <= 1e-9) {
        diag += std::string("J") + "xyz"[comp] + " flat; ";
        continue;
      }
      const SinusoidFit fit = fit_sinusoid(t, y, {}, {.harmonics = 1});
      est.omega_p_hz = fit.frequency;
      est.sigma_hz = fit.sigma_frequency;
      est.residual = fit.residual_norm;
      est.sense = precession_sense(series, field_axis);
      return est;
    }
    throw EstimationFailed("no oscillation in <J>", diag);
  }

  if (series.shots_per_delay <= 0) throw InvalidArgument("extract_precession: no shots");
  double wsum = 0.0, fsum = 0.0, rsum = 0.0;
  std::string diag;
  const double shots = static_cast<double>(series.shots_per_delay);
  for (std::size_t d = 0; d < series.detector_labels.size(); ++d) {
    std::vector<double> y(n), sigma(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double c = static_cast<double>(series.points[k].counts.at(d));
      y[k] = c;
      sigma[k] = std::sqrt(std::max(c * (1.0 - c / shots), 1.0));
    }
    try {
      const SinusoidFit fit = fit_sinusoid(t, y, sigma, {.harmonics = 2});
      const double f = 0.5 * fit.frequency;
      const double s = 0.5 * fit.sigma_frequency;
      const double w = s > 0.0 ? 1.0 / (s * s) : 1e300;
      wsum += w;
      fsum += w * f;
      rsum += fit.residual_norm;
    } catch (const EstimationFailed& e) {
      diag += series.detector_labels[d] + ": " + e.what() + " (" + e.diagnostics() + "); ";
    }
  }
  if (wsum == 0.0) throw EstimationFailed("no detector signal above the noise floor", diag);
  est.omega_p_hz = fsum / wsum;
  est.sigma_hz = std::sqrt(1.0 / wsum);
  est.residual = rsum;
  est.sense = precession_sense(series, field_axis);
  return est;
}

struct GFactorEstimate {
  double omega_p_mhz = 0.0;
  double sigma_mhz = 0.0;
  double g_r_abs = 0.0;
  double g_r_sigma = 0.0;
  std::string sense = "unsigned";
  double residual = 0.0;

  /// Right-handed precession about B means a negative g-factor.
  std::optional<double> g_r_signed() const {
    if (sense == "right-handed") return -g_r_abs;
    if (sense == "left-handed") return g_r_abs;
    return std::nullopt;
  }
};

/// g_r = omega_p / (mu_N/h |B|).
inline GFactorEstimate estimate_g_factor(double omega_p_hz, double sigma_hz,
                                         const MagneticField& field,
                                         const std::string& sense = "unsigned",
                                         double residual = 0.0) {
  if (!(field.magnitude_tesla > 0.0)) throw InvalidArgument("estimate_g_factor: |B| must be > 0");
  if (!(sigma_hz >= 0.0)) throw InvalidArgument("estimate_g_factor: sigma must be >= 0");
  const double scale = PhysicalConstants::nuclear_magneton_mhz_per_tesla * field.magnitude_tesla;
  GFactorEstimate g;
  g.omega_p_mhz = std::abs(omega_p_hz) * 1e-6;
  g.sigma_mhz = sigma_hz * 1e-6;
  g.g_r_abs = g.omega_p_mhz / scale;
  g.g_r_sigma = g.sigma_mhz / scale;
  g.sense = sense;
  g.residual = residual;
  return g;
}

inline GFactorEstimate estimate_g_factor(const PrecessionEstimate& p, const MagneticField& field) {
  return estimate_g_factor(p.omega_p_hz, p.sigma_hz, field, p.sense, p.residual);
}

}  // namespace gyrorotor
