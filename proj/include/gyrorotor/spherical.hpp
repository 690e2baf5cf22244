#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include "gyrorotor/basis.hpp"
#include "gyrorotor/constants.hpp"
#include "gyrorotor/errors.hpp"

namespace gyrorotor {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b], nodes ascending.
inline QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = mid - half * x;
    rule.nodes[hi] = mid + half * x;
    rule.weights[lo] = half * w;
    rule.weights[hi] = half * w;
  }
  return rule;
}

/// Orthonormalized associated Legendre functions for 0 <= m <= l <= l_max at
/// a single x = cos(theta), Condon-Shortley phase included, so that
/// Y_lm(theta, phi) = value(l, m) * exp(i m phi) for m >= 0.
class LegendreTable {
 public:
  LegendreTable(int l_max, double x) : l_max_(l_max), values_(size_for(l_max)) {
    if (l_max < 0) throw InvalidArgument("LegendreTable: l_max must be >= 0");
    const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = 1.0 / std::sqrt(4.0 * pi);
    for (int m = 0; m <= l_max; ++m) {
      if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
      at(m, m) = pmm;
      if (m + 1 <= l_max) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * pmm;
      for (int l = m + 2; l <= l_max; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) /
                                   (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
      }
    }
  }

  int l_max() const noexcept { return l_max_; }

  /// Value for any -l <= m <= l (negative m via the conjugation symmetry of
  /// the phi-independent part).
  double operator()(int l, int m) const {
    if (m >= 0) return values_[offset(l, m)];
    const double v = values_[offset(l, -m)];
    return (m % 2 == 0) ? v : -v;
  }

 private:
  static std::size_t size_for(int l_max) {
    return static_cast<std::size_t>((l_max + 1) * (l_max + 2) / 2);
  }
  static std::size_t offset(int l, int m) {
    return static_cast<std::size_t>(l * (l + 1) / 2 + m);
  }
  double& at(int l, int m) { return values_[offset(l, m)]; }

  int l_max_;
  std::vector<double> values_;
};

/// Orthonormal spherical harmonic Y_JM(theta, phi), Condon-Shortley phase.
inline complex sph_harm(int J, int M, double theta, double phi) {
  if (J < 0 || M < -J || M > J) {
    throw InvalidArgument("sph_harm: requires J >= 0 and |M| <= J");
  }
  if (!(theta >= 0.0 && theta <= pi)) {
    throw InvalidArgument("sph_harm: theta must lie in [0, pi]");
  }
  const LegendreTable table(J, std::cos(theta));
  return table(J, M) * std::polar(1.0, M * phi);
}

/// Product quadrature on the sphere: Gauss-Legendre in cos(theta) times a
/// uniform rule in phi.
struct SphereQuadrature {
  QuadratureRule cos_theta;
  int n_phi;

  SphereQuadrature(int n_theta, int n_phi_)
      : cos_theta(gauss_legendre(n_theta)), n_phi(n_phi_) {
    if (n_phi_ < 1) throw InvalidArgument("SphereQuadrature: n_phi must be >= 1");
  }

  double phi(int k) const { return two_pi * k / n_phi; }
  double phi_weight() const { return two_pi / n_phi; }
};

/// Reference value of <J',M'| kernel |J,M> = integral of conj(Y_J'M') kernel
/// Y_JM over the sphere. Uses the standard library's spherical Legendre
/// functions so it shares no code path with the operator builders.
inline complex quadrature_oracle(int Jp, int Mp, int J, int M,
                                 const std::function<complex(double, double)>& kernel,
                                 int n_theta = 64, int n_phi = 128) {
  if (Jp < 0 || J < 0 || std::abs(Mp) > Jp || std::abs(M) > J) {
    throw InvalidArgument("quadrature_oracle: invalid quantum numbers");
  }
  auto y = [](int l, int m, double theta, double phi) {
    const int am = std::abs(m);
    double v = std::sph_legendre(static_cast<unsigned>(l), static_cast<unsigned>(am), theta);
    if (m < 0 && (am % 2 == 1)) v = -v;
    return v * std::polar(1.0, m * phi);
  };
  const SphereQuadrature q(n_theta, n_phi);
  complex sum = 0.0;
  for (std::size_t i = 0; i < q.cos_theta.nodes.size(); ++i) {
    const double theta = std::acos(q.cos_theta.nodes[i]);
    complex ring = 0.0;
    for (int k = 0; k < q.n_phi; ++k) {
      const double phi = q.phi(k);
      ring += std::conj(y(Jp, Mp, theta, phi)) * kernel(theta, phi) * y(J, M, theta, phi);
    }
    sum += q.cos_theta.weights[i] * q.phi_weight() * ring;
  }
  return sum;
}

/// Unit vector for polar angle theta and azimuth phi.
inline Vector3 direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
          std::cos(theta)};
}

}  // namespace gyrorotor
