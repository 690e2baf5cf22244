#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "gyrorotor/constants.hpp"
#include "gyrorotor/errors.hpp"

namespace gyrorotor {

/// y(t) = offset + sum_h [a_h cos(2 pi h f t') + b_h sin(2 pi h f t')],
/// t' = t - mean(t). Centering makes the fit invariant to a shift of t.
struct SinusoidFit {
  double frequency = 0.0;
  double sigma_frequency = 0.0;
  double offset = 0.0;
  std::vector<double> cos_coef;
  std::vector<double> sin_coef;
  double amplitude = 0.0;        // of the fundamental
  double sigma_amplitude = 0.0;
  double residual_norm = 0.0;    // weighted RMS residual
  double t_center = 0.0;
};

struct SinusoidFitOptions {
  int harmonics = 1;
  double min_snr = 5.0;        // fundamental amplitude over its standard error
  int oversampling = 16;       // frequency grid points per 1/span
};

namespace detail {

struct LinearSolve {
  Eigen::VectorXd coef;
  double weighted_ss = 0.0;
};

inline Eigen::MatrixXd sinusoid_design(const std::vector<double>& t, double f, int harmonics) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd a(n, 1 + 2 * harmonics);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    for (int h = 1; h <= harmonics; ++h) {
      const double arg = two_pi * h * f * t[static_cast<std::size_t>(i)];
      a(i, 2 * h - 1) = std::cos(arg);
      a(i, 2 * h) = std::sin(arg);
    }
  }
  return a;
}

inline LinearSolve weighted_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                          const Eigen::VectorXd& sqrt_w) {
  const Eigen::MatrixXd aw = sqrt_w.asDiagonal() * a;
  const Eigen::VectorXd yw = sqrt_w.cwiseProduct(y);
  LinearSolve out;
  out.coef = aw.colPivHouseholderQr().solve(yw);
  out.weighted_ss = (aw * out.coef - yw).squaredNorm();
  return out;
}

}  // namespace detail

/// Frequency estimate by a periodogram scan (single sinusoid) followed by a
/// Brent refinement of the harmonic model; the frequency uncertainty comes
/// from the Jacobian of the full nonlinear model. `sigma` empty means equal
/// unknown errors (covariance scaled by the residual variance); otherwise the
/// sigmas are taken as absolute standard errors.
inline SinusoidFit fit_sinusoid(std::span<const double> t_in, std::span<const double> y_in,
                                std::span<const double> sigma,
                                const SinusoidFitOptions& opt = {}) {
  const std::size_t n = t_in.size();
  if (y_in.size() != n || (!sigma.empty() && sigma.size() != n))
    throw InvalidArgument("fit_sinusoid: length mismatch");
  if (n < 8) {
    throw EstimationFailed("need at least 8 samples", "samples=" + std::to_string(n));
  }
  const int harmonics = std::max(1, opt.harmonics);
  const std::size_t params = 2 + 2 * static_cast<std::size_t>(harmonics);
  if (n <= params) throw EstimationFailed("too few samples for the model", "");

  const double t_mean = std::accumulate(t_in.begin(), t_in.end(), 0.0) / double(n);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = t_in[i] - t_mean;
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  const double span = *tmax - *tmin;
  if (!(span > 0.0)) throw EstimationFailed("delays do not span a time interval", "");

  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = y_in[i];
    if (!sigma.empty()) {
      if (!(sigma[i] > 0.0)) throw InvalidArgument("fit_sinusoid: sigma must be > 0");
      sqrt_w(static_cast<Eigen::Index>(i)) = 1.0 / sigma[i];
    }
  }
  const double y_mean = y.mean();
  const double y_range = y.maxCoeff() - y.minCoeff();
  if (!(y_range > 1e-12 * std::max(1.0, std::abs(y_mean)))) {
    std::ostringstream d;
    d << "series is constant (range " << y_range << ", mean " << y_mean << ")";
    throw EstimationFailed("no oscillation in the series", d.str());
  }

  // periodogram scan with a single sinusoid
  const double f_lo = 0.5 / span;
  const double f_hi = 0.5 * double(n - 1) / span;
  const double df = 1.0 / (opt.oversampling * span);
  double best_f = f_lo;
  double best_ss = std::numeric_limits<double>::infinity();
  for (double f = f_lo; f <= f_hi; f += df) {
    const auto ls = detail::weighted_least_squares(detail::sinusoid_design(t, f, 1), y, sqrt_w);
    if (ls.weighted_ss < best_ss) {
      best_ss = ls.weighted_ss;
      best_f = f;
    }
  }

  auto model_ss = [&](double f) {
    return detail::weighted_least_squares(detail::sinusoid_design(t, f, harmonics), y, sqrt_w)
        .weighted_ss;
  };
  auto refine = [&](double f0) {
    return boost::math::tools::brent_find_minima(model_ss, std::max(0.25 * f_lo, f0 - df),
                                                 f0 + df, 52);
  };
  auto [f_fit, ss_fit] = refine(best_f);

  // The strongest line may be the second harmonic: accept f/2 when it
  // carries a fundamental well above both the noise and numerical zero.
  if (harmonics >= 2 && 0.5 * best_f >= f_lo) {
    const auto [f_half, ss_half] = refine(0.5 * best_f);
    const auto half = detail::weighted_least_squares(
        detail::sinusoid_design(t, f_half, harmonics), y, sqrt_w);
    const double a1 = std::hypot(half.coef(1), half.coef(2));
    const double a2 = std::hypot(half.coef(3), half.coef(4));
    const double noise = std::sqrt(std::max(ss_half, 0.0) / double(n)) *
                         std::sqrt(2.0 / double(n)) / sqrt_w.mean();
    if (a1 > 1e-3 * a2 && a1 > opt.min_snr * noise && ss_half <= ss_fit * (1.0 + 1e-9)) {
      f_fit = f_half;
      ss_fit = ss_half;
    }
  }

  const auto ls = detail::weighted_least_squares(detail::sinusoid_design(t, f_fit, harmonics), y,
                                                 sqrt_w);
  SinusoidFit fit;
  fit.frequency = f_fit;
  fit.t_center = t_mean;
  fit.offset = ls.coef(0);
  for (int h = 1; h <= harmonics; ++h) {
    fit.cos_coef.push_back(ls.coef(2 * h - 1));
    fit.sin_coef.push_back(ls.coef(2 * h));
  }
  fit.amplitude = std::hypot(fit.cos_coef[0], fit.sin_coef[0]);

  // Jacobian of the nonlinear model in (f, offset, a_1, b_1, ...)
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd jac(nn, static_cast<Eigen::Index>(params));
  const Eigen::MatrixXd design = detail::sinusoid_design(t, f_fit, harmonics);
  jac.rightCols(design.cols()) = design;
  for (Eigen::Index i = 0; i < nn; ++i) {
    double d = 0.0;
    const double ti = t[static_cast<std::size_t>(i)];
    for (int h = 1; h <= harmonics; ++h) {
      const double arg = two_pi * h * f_fit * ti;
      const auto hh = static_cast<std::size_t>(h - 1);
      d += two_pi * h * ti * (-fit.cos_coef[hh] * std::sin(arg) + fit.sin_coef[hh] * std::cos(arg));
    }
    jac(i, 0) = d;
  }
  const Eigen::MatrixXd jw = sqrt_w.asDiagonal() * jac;
  Eigen::MatrixXd cov = (jw.transpose() * jw).inverse();
  const double dof = double(n) - double(params);
  if (sigma.empty()) cov *= ss_fit / dof;
  fit.sigma_frequency = std::sqrt(std::max(0.0, cov(0, 0)));
  fit.residual_norm = std::sqrt(ss_fit / double(n));

  // standard error of the fundamental amplitude by the delta method
  const double a = fit.cos_coef[0], b = fit.sin_coef[0];
  if (fit.amplitude > 0.0) {
    Eigen::Vector2d g(a / fit.amplitude, b / fit.amplitude);
    const Eigen::Matrix2d c = cov.block(2, 2, 2, 2);
    fit.sigma_amplitude = std::sqrt(std::max(0.0, g.dot(c * g)));
  }
  const double snr = fit.sigma_amplitude > 0.0 ? fit.amplitude / fit.sigma_amplitude
                                               : std::numeric_limits<double>::infinity();
  if (!(snr >= opt.min_snr)) {
    std::ostringstream d;
    d << "best frequency " << f_fit << " Hz, amplitude " << fit.amplitude << " +/- "
      << fit.sigma_amplitude << " (snr " << snr << " < " << opt.min_snr << ")";
    throw EstimationFailed("no spectral peak above the noise floor", d.str());
  }
  if (span * f_fit < 1.0) {
    std::ostringstream d;
    d << "fitted frequency " << f_fit << " Hz completes " << span * f_fit
      << " cycles over the delay span";
    throw EstimationFailed("delays span less than one period", d.str());
  }
  return fit;
}

}  // namespace gyrorotor
