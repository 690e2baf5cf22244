#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

namespace gyrorotor {

template <int N>
struct SimplexResult {
  Eigen::Matrix<double, N, 1> x;
  double value;
  int evaluations;
};

/// Nelder-Mead minimization with the standard coefficients (1, 2, 0.5, 0.5).
/// Stops when the spread of simplex values drops below `ftol` or after
/// `max_evals` evaluations.
template <int N, typename F>
SimplexResult<N> nelder_mead(F&& f, const Eigen::Matrix<double, N, 1>& start, double step,
                             double ftol, int max_evals) {
  using Vec = Eigen::Matrix<double, N, 1>;
  std::array<Vec, N + 1> x;
  std::array<double, N + 1> fx;
  x[0] = start;
  for (int i = 0; i < N; ++i) {
    x[static_cast<std::size_t>(i + 1)] = start;
    x[static_cast<std::size_t>(i + 1)](i) += step;
  }
  int evals = 0;
  for (std::size_t i = 0; i <= N; ++i) {
    fx[i] = f(x[i]);
    ++evals;
  }
  std::array<std::size_t, N + 1> order;
  while (true) {
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fx[a] < fx[b]; });
    const std::size_t lo = order[0], hi = order[N], nh = order[N - 1];
    if (std::abs(fx[hi] - fx[lo]) <= ftol || evals >= max_evals) break;

    Vec centroid = Vec::Zero();
    for (std::size_t i = 0; i < N; ++i) centroid += x[order[i]];
    centroid /= N;

    const Vec xr = centroid + (centroid - x[hi]);
    const double fr = f(xr);
    ++evals;
    if (fr < fx[lo]) {
      const Vec xe = centroid + 2.0 * (centroid - x[hi]);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        x[hi] = xe;
        fx[hi] = fe;
      } else {
        x[hi] = xr;
        fx[hi] = fr;
      }
      continue;
    }
    if (fr < fx[nh]) {
      x[hi] = xr;
      fx[hi] = fr;
      continue;
    }
    const bool outside = fr < fx[hi];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid))
                           : Vec(centroid + 0.5 * (x[hi] - centroid));
    const double fc = f(xc);
    ++evals;
    if (fc < std::min(fr, fx[hi])) {
      x[hi] = xc;
      fx[hi] = fc;
      continue;
    }
    for (std::size_t i = 1; i <= N; ++i) {
      const std::size_t k = order[i];
      x[k] = x[lo] + 0.5 * (x[k] - x[lo]);
      fx[k] = f(x[k]);
      ++evals;
    }
  }
  const std::size_t best = order[0];
  return {x[best], fx[best], evals};
}

}  // namespace gyrorotor
