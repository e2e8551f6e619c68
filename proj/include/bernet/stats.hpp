#pragma once

// Small numeric helpers shared across modules: normal CDF/quantile, Poisson
// tail, running moments, least squares, Kolmogorov-Smirnov distance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bernet {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

inline double normal_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

// Inverse standard normal CDF. Asymptotic tail guess refined by Newton on
// erfc; converges to machine precision in a handful of steps for u in (0,1).
inline double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("normal_quantile: u must lie in (0,1)");
  if (u == 0.5) return 0.0;
  const bool lower = u < 0.5;
  const double v = lower ? u : 1.0 - u;  // tail mass, v <= 0.5
  double x;
  if (v > 0.2) {
    x = (0.5 - v) * 2.5066282746310005024;  // linear near the center
  } else {
    const double t = std::sqrt(-2.0 * std::log(v));
    x = t - (std::log(t * t) + 1.8378770664093454836) / (2.0 * t);
  }
  x = -x;  // now Phi(x) ~ v on the lower tail
  for (int it = 0; it < 60; ++it) {
    const double err = normal_cdf(x) - v;
    const double step = err / normal_pdf(x);
    x -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  return lower ? x : -x;
}

// P(Poisson(lambda) > n) by direct summation of the first n+1 terms.
inline double poisson_tail(double lambda, int n) {
  if (lambda < 0.0 || n < 0) throw std::domain_error("poisson_tail: bad args");
  double term = std::exp(-lambda);
  double cdf = term;
  for (int k = 1; k <= n; ++k) {
    term *= lambda / k;
    cdf += term;
  }
  return std::max(0.0, 1.0 - cdf);
}

struct RunningStat {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
  double stderror() const { return n > 0 ? sd() / std::sqrt(double(n)) : 0.0; }
};

inline double binomial_stderr(double phat, std::size_t n) {
  return n > 0 ? std::sqrt(std::max(0.0, phat * (1.0 - phat)) / double(n)) : 0.0;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need >= 2 paired points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / double(x.size());
  const double my = sy / double(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate x");
  return {sxy / sxx, my - (sxy / sxx) * mx};
}

// Kolmogorov-Smirnov distance between an integer-valued sample and a model
// CDF: max over integers of |F_emp(v) - F(v)|. Both functions are flat
// between integers, so scanning [min-1, max] covers the supremum (tails are
// dominated by the endpoint comparisons since F is monotone).
template <typename CdfFn>
double ks_distance_integer(const std::vector<long>& sample, CdfFn&& model_cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::vector<long> sorted = sample;
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  const long vmin = sorted.front() - 1;
  const long vmax = sorted.back();
  if (vmax - vmin > 2'000'000)
    throw std::invalid_argument("ks_distance: support range too wide");
  double dmax = 0.0;
  std::size_t i = 0;  // count of sample values <= v
  for (long v = vmin; v <= vmax; ++v) {
    while (i < sorted.size() && sorted[i] <= v) ++i;
    dmax = std::max(dmax, std::abs(double(i) / n - model_cdf(v)));
  }
  return dmax;
}

}  // namespace bernet
