#pragma once

// Independent reference implementations used to check the library. None of
// these share code with src/.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

enum class Shape { Ball, Cube, Interval };

struct Region {
  Shape shape;
  double size = 1.0;  // radius, half width, or half length of [-size, size]
};

inline bool inside(const Region& r, const std::vector<double>& x) {
  if (r.shape == Shape::Ball) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s) <= r.size;
  }
  for (double v : x) {
    if (std::abs(v) > r.size) return false;
  }
  return true;
}

inline std::vector<double> normal(const Region& r, const std::vector<double>& x) {
  std::vector<double> n(x.size(), 0.0);
  if (r.shape == Shape::Ball) {
    double s = 0.0;
    for (double v : x) s += v * v;
    s = std::sqrt(s);
    for (std::size_t i = 0; i < x.size(); ++i) n[i] = -x[i] / s;
    return n;
  }
  std::size_t j = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i]) > std::abs(x[j])) j = i;
  }
  n[j] = x[j] > 0 ? -1.0 : 1.0;
  return n;
}

// 0 forward, 1 reflect, 2 reject
inline int gmc_step(const Region& r, std::vector<double>& q, std::vector<double>& p) {
  const std::size_t d = q.size();
  std::vector<double> q1(d);
  for (std::size_t i = 0; i < d; ++i) q1[i] = q[i] + p[i];
  if (inside(r, q1)) {
    q = q1;
    return 0;
  }
  auto n = normal(r, q1);
  double pn = 0.0;
  for (std::size_t i = 0; i < d; ++i) pn += p[i] * n[i];
  std::vector<double> p1(d), q2(d);
  for (std::size_t i = 0; i < d; ++i) {
    p1[i] = p[i] - 2.0 * pn * n[i];
    q2[i] = q1[i] + p1[i];
  }
  if (inside(r, q2)) {
    q = q2;
    p = p1;
    return 1;
  }
  for (auto& v : p) v = -v;
  return 2;
}

// Exact unregularized OT between two uniform clouds of equal size by
// enumerating permutations.
inline double permutation_ot(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i * n + perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

// One-sided periodogram by direct summation, summing to mean(x^2).
inline std::vector<double> naive_psd(const std::vector<double>& x) {
  const std::size_t t = x.size();
  std::vector<double> out(t / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      double a = -2.0 * std::numbers::pi * double(k) * double(j) / double(t);
      s += x[j] * std::complex<double>(std::cos(a), std::sin(a));
    }
    double w = (k == 0 || 2 * k == t) ? 1.0 : 2.0;
    out[k] = w * std::norm(s) / double(t * t);
  }
  return out;
}

template <class F>
double integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

// Polar angle density |sin t|^(n-2) on [-pi, pi], normalised numerically.
class AngleDensity {
 public:
  explicit AngleDensity(std::size_t n) : n_(n) {
    auto f = [this](double t) { return raw(t); };
    const double h = std::numbers::pi / 2;
    norm_ = 0.0;
    for (int k = -2; k < 2; ++k) norm_ += integrate(f, k * h, (k + 1) * h);
  }
  double operator()(double t) const { return raw(t) / norm_; }
  // Mass of a short interval by fixed 30-point Gauss-Legendre.
  double mass(double a, double b) const {
    auto f = [this](double t) { return (*this)(t); };
    return boost::math::quadrature::gauss<double, 30>::integrate(f, a, b);
  }

 private:
  double raw(double t) const { return std::pow(std::abs(std::sin(t)), double(n_) - 2.0); }
  std::size_t n_;
  double norm_ = 1.0;
};

// Mean chord length of the unit disk for lines through a uniform point with
// isotropic direction.
inline double disk_mean_chord() {
  auto inner = [](double rho) {
    auto g = [rho](double phi) { return 2.0 * std::sqrt(1.0 - rho * rho * std::sin(phi) * std::sin(phi)); };
    return 2.0 * rho * integrate(g, 0.0, std::numbers::pi) / std::numbers::pi;
  };
  return integrate(inner, 0.0, 1.0);
}

// Ordinary least squares slope of log y on log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= double(x.size());
  my /= double(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
