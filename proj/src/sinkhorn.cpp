#include "reflectmc/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

namespace reflectmc {

namespace {

// Scaling vectors are folded into the log potentials once they leave this band.
constexpr double kAbsorbHigh = 1e50;
constexpr double kAbsorbLow = 1e-50;
// Cost spread (in units of eps) above which the solve is warm-started by
// halving eps from the spread down to the target.
constexpr double kScalingThreshold = 50.0;
constexpr double kStageTolerance = 1e-3;
constexpr std::size_t kStageIterations = 100;

void check_weights(std::span<const double> w, const char* which) {
  if (w.empty()) throw std::invalid_argument(std::string(which) + ": empty distribution");
  double sum = 0.0;
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(which) + ": weights must be positive and finite");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12 * static_cast<double>(w.size()) + 1e-12) {
    throw std::invalid_argument(std::string(which) + ": weights must sum to 1");
  }
}

void check_finite(const CostMatrix& cost) {
  for (double v : cost.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("cost matrix contains NaN or Inf");
  }
}

std::vector<double> epsilon_schedule(double spread, double epsilon) {
  std::vector<double> out;
  if (spread / epsilon > kScalingThreshold) {
    for (double e = spread; e > 2.0 * epsilon; e *= 0.5) out.push_back(e);
  }
  out.push_back(epsilon);
  return out;
}

void build_kernel(const CostMatrix& cost, std::span<const double> f, std::span<const double> g,
                  double eps, std::vector<double>& kernel) {
  const auto rows = static_cast<std::int64_t>(cost.rows());
  const std::size_t cols = cost.cols();
  kernel.resize(cost.rows() * cols);
  const double inv = 1.0 / eps;
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto c = cost.row(i);
    double* k = kernel.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) k[j] = std::exp((f[i] + g[j] - c[j]) * inv);
  }
}

void transpose(const std::vector<double>& in, std::size_t rows, std::size_t cols,
               std::vector<double>& out) {
  out.resize(rows * cols);
  const auto n_cols = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t jj = 0; jj < n_cols; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    for (std::size_t i = 0; i < rows; ++i) out[j * rows + i] = in[i * cols + j];
  }
}

// out = K x, row sums computed serially per row so the result is independent
// of the thread count.
void matvec(const std::vector<double>& kernel, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> out) {
  const auto n_rows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < n_rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* k = kernel.data() + i * cols;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      s0 += k[j] * x[j];
      s1 += k[j + 1] * x[j + 1];
      s2 += k[j + 2] * x[j + 2];
      s3 += k[j + 3] * x[j + 3];
    }
    for (; j < cols; ++j) s0 += k[j] * x[j];
    out[i] = (s0 + s1) + (s2 + s3);
  }
}

bool needs_absorb(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(),
                     [](double x) { return !(x < kAbsorbHigh && x > kAbsorbLow); });
}

void check_scaling(std::span<const double> v) {
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::runtime_error("Sinkhorn breakdown: kernel column or row underflowed");
    }
  }
}

void absorb(std::span<double> potential, std::span<double> scaling, double eps) {
  for (std::size_t i = 0; i < potential.size(); ++i) {
    potential[i] += eps * std::log(scaling[i]);
    scaling[i] = 1.0;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

EmpiricalDistribution EmpiricalDistribution::uniform(std::vector<double> points, std::size_t dim) {
  if (dim == 0 || points.empty() || points.size() % dim != 0) {
    throw std::invalid_argument("EmpiricalDistribution: points size is not a multiple of dim");
  }
  const std::size_t n = points.size() / dim;
  EmpiricalDistribution d;
  d.dim = dim;
  d.points = std::move(points);
  d.weights.assign(n, 1.0 / static_cast<double>(n));
  return d;
}

EmpiricalDistribution EmpiricalDistribution::weighted(std::vector<double> points, std::size_t dim,
                                                      std::vector<double> weights) {
  EmpiricalDistribution d;
  d.dim = dim;
  d.points = std::move(points);
  d.weights = std::move(weights);
  d.validate();
  return d;
}

void EmpiricalDistribution::validate() const {
  if (dim == 0) throw std::invalid_argument("EmpiricalDistribution: dim must be >= 1");
  if (weights.empty() || points.size() != weights.size() * dim) {
    throw std::invalid_argument("EmpiricalDistribution: points and weights disagree in size");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("EmpiricalDistribution: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12 * static_cast<double>(weights.size()) + 1e-12) {
    throw std::invalid_argument("EmpiricalDistribution: weights must sum to 1");
  }
}

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("Sinkhorn epsilon must be > 0");
  if (!(marginal_tolerance > 0.0)) throw std::invalid_argument("Sinkhorn tolerance must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("Sinkhorn max_iterations must be >= 1");
}

CostMatrix l1_cost_matrix(std::span<const double> x, std::span<const double> y, std::size_t dim) {
  if (dim == 0 || x.size() % dim != 0 || y.size() % dim != 0) {
    throw std::invalid_argument("l1_cost_matrix: dimension mismatch");
  }
  const std::size_t rows = x.size() / dim;
  const std::size_t cols = y.size() / dim;
  CostMatrix cost(rows, cols);
  const bool self = x.data() == y.data() && x.size() == y.size();
  const auto n_rows = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::int64_t ii = 0; ii < n_rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* xi = x.data() + i * dim;
    for (std::size_t j = self ? i + 1 : 0; j < cols; ++j) {
      const double* yj = y.data() + j * dim;
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t k = 0;
      for (; k + 4 <= dim; k += 4) {
        s0 += std::abs(xi[k] - yj[k]);
        s1 += std::abs(xi[k + 1] - yj[k + 1]);
        s2 += std::abs(xi[k + 2] - yj[k + 2]);
        s3 += std::abs(xi[k + 3] - yj[k + 3]);
      }
      for (; k < dim; ++k) s0 += std::abs(xi[k] - yj[k]);
      cost(i, j) = (s0 + s1) + (s2 + s3);
    }
  }
  if (self) {
    for (std::size_t i = 0; i < rows; ++i) {
      cost(i, i) = 0.0;
      for (std::size_t j = 0; j < i; ++j) cost(i, j) = cost(j, i);
    }
  }
  return cost;
}

CostMatrix l1_cost_matrix(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  if (a.dim != b.dim) throw std::invalid_argument("l1_cost_matrix: dimension mismatch");
  return l1_cost_matrix(a.points, b.points, a.dim);
}

OtResult ot_eps(const CostMatrix& cost, std::span<const double> a, std::span<const double> b,
                const SinkhornConfig& config) {
  config.validate();
  check_weights(a, "ot_eps(a)");
  check_weights(b, "ot_eps(b)");
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw std::invalid_argument("ot_eps: cost matrix shape does not match the weights");
  }
  check_finite(cost);

  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  std::vector<double> f(rows, 0.0);
  std::vector<double> g(cols, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows; ++i) {
    const auto c = cost.row(i);
    for (std::size_t j = 0; j < cols; ++j) g[j] = std::min(g[j], c[j]);
  }
  double spread = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto c = cost.row(i);
    for (std::size_t j = 0; j < cols; ++j) spread = std::max(spread, c[j] - g[j]);
  }

  std::vector<double> u(rows, 1.0), v(cols, 1.0);
  std::vector<double> au(rows), bv(cols), kv(rows), ktu(cols);
  std::vector<double> kernel, kernel_t;
  OtResult result;
  double mass = 1.0;
  const auto schedule = epsilon_schedule(spread, config.epsilon);

  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    build_kernel(cost, f, g, eps, kernel);
    transpose(kernel, rows, cols, kernel_t);
    std::size_t stage_iterations = 0;
    while (result.iterations < config.max_iterations) {
      ++result.iterations;
      ++stage_iterations;
      for (std::size_t i = 0; i < rows; ++i) au[i] = a[i] * u[i];
      matvec(kernel_t, cols, rows, au, ktu);
      check_scaling(ktu);
      for (std::size_t j = 0; j < cols; ++j) {
        v[j] = 1.0 / ktu[j];
        bv[j] = b[j] * v[j];
      }
      matvec(kernel, rows, cols, bv, kv);
      check_scaling(kv);
      double violation = 0.0;
      mass = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        const double r = a[i] * u[i] * kv[i];
        violation += std::abs(r - a[i]);
        mass += r;
      }
      result.marginal_violation = violation;
      if (last && violation <= config.marginal_tolerance) {
        result.converged = true;
        break;
      }
      if (!last && (violation <= std::max(config.marginal_tolerance, kStageTolerance) ||
                    stage_iterations >= kStageIterations)) {
        break;
      }
      for (std::size_t i = 0; i < rows; ++i) u[i] = 1.0 / kv[i];
      if (needs_absorb(u) || needs_absorb(v)) {
        absorb(f, u, eps);
        absorb(g, v, eps);
        build_kernel(cost, f, g, eps, kernel);
        transpose(kernel, rows, cols, kernel_t);
      }
    }
    absorb(f, u, eps);
    absorb(g, v, eps);
    if (result.iterations >= config.max_iterations && !result.converged) break;
  }

  result.value = dot(a, f) + dot(b, g) - config.epsilon * (mass - 1.0);
  result.f = std::move(f);
  result.g = std::move(g);
  return result;
}

OtResult ot_eps_self(const CostMatrix& cost, std::span<const double> a,
                     const SinkhornConfig& config) {
  config.validate();
  check_weights(a, "ot_eps_self");
  if (cost.rows() != a.size() || cost.cols() != a.size()) {
    throw std::invalid_argument("ot_eps_self: cost matrix shape does not match the weights");
  }
  check_finite(cost);

  const std::size_t n = a.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double c : cost.data()) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  std::vector<double> f(n, 0.5 * lo);
  std::vector<double> u(n, 1.0), au(n), s(n);
  std::vector<double> kernel;
  OtResult result;
  double mass = 1.0;
  const auto schedule = epsilon_schedule(hi - lo, config.epsilon);

  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    const bool last = stage + 1 == schedule.size();
    build_kernel(cost, f, f, eps, kernel);
    std::size_t stage_iterations = 0;
    while (result.iterations < config.max_iterations) {
      ++result.iterations;
      ++stage_iterations;
      for (std::size_t i = 0; i < n; ++i) au[i] = a[i] * u[i];
      matvec(kernel, n, n, au, s);
      check_scaling(s);
      double violation = 0.0;
      mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = au[i] * s[i];
        violation += std::abs(r - a[i]);
        mass += r;
      }
      result.marginal_violation = violation;
      if (last && violation <= config.marginal_tolerance) {
        result.converged = true;
        break;
      }
      if (!last && (violation <= std::max(config.marginal_tolerance, kStageTolerance) ||
                    stage_iterations >= kStageIterations)) {
        break;
      }
      // f <- (f + T(f)) / 2 in scaling form.
      for (std::size_t i = 0; i < n; ++i) u[i] = std::sqrt(u[i] / s[i]);
      if (needs_absorb(u)) {
        absorb(f, u, eps);
        build_kernel(cost, f, f, eps, kernel);
      }
    }
    absorb(f, u, eps);
    if (result.iterations >= config.max_iterations && !result.converged) break;
  }

  result.value = 2.0 * dot(a, f) - config.epsilon * (mass - 1.0);
  result.g = f;
  result.f = std::move(f);
  return result;
}

std::vector<double> transport_plan(const CostMatrix& cost, std::span<const double> a,
                                   std::span<const double> b, std::span<const double> f,
                                   std::span<const double> g, double epsilon) {
  std::vector<double> plan(cost.rows() * cost.cols());
  for (std::size_t i = 0; i < cost.rows(); ++i) {
    for (std::size_t j = 0; j < cost.cols(); ++j) {
      plan[i * cost.cols() + j] = a[i] * b[j] * std::exp((f[i] + g[j] - cost(i, j)) / epsilon);
    }
  }
  return plan;
}

namespace {

// Drops zero-weight support points; the solver needs strictly positive weights.
EmpiricalDistribution compress(const EmpiricalDistribution& d) {
  d.validate();
  if (std::all_of(d.weights.begin(), d.weights.end(), [](double w) { return w > 0.0; })) {
    return d;
  }
  EmpiricalDistribution out;
  out.dim = d.dim;
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.weights[i] > 0.0) {
      const auto p = d.point(i);
      out.points.insert(out.points.end(), p.begin(), p.end());
      out.weights.push_back(d.weights[i]);
      total += d.weights[i];
    }
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

}  // namespace

OtResult ot_eps(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                const SinkhornConfig& config) {
  if (a.dim != b.dim) throw std::invalid_argument("ot_eps: dimension mismatch");
  const auto ca = compress(a);
  const auto cb = compress(b);
  return ot_eps(l1_cost_matrix(ca, cb), ca.weights, cb.weights, config);
}

DivergenceResult sinkhorn_divergence_detailed(const EmpiricalDistribution& a,
                                              const EmpiricalDistribution& b,
                                              const SinkhornConfig& config) {
  if (a.dim != b.dim) throw std::invalid_argument("sinkhorn_divergence: dimension mismatch");
  const auto ca = compress(a);
  const auto cb = compress(b);
  DivergenceResult r;
  r.cross = ot_eps(l1_cost_matrix(ca, cb), ca.weights, cb.weights, config);
  r.self_a = ot_eps_self(l1_cost_matrix(ca.points, ca.points, ca.dim), ca.weights, config);
  r.self_b = ot_eps_self(l1_cost_matrix(cb.points, cb.points, cb.dim), cb.weights, config);
  r.value = r.cross.value - 0.5 * r.self_a.value - 0.5 * r.self_b.value;
  return r;
}

double sinkhorn_divergence(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                           const SinkhornConfig& config) {
  const auto r = sinkhorn_divergence_detailed(a, b, config);
  if (!r.converged()) {
    throw SinkhornNotConverged("Sinkhorn did not reach the marginal tolerance within " +
                               std::to_string(config.max_iterations) + " iterations");
  }
  return r.value;
}

SinkhornReference::SinkhornReference(EmpiricalDistribution reference, SinkhornConfig config)
    : reference_(compress(reference)), config_(config) {
  config_.validate();
  self_ = ot_eps_self(l1_cost_matrix(reference_.points, reference_.points, reference_.dim),
                      reference_.weights, config_);
}

DivergenceResult SinkhornReference::divergence(const EmpiricalDistribution& cloud) const {
  if (cloud.dim != reference_.dim) {
    throw std::invalid_argument("SinkhornReference: dimension mismatch");
  }
  const auto c = compress(cloud);
  DivergenceResult r;
  r.cross = ot_eps(l1_cost_matrix(c.points, reference_.points, c.dim), c.weights,
                   reference_.weights, config_);
  r.self_a = ot_eps_self(l1_cost_matrix(c.points, c.points, c.dim), c.weights, config_);
  r.self_b = self_;
  r.value = r.cross.value - 0.5 * r.self_a.value - 0.5 * r.self_b.value;
  return r;
}

DivergenceResult SinkhornReference::divergence(std::span<const double> points) const {
  return divergence(
      EmpiricalDistribution::uniform(std::vector<double>(points.begin(), points.end()),
                                     reference_.dim));
}

}  // namespace reflectmc
