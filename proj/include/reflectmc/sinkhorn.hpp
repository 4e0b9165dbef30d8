#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace reflectmc {

/// Weighted point cloud; points are stored row-major.
struct EmpiricalDistribution {
  std::size_t dim = 0;
  std::vector<double> points;
  std::vector<double> weights;

  /// Equal weights 1/N.
  static EmpiricalDistribution uniform(std::vector<double> points, std::size_t dim);
  static EmpiricalDistribution weighted(std::vector<double> points, std::size_t dim,
                                        std::vector<double> weights);

  [[nodiscard]] std::size_t size() const { return weights.size(); }
  [[nodiscard]] std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points).subspan(i * dim, dim);
  }
  void validate() const;
};

struct SinkhornConfig {
  double epsilon = 4.0;
  std::size_t max_iterations = 10000;
  /// Stop when the L1 violation of the reconstructed plan's marginals falls
  /// below this value.
  double marginal_tolerance = 1e-6;

  void validate() const;
};

class SinkhornNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }
  [[nodiscard]] std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// C[a][b] = sum_i |x_a,i - y_b,i|.
CostMatrix l1_cost_matrix(const EmpiricalDistribution& a, const EmpiricalDistribution& b);
CostMatrix l1_cost_matrix(std::span<const double> x, std::span<const double> y, std::size_t dim);

struct OtResult {
  double value = 0.0;
  double marginal_violation = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Dual potentials at exit.
  std::vector<double> f;
  std::vector<double> g;
};

/// Entropy-regularized transport cost min_pi <C, pi> + eps KL(pi | a x b),
/// returned as the dual objective at the final potentials.
OtResult ot_eps(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                const SinkhornConfig& config);
OtResult ot_eps(const CostMatrix& cost, std::span<const double> a, std::span<const double> b,
                const SinkhornConfig& config);

/// OT_eps(a, a) using the symmetric (averaged) fixed-point iteration.
OtResult ot_eps_self(const CostMatrix& cost, std::span<const double> a,
                     const SinkhornConfig& config);

/// pi_ij = a_i b_j exp((f_i + g_j - C_ij) / eps), row-major.
std::vector<double> transport_plan(const CostMatrix& cost, std::span<const double> a,
                                   std::span<const double> b, std::span<const double> f,
                                   std::span<const double> g, double epsilon);

struct DivergenceResult {
  double value = 0.0;
  OtResult cross;
  OtResult self_a;
  OtResult self_b;

  [[nodiscard]] bool converged() const {
    return cross.converged && self_a.converged && self_b.converged;
  }
  [[nodiscard]] std::size_t iterations() const {
    return cross.iterations + self_a.iterations + self_b.iterations;
  }
};

/// SD(a, b) = OT(a, b) - OT(a, a)/2 - OT(b, b)/2.
DivergenceResult sinkhorn_divergence_detailed(const EmpiricalDistribution& a,
                                              const EmpiricalDistribution& b,
                                              const SinkhornConfig& config);

/// Throws SinkhornNotConverged if any of the three solves did not converge.
double sinkhorn_divergence(const EmpiricalDistribution& a, const EmpiricalDistribution& b,
                           const SinkhornConfig& config);

/// Fixed reference sample with its self-transport term solved once.
class SinkhornReference {
 public:
  SinkhornReference(EmpiricalDistribution reference, SinkhornConfig config);

  /// Divergence of the equally weighted cloud `points` (row-major) from the
  /// reference.
  [[nodiscard]] DivergenceResult divergence(std::span<const double> points) const;
  [[nodiscard]] DivergenceResult divergence(const EmpiricalDistribution& cloud) const;

  [[nodiscard]] const EmpiricalDistribution& reference() const { return reference_; }
  [[nodiscard]] const SinkhornConfig& config() const { return config_; }

 private:
  EmpiricalDistribution reference_;
  SinkhornConfig config_;
  OtResult self_;
};

}  // namespace reflectmc
