#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "reflectmc/rng.hpp"

namespace reflectmc {

class DegeneratePlaneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfPlaneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vec2 = std::array<double, 2>;

/// Orthogonal map sending the plane spanned by (q0, p0) onto the first two
/// coordinate axes, with q0 on the positive first axis. Built as a
/// Householder reflection taking q0 to e1 followed by a rotation in the
/// (e2, b) plane that brings the in-plane momentum direction onto +e2 or -e2.
class RotationMap {
 public:
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
  [[nodiscard]] const Eigen::MatrixXd& householder() const { return householder_; }
  [[nodiscard]] const Eigen::MatrixXd& local_rotation() const { return local_; }
  /// +1 when the trajectory maps to the upper half disk, -1 for the lower.
  [[nodiscard]] int sign_branch() const { return sign_; }
  /// The 2 x n selector of the first two coordinates.
  [[nodiscard]] Eigen::MatrixXd projection() const;

  friend RotationMap build_rotation(std::span<const double> q0, std::span<const double> p0);

 private:
  Eigen::MatrixXd householder_;
  Eigen::MatrixXd local_;
  Eigen::MatrixXd matrix_;
  int sign_ = 1;
};

RotationMap build_rotation(std::span<const double> q0, std::span<const double> p0);

/// Components of R q beyond the first two must vanish within this tolerance
/// (scaled by max(1, |q|)).
inline constexpr double kOutOfPlaneTolerance = 1e-8;

Vec2 disk_project(const RotationMap& map, std::span<const double> q);

/// sgn(x2) * acos(x1 / |x|), with sgn(0) = +1.
double point_to_angle(std::span<const double> x);

/// log |S^{n-1}|, the surface area of the unit sphere in R^n.
double log_sphere_area(std::size_t n);

/// Density of the polar angle of an isotropic direction in R^n, on [-pi, pi].
double angular_density(double theta, std::size_t n);

/// Laplace estimate of the spread of that angle about pi/2.
double angle_concentration_std(std::size_t n);

struct DiskState {
  Vec2 q;
  Vec2 p;
};

/// Two-dimensional initial condition whose radius, speed and angle follow
/// the n-dimensional laws: radius of a uniform point in the n-ball of the
/// given radius, momentum sigma_p * N(0, I_n).
DiskState direct_2d_init(std::size_t n, double sigma_p, SeededStream& rng, double radius = 1.0);

/// N particles sharing one starting point: a single radius draw, then one
/// momentum per particle. Positions and momenta are row-major N x 2.
struct DiskEnsemble {
  std::vector<double> positions;
  std::vector<double> momenta;
};
DiskEnsemble direct_2d_ensemble(std::size_t n, double sigma_p, std::size_t n_particles,
                                const SeededStream& rng, double radius = 1.0);

}  // namespace reflectmc
