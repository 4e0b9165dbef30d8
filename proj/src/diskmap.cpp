#include "reflectmc/diskmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace reflectmc {

namespace {

Eigen::VectorXd to_vector(std::span<const double> x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

}  // namespace

Eigen::MatrixXd RotationMap::projection() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, matrix_.cols());
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  return p;
}

RotationMap build_rotation(std::span<const double> q0, std::span<const double> p0) {
  const auto n = static_cast<Eigen::Index>(q0.size());
  if (n < 2) throw std::invalid_argument("build_rotation: dimension must be at least 2");
  if (p0.size() != q0.size()) throw std::invalid_argument("build_rotation: dimension mismatch");
  const Eigen::VectorXd q = to_vector(q0);
  const double qn = q.norm();
  if (!(qn > 0.0)) throw std::invalid_argument("build_rotation: q0 must be nonzero");
  const Eigen::VectorXd qh = q / qn;

  RotationMap map;
  // v = qh - e1; its first entry is formed without cancellation when qh1 > 0.
  Eigen::VectorXd v = qh;
  const double tail = qh.tail(n - 1).squaredNorm();
  v(0) = qh(0) > 0.0 ? -tail / (1.0 + qh(0)) : qh(0) - 1.0;
  const double vv = v.squaredNorm();
  map.householder_ = Eigen::MatrixXd::Identity(n, n);
  if (vv > 0.0) map.householder_ -= (2.0 / vv) * v * v.transpose();

  const Eigen::VectorXd p = map.householder_ * to_vector(p0);
  Eigen::VectorXd a = p;
  a(0) = 0.0;
  const double an = a.norm();
  if (!(an > 1e-12 * std::max(1.0, p.norm()))) {
    throw DegeneratePlaneError("build_rotation: p0 is parallel to q0");
  }
  const Eigen::VectorXd ah = a / an;
  const double a2 = n > 1 ? ah(1) : 0.0;
  Eigen::VectorXd b = ah;
  b(1) = 0.0;
  const double bn = b.norm();
  map.sign_ = a2 >= 0.0 ? 1 : -1;

  map.local_ = Eigen::MatrixXd::Identity(n, n);
  if (bn > 0.0) {
    const Eigen::VectorXd bh = b / bn;
    const Eigen::VectorXd n2 = Eigen::VectorXd::Unit(n, 1);
    const double gamma = std::atan2(bn, a2);
    const double psi = map.sign_ > 0 ? -gamma : std::numbers::pi - gamma;
    map.local_ += (bh * n2.transpose() - n2 * bh.transpose()) * std::sin(psi) +
                  (bh * bh.transpose() + n2 * n2.transpose()) * (std::cos(psi) - 1.0);
  }
  map.matrix_ = map.local_ * map.householder_;
  return map;
}

Vec2 disk_project(const RotationMap& map, std::span<const double> q) {
  if (q.size() != map.dim()) throw std::invalid_argument("disk_project: dimension mismatch");
  const Eigen::VectorXd x = to_vector(q);
  const Eigen::VectorXd y = map.matrix() * x;
  const double off = y.size() > 2 ? y.tail(y.size() - 2).norm() : 0.0;
  if (off > kOutOfPlaneTolerance * std::max(1.0, x.norm())) {
    throw OutOfPlaneError("disk_project: point lies outside the trajectory plane");
  }
  return {y(0), y(1)};
}

double point_to_angle(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("point_to_angle: need at least two components");
  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (!(norm > 0.0)) throw std::invalid_argument("point_to_angle: zero vector");
  const double c = std::clamp(x[0] / norm, -1.0, 1.0);
  return (x[1] < 0.0 ? -1.0 : 1.0) * std::acos(c);
}

double log_sphere_area(std::size_t n) {
  const double h = 0.5 * static_cast<double>(n);
  return std::log(2.0) + h * std::log(std::numbers::pi) - std::lgamma(h);
}

double angular_density(double theta, std::size_t n) {
  if (n < 3) throw std::invalid_argument("angular_density: n must be at least 3");
  const double s = std::abs(std::sin(theta));
  if (s == 0.0) return 0.0;
  const double log_norm = std::log(0.5) + log_sphere_area(n - 1) - log_sphere_area(n);
  return std::exp(log_norm + static_cast<double>(n - 2) * std::log(s));
}

double angle_concentration_std(std::size_t n) {
  if (n < 3) throw std::invalid_argument("angle_concentration_std: n must be at least 3");
  return 1.0 / std::sqrt(static_cast<double>(n - 2));
}

namespace {

Vec2 momentum_2d(std::size_t n, double sigma_p, SeededStream& rng) {
  double p1 = 0.0, p2 = 0.0, norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = sigma_p * rng.normal();
    if (i == 0) p1 = z;
    if (i == 1) p2 = z;
    norm2 += z * z;
  }
  const double norm = std::sqrt(norm2);
  const double theta = (p2 < 0.0 ? -1.0 : 1.0) * std::acos(std::clamp(p1 / norm, -1.0, 1.0));
  return {norm * std::cos(theta), norm * std::sin(theta)};
}

void check_init(std::size_t n, double sigma_p, double radius) {
  if (n < 3) throw std::invalid_argument("direct_2d_init: n must be at least 3");
  if (!(sigma_p > 0.0)) throw std::invalid_argument("direct_2d_init: sigma_p must be positive");
  if (!(radius > 0.0)) throw std::invalid_argument("direct_2d_init: radius must be positive");
}

}  // namespace

DiskState direct_2d_init(std::size_t n, double sigma_p, SeededStream& rng, double radius) {
  check_init(n, sigma_p, radius);
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
  return {{r, 0.0}, momentum_2d(n, sigma_p, rng)};
}

DiskEnsemble direct_2d_ensemble(std::size_t n, double sigma_p, std::size_t n_particles,
                                const SeededStream& rng, double radius) {
  check_init(n, sigma_p, radius);
  SeededStream radial = rng.split(0);
  const double r = radius * std::pow(radial.uniform(), 1.0 / static_cast<double>(n));
  DiskEnsemble out;
  out.positions.resize(2 * n_particles);
  out.momenta.resize(2 * n_particles);
  const SeededStream momenta = rng.split(1);
  for (std::size_t i = 0; i < n_particles; ++i) {
    SeededStream s = momenta.split(i);
    const Vec2 p = momentum_2d(n, sigma_p, s);
    out.positions[2 * i] = r;
    out.positions[2 * i + 1] = 0.0;
    out.momenta[2 * i] = p[0];
    out.momenta[2 * i + 1] = p[1];
  }
  return out;
}

}  // namespace reflectmc
