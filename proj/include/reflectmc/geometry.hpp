#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "reflectmc/rng.hpp"

namespace reflectmc {

using PointVec = std::vector<double>;

/// Raised when the extended normal field is undefined at the query point
/// (the ball centre, or the origin of the cube).
class DegenerateNormalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Ball {
  double radius = 1.0;
};

/// Region [-half_width, half_width]^n.
struct Cube {
  double half_width = 1.0;
};

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

enum class VolumeKind { Ball, Cube, Interval };

/// A closed, convex sampling region: boundary points count as inside.
class Volume {
 public:
  using Shape = std::variant<Ball, Cube, Interval>;

  static Volume ball(std::size_t dim, double radius = 1.0);
  static Volume cube(std::size_t dim, double half_width = 1.0);
  static Volume interval(double lo = -1.0, double hi = 1.0);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] VolumeKind kind() const;
  [[nodiscard]] std::string kind_name() const;

 private:
  Volume(Shape shape, std::size_t dim) : shape_(shape), dim_(dim) {}

  Shape shape_;
  std::size_t dim_;
};

bool contains(const Volume& volume, std::span<const double> q);

/// Unit vector field that matches the inward boundary normal on the boundary
/// and extends it outside. Ball: -q/|q|. Cube: -sign(q_j) e_j with
/// j = argmax |q_i| (lowest index on ties).
PointVec normal_field(const Volume& volume, std::span<const double> q);
void normal_field(const Volume& volume, std::span<const double> q, std::span<double> out);

PointVec sample_uniform(const Volume& volume, SeededStream& rng);
void sample_uniform(const Volume& volume, SeededStream& rng, std::span<double> out);

/// Isotropic unit vector in `dim` dimensions.
PointVec sample_direction(std::size_t dim, SeededStream& rng);

/// Length of the intersection of the line x0 + s*direction with the volume.
double chord_length(const Volume& volume, std::span<const double> x0,
                    std::span<const double> direction);

struct ChordEstimate {
  double mean;
  double standard_error;
  std::size_t samples;
};

ChordEstimate mean_chord_length(const Volume& volume, std::size_t n_samples, SeededStream& rng);

}  // namespace reflectmc
