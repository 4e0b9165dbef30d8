#include "reflectmc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reflectmc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dim(const Volume& volume, std::size_t got) {
  if (got != volume.dim()) {
    throw std::invalid_argument("point dimension " + std::to_string(got) +
                                " does not match volume dimension " +
                                std::to_string(volume.dim()));
  }
}

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

Volume Volume::ball(std::size_t dim, double radius) {
  if (dim < 1) throw std::invalid_argument("ball dimension must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be > 0");
  return Volume(Ball{radius}, dim);
}

Volume Volume::cube(std::size_t dim, double half_width) {
  if (dim < 1) throw std::invalid_argument("cube dimension must be >= 1");
  if (!(half_width > 0.0)) throw std::invalid_argument("cube half_width must be > 0");
  return Volume(Cube{half_width}, dim);
}

Volume Volume::interval(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("interval bounds must satisfy lo < hi");
  return Volume(Interval{lo, hi}, 1);
}

VolumeKind Volume::kind() const {
  return std::visit(overloaded{[](const Ball&) { return VolumeKind::Ball; },
                               [](const Cube&) { return VolumeKind::Cube; },
                               [](const Interval&) { return VolumeKind::Interval; }},
                    shape_);
}

std::string Volume::kind_name() const {
  switch (kind()) {
    case VolumeKind::Ball: return "ball";
    case VolumeKind::Cube: return "cube";
    case VolumeKind::Interval: return "interval";
  }
  return "unknown";
}

bool contains(const Volume& volume, std::span<const double> q) {
  check_dim(volume, q.size());
  return std::visit(
      overloaded{[&](const Ball& b) { return squared_norm(q) <= b.radius * b.radius; },
                 [&](const Cube& c) {
                   return std::all_of(q.begin(), q.end(),
                                      [&](double v) { return std::abs(v) <= c.half_width; });
                 },
                 [&](const Interval& i) { return q[0] >= i.lo && q[0] <= i.hi; }},
      volume.shape());
}

void normal_field(const Volume& volume, std::span<const double> q, std::span<double> out) {
  check_dim(volume, q.size());
  if (out.size() != q.size()) throw std::invalid_argument("normal_field: output size mismatch");
  std::visit(overloaded{[&](const Ball&) {
                          const double norm = std::sqrt(squared_norm(q));
                          if (norm == 0.0) {
                            throw DegenerateNormalError("ball normal undefined at the centre");
                          }
                          for (std::size_t i = 0; i < q.size(); ++i) out[i] = -q[i] / norm;
                        },
                        [&](const Cube&) {
                          std::size_t j = 0;
                          double best = std::abs(q[0]);
                          for (std::size_t i = 1; i < q.size(); ++i) {
                            if (std::abs(q[i]) > best) {
                              best = std::abs(q[i]);
                              j = i;
                            }
                          }
                          if (best == 0.0) {
                            throw DegenerateNormalError("cube normal undefined at the origin");
                          }
                          std::fill(out.begin(), out.end(), 0.0);
                          out[j] = q[j] > 0.0 ? -1.0 : 1.0;
                        },
                        [&](const Interval& iv) {
                          const double centre = 0.5 * (iv.lo + iv.hi);
                          if (q[0] == centre) {
                            throw DegenerateNormalError("interval normal undefined at the midpoint");
                          }
                          out[0] = q[0] > centre ? -1.0 : 1.0;
                        }},
             volume.shape());
}

PointVec normal_field(const Volume& volume, std::span<const double> q) {
  PointVec out(q.size());
  normal_field(volume, q, out);
  return out;
}

PointVec sample_direction(std::size_t dim, SeededStream& rng) {
  PointVec d(dim);
  double norm2 = 0.0;
  do {
    for (auto& v : d) v = rng.normal();
    norm2 = squared_norm(d);
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : d) v *= inv;
  return d;
}

void sample_uniform(const Volume& volume, SeededStream& rng, std::span<double> out) {
  check_dim(volume, out.size());
  std::visit(overloaded{[&](const Ball& b) {
                          // Radius transform: r = R U^{1/n} along an isotropic direction.
                          double norm2 = 0.0;
                          do {
                            for (auto& v : out) v = rng.normal();
                            norm2 = squared_norm(out);
                          } while (norm2 == 0.0);
                          const double u = rng.uniform();
                          const double r =
                              b.radius * std::pow(u, 1.0 / static_cast<double>(out.size()));
                          const double scale = r / std::sqrt(norm2);
                          for (auto& v : out) v *= scale;
                        },
                        [&](const Cube& c) {
                          for (auto& v : out) v = rng.uniform(-c.half_width, c.half_width);
                        },
                        [&](const Interval& iv) { out[0] = rng.uniform(iv.lo, iv.hi); }},
             volume.shape());
}

PointVec sample_uniform(const Volume& volume, SeededStream& rng) {
  PointVec out(volume.dim());
  sample_uniform(volume, rng, out);
  return out;
}

double chord_length(const Volume& volume, std::span<const double> x0,
                    std::span<const double> direction) {
  check_dim(volume, x0.size());
  check_dim(volume, direction.size());
  if (!contains(volume, x0)) throw std::invalid_argument("chord_length: x0 outside the volume");
  if (std::abs(std::sqrt(squared_norm(direction)) - 1.0) > 1e-9) {
    throw std::invalid_argument("chord_length: direction must be a unit vector");
  }

  auto slab = [&](double lo, double hi) {
    double s_lo = -std::numeric_limits<double>::infinity();
    double s_hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double d = direction[i];
      if (d == 0.0) continue;
      double a = (lo - x0[i]) / d;
      double b = (hi - x0[i]) / d;
      if (a > b) std::swap(a, b);
      s_lo = std::max(s_lo, a);
      s_hi = std::min(s_hi, b);
    }
    return std::max(0.0, s_hi - s_lo);
  };

  return std::visit(overloaded{[&](const Ball& b) {
                                 double proj = 0.0;
                                 for (std::size_t i = 0; i < x0.size(); ++i) {
                                   proj += x0[i] * direction[i];
                                 }
                                 const double c = squared_norm(x0) - b.radius * b.radius;
                                 return 2.0 * std::sqrt(std::max(0.0, proj * proj - c));
                               },
                               [&](const Cube& c) { return slab(-c.half_width, c.half_width); },
                               [&](const Interval& iv) { return slab(iv.lo, iv.hi); }},
                    volume.shape());
}

ChordEstimate mean_chord_length(const Volume& volume, std::size_t n_samples, SeededStream& rng) {
  if (n_samples < 2) throw std::invalid_argument("mean_chord_length needs at least 2 samples");
  PointVec x0(volume.dim());
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    sample_uniform(volume, rng, x0);
    const PointVec dir = sample_direction(volume.dim(), rng);
    const double len = chord_length(volume, x0, dir);
    sum += len;
    sum2 += len * len;
  }
  const double n = static_cast<double>(n_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), n_samples};
}

}  // namespace reflectmc
