#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "reflectmc/dynamics.hpp"
#include "reflectmc/geometry.hpp"
#include "reflectmc/sinkhorn.hpp"
#include "reflectmc/spectral.hpp"

namespace reflectmc {

/// One ensemble started from a single uniformly drawn point, measured by SD
/// against a uniform reference sample at every `sd_stride` steps.
struct SDRunSpec {
  double sigma_p = 0.0;
  std::size_t n_particles = 0;
  std::size_t n_reference = 0;  // 0: same as n_particles
  std::size_t n_steps = 0;
  std::size_t trajectory_length = 0;  // 0: momenta are never re-randomized
  std::size_t sd_stride = 1;
  SinkhornConfig sinkhorn;
  double sigma_dp = 0.0;  // per-step momentum noise

  void validate() const;
};

struct SDRun {
  SDTimeSeries series;
  std::vector<BranchCounts> step_counts;
  PointVec q0;
};

/// Randomness: stream.split(0) draws q0, split(1) the reference sample and
/// split(2) is the master of the per-particle streams.
SDRun run_sd_series(const Volume& volume, const SDRunSpec& spec, const SeededStream& stream);

struct PhaseMapProtocol {
  VolumeKind volume = VolumeKind::Cube;
  double extent = 1.0;  // cube half-width or ball radius
  std::vector<double> sigma_grid;
  std::vector<std::size_t> n_grid;
  std::size_t n_particles = 300;
  std::size_t n_reference = 0;
  std::size_t n_steps = 128;
  std::size_t trajectory_length = 0;
  std::size_t sd_stride = 1;
  std::size_t seeds_per_cell = 8;
  SinkhornConfig sinkhorn;
  double threshold = 1e-12;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PhaseCell {
  std::size_t n = 0;
  double sigma_p = 0.0;
  /// Entropy of the PSD averaged over seeds.
  double entropy = 0.0;
  std::vector<double> seed_entropy;
  Spectrum spectrum;
  std::size_t sd_evaluations = 0;
  std::size_t sd_unconverged = 0;
  double max_marginal_violation = 0.0;
};

struct PhaseMapResult {
  std::vector<std::size_t> n_grid;
  std::vector<double> sigma_grid;
  std::vector<PhaseCell> cells;  // row-major: n outer, sigma inner
  std::vector<double> sigma_crit;  // NaN where no crossing was found
  std::optional<PowerLawFit> fit;
  double threshold = 0.0;

  [[nodiscard]] const PhaseCell& cell(std::size_t i_n, std::size_t i_sigma) const {
    return cells[i_n * sigma_grid.size() + i_sigma];
  }
};

/// Critical sigma along one row of the map: the boundary above which H stays
/// below the threshold for every remaining grid point. Returns the geometric
/// midpoint of the bracketing pair, or NaN when the stuck region is empty or
/// covers the whole row.
double critical_sigma(std::span<const double> sigma, std::span<const double> entropy,
                      double threshold);

/// Cell (i_n, i_sigma), seed s uses master.split(i_n * |sigma| + i_sigma).split(s).
PhaseMapResult phase_map(const PhaseMapProtocol& protocol);

}  // namespace reflectmc
