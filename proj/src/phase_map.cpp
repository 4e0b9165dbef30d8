#include "reflectmc/phase_map.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>

namespace reflectmc {

void SDRunSpec::validate() const {
  if (!(sigma_p > 0.0)) throw std::invalid_argument("sigma_p must be > 0");
  if (n_particles == 0) throw std::invalid_argument("particles must be >= 1");
  if (n_steps == 0) throw std::invalid_argument("steps must be >= 1");
  if (sd_stride == 0) throw std::invalid_argument("sd_stride must be >= 1");
  if (!(sigma_dp >= 0.0)) throw std::invalid_argument("sigma_dp must be >= 0");
  sinkhorn.validate();
}

SDRun run_sd_series(const Volume& volume, const SDRunSpec& spec, const SeededStream& stream) {
  spec.validate();
  const std::size_t dim = volume.dim();
  SeededStream start = stream.split(0);
  SeededStream ref_stream = stream.split(1);
  const SeededStream particle_master = stream.split(2);

  SDRun run;
  run.q0 = sample_uniform(volume, start);
  const std::size_t n_ref = spec.n_reference == 0 ? spec.n_particles : spec.n_reference;
  std::vector<double> ref(n_ref * dim);
  for (std::size_t i = 0; i < n_ref; ++i) {
    sample_uniform(volume, ref_stream, std::span<double>(ref).subspan(i * dim, dim));
  }
  const SinkhornReference reference(EmpiricalDistribution::uniform(std::move(ref), dim),
                                    spec.sinkhorn);

  EnsembleInit init;
  init.positions.reserve(spec.n_particles * dim);
  for (std::size_t i = 0; i < spec.n_particles; ++i) {
    init.positions.insert(init.positions.end(), run.q0.begin(), run.q0.end());
  }
  auto streams = particle_streams(particle_master, spec.n_particles);
  MomentumSchedule momentum{spec.sigma_p, spec.trajectory_length, spec.sigma_dp};
  SDMonitor monitor(reference);
  run.step_counts = simulate_ensemble(volume, std::move(init), momentum,
                                      {spec.n_steps, spec.sd_stride}, streams, std::ref(monitor));
  run.series = std::move(monitor.series());
  run.series.meta.sigma_p = spec.sigma_p;
  run.series.meta.dim = dim;
  run.series.meta.volume = volume.kind_name();
  run.series.meta.epsilon = spec.sinkhorn.epsilon;
  run.series.meta.n_particles = spec.n_particles;
  run.series.meta.seed = stream.key();
  return run;
}

void PhaseMapProtocol::validate() const {
  if (sigma_grid.empty()) throw std::invalid_argument("phase map: sigma grid is empty");
  if (n_grid.empty()) throw std::invalid_argument("phase map: dimension grid is empty");
  for (double s : sigma_grid) {
    if (!(s > 0.0)) throw std::invalid_argument("phase map: sigma values must be > 0");
  }
  for (auto n : n_grid) {
    if (n == 0) throw std::invalid_argument("phase map: dimensions must be >= 1");
  }
  if (!(extent > 0.0)) throw std::invalid_argument("phase map: extent must be > 0");
  if (seeds_per_cell == 0) throw std::invalid_argument("phase map: seeds_per_cell must be >= 1");
  if (!(threshold > 0.0)) throw std::invalid_argument("phase map: threshold must be > 0");
  if (volume == VolumeKind::Interval) {
    throw std::invalid_argument("phase map: volume must be a ball or a cube");
  }
  SDRunSpec{sigma_grid.front(), n_particles, n_reference, n_steps, trajectory_length, sd_stride,
            sinkhorn}
      .validate();
}

double critical_sigma(std::span<const double> sigma, std::span<const double> entropy,
                      double threshold) {
  if (sigma.size() != entropy.size() || sigma.empty()) {
    throw std::invalid_argument("critical_sigma: grid and entropy sizes differ");
  }
  // Index one past the last cell that is not stuck.
  std::size_t j = sigma.size();
  while (j > 0 && entropy[j - 1] < threshold) --j;
  if (j > 0 && j < sigma.size()) return std::sqrt(sigma[j - 1] * sigma[j]);
  return std::numeric_limits<double>::quiet_NaN();
}

PhaseMapResult phase_map(const PhaseMapProtocol& protocol) {
  protocol.validate();
  PhaseMapResult result;
  result.n_grid = protocol.n_grid;
  result.sigma_grid = protocol.sigma_grid;
  result.threshold = protocol.threshold;

  const std::size_t n_sigma = protocol.sigma_grid.size();
  const std::size_t n_cells = protocol.n_grid.size() * n_sigma;
  const std::size_t seeds = protocol.seeds_per_cell;
  const SeededStream master(protocol.seed);

  std::vector<Spectrum> spectra(n_cells * seeds);
  std::vector<SDTimeSeries> series(n_cells * seeds);
  std::exception_ptr error;
  const auto jobs = static_cast<std::int64_t>(n_cells * seeds);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t jj = 0; jj < jobs; ++jj) {
    try {
      const auto job = static_cast<std::size_t>(jj);
      const std::size_t cell = job / seeds;
      const std::size_t s = job % seeds;
      const std::size_t dim = protocol.n_grid[cell / n_sigma];
      const Volume volume = protocol.volume == VolumeKind::Ball
                                ? Volume::ball(dim, protocol.extent)
                                : Volume::cube(dim, protocol.extent);
      SDRunSpec spec{protocol.sigma_grid[cell % n_sigma],
                     protocol.n_particles,
                     protocol.n_reference,
                     protocol.n_steps,
                     protocol.trajectory_length,
                     protocol.sd_stride,
                     protocol.sinkhorn};
      auto run = run_sd_series(volume, spec, master.split(cell).split(s));
      spectra[job] = psd(run.series);
      run.series.values.clear();
      series[job] = std::move(run.series);
    } catch (...) {
#pragma omp critical(phase_map_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  result.cells.resize(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    PhaseCell& c = result.cells[cell];
    c.n = protocol.n_grid[cell / n_sigma];
    c.sigma_p = protocol.sigma_grid[cell % n_sigma];
    const std::span<const Spectrum> cell_spectra(spectra.data() + cell * seeds, seeds);
    c.spectrum = average_spectra(cell_spectra);
    c.entropy = spectral_entropy(c.spectrum);
    for (const auto& s : cell_spectra) c.seed_entropy.push_back(spectral_entropy(s));
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto& ser = series[cell * seeds + s];
      c.sd_evaluations += ser.converged.size();
      c.sd_unconverged += ser.unconverged();
      for (double v : ser.marginal_violation) {
        c.max_marginal_violation = std::max(c.max_marginal_violation, v);
      }
    }
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < protocol.n_grid.size(); ++i) {
    std::vector<double> row(n_sigma);
    for (std::size_t j = 0; j < n_sigma; ++j) row[j] = result.cell(i, j).entropy;
    const double sc = critical_sigma(protocol.sigma_grid, row, protocol.threshold);
    result.sigma_crit.push_back(sc);
    if (std::isfinite(sc)) {
      xs.push_back(static_cast<double>(protocol.n_grid[i]));
      ys.push_back(sc);
    }
  }
  if (xs.size() >= 3) result.fit = power_law_fit(xs, ys);
  return result;
}

}  // namespace reflectmc
