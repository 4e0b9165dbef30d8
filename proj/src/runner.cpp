#include "reflectmc/runner.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "reflectmc/csv.hpp"
#include "reflectmc/digest.hpp"
#include "reflectmc/diskmap.hpp"
#include "reflectmc/phase_map.hpp"
#include "reflectmc/spectral.hpp"

namespace reflectmc {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

struct SinkhornStats {
  std::size_t evaluations = 0;
  std::size_t unconverged = 0;
  std::size_t iterations = 0;
  double max_violation = 0.0;

  void add(const SDTimeSeries& s) {
    evaluations += s.size();
    unconverged += s.unconverged();
    for (auto it : s.iterations) iterations += it;
    for (double v : s.marginal_violation) max_violation = std::max(max_violation, v);
  }
};

class RunContext {
 public:
  RunContext(const ExperimentConfig& config, fs::path dir) : config_(config), dir_(std::move(dir)) {}

  /// Writes a data file and records its digest.
  void artifact(const std::string& name, const std::string& contents) {
    write_file_atomic(dir_ / name, contents);
    artifacts_.push_back({{"file", name},
                          {"sha256", sha256_hex(contents)},
                          {"bytes", contents.size()}});
  }

  const ExperimentConfig& config() const { return config_; }
  json& summary() { return summary_; }
  SinkhornStats& sinkhorn() { return sinkhorn_; }
  const json& artifacts() const { return artifacts_; }

 private:
  const ExperimentConfig& config_;
  fs::path dir_;
  json artifacts_ = json::array();
  json summary_ = json::object();
  SinkhornStats sinkhorn_;
};

std::string header_comment(const ExperimentConfig& c, const char* table) {
  return std::string("# reflectmc ") + table + " " + std::to_string(kSchemaVersion) + " " +
         experiment_kind_name(c.kind) + "\n";
}

json branch_json(const std::vector<BranchCounts>& counts) {
  BranchCounts total;
  for (const auto& c : counts) {
    total.forward += c.forward;
    total.reflect += c.reflect;
    total.reject += c.reject;
  }
  return {{"forward", total.forward}, {"reflect", total.reflect}, {"reject", total.reject}};
}

std::size_t require_dim(const ExperimentConfig& c) {
  if (c.volume.dim == 0) throw ConfigError("/volume/dim", "required field is missing");
  return c.volume.dim;
}

SDRunSpec sd_spec(const ExperimentConfig& c, double sigma) {
  SDRunSpec spec;
  spec.sigma_p = sigma;
  spec.n_particles = c.particles;
  spec.n_reference = c.reference_samples;
  spec.n_steps = c.steps;
  spec.trajectory_length = c.trajectory_length;
  spec.sd_stride = c.sd_stride;
  spec.sinkhorn = c.sinkhorn;
  return spec;
}

void run_sd_kind(RunContext& ctx, bool noisy) {
  const auto& c = ctx.config();
  const std::size_t n = require_dim(c);
  const Volume volume = c.volume.build();
  const SeededStream master(c.seed);
  std::ostringstream csv;
  csv << header_comment(c, "sd-series");
  write_csv_header(csv, {"sigma_p", "sigma_dp", "t", "sd", "converged", "marginal_violation",
                         "iterations"});
  json per_sigma = json::array();
  for (std::size_t k = 0; k < c.sigma_p.size(); ++k) {
    const double sigma = c.sigma_for(c.sigma_p[k], n);
    SDRunSpec spec = sd_spec(c, sigma);
    if (noisy) {
      spec.sigma_dp = c.sigma_dp >= 0.0
                          ? c.sigma_dp
                          : sigma / std::sqrt(static_cast<double>(c.trajectory_length));
      spec.trajectory_length = 0;
    }
    const auto run = run_sd_series(volume, spec, master.split(k));
    ctx.sinkhorn().add(run.series);
    for (std::size_t i = 0; i < run.series.size(); ++i) {
      CsvRow row;
      row << sigma << spec.sigma_dp << run.series.times[i] << run.series.values[i]
          << static_cast<int>(run.series.converged[i]) << run.series.marginal_violation[i]
          << static_cast<std::uint64_t>(run.series.iterations[i]);
      row.write(csv);
    }
    per_sigma.push_back({{"sigma_p", sigma},
                         {"sigma_dp", spec.sigma_dp},
                         {"branches", branch_json(run.step_counts)}});
  }
  ctx.artifact("sd_series.csv", csv.str());
  ctx.summary()["runs"] = per_sigma;
}

void run_psd_sweep(RunContext& ctx) {
  const auto& c = ctx.config();
  const std::size_t n = require_dim(c);
  const Volume volume = c.volume.build();
  const SeededStream master(c.seed);
  std::ostringstream psd_csv, summary_csv;
  psd_csv << header_comment(c, "psd");
  write_csv_header(psd_csv, {"sigma_p", "frequency", "power"});
  summary_csv << header_comment(c, "psd-summary");
  write_csv_header(summary_csv, {"sigma_p", "entropy", "dominant_frequency", "dominant_power",
                                 "f_diag", "f_super", "f_broad"});
  for (std::size_t k = 0; k < c.sigma_p.size(); ++k) {
    const double sigma = c.sigma_for(c.sigma_p[k], n);
    std::vector<Spectrum> spectra;
    for (std::size_t s = 0; s < c.seeds_per_cell; ++s) {
      const auto run = run_sd_series(volume, sd_spec(c, sigma), master.split(k).split(s));
      ctx.sinkhorn().add(run.series);
      spectra.push_back(psd(run.series));
    }
    const Spectrum avg = average_spectra(spectra);
    for (std::size_t b = 0; b < avg.size(); ++b) {
      CsvRow row;
      row << sigma << avg.frequencies[b] << avg.power[b];
      row.write(psd_csv);
    }
    const Peak peak = dominant_frequency(avg, true);
    const bool ball = c.volume.kind == VolumeKind::Ball;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CsvRow row;
    row << sigma << spectral_entropy(avg) << peak.frequency << peak.power
        << (ball ? f_diag(sigma, n, c.volume.radius) : nan)
        << (ball ? f_super(sigma, n, c.volume.radius) : nan) << f_broad(sigma);
    row.write(summary_csv);
  }
  ctx.artifact("psd.csv", psd_csv.str());
  ctx.artifact("psd_summary.csv", summary_csv.str());
}

void run_phase_map(RunContext& ctx) {
  const auto& c = ctx.config();
  PhaseMapProtocol p;
  p.volume = c.volume.kind;
  p.extent = c.volume.extent();
  p.sigma_grid = c.sigma_p;
  p.n_grid = c.dims;
  p.n_particles = c.particles;
  p.n_reference = c.reference_samples;
  p.n_steps = c.steps;
  p.trajectory_length = c.trajectory_length;
  p.sd_stride = c.sd_stride;
  p.seeds_per_cell = c.seeds_per_cell;
  p.sinkhorn = c.sinkhorn;
  p.threshold = c.threshold;
  p.seed = c.seed;
  const auto result = phase_map(p);

  std::ostringstream csv;
  csv << header_comment(c, "phase-map");
  write_csv_header(csv, {"n", "sigma_p", "H", "seed"});
  for (const auto& cell : result.cells) {
    CsvRow row;
    row << static_cast<std::uint64_t>(cell.n) << cell.sigma_p << cell.entropy << c.seed;
    row.write(csv);
    ctx.sinkhorn().evaluations += cell.sd_evaluations;
    ctx.sinkhorn().unconverged += cell.sd_unconverged;
    ctx.sinkhorn().max_violation = std::max(ctx.sinkhorn().max_violation, cell.max_marginal_violation);
  }
  ctx.artifact("phase_map.csv", csv.str());

  json crit = json::array();
  for (std::size_t i = 0; i < result.n_grid.size(); ++i) {
    const double s = result.sigma_crit[i];
    crit.push_back({{"n", result.n_grid[i]}, {"sigma_crit", std::isfinite(s) ? json(s) : json()}});
  }
  json fit = {{"threshold", result.threshold},
              {"rule", "boundary above which H < threshold on the rest of the grid; "
                       "geometric midpoint of the bracketing grid points"},
              {"critical", crit}};
  if (result.fit) {
    fit["exponent"] = result.fit->exponent;
    fit["standard_error"] = result.fit->standard_error;
    fit["prefactor"] = result.fit->prefactor;
  } else {
    fit["exponent"] = nullptr;
  }
  ctx.artifact("phase_map_fit.json", fit.dump(2) + "\n");
}

void run_chordlen(RunContext& ctx) {
  const auto& c = ctx.config();
  const SeededStream master(c.seed);
  std::ostringstream csv;
  csv << header_comment(c, "chord-lengths");
  write_csv_header(csv, {"n", "mean", "standard_error", "samples"});
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < c.dims.size(); ++i) {
    SeededStream s = master.split(i);
    const auto est = mean_chord_length(c.volume.build(c.dims[i]), c.samples, s);
    CsvRow row;
    row << static_cast<std::uint64_t>(c.dims[i]) << est.mean << est.standard_error
        << static_cast<std::uint64_t>(est.samples);
    row.write(csv);
    xs.push_back(static_cast<double>(c.dims[i]));
    ys.push_back(est.mean);
  }
  ctx.artifact("chord_lengths.csv", csv.str());
  if (xs.size() >= 3) {
    const auto fit = power_law_fit(xs, ys);
    const json j = {{"exponent", fit.exponent},
                    {"standard_error", fit.standard_error},
                    {"prefactor", fit.prefactor}};
    ctx.artifact("chord_fit.json", j.dump(2) + "\n");
  }
}

void run_diskmap(RunContext& ctx) {
  const auto& c = ctx.config();
  const std::size_t n = require_dim(c);
  const double sigma = c.sigma_for(c.sigma_p.front(), n);
  const SeededStream master(c.seed);
  std::ostringstream csv;
  csv << header_comment(c, "diskmap");
  write_csv_header(csv, {"t", "particle_id", "theta", "r"});
  auto emit = [&](std::int64_t t, std::size_t i, Vec2 x) {
    CsvRow row;
    row << t << static_cast<std::uint64_t>(i) << point_to_angle(x) << std::hypot(x[0], x[1]);
    row.write(csv);
  };
  const SnapshotSchedule schedule{c.steps, c.trace_stride};
  std::vector<BranchCounts> counts;
  if (c.diskmap_mode == "direct") {
    if (c.trajectory_length != 0) {
      throw ConfigError("/L", "re-randomization is not available in direct 2-D mode");
    }
    auto ens = direct_2d_ensemble(n, sigma, c.particles, master.split(0), c.volume.radius);
    auto streams = particle_streams(master.split(1), c.particles);
    counts = simulate_ensemble(
        Volume::ball(2, c.volume.radius), {std::move(ens.positions), std::move(ens.momenta)},
        {sigma, 0, 0.0}, schedule, streams, [&](const SnapshotView& v) {
          for (std::size_t i = 0; i < v.n_particles; ++i) {
            emit(v.t, i, {v.positions[2 * i], v.positions[2 * i + 1]});
          }
        });
  } else {
    if (c.trajectory_length != 0) {
      throw ConfigError("/L", "the disk map holds only within a single trajectory");
    }
    const Volume volume = c.volume.build();
    SeededStream start = master.split(0);
    const PointVec q0 = sample_uniform(volume, start);
    EnsembleInit init;
    for (std::size_t i = 0; i < c.particles; ++i) {
      init.positions.insert(init.positions.end(), q0.begin(), q0.end());
    }
    auto streams = particle_streams(master.split(1), c.particles);
    std::vector<RotationMap> maps;
    counts = simulate_ensemble(
        volume, std::move(init), {sigma, 0, 0.0}, schedule, streams,
        [&](const SnapshotView& v) {
          if (maps.empty()) {
            for (std::size_t i = 0; i < v.n_particles; ++i) {
              maps.push_back(build_rotation(q0, v.momenta.subspan(i * n, n)));
            }
          }
          for (std::size_t i = 0; i < v.n_particles; ++i) {
            emit(v.t, i, disk_project(maps[i], v.positions.subspan(i * n, n)));
          }
        },
        true);
  }
  ctx.summary()["branches"] = branch_json(counts);
  ctx.artifact("diskmap.csv", csv.str());
}

void run_wavepacket(RunContext& ctx) {
  const auto& c = ctx.config();
  const double sigma = c.sigma_p.front();
  const auto trace = wavepacket_1d(c.x0, c.emulated_dim, sigma, c.particles, c.steps,
                                   SeededStream(c.seed), c.momentum_sign);
  const double lo = c.volume.lo, hi = c.volume.hi;
  if (lo != -1.0 || hi != 1.0) {
    throw ConfigError("/volume/bounds", "the wave-packet model is defined on [-1, 1]");
  }
  const double width = (hi - lo) / static_cast<double>(c.bins);
  std::ostringstream csv;
  csv << header_comment(c, "wavepacket-density");
  write_csv_header(csv, {"t", "x", "density"});
  for (const auto& snap : trace.snapshots) {
    std::vector<std::size_t> hist(c.bins, 0);
    for (double x : snap.positions) {
      auto b = static_cast<std::size_t>((x - lo) / width);
      hist[std::min(b, c.bins - 1)] += 1;
    }
    for (std::size_t b = 0; b < c.bins; ++b) {
      CsvRow row;
      row << snap.t << lo + (static_cast<double>(b) + 0.5) * width
          << static_cast<double>(hist[b]) / (static_cast<double>(c.particles) * width);
      row.write(csv);
    }
  }
  ctx.summary()["branches"] = branch_json(trace.step_counts);
  ctx.artifact("density.csv", csv.str());
}

void run_acceptance(RunContext& ctx) {
  const auto& c = ctx.config();
  const std::size_t n = require_dim(c);
  const Volume volume = c.volume.build();
  const SeededStream master(c.seed);
  std::ostringstream csv;
  csv << header_comment(c, "acceptance");
  write_csv_header(csv, {"sigma_p", "chain", "rate", "forward", "reflect", "reject"});
  json per_sigma = json::array();
  for (std::size_t k = 0; k < c.sigma_p.size(); ++k) {
    const double sigma = c.sigma_for(c.sigma_p[k], n);
    auto streams = particle_streams(master.split(k), c.chains);
    EnsembleInit init;
    init.positions.resize(c.chains * n);
    for (std::size_t i = 0; i < c.chains; ++i) {
      sample_uniform(volume, streams[i], std::span<double>(init.positions).subspan(i * n, n));
    }
    std::vector<std::vector<BranchTag>> tags(c.chains);
    simulate_ensemble(volume, std::move(init), {sigma, c.trajectory_length, 0.0}, {c.steps, 1},
                      streams, [&](const SnapshotView& v) {
                        if (v.t == 0) return;
                        for (std::size_t i = 0; i < v.n_particles; ++i) {
                          switch (static_cast<Branch>(v.branches[i])) {
                            case Branch::Forward: tags[i].push_back(BranchTag::forward()); break;
                            case Branch::Reflect: tags[i].push_back(BranchTag::reflect()); break;
                            case Branch::Reject: tags[i].push_back(BranchTag::reject()); break;
                          }
                        }
                      });
    double mean = 0.0;
    for (std::size_t i = 0; i < c.chains; ++i) {
      BranchCounts bc;
      for (const auto& t : tags[i]) bc.add(t.branch);
      const double rate = trajectory_acceptance_rate(tags[i]);
      mean += rate;
      CsvRow row;
      row << sigma << static_cast<std::uint64_t>(i) << rate << bc.forward << bc.reflect << bc.reject;
      row.write(csv);
    }
    per_sigma.push_back({{"sigma_p", sigma}, {"mean_rate", mean / static_cast<double>(c.chains)}});
  }
  ctx.summary()["acceptance"] = per_sigma;
  ctx.artifact("acceptance.csv", csv.str());
}

void dispatch(RunContext& ctx) {
  switch (ctx.config().kind) {
    case ExperimentKind::SdSeries: return run_sd_kind(ctx, false);
    case ExperimentKind::NoisyChain: return run_sd_kind(ctx, true);
    case ExperimentKind::PsdSweep: return run_psd_sweep(ctx);
    case ExperimentKind::PhaseMap: return run_phase_map(ctx);
    case ExperimentKind::ChordLength: return run_chordlen(ctx);
    case ExperimentKind::DiskmapDensity: return run_diskmap(ctx);
    case ExperimentKind::Wavepacket: return run_wavepacket(ctx);
    case ExperimentKind::AcceptanceRate: return run_acceptance(ctx);
  }
}

}  // namespace

json run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                    const RunOptions& options) {
  fs::create_directories(out_dir);
  const fs::path manifest_path = out_dir / "manifest.json";
  fs::remove(manifest_path);
  if (options.workers > 0) omp_set_num_threads(options.workers);

  const auto started = std::chrono::steady_clock::now();
  const json resolved = to_json(config);
  const std::string config_text = resolved.dump(2) + "\n";
  RunContext ctx(config, out_dir);

  json manifest = {
      {"schema_version", kSchemaVersion},
      {"library_version", kLibraryVersion},
      {"experiment", experiment_kind_name(config.kind)},
      {"config_sha256", sha256_hex(config_text)},
      {"resolved", resolved},
  };
  std::exception_ptr failure;
  try {
    write_file_atomic(out_dir / "config.json", config_text);
    dispatch(ctx);
    manifest["status"] = "complete";
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    failure = std::current_exception();
  }
  manifest["outputs"] = ctx.artifacts();
  manifest["summary"] = ctx.summary();
  const auto& s = ctx.sinkhorn();
  manifest["sinkhorn"] = {{"epsilon", config.sinkhorn.epsilon},
                          {"max_iterations", config.sinkhorn.max_iterations},
                          {"marginal_tolerance", config.sinkhorn.marginal_tolerance},
                          {"evaluations", s.evaluations},
                          {"unconverged", s.unconverged},
                          {"total_iterations", s.iterations},
                          {"max_marginal_violation", s.max_violation}};
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  if (failure) std::rethrow_exception(failure);
  return manifest;
}

}  // namespace reflectmc
