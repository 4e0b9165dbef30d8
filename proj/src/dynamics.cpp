#include "reflectmc/dynamics.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>

namespace reflectmc {

const char* branch_name(Branch b) {
  switch (b) {
    case Branch::Forward: return "forward";
    case Branch::Reflect: return "reflect";
    case Branch::Reject: return "reject";
  }
  return "unknown";
}

BranchTag gmc_step_inplace(std::span<double> q, std::span<double> p, const Volume& volume,
                           std::span<double> scratch) {
  const std::size_t n = q.size();
  if (p.size() != n || n != volume.dim()) {
    throw std::invalid_argument("gmc_step: state dimension does not match the volume");
  }
  if (scratch.size() < 2 * n) throw std::invalid_argument("gmc_step: scratch too small");

  std::span<double> probe = scratch.subspan(0, n);
  std::span<double> work = scratch.subspan(n, n);

  for (std::size_t i = 0; i < n; ++i) probe[i] = q[i] + p[i];
  if (contains(volume, probe)) {
    for (std::size_t i = 0; i < n; ++i) q[i] = probe[i];
    return BranchTag::forward();
  }

  // Reflect about the normal evaluated at the overstepped point q1.
  normal_field(volume, probe, work);
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += p[i] * work[i];
  for (std::size_t i = 0; i < n; ++i) {
    work[i] = p[i] - 2.0 * dot * work[i];  // p1
    probe[i] += work[i];                   // q2 = q1 + p1
  }
  if (contains(volume, probe)) {
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = probe[i];
      p[i] = work[i];
    }
    return BranchTag::reflect();
  }

  for (auto& v : p) v = -v;
  return BranchTag::reject();
}

StepOutcome gmc_step(const ChainState& state, const Volume& volume) {
  if (!contains(volume, state.q)) throw std::invalid_argument("gmc_step: q outside the volume");
  StepOutcome out{state, {}};
  std::vector<double> scratch(2 * state.q.size());
  out.tag = gmc_step_inplace(out.state.q, out.state.p, volume, scratch);
  return out;
}

PointVec draw_momentum(std::size_t n, double sigma_p, SeededStream& rng) {
  if (!(sigma_p > 0.0)) throw std::invalid_argument("draw_momentum: sigma_p must be > 0");
  PointVec p(n);
  for (auto& v : p) v = sigma_p * rng.normal();
  return p;
}

Trajectory run_trajectory(const ChainState& start, const Volume& volume, std::size_t length) {
  if (!contains(volume, start.q)) {
    throw std::invalid_argument("run_trajectory: start outside the volume");
  }
  Trajectory traj;
  traj.path.reserve(length + 1);
  traj.branches.reserve(length);
  traj.path.push_back(start);
  ChainState s = start;
  std::vector<double> scratch(2 * s.q.size());
  for (std::size_t t = 0; t < length; ++t) {
    traj.branches.push_back(gmc_step_inplace(s.q, s.p, volume, scratch));
    traj.path.push_back(s);
  }
  return traj;
}

double trajectory_acceptance_rate(std::span<const BranchTag> branches) {
  if (branches.empty()) throw std::invalid_argument("acceptance rate of an empty trajectory");
  std::uint64_t inside = 0;
  std::uint64_t points = 0;
  for (const auto& tag : branches) {
    inside += tag.inside;
    points += tag.probes;
    if (tag.branch == Branch::Reject) {
      // The retained position is the third point of a rejected step.
      inside += 1;
      points += 1;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(points);
}

void GmcParams::validate() const {
  if (!(sigma_p > 0.0)) throw std::invalid_argument("sigma_p must be > 0");
  if (trajectory_length < 1) throw std::invalid_argument("trajectory length L must be >= 1");
  if (schedule.stride < 1) throw std::invalid_argument("snapshot stride must be >= 1");
}

void BranchCounts::add(Branch b) {
  switch (b) {
    case Branch::Forward: ++forward; break;
    case Branch::Reflect: ++reflect; break;
    case Branch::Reject: ++reject; break;
  }
}

std::vector<SeededStream> particle_streams(const SeededStream& master, std::size_t n_particles) {
  std::vector<SeededStream> streams;
  streams.reserve(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) streams.push_back(master.split(i));
  return streams;
}

namespace {

// Collects the first exception thrown inside an OpenMP region.
class ErrorSlot {
 public:
  void capture() {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = std::current_exception();
  }
  void rethrow() {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace

std::vector<BranchCounts> simulate_ensemble(const Volume& volume, EnsembleInit init,
                                            const MomentumSchedule& momentum,
                                            const SnapshotSchedule& schedule,
                                            std::vector<SeededStream>& streams,
                                            const SnapshotObserver& observe, bool with_momenta) {
  const std::size_t dim = volume.dim();
  if (dim == 0 || init.positions.size() % dim != 0) {
    throw std::invalid_argument("simulate_ensemble: positions are not a multiple of dim");
  }
  const std::size_t n_particles = init.positions.size() / dim;
  if (n_particles == 0) throw std::invalid_argument("simulate_ensemble: no particles");
  if (streams.size() != n_particles) {
    throw std::invalid_argument("simulate_ensemble: need one stream per particle");
  }
  if (schedule.stride < 1) throw std::invalid_argument("snapshot stride must be >= 1");
  if (!(momentum.sigma_p > 0.0)) throw std::invalid_argument("sigma_p must be > 0");
  if (momentum.sigma_dp < 0.0) throw std::invalid_argument("sigma_dp must be >= 0");

  std::vector<double>& q = init.positions;
  std::vector<double>& p = init.momenta;
  for (std::size_t i = 0; i < n_particles; ++i) {
    if (!contains(volume, std::span<const double>(q).subspan(i * dim, dim))) {
      throw std::invalid_argument("simulate_ensemble: initial position outside the volume");
    }
  }
  const bool draw_initial = p.empty();
  if (draw_initial) {
    p.resize(q.size());
    for (std::size_t i = 0; i < n_particles; ++i) {
      for (std::size_t k = 0; k < dim; ++k) p[i * dim + k] = momentum.sigma_p * streams[i].normal();
    }
  } else if (p.size() != q.size()) {
    throw std::invalid_argument("simulate_ensemble: momenta size mismatch");
  }

  std::vector<std::uint8_t> branches(n_particles, kNoBranch);
  std::vector<BranchCounts> counts;
  counts.reserve(schedule.n_steps);

  auto emit = [&](std::int64_t t) {
    SnapshotView view;
    view.t = t;
    view.n_particles = n_particles;
    view.dim = dim;
    view.positions = q;
    if (with_momenta) view.momenta = p;
    view.branches = branches;
    observe(view);
  };

  emit(0);
  ErrorSlot errors;
  const auto n = static_cast<std::int64_t>(n_particles);
  for (std::size_t t = 0; t < schedule.n_steps; ++t) {
    const bool rerandomize = momentum.rerandomize_every > 0 && t > 0 &&
                             t % momentum.rerandomize_every == 0;
#pragma omp parallel
    {
      std::vector<double> scratch(2 * dim);
#pragma omp for schedule(static)
      for (std::int64_t ii = 0; ii < n; ++ii) {
        try {
          const auto i = static_cast<std::size_t>(ii);
          std::span<double> qi(q.data() + i * dim, dim);
          std::span<double> pi(p.data() + i * dim, dim);
          if (rerandomize) {
            for (auto& v : pi) v = momentum.sigma_p * streams[i].normal();
          }
          branches[i] = static_cast<std::uint8_t>(gmc_step_inplace(qi, pi, volume, scratch).branch);
          if (momentum.sigma_dp > 0.0) {
            for (auto& v : pi) v += momentum.sigma_dp * streams[i].normal();
          }
        } catch (...) {
          errors.capture();
        }
      }
    }
    errors.rethrow();

    BranchCounts step;
    for (auto b : branches) step.add(static_cast<Branch>(b));
    counts.push_back(step);

    if ((t + 1) % schedule.stride == 0) emit(static_cast<std::int64_t>(t + 1));
  }
  return counts;
}

void TraceRecorder::operator()(const SnapshotView& view) {
  trace_.dim = view.dim;
  trace_.n_particles = view.n_particles;
  Snapshot snap;
  snap.t = view.t;
  snap.positions.assign(view.positions.begin(), view.positions.end());
  snap.momenta.assign(view.momenta.begin(), view.momenta.end());
  snap.branches.assign(view.branches.begin(), view.branches.end());
  trace_.snapshots.push_back(std::move(snap));
}

std::span<const double> EnsembleTrace::position(std::size_t snapshot, std::size_t particle) const {
  return std::span<const double>(snapshots.at(snapshot).positions).subspan(particle * dim, dim);
}

namespace {

EnsembleTrace record(const Volume& volume, EnsembleInit init, const MomentumSchedule& momentum,
                     const SnapshotSchedule& schedule, std::vector<SeededStream>& streams,
                     bool with_momenta) {
  EnsembleTrace trace;
  trace.dim = volume.dim();
  trace.n_particles = init.positions.size() / volume.dim();
  TraceRecorder recorder(trace);
  trace.step_counts = simulate_ensemble(volume, std::move(init), momentum, schedule, streams,
                                        std::ref(recorder), with_momenta);
  return trace;
}

std::vector<double> replicate(const PointVec& q0, std::size_t n_particles) {
  std::vector<double> out;
  out.reserve(q0.size() * n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) out.insert(out.end(), q0.begin(), q0.end());
  return out;
}

}  // namespace

EnsembleTrace run_chain(const PointVec& q0, const GmcParams& params, const Volume& volume,
                        std::size_t n_trajectories, SeededStream& rng) {
  params.validate();
  std::vector<SeededStream> streams{rng};
  SnapshotSchedule schedule{n_trajectories * params.trajectory_length, params.schedule.stride};
  MomentumSchedule momentum{params.sigma_p, params.trajectory_length, 0.0};
  auto trace = record(volume, {q0, {}}, momentum, schedule, streams, params.store_momenta);
  rng = streams.front();
  return trace;
}

EnsembleTrace evolve_ensemble(const PointVec& q0, std::size_t n_particles, const GmcParams& params,
                              const Volume& volume, const SeededStream& rng) {
  params.validate();
  if (n_particles < 1) throw std::invalid_argument("evolve_ensemble: need at least one particle");
  auto streams = particle_streams(rng, n_particles);
  MomentumSchedule momentum{params.sigma_p, params.trajectory_length, 0.0};
  return record(volume, {replicate(q0, n_particles), {}}, momentum, params.schedule, streams,
                params.store_momenta);
}

EnsembleTrace noisy_momentum_chain(const PointVec& q0, double sigma_p, double sigma_dp,
                                   std::size_t n_steps, const Volume& volume, SeededStream& rng) {
  std::vector<SeededStream> streams{rng};
  MomentumSchedule momentum{sigma_p, 0, sigma_dp};
  auto trace = record(volume, {q0, {}}, momentum, {n_steps, 1}, streams, true);
  rng = streams.front();
  return trace;
}

EnsembleTrace wavepacket_1d(double x0, std::size_t n_emulated, double sigma_p,
                            std::size_t n_particles, std::size_t n_steps, const SeededStream& rng,
                            MomentumSign sign) {
  if (!(x0 > -1.0 && x0 < 1.0)) throw std::invalid_argument("wavepacket_1d: x0 must be in (-1, 1)");
  if (n_emulated < 1) throw std::invalid_argument("wavepacket_1d: n_emulated must be >= 1");
  if (!(sigma_p > 0.0)) throw std::invalid_argument("wavepacket_1d: sigma_p must be > 0");
  const Volume line = Volume::interval(-1.0, 1.0);
  auto streams = particle_streams(rng, n_particles);
  std::vector<double> momenta(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < n_emulated; ++k) {
      const double z = streams[i].normal();
      norm2 += z * z;
    }
    double speed = sigma_p * std::sqrt(norm2);
    if (sign == MomentumSign::Symmetric && streams[i].uniform() < 0.5) speed = -speed;
    momenta[i] = speed;
  }
  MomentumSchedule momentum{sigma_p, 0, 0.0};
  return record(line, {std::vector<double>(n_particles, x0), std::move(momenta)}, momentum,
                {n_steps, 1}, streams, true);
}

}  // namespace reflectmc
