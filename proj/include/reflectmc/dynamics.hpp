#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "reflectmc/geometry.hpp"
#include "reflectmc/rng.hpp"

namespace reflectmc {

// Time step and mass are fixed to 1: momentum is the per-step displacement.

enum class Branch : std::uint8_t { Forward = 0, Reflect = 1, Reject = 2 };

/// Which branch a step took, and how many membership probes it consumed.
/// Forward: 1 probe (inside). Reflect: 2 probes (outside, inside).
/// Reject: 2 probes (outside, outside).
struct BranchTag {
  Branch branch = Branch::Forward;
  std::uint8_t probes = 1;
  std::uint8_t inside = 1;

  static constexpr BranchTag forward() { return {Branch::Forward, 1, 1}; }
  static constexpr BranchTag reflect() { return {Branch::Reflect, 2, 1}; }
  static constexpr BranchTag reject() { return {Branch::Reject, 2, 0}; }
  friend bool operator==(const BranchTag&, const BranchTag&) = default;
};

const char* branch_name(Branch b);

struct ChainState {
  PointVec q;
  PointVec p;
};

struct StepOutcome {
  ChainState state;
  BranchTag tag;
};

/// One GMC step: try forward, then one reflection about the normal at the
/// overstepped point, then momentum reversal.
StepOutcome gmc_step(const ChainState& state, const Volume& volume);

/// Allocation-free variant used by the ensemble loops; `scratch` must hold
/// at least 2 * dim values. Updates q and p in place.
BranchTag gmc_step_inplace(std::span<double> q, std::span<double> p, const Volume& volume,
                           std::span<double> scratch);

PointVec draw_momentum(std::size_t n, double sigma_p, SeededStream& rng);

struct Trajectory {
  std::vector<ChainState> path;  // L + 1 states
  std::vector<BranchTag> branches;
};

Trajectory run_trajectory(const ChainState& start, const Volume& volume, std::size_t length);

/// Fraction of probed points along a trajectory that lie inside the volume.
/// Forward contributes 1/1, Reflect 1/2 and Reject 1/3: a rejected step
/// probes two outside points and then keeps its (inside) position.
double trajectory_acceptance_rate(std::span<const BranchTag> branches);

struct SnapshotSchedule {
  std::size_t n_steps = 0;
  std::size_t stride = 1;
};

struct GmcParams {
  double sigma_p = 0.0;
  std::size_t trajectory_length = 1;  // L
  SnapshotSchedule schedule;
  bool store_momenta = false;

  void validate() const;
};

struct BranchCounts {
  std::uint64_t forward = 0;
  std::uint64_t reflect = 0;
  std::uint64_t reject = 0;

  void add(Branch b);
  [[nodiscard]] std::uint64_t total() const { return forward + reflect + reject; }
};

/// Marker stored in the per-particle branch column for states that were not
/// produced by a step (t = 0).
inline constexpr std::uint8_t kNoBranch = 255;

/// Read-only view of the ensemble at one snapshot time. Positions (and
/// momenta, when recorded) are row-major, one row per particle.
struct SnapshotView {
  std::int64_t t = 0;
  std::size_t n_particles = 0;
  std::size_t dim = 0;
  std::span<const double> positions;
  std::span<const double> momenta;
  std::span<const std::uint8_t> branches;
};

using SnapshotObserver = std::function<void(const SnapshotView&)>;

/// How momenta evolve between GMC steps.
struct MomentumSchedule {
  double sigma_p = 0.0;
  std::size_t rerandomize_every = 0;  // 0: only the initial draw
  double sigma_dp = 0.0;              // additive N(0, sigma_dp^2) kick after every step
};

struct EnsembleInit {
  std::vector<double> positions;  // n_particles * dim
  std::vector<double> momenta;    // empty: drawn from N(0, sigma_p^2) at t = 0
};

/// Lock-step evolution of independent chains. Particle i consumes randomness
/// only from streams[i]; snapshots are taken at every multiple of the stride.
/// Results do not depend on the number of OpenMP threads. Returns the branch
/// counts of every step, aggregated over particles.
std::vector<BranchCounts> simulate_ensemble(const Volume& volume, EnsembleInit init, const MomentumSchedule& momentum,
                       const SnapshotSchedule& schedule, std::vector<SeededStream>& streams,
                       const SnapshotObserver& observe, bool with_momenta = false);

std::vector<SeededStream> particle_streams(const SeededStream& master, std::size_t n_particles);

struct Snapshot {
  std::int64_t t = 0;
  std::vector<double> positions;
  std::vector<double> momenta;
  std::vector<std::uint8_t> branches;
};

struct EnsembleTrace {
  std::size_t dim = 0;
  std::size_t n_particles = 0;
  std::vector<Snapshot> snapshots;
  std::vector<BranchCounts> step_counts;  // aggregated over particles, one entry per step

  [[nodiscard]] std::span<const double> position(std::size_t snapshot, std::size_t particle) const;
};

EnsembleTrace run_chain(const PointVec& q0, const GmcParams& params, const Volume& volume,
                        std::size_t n_trajectories, SeededStream& rng);

EnsembleTrace evolve_ensemble(const PointVec& q0, std::size_t n_particles, const GmcParams& params,
                              const Volume& volume, const SeededStream& rng);

EnsembleTrace noisy_momentum_chain(const PointVec& q0, double sigma_p, double sigma_dp,
                                   std::size_t n_steps, const Volume& volume, SeededStream& rng);

enum class MomentumSign { Symmetric, Positive };

/// 1-D wave packet on [-1, 1]: speeds follow the norm of an
/// `n_emulated`-dimensional Gaussian with per-component std sigma_p.
EnsembleTrace wavepacket_1d(double x0, std::size_t n_emulated, double sigma_p,
                            std::size_t n_particles, std::size_t n_steps, const SeededStream& rng,
                            MomentumSign sign = MomentumSign::Symmetric);

/// Collects snapshots from simulate_ensemble into an EnsembleTrace.
class TraceRecorder {
 public:
  explicit TraceRecorder(EnsembleTrace& trace) : trace_(trace) {}
  void operator()(const SnapshotView& view);

 private:
  EnsembleTrace& trace_;
};

}  // namespace reflectmc
