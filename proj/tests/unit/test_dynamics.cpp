#include <doctest.h>

#include <omp.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "reflectmc/dynamics.hpp"

using namespace reflectmc;

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("forward, reflect and reject by hand") {
  auto line = Volume::interval();
  auto out = gmc_step({{0.1}, {0.5}}, line);
  CHECK(out.tag == BranchTag::forward());
  CHECK(out.state.q[0] == doctest::Approx(0.6));

  // 0.8 + 0.5 oversteps; the reflected probe lands back on 0.8
  out = gmc_step({{0.8}, {0.5}}, line);
  CHECK(out.tag == BranchTag::reflect());
  CHECK(out.state.q[0] == doctest::Approx(0.8));
  CHECK(out.state.p[0] == -0.5);

  // the normal at (1.4, 3.0) is (0, -1); the reflected probe (1.9, 0) is outside
  auto square = Volume::cube(2);
  out = gmc_step({{0.9, 0.0}, {0.5, 3.0}}, square);
  CHECK(out.tag == BranchTag::reject());
  CHECK(out.state.q == PointVec{0.9, 0.0});
  CHECK(out.state.p == PointVec{-0.5, -3.0});

  CHECK_THROWS_AS(gmc_step({{1.5}, {0.1}}, line), std::invalid_argument);
}

TEST_CASE("step agrees with the reference implementation") {
  SeededStream rng(17);
  for (int k = 0; k < 3000; ++k) {
    const std::size_t n = 1 + k % 9;
    const bool use_ball = k % 2 == 0;
    auto vol = use_ball ? Volume::ball(n) : Volume::cube(n);
    oracle::Region region{use_ball ? oracle::Shape::Ball : oracle::Shape::Cube};
    ChainState s{sample_uniform(vol, rng), draw_momentum(n, rng.uniform(0.01, 2.0), rng)};
    auto q = s.q, p = s.p;
    for (int t = 0; t < 20; ++t) {
      auto out = gmc_step(s, vol);
      const int b = oracle::gmc_step(region, q, p);
      REQUIRE(static_cast<int>(out.tag.branch) == b);
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(out.state.q[i] == doctest::Approx(q[i]).epsilon(1e-12));
        REQUIRE(out.state.p[i] == doctest::Approx(p[i]).epsilon(1e-12));
      }
      s = out.state;
      q = s.q;
      p = s.p;
    }
  }
}

TEST_CASE("momentum norm and containment are preserved") {
  SeededStream rng(23);
  for (auto vol : {Volume::ball(30), Volume::cube(30)}) {
    ChainState s{sample_uniform(vol, rng), draw_momentum(30, 0.2, rng)};
    const double p0 = norm(s.p);
    for (int t = 0; t < 500; ++t) {
      s = gmc_step(s, vol).state;
      REQUIRE(std::abs(norm(s.p) - p0) < 1e-12);
      REQUIRE(contains(vol, s.q));
    }
  }
}

TEST_CASE("the ball is rejection free and reflections keep the radius") {
  SeededStream rng(29);
  auto ball = Volume::ball(20);
  for (int c = 0; c < 50; ++c) {
    ChainState s{sample_uniform(ball, rng), draw_momentum(20, rng.uniform(0.01, 1.0), rng)};
    auto traj = run_trajectory(s, ball, 300);
    for (std::size_t t = 0; t < traj.branches.size(); ++t) {
      REQUIRE(traj.branches[t].branch != Branch::Reject);
      if (traj.branches[t].branch == Branch::Reflect) {
        REQUIRE(std::abs(norm(traj.path[t + 1].q) - norm(traj.path[t].q)) < 1e-12);
      }
    }
  }
}

TEST_CASE("a ball trajectory stays in the plane of q0 and p0") {
  SeededStream rng(31);
  const std::size_t n = 40;
  auto ball = Volume::ball(n);
  ChainState s{sample_uniform(ball, rng), draw_momentum(n, 0.05, rng)};
  auto traj = run_trajectory(s, ball, 400);
  Eigen::MatrixXd m(n, traj.path.size() + 1);
  for (std::size_t t = 0; t < traj.path.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) m(i, t) = traj.path[t].q[i];
  }
  for (std::size_t i = 0; i < n; ++i) m(i, traj.path.size()) = s.p[i];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  auto sv = svd.singularValues();
  CHECK(sv(1) > 1e-3);
  CHECK(sv(2) < 1e-10);
}

TEST_CASE("1-D positions recur on the lattice x0 + k p") {
  auto line = Volume::interval();
  const double x0 = -0.3, p = 0.37;
  auto traj = run_trajectory({{x0}, {p}}, line, 200);
  for (const auto& st : traj.path) {
    const double k = (st.q[0] - x0) / p;
    CHECK(std::abs(k - std::round(k)) < 1e-9);
  }
  // retracing: the whole cycle repeats
  std::vector<double> xs;
  for (const auto& st : traj.path) xs.push_back(st.q[0]);
  bool recurred = false;
  for (std::size_t t = 1; t < xs.size(); ++t) {
    if (std::abs(xs[t] - xs[0]) < 1e-12 && traj.path[t].p[0] == p) recurred = true;
  }
  CHECK(recurred);
}

TEST_CASE("1-D dynamics is scale invariant") {
  const double lambda = 2.0;
  SeededStream rng(37);
  for (int k = 0; k < 100; ++k) {
    const double x0 = rng.uniform(-0.5, 0.5);
    const double p = rng.normal() * 0.3;
    auto a = run_trajectory({{x0}, {p}}, Volume::interval(-1, 1), 100);
    auto b = run_trajectory({{lambda * x0}, {lambda * p}}, Volume::interval(-lambda, lambda), 100);
    for (std::size_t t = 0; t < a.path.size(); ++t) {
      REQUIRE(b.path[t].q[0] == lambda * a.path[t].q[0]);
      REQUIRE(a.branches.size() == b.branches.size());
    }
  }
}

TEST_CASE("acceptance rate accounting") {
  std::vector<BranchTag> fwd(5, BranchTag::forward());
  CHECK(trajectory_acceptance_rate(fwd) == 1.0);
  std::vector<BranchTag> rej(4, BranchTag::reject());
  CHECK(trajectory_acceptance_rate(rej) == doctest::Approx(1.0 / 3.0));
  std::vector<BranchTag> refl(4, BranchTag::reflect());
  CHECK(trajectory_acceptance_rate(refl) == doctest::Approx(0.5));
  std::vector<BranchTag> mix{BranchTag::forward(), BranchTag::reflect(), BranchTag::reject()};
  CHECK(trajectory_acceptance_rate(mix) == doctest::Approx(3.0 / 6.0));
  CHECK_THROWS_AS(trajectory_acceptance_rate(std::vector<BranchTag>{}), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  GmcParams p;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.sigma_p = 0.1;
  p.trajectory_length = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.trajectory_length = 4;
  CHECK_NOTHROW(p.validate());
  SeededStream rng(1);
  CHECK_THROWS_AS(draw_momentum(3, 0.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(wavepacket_1d(1.0, 100, 0.1, 4, 4, rng), std::invalid_argument);
}

TEST_CASE("ensembles are bit-identical for any thread count") {
  auto cube = Volume::cube(12);
  SeededStream rng(41);
  GmcParams params{0.3, 7, {60, 3}, true};
  PointVec q0(12, 0.1);
  omp_set_num_threads(1);
  auto a = evolve_ensemble(q0, 37, params, cube, rng);
  omp_set_num_threads(4);
  auto b = evolve_ensemble(q0, 37, params, cube, rng);
  omp_set_num_threads(omp_get_num_procs());
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  CHECK(a.snapshots.size() == 21);
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    CHECK(a.snapshots[s].t == b.snapshots[s].t);
    CHECK(a.snapshots[s].positions == b.snapshots[s].positions);
    CHECK(a.snapshots[s].momenta == b.snapshots[s].momenta);
    CHECK(a.snapshots[s].branches == b.snapshots[s].branches);
  }
  CHECK(a.step_counts.size() == 60);
  for (const auto& c : a.step_counts) CHECK(c.total() == 37);
}

TEST_CASE("re-randomization happens every L steps") {
  auto ball = Volume::ball(5);
  SeededStream rng(43);
  GmcParams params{0.01, 3, {9, 1}, true};
  auto tr = run_chain(PointVec(5, 0.0), params, ball, 3, rng);
  REQUIRE(tr.snapshots.size() == 10);
  auto p_at = [&](std::size_t t) { return tr.snapshots[t].momenta; };
  // tiny steps from the centre never reach the wall, so p only changes on re-draws
  CHECK(p_at(1) == p_at(2));
  CHECK(p_at(2) == p_at(3));
  CHECK(p_at(3) != p_at(4));
  CHECK(p_at(4) == p_at(6));
  CHECK(p_at(6) != p_at(7));
}

TEST_CASE("noisy chain keeps drifting momenta") {
  auto ball = Volume::ball(4);
  SeededStream rng(47);
  auto tr = noisy_momentum_chain(PointVec(4, 0.0), 0.05, 0.01, 50, ball, rng);
  CHECK(tr.snapshots.size() == 51);
  CHECK(tr.snapshots[10].momenta != tr.snapshots[11].momenta);
}

TEST_CASE("wave packet speeds follow the emulated radial law") {
  SeededStream rng(53);
  auto tr = wavepacket_1d(-0.9, 100, 0.032, 4000, 1, rng, MomentumSign::Positive);
  const auto& p = tr.snapshots[0].momenta;
  double mean = std::accumulate(p.begin(), p.end(), 0.0) / double(p.size());
  CHECK(*std::min_element(p.begin(), p.end()) > 0.0);
  // E|z| for z ~ N(0, I_100) is about sqrt(99.5)
  CHECK(mean == doctest::Approx(0.032 * std::sqrt(99.5)).epsilon(0.01));

  auto sym = wavepacket_1d(-0.9, 100, 0.032, 4000, 1, rng, MomentumSign::Symmetric);
  const auto neg = std::count_if(sym.snapshots[0].momenta.begin(), sym.snapshots[0].momenta.end(),
                                 [](double v) { return v < 0; });
  CHECK(neg > 1800);
  CHECK(neg < 2200);
}

TEST_CASE("co-reflecting particles keep their order") {
  SeededStream rng(59);
  auto tr = wavepacket_1d(-0.9, 100, 0.032, 2000, 80, rng, MomentumSign::Symmetric);
  std::size_t pairs_checked = 0;
  for (std::size_t s = 1; s < tr.snapshots.size(); ++s) {
    const auto& before = tr.snapshots[s - 1].positions;
    const auto& after = tr.snapshots[s].positions;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < tr.n_particles; ++i) {
      if (tr.snapshots[s].branches[i] == static_cast<std::uint8_t>(Branch::Reflect)) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return before[a] < before[b]; });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      // (x + p) - p is x only up to rounding, so pairs closer than that may swap
      REQUIRE(after[idx[k - 1]] <= after[idx[k]] + 1e-12);
      if (before[idx[k]] - before[idx[k - 1]] > 1e-12) {
        REQUIRE(after[idx[k - 1]] < after[idx[k]]);
        ++pairs_checked;
      }
    }
  }
  CHECK(pairs_checked > 1000);
}
