#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "reflectmc/phase_map.hpp"
#include "reflectmc/spectral.hpp"

using namespace reflectmc;

TEST_CASE("periodogram matches direct summation") {
  SeededStream rng(3);
  for (std::size_t t : {2u, 7u, 16u, 33u, 128u}) {
    std::vector<double> x(t);
    for (auto& v : x) v = rng.normal() + 0.5;
    auto s = psd(x, 2.0);
    auto ref = oracle::naive_psd(x);
    REQUIRE(s.size() == ref.size());
    double mean_sq = 0.0;
    for (double v : x) mean_sq += v * v / double(t);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      CHECK(s.power[k] == doctest::Approx(ref[k]).epsilon(1e-10).scale(1e-12));
      CHECK(s.frequencies[k] == doctest::Approx(double(k) / (double(t) * 2.0)));
    }
    CHECK(s.total_power() == doctest::Approx(mean_sq).epsilon(1e-12));
  }
  CHECK_THROWS_AS(psd(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("a cosine puts its power in one bin") {
  const std::size_t t = 256;
  std::vector<double> x(t);
  for (std::size_t j = 0; j < t; ++j) x[j] = 3.0 + std::cos(2 * std::numbers::pi * 40.0 * double(j) / double(t));
  auto s = psd(x);
  auto peak = dominant_frequency(s, true);
  CHECK(peak.bin == 40);
  CHECK(peak.frequency == doctest::Approx(40.0 / 256.0));
  CHECK(dominant_frequency(s, false).bin == 0);
  CHECK(peak.power == doctest::Approx(0.5));
}

TEST_CASE("ties go to the lowest frequency") {
  Spectrum s{{0, 0.1, 0.2, 0.3}, {1.0, 2.0, 2.0, 1.0}, false};
  CHECK(dominant_frequency(s, true).bin == 1);
}

TEST_CASE("entropy of simple spectra") {
  Spectrum line{{0, 1, 2, 3}, {0, 0, 5, 0}, false};
  CHECK(spectral_entropy(line) == 0.0);
  Spectrum flat{{0, 1, 2, 3}, {2, 2, 2, 2}, false};
  CHECK(spectral_entropy(flat) == doctest::Approx(std::log(4.0)));
  Spectrum empty{{0, 1}, {0, 0}, false};
  CHECK_THROWS_AS(spectral_entropy(empty), std::invalid_argument);
  auto n = normalize(flat);
  CHECK(n.normalized);
  CHECK(n.total_power() == doctest::Approx(1.0));
}

TEST_CASE("averaging spectra") {
  Spectrum a{{0, 1}, {1, 3}, false};
  Spectrum b{{0, 1}, {3, 5}, false};
  std::vector<Spectrum> v{a, b};
  auto m = average_spectra(v);
  CHECK(m.power == std::vector<double>{2, 4});
  Spectrum c{{0, 2}, {1, 1}, false};
  std::vector<Spectrum> bad{a, c};
  CHECK_THROWS_AS(average_spectra(bad), std::invalid_argument);
}

TEST_CASE("characteristic frequencies") {
  // sigma sqrt(n) = R gives exactly half the sampling rate
  CHECK(f_super(0.1, 100, 1.0) == 0.5);
  CHECK(f_super(0.2, 25, 1.0) == 0.5);
  CHECK(f_diag(0.01, 100, 1.0) == doctest::Approx(0.05));
  CHECK(f_diag(0.01, 100, 2.0) == doctest::Approx(0.025));
  CHECK(f_broad(0.1) == doctest::Approx(0.1 / std::sqrt(2.0)));
  // small-argument limit of the supersonic frequency
  CHECK(f_super(1e-4, 100, 1.0) / f_diag(1e-4, 100, 1.0) == doctest::Approx(4.0 / std::numbers::pi).epsilon(1e-6));
  CHECK(f_super(1e3, 100, 1.0) == doctest::Approx(1.0).epsilon(1e-3));
  // the two coincide at sigma sqrt(n) / R = 1
  CHECK(f_super(0.1, 100, 1.0) == doctest::Approx(f_diag(0.1, 100, 1.0)));
  for (int k = 1; k < 100; ++k) {
    const double s = 0.1 * k / 100.0;
    CHECK(f_super(s, 100, 1.0) > f_diag(s, 100, 1.0));
  }
}

TEST_CASE("power-law fit recovers an exact law") {
  std::vector<double> x{10, 20, 40, 80, 160};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.75));
  auto fit = power_law_fit(x, y);
  CHECK(fit.exponent == doctest::Approx(-0.75).epsilon(1e-12));
  CHECK(fit.prefactor == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.standard_error < 1e-12);
  CHECK(fit.exponent == doctest::Approx(oracle::loglog_slope(x, y)));
  CHECK_THROWS_AS(power_law_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(power_law_fit(std::vector<double>{1, 2, 3}, std::vector<double>{1, -2, 3}),
                  std::invalid_argument);
}

TEST_CASE("critical sigma brackets the last crossing") {
  std::vector<double> s{0.1, 0.2, 0.4, 0.8};
  CHECK(critical_sigma(s, std::vector<double>{1, 1, 0, 0}, 1e-3) == doctest::Approx(std::sqrt(0.08)));
  // an isolated dip below the threshold does not count
  CHECK(critical_sigma(s, std::vector<double>{1, 0, 1, 0}, 1e-3) == doctest::Approx(std::sqrt(0.32)));
  CHECK(std::isnan(critical_sigma(s, std::vector<double>{1, 1, 1, 1}, 1e-3)));
  CHECK(std::isnan(critical_sigma(s, std::vector<double>{0, 0, 0, 0}, 1e-3)));
  CHECK_THROWS_AS(critical_sigma(s, std::vector<double>{1, 1}, 1e-3), std::invalid_argument);
}

TEST_CASE("SD series of a short run") {
  SDRunSpec spec;
  spec.sigma_p = 0.05;
  spec.n_particles = 40;
  spec.n_steps = 12;
  spec.sd_stride = 3;
  spec.sinkhorn.epsilon = 1.0;
  auto run = run_sd_series(Volume::ball(5), spec, SeededStream(5));
  CHECK(run.series.size() == 5);
  CHECK(run.series.times == std::vector<std::int64_t>{0, 3, 6, 9, 12});
  CHECK(run.series.spacing() == 3.0);
  CHECK(run.series.unconverged() == 0);
  CHECK(run.series.meta.n_particles == 40);
  CHECK(run.step_counts.size() == 12);
  // a point mass is far from uniform
  CHECK(run.series.values[0] > run.series.values[4]);
  auto again = run_sd_series(Volume::ball(5), spec, SeededStream(5));
  CHECK(again.series.values == run.series.values);
}
