#include "reflectmc/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace reflectmc {

namespace {

// Plan creation in FFTW is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void append(SDTimeSeries& s, std::int64_t t, const DivergenceResult& r) {
  s.times.push_back(t);
  s.values.push_back(r.value);
  s.converged.push_back(r.converged() ? 1 : 0);
  s.marginal_violation.push_back(std::max(
      {r.cross.marginal_violation, r.self_a.marginal_violation, r.self_b.marginal_violation}));
  s.iterations.push_back(r.iterations());
}

}  // namespace

std::size_t SDTimeSeries::unconverged() const {
  std::size_t n = 0;
  for (auto c : converged) n += c ? 0 : 1;
  return n;
}

double SDTimeSeries::spacing() const {
  if (times.size() < 2) return 1.0;
  return static_cast<double>(times[1] - times[0]);
}

SDTimeSeries sd_time_series(const EnsembleTrace& trace, const EmpiricalDistribution& reference,
                            const SinkhornConfig& config) {
  if (reference.dim != trace.dim) {
    throw std::invalid_argument("sd_time_series: trace and reference dimensions differ");
  }
  const SinkhornReference ref(reference, config);
  SDTimeSeries out;
  out.meta.dim = trace.dim;
  out.meta.epsilon = config.epsilon;
  out.meta.n_particles = trace.n_particles;
  for (const auto& snap : trace.snapshots) append(out, snap.t, ref.divergence(snap.positions));
  return out;
}

void SDMonitor::operator()(const SnapshotView& view) {
  append(series_, view.t, reference_.divergence(view.positions));
}

double Spectrum::total_power() const {
  double s = 0.0;
  for (double p : power) s += p;
  return s;
}

Spectrum psd(std::span<const double> series, double spacing) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("psd: series needs at least two samples");
  if (!(spacing > 0.0)) throw std::invalid_argument("psd: spacing must be positive");
  const std::size_t bins = n / 2 + 1;

  std::vector<double> in(series.begin(), series.end());
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);

  Spectrum s;
  s.frequencies.resize(bins);
  s.power.resize(bins);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    s.frequencies[k] = static_cast<double>(k) / (nn * spacing);
    s.power[k] = (edge ? 1.0 : 2.0) * mag2 / (nn * nn);
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return s;
}

Spectrum psd(const SDTimeSeries& series) { return psd(series.values, series.spacing()); }

Spectrum normalize(Spectrum spectrum) {
  const double total = spectrum.total_power();
  if (!(total > 0.0)) throw std::invalid_argument("normalize: spectrum has no power");
  for (double& p : spectrum.power) p /= total;
  spectrum.normalized = true;
  return spectrum;
}

Spectrum average_spectra(std::span<const Spectrum> spectra) {
  if (spectra.empty()) throw std::invalid_argument("average_spectra: no spectra");
  Spectrum avg = spectra.front();
  avg.normalized = false;
  for (std::size_t i = 1; i < spectra.size(); ++i) {
    if (spectra[i].frequencies != avg.frequencies) {
      throw std::invalid_argument("average_spectra: frequency axes differ");
    }
    for (std::size_t k = 0; k < avg.size(); ++k) avg.power[k] += spectra[i].power[k];
  }
  for (double& p : avg.power) p /= static_cast<double>(spectra.size());
  return avg;
}

double spectral_entropy(const Spectrum& spectrum) {
  double total = 0.0;
  for (double p : spectrum.power) {
    if (p < 0.0 || !std::isfinite(p)) throw std::invalid_argument("spectral_entropy: bad power");
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("spectral_entropy: spectrum has no power");
  double h = 0.0;
  for (double p : spectrum.power) {
    const double w = p / total;
    if (w > 0.0) h -= w * std::log(w);
  }
  return std::max(h, 0.0);
}

double f_diag(double sigma_p, std::size_t n, double radius) {
  return sigma_p * std::sqrt(static_cast<double>(n)) / (2.0 * radius);
}

double f_super(double sigma_p, std::size_t n, double radius) {
  const double x = sigma_p * std::sqrt(static_cast<double>(n)) / radius;
  return (std::atan(x) + std::acos(1.0 / std::sqrt(1.0 + x * x))) / std::numbers::pi;
}

double f_broad(double sigma_p) { return sigma_p / std::numbers::sqrt2; }

Peak dominant_frequency(const Spectrum& spectrum, bool exclude_dc) {
  const std::size_t start = exclude_dc ? 1 : 0;
  if (spectrum.size() <= start) throw std::invalid_argument("dominant_frequency: empty spectrum");
  Peak best{spectrum.frequencies[start], spectrum.power[start], start};
  for (std::size_t k = start + 1; k < spectrum.size(); ++k) {
    if (spectrum.power[k] > best.power) best = {spectrum.frequencies[k], spectrum.power[k], k};
  }
  return best;
}

PowerLawFit power_law_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("power_law_fit: size mismatch");
  if (xs.size() < 3) throw std::invalid_argument("power_law_fit: needs at least 3 points");
  const std::size_t m = xs.size();
  std::vector<double> lx(m), ly(m);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw std::invalid_argument("power_law_fit: inputs must be positive and finite");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("power_law_fit: all x values are equal");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.prefactor = std::exp(intercept);
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ly[i] - intercept - fit.exponent * lx[i];
    ssr += r * r;
  }
  fit.standard_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
  return fit;
}

}  // namespace reflectmc
