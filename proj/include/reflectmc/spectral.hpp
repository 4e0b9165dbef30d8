#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reflectmc/dynamics.hpp"
#include "reflectmc/sinkhorn.hpp"

namespace reflectmc {

struct SDMetadata {
  double sigma_p = 0.0;
  std::size_t dim = 0;
  std::string volume;
  double epsilon = 0.0;
  std::size_t n_particles = 0;
  std::uint64_t seed = 0;
};

/// SD against a fixed reference sample, one value per snapshot.
struct SDTimeSeries {
  std::vector<std::int64_t> times;
  std::vector<double> values;
  std::vector<std::uint8_t> converged;
  std::vector<double> marginal_violation;
  std::vector<std::size_t> iterations;
  SDMetadata meta;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] std::size_t unconverged() const;
  /// Spacing between consecutive times; 1 for series shorter than two points.
  [[nodiscard]] double spacing() const;
};

SDTimeSeries sd_time_series(const EnsembleTrace& trace, const EmpiricalDistribution& reference,
                            const SinkhornConfig& config);

/// Streaming variant: feeds every snapshot of a running ensemble into the
/// divergence without keeping positions around.
class SDMonitor {
 public:
  explicit SDMonitor(const SinkhornReference& reference) : reference_(reference) {}

  void operator()(const SnapshotView& view);

  [[nodiscard]] const SDTimeSeries& series() const { return series_; }
  SDTimeSeries& series() { return series_; }

 private:
  const SinkhornReference& reference_;
  SDTimeSeries series_;
};

struct Spectrum {
  std::vector<double> frequencies;
  std::vector<double> power;
  bool normalized = false;

  [[nodiscard]] std::size_t size() const { return power.size(); }
  [[nodiscard]] double total_power() const;
};

/// One-sided periodogram of the raw series. Frequencies are k / (T * spacing)
/// for k = 0..floor(T/2); power is scaled so that it sums to mean(x^2).
Spectrum psd(std::span<const double> series, double spacing = 1.0);
Spectrum psd(const SDTimeSeries& series);

/// Power rescaled to sum to one.
Spectrum normalize(Spectrum spectrum);

/// Element-wise mean of spectra sharing one frequency axis.
Spectrum average_spectra(std::span<const Spectrum> spectra);

/// Shannon entropy (nats) of the normalized power, DC bin included.
double spectral_entropy(const Spectrum& spectrum);

double f_diag(double sigma_p, std::size_t n, double radius);
double f_super(double sigma_p, std::size_t n, double radius);
double f_broad(double sigma_p);

struct Peak {
  double frequency = 0.0;
  double power = 0.0;
  std::size_t bin = 0;
};

/// Largest bin; ties go to the lowest frequency.
Peak dominant_frequency(const Spectrum& spectrum, bool exclude_dc);

struct PowerLawFit {
  double exponent = 0.0;
  double standard_error = 0.0;
  double prefactor = 0.0;
};

/// y = prefactor * x^exponent by least squares on (log x, log y).
PowerLawFit power_law_fit(std::span<const double> xs, std::span<const double> ys);

}  // namespace reflectmc
