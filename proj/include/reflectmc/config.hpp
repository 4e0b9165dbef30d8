#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reflectmc/dynamics.hpp"
#include "reflectmc/geometry.hpp"
#include "reflectmc/sinkhorn.hpp"

namespace reflectmc {

enum class ExperimentKind {
  SdSeries,
  PsdSweep,
  PhaseMap,
  ChordLength,
  DiskmapDensity,
  Wavepacket,
  NoisyChain,
  AcceptanceRate,
};

const char* experiment_kind_name(ExperimentKind kind);

/// Raised for malformed configs; `path()` is a JSON pointer to the field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct VolumeSpec {
  VolumeKind kind = VolumeKind::Ball;
  std::size_t dim = 0;  // 0: taken from the experiment's dimension grid
  double radius = 1.0;
  double half_width = 1.0;
  double lo = -1.0;
  double hi = 1.0;

  [[nodiscard]] Volume build(std::size_t dim_override = 0) const;
  [[nodiscard]] double extent() const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SdSeries;
  VolumeSpec volume;
  std::vector<double> sigma_p;
  /// sigma_p values are given at n = 100 and rescaled by sqrt(100 / n).
  bool rescale_sigma = false;
  std::size_t trajectory_length = 0;  // L; 0: no re-randomization
  std::size_t particles = 1000;
  std::size_t reference_samples = 0;  // 0: same as particles
  std::size_t steps = 0;
  std::size_t sd_stride = 1;
  SinkhornConfig sinkhorn;
  std::uint64_t seed = 0;
  std::size_t seeds_per_cell = 8;
  std::vector<std::size_t> dims;
  double sigma_dp = -1.0;  // negative: sigma_p / sqrt(L)
  double x0 = -0.9;
  std::size_t emulated_dim = 100;
  MomentumSign momentum_sign = MomentumSign::Positive;
  std::size_t chains = 200;
  double threshold = 1e-12;
  std::size_t samples = 10000;
  std::size_t bins = 200;
  std::size_t trace_stride = 1;
  std::string diskmap_mode = "direct";
  std::string output;

  /// sigma_p for dimension n after the optional rescale rule.
  [[nodiscard]] double sigma_for(double sigma, std::size_t n) const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved parameters, defaults included.
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace reflectmc
