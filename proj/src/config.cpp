#include "reflectmc/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace reflectmc {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<ExperimentKind, const char*>, 8> kKinds{{
    {ExperimentKind::SdSeries, "sd-series"},
    {ExperimentKind::PsdSweep, "psd-sweep"},
    {ExperimentKind::PhaseMap, "phase-map"},
    {ExperimentKind::ChordLength, "chordlen"},
    {ExperimentKind::DiskmapDensity, "diskmap-density"},
    {ExperimentKind::Wavepacket, "wavepacket"},
    {ExperimentKind::NoisyChain, "noisy-chain"},
    {ExperimentKind::AcceptanceRate, "acceptance-rate"},
}};

const std::set<std::string> kTopLevel{
    "experiment", "volume",       "sigma_p",       "rescale_sigma", "L",
    "particles",  "reference_samples", "steps",    "sd_stride",     "epsilon",
    "sinkhorn",   "seed",         "seeds_per_cell", "dims",         "sigma_dp",
    "x0",         "emulated_dim", "momentum_sign", "chains",        "threshold",
    "samples",    "bins",         "trace_stride",  "diskmap_mode",  "output"};

std::string child(const std::string& parent, const std::string& key) { return parent + "/" + key; }

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
  return v;
}

std::size_t count(const json& j, const std::string& path, std::size_t min = 1) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ConfigError(path, "expected an integer");
  }
  const auto v = j.get<std::int64_t>();
  if (v < static_cast<std::int64_t>(min)) {
    throw ConfigError(path, "must be >= " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

VolumeSpec parse_volume(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "kind" && key != "dim" && key != "radius" && key != "half_width" &&
        key != "bounds") {
      throw ConfigError(child(path, key), "unknown field");
    }
  }
  VolumeSpec v;
  if (!j.contains("kind")) throw ConfigError(child(path, "kind"), "required field is missing");
  const auto kind = text(j["kind"], child(path, "kind"));
  if (kind == "ball") {
    v.kind = VolumeKind::Ball;
  } else if (kind == "cube") {
    v.kind = VolumeKind::Cube;
  } else if (kind == "interval") {
    v.kind = VolumeKind::Interval;
    v.dim = 1;
  } else {
    throw ConfigError(child(path, "kind"), "unknown volume kind '" + kind + "'");
  }
  if (j.contains("dim")) v.dim = count(j["dim"], child(path, "dim"));
  if (v.kind == VolumeKind::Interval && v.dim != 1) {
    throw ConfigError(child(path, "dim"), "an interval is one-dimensional");
  }
  if (j.contains("radius")) {
    if (v.kind != VolumeKind::Ball) throw ConfigError(child(path, "radius"), "only for a ball");
    v.radius = positive(j["radius"], child(path, "radius"));
  }
  if (j.contains("half_width")) {
    if (v.kind != VolumeKind::Cube) {
      throw ConfigError(child(path, "half_width"), "only for a cube");
    }
    v.half_width = positive(j["half_width"], child(path, "half_width"));
  }
  if (j.contains("bounds")) {
    const auto p = child(path, "bounds");
    if (v.kind != VolumeKind::Interval) throw ConfigError(p, "only for an interval");
    if (!j["bounds"].is_array() || j["bounds"].size() != 2) {
      throw ConfigError(p, "expected [lo, hi]");
    }
    v.lo = number(j["bounds"][0], p + "/0");
    v.hi = number(j["bounds"][1], p + "/1");
    if (!(v.lo < v.hi)) throw ConfigError(p, "lo must be < hi");
  }
  return v;
}

template <class T, class F>
std::vector<T> list(const json& j, const std::string& path, F&& item) {
  std::vector<T> out;
  if (j.is_array()) {
    if (j.empty()) throw ConfigError(path, "list must not be empty");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], path + "/" + std::to_string(i)));
  } else {
    out.push_back(item(j, path));
  }
  return out;
}

void require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("/") + key, "required field is missing");
}

}  // namespace

const char* experiment_kind_name(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "unknown";
}

Volume VolumeSpec::build(std::size_t dim_override) const {
  const std::size_t n = dim_override != 0 ? dim_override : dim;
  switch (kind) {
    case VolumeKind::Ball:
      return Volume::ball(n, radius);
    case VolumeKind::Cube:
      return Volume::cube(n, half_width);
    case VolumeKind::Interval:
      return Volume::interval(lo, hi);
  }
  throw std::logic_error("unreachable volume kind");
}

double VolumeSpec::extent() const {
  switch (kind) {
    case VolumeKind::Ball:
      return radius;
    case VolumeKind::Cube:
      return half_width;
    case VolumeKind::Interval:
      return 0.5 * (hi - lo);
  }
  return 0.0;
}

double ExperimentConfig::sigma_for(double sigma, std::size_t n) const {
  return rescale_sigma ? sigma * std::sqrt(100.0 / static_cast<double>(n)) : sigma;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kTopLevel.contains(key)) throw ConfigError(child("", key), "unknown field");
  }
  ExperimentConfig c;
  require(j, "experiment");
  const auto kind = text(j["experiment"], "/experiment");
  bool found = false;
  for (const auto& [k, name] : kKinds) {
    if (kind == name) {
      c.kind = k;
      found = true;
    }
  }
  if (!found) throw ConfigError("/experiment", "unknown experiment kind '" + kind + "'");

  require(j, "seed");
  if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) {
    throw ConfigError("/seed", "expected a non-negative integer");
  }
  if (j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() < 0) {
    throw ConfigError("/seed", "expected a non-negative integer");
  }
  c.seed = j["seed"].get<std::uint64_t>();

  if (c.kind == ExperimentKind::Wavepacket) {
    c.volume.kind = VolumeKind::Interval;
    c.volume.dim = 1;
  }
  if (j.contains("volume")) {
    c.volume = parse_volume(j["volume"], "/volume");
  } else if (c.kind != ExperimentKind::Wavepacket) {
    throw ConfigError("/volume", "required field is missing");
  }

  if (j.contains("sigma_p")) {
    c.sigma_p = list<double>(j["sigma_p"], "/sigma_p", positive);
  }
  if (j.contains("rescale_sigma")) {
    if (!j["rescale_sigma"].is_boolean()) throw ConfigError("/rescale_sigma", "expected a boolean");
    c.rescale_sigma = j["rescale_sigma"].get<bool>();
  }
  if (j.contains("L")) c.trajectory_length = count(j["L"], "/L", 0);
  if (j.contains("particles")) c.particles = count(j["particles"], "/particles");
  if (j.contains("reference_samples")) {
    c.reference_samples = count(j["reference_samples"], "/reference_samples");
  }
  if (j.contains("steps")) c.steps = count(j["steps"], "/steps");
  if (j.contains("sd_stride")) c.sd_stride = count(j["sd_stride"], "/sd_stride");
  if (j.contains("epsilon")) c.sinkhorn.epsilon = positive(j["epsilon"], "/epsilon");
  if (j.contains("sinkhorn")) {
    const auto& s = j["sinkhorn"];
    if (!s.is_object()) throw ConfigError("/sinkhorn", "expected an object");
    for (const auto& [key, value] : s.items()) {
      if (key == "epsilon") {
        c.sinkhorn.epsilon = positive(value, "/sinkhorn/epsilon");
      } else if (key == "max_iterations") {
        c.sinkhorn.max_iterations = count(value, "/sinkhorn/max_iterations");
      } else if (key == "marginal_tolerance") {
        c.sinkhorn.marginal_tolerance = positive(value, "/sinkhorn/marginal_tolerance");
      } else {
        throw ConfigError(child("/sinkhorn", key), "unknown field");
      }
    }
  }
  if (j.contains("seeds_per_cell")) c.seeds_per_cell = count(j["seeds_per_cell"], "/seeds_per_cell");
  if (j.contains("dims")) {
    c.dims = list<std::size_t>(j["dims"], "/dims",
                               [](const json& v, const std::string& p) { return count(v, p); });
  }
  if (j.contains("sigma_dp")) c.sigma_dp = number(j["sigma_dp"], "/sigma_dp");
  if (c.sigma_dp < 0.0 && j.contains("sigma_dp")) throw ConfigError("/sigma_dp", "must be >= 0");
  if (j.contains("x0")) c.x0 = number(j["x0"], "/x0");
  if (j.contains("emulated_dim")) c.emulated_dim = count(j["emulated_dim"], "/emulated_dim");
  if (j.contains("momentum_sign")) {
    const auto s = text(j["momentum_sign"], "/momentum_sign");
    if (s == "positive") {
      c.momentum_sign = MomentumSign::Positive;
    } else if (s == "symmetric") {
      c.momentum_sign = MomentumSign::Symmetric;
    } else {
      throw ConfigError("/momentum_sign", "expected 'positive' or 'symmetric'");
    }
  }
  if (j.contains("chains")) c.chains = count(j["chains"], "/chains");
  if (j.contains("threshold")) c.threshold = positive(j["threshold"], "/threshold");
  if (j.contains("samples")) c.samples = count(j["samples"], "/samples", 2);
  if (j.contains("bins")) c.bins = count(j["bins"], "/bins");
  if (j.contains("trace_stride")) c.trace_stride = count(j["trace_stride"], "/trace_stride");
  if (j.contains("diskmap_mode")) {
    c.diskmap_mode = text(j["diskmap_mode"], "/diskmap_mode");
    if (c.diskmap_mode != "direct" && c.diskmap_mode != "project") {
      throw ConfigError("/diskmap_mode", "expected 'direct' or 'project'");
    }
  }
  if (j.contains("output")) c.output = text(j["output"], "/output");

  // Per-kind requirements.
  const bool needs_sigma = c.kind != ExperimentKind::ChordLength;
  const bool needs_steps = c.kind != ExperimentKind::ChordLength &&
                           c.kind != ExperimentKind::PhaseMap;
  if (needs_sigma) require(j, "sigma_p");
  if (needs_steps) require(j, "steps");
  switch (c.kind) {
    case ExperimentKind::PhaseMap:
    case ExperimentKind::ChordLength:
      require(j, "dims");
      if (c.kind == ExperimentKind::PhaseMap && !j.contains("steps")) c.steps = 128;
      if (c.volume.kind == VolumeKind::Interval) {
        throw ConfigError("/volume/kind", "needs a ball or a cube");
      }
      break;
    case ExperimentKind::DiskmapDensity:
      if (c.volume.kind != VolumeKind::Ball) throw ConfigError("/volume/kind", "needs a ball");
      if (c.sigma_p.size() != 1) throw ConfigError("/sigma_p", "expected a single value");
      break;
    case ExperimentKind::Wavepacket:
      if (c.volume.kind != VolumeKind::Interval) {
        throw ConfigError("/volume/kind", "needs an interval");
      }
      if (c.sigma_p.size() != 1) throw ConfigError("/sigma_p", "expected a single value");
      if (!(c.x0 >= c.volume.lo && c.x0 <= c.volume.hi)) {
        throw ConfigError("/x0", "must lie inside the interval");
      }
      break;
    case ExperimentKind::NoisyChain:
      if (c.sigma_dp < 0.0 && c.trajectory_length == 0) {
        throw ConfigError("/sigma_dp", "give sigma_dp or L (sigma_dp = sigma_p / sqrt(L))");
      }
      break;
    default:
      break;
  }
  if (c.kind != ExperimentKind::PhaseMap && c.kind != ExperimentKind::ChordLength &&
      c.kind != ExperimentKind::Wavepacket && c.volume.dim == 0) {
    throw ConfigError("/volume/dim", "required field is missing");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json v;
  switch (c.volume.kind) {
    case VolumeKind::Ball:
      v = {{"kind", "ball"}, {"dim", c.volume.dim}, {"radius", c.volume.radius}};
      break;
    case VolumeKind::Cube:
      v = {{"kind", "cube"}, {"dim", c.volume.dim}, {"half_width", c.volume.half_width}};
      break;
    case VolumeKind::Interval:
      v = {{"kind", "interval"}, {"dim", 1}, {"bounds", {c.volume.lo, c.volume.hi}}};
      break;
  }
  json out = {
      {"experiment", experiment_kind_name(c.kind)},
      {"volume", v},
      {"sigma_p", c.sigma_p},
      {"rescale_sigma", c.rescale_sigma},
      {"L", c.trajectory_length},
      {"particles", c.particles},
      {"reference_samples", c.reference_samples == 0 ? c.particles : c.reference_samples},
      {"steps", c.steps},
      {"sd_stride", c.sd_stride},
      {"sinkhorn",
       {{"epsilon", c.sinkhorn.epsilon},
        {"max_iterations", c.sinkhorn.max_iterations},
        {"marginal_tolerance", c.sinkhorn.marginal_tolerance}}},
      {"seed", c.seed},
      {"seeds_per_cell", c.seeds_per_cell},
      {"dims", c.dims},
      {"sigma_dp", c.sigma_dp},
      {"x0", c.x0},
      {"emulated_dim", c.emulated_dim},
      {"momentum_sign", c.momentum_sign == MomentumSign::Positive ? "positive" : "symmetric"},
      {"chains", c.chains},
      {"threshold", c.threshold},
      {"samples", c.samples},
      {"bins", c.bins},
      {"trace_stride", c.trace_stride},
      {"diskmap_mode", c.diskmap_mode},
      {"output", c.output},
  };
  // Unset optional values are left out so the result parses again.
  if (c.sigma_p.empty()) out.erase("sigma_p");
  if (c.dims.empty()) out.erase("dims");
  if (c.sigma_dp < 0.0) out.erase("sigma_dp");
  return out;
}

}  // namespace reflectmc
