#pragma once

#include <cstdint>
#include <random>

namespace reflectmc {

/// Deterministic random stream with counter-based splitting.
///
/// A stream is identified by a 64-bit key derived from the master seed and
/// the path of split indices that produced it. `split(i)` never touches the
/// parent's engine state, so child streams are the same no matter when or in
/// which order they are requested. This is what makes ensemble results
/// independent of the number of worker threads.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed);

  [[nodiscard]] SeededStream split(std::uint64_t index) const;

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();

  [[nodiscard]] std::uint64_t key() const { return key_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  SeededStream(std::uint64_t key, bool);

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace reflectmc
