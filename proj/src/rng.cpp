#include "reflectmc/rng.hpp"

namespace reflectmc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 make_engine(std::uint64_t key) {
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(splitmix64(key)),
                    static_cast<std::uint32_t>(splitmix64(key) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SeededStream::SeededStream(std::uint64_t seed) : SeededStream(splitmix64(seed), true) {}

SeededStream::SeededStream(std::uint64_t key, bool) : key_(key), engine_(make_engine(key)) {}

SeededStream SeededStream::split(std::uint64_t index) const {
  return SeededStream(splitmix64(key_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)), true);
}

double SeededStream::uniform() { return unit_(engine_); }

double SeededStream::uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

double SeededStream::normal() { return normal_(engine_); }

}  // namespace reflectmc
