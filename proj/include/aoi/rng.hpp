#pragma once

#include <cmath>
#include <cstdint>

namespace aoi::rng {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Purpose : std::uint64_t { Arrival = 1, Backoff = 2, Channel = 3, Service = 4, Outcome = 5 };

/// Counter-based stream: draw i of stream `key` is mix64(key + i * golden).
/// Streams addressed by different keys never share state, so the value of a
/// draw depends only on (seed, replication, device, purpose, counter).
class Stream {
 public:
  Stream() = default;
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return mix64(key_ ^ mix64(++counter_)); }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(next()) * n) >> 64);
  }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

inline Stream make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t device, Purpose purpose) {
  std::uint64_t key = mix64(seed);
  key = mix64(key ^ replication);
  key = mix64(key ^ device);
  key = mix64(key ^ static_cast<std::uint64_t>(purpose));
  return Stream(key);
}

}  // namespace aoi::rng
