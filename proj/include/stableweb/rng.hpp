#pragma once

#include <cstdint>
#include <cmath>

namespace stableweb {

// Counter-based generator: each draw is a keyed hash of (seed, stream_id,
// counter), so streams can be split per walker and replayed from any index
// without touching neighbouring streams. The mixer is the splitmix64
// finalizer applied three times with distinct injections, which is more than
// enough avalanche for Monte Carlo use.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  // Substream with the same seed; used to key one stream per walker.
  RngStream derive(std::uint64_t sub_id) const {
    return RngStream(seed_, mix(mix(stream_ ^ 0x6a09e667f3bcc909ull) + sub_id));
  }

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ ^ mix(stream_ + 0x9e3779b97f4a7c15ull);
    z = mix(z + counter_);
    ++counter_;
    return mix(z + 0xbf58476d1ce4e5b9ull);
  }

  // Uniform on the open interval (0,1); safe for log() and tan().
  double next_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exponential waiting time with the given rate.
  double next_exp(double rate) { return -std::log(next_double()) / rate; }

  bool operator==(const RngStream&) const = default;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace stableweb
