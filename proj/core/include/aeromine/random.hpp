#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace aeromine {

/// Identifies an independent random stream. Streams are counter based: the
/// n-th draw is a pure function of (key, n), so a run can be resumed from its
/// journal without serializing any generator state.
struct RandomKey {
  std::uint64_t seed = 0;
  std::uint64_t position = 0;
  std::uint64_t iteration = 0;
  std::string purpose;

  bool operator==(const RandomKey&) const = default;
};

class RandomStream {
 public:
  explicit RandomStream(RandomKey key);

  const RandomKey& key() const { return key_; }
  std::uint64_t draws() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  /// Standard normal via Box-Muller; consumes two draws.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  RandomKey key_;
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

/// Convenience for streams whose purpose label carries an index.
RandomStream make_stream(std::uint64_t seed, std::uint64_t position, std::uint64_t iteration,
                         std::string purpose);
RandomStream make_stream(std::uint64_t seed, std::uint64_t position, std::uint64_t iteration,
                         const std::string& purpose, std::size_t index);

}  // namespace aeromine
