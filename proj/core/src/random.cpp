#include "aeromine/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace aeromine {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RandomStream::RandomStream(RandomKey key) : key_(std::move(key)) {
  std::uint64_t h = mix64(key_.seed + kGolden);
  h = mix64(h ^ (key_.position + 1) * kGolden);
  h = mix64(h ^ (key_.iteration + 2) * kGolden);
  h = mix64(h ^ fnv1a(key_.purpose));
  base_ = h;
}

std::uint64_t RandomStream::next_u64() {
  ++counter_;
  return mix64(base_ + counter_ * kGolden);
}

double RandomStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

bool RandomStream::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return uniform() < p;
}

double RandomStream::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RandomStream make_stream(std::uint64_t seed, std::uint64_t position, std::uint64_t iteration,
                         std::string purpose) {
  return RandomStream(RandomKey{seed, position, iteration, std::move(purpose)});
}

RandomStream make_stream(std::uint64_t seed, std::uint64_t position, std::uint64_t iteration,
                         const std::string& purpose, std::size_t index) {
  return make_stream(seed, position, iteration, purpose + "/" + std::to_string(index));
}

}  // namespace aeromine
