#include "blockcd/sampling.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace bcd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::string_view stream_id)
    : seed_(seed), id_(stream_id), engine_(splitmix64(seed ^ fnv1a(stream_id))) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index on empty range");
  // rejection keeps it exactly uniform
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do r = engine_();
  while (r >= limit);
  return r % n;
}

std::vector<ComponentId> draw_minibatch(RngStream& rng, std::uint64_t n, std::uint64_t b) {
  if (b < 1 || b > n)
    throw std::invalid_argument("minibatch size must satisfy 1 <= b <= n");
  std::vector<ComponentId> pool(n);
  std::iota(pool.begin(), pool.end(), ComponentId{0});
  if (b == n) return pool;
  for (std::uint64_t i = 0; i < b; ++i) {
    auto k = i + rng.uniform_index(n - i);
    std::swap(pool[i], pool[k]);
  }
  pool.resize(b);
  return pool;
}

std::vector<ComponentId> draw_iid(RngStream& rng, std::uint64_t b) {
  if (b < 1) throw std::invalid_argument("batch size must be positive");
  std::vector<ComponentId> out(b);
  for (auto& id : out) id = rng.next();
  return out;
}

Branch bernoulli_switch(RngStream& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("switch probability must lie in [0, 1]");
  return rng.uniform() < p ? Branch::full_batch : Branch::recursive;
}

double variance_factor(std::optional<std::uint64_t> n, std::uint64_t b) {
  if (b < 1) throw std::invalid_argument("batch size must be positive");
  if (!n) return 1.0 / static_cast<double>(b);
  if (b > *n) throw std::invalid_argument("batch size exceeds n");
  if (b == *n) return 0.0;
  return static_cast<double>(*n - b) / (static_cast<double>(b) * static_cast<double>(*n - 1));
}

}  // namespace bcd
