#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "blockcd/block_core.hpp"

namespace bcd {

class Objective;

using ComponentId = std::uint64_t;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);

// One named random stream. Different labels under the same seed give
// unrelated sequences, so consuming "batch" never disturbs "switch".
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_id);

  std::uint64_t next() { return engine_(); }
  double uniform();  // [0, 1), 53 random bits
  std::uint64_t uniform_index(std::uint64_t n);  // [0, n)
  double normal() { return normal_(engine_); }

  std::uint64_t seed() const { return seed_; }
  const std::string& stream_id() const { return id_; }

 private:
  std::uint64_t seed_;
  std::string id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// b distinct indices of [0, n), uniform over subsets (partial Fisher-Yates).
std::vector<ComponentId> draw_minibatch(RngStream& rng, std::uint64_t n, std::uint64_t b);
// b i.i.d. component ids for the streaming oracle.
std::vector<ComponentId> draw_iid(RngStream& rng, std::uint64_t b);

enum class Branch { full_batch, recursive };

// Always consumes exactly one draw so variants stay aligned on a shared seed.
Branch bernoulli_switch(RngStream& rng, double p);

// (n-b)/(b(n-1)); 1/b when n is nullopt (streaming).
double variance_factor(std::optional<std::uint64_t> n, std::uint64_t b);

struct EnumerationResult {
  double lhs = 0.0;       // mean over all C(n, b) subsets of the minibatch error
  double rhs = 0.0;       // variance_factor(n, b) times the per-component variance
  double variance = 0.0;  // E_i of the per-component error
};

// Exact check of the without-replacement variance identity for block j by
// enumerating every subset. n must be at most 10.
EnumerationResult lemma1_enumeration_check(const Objective& prob, const DiagonalMetric& metric,
                                           const Vector& x, Index j, std::uint64_t b);

}  // namespace bcd
