#pragma once

// Mini-batch index generation: i.i.d. uniform, i.i.d. weighted by q_i = L_i/(n Lbar),
// and one-draw-per-block over a fixed disjoint partition of [n].

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "erm/error.hpp"

namespace erm {

/// Seeded xoshiro256** stream. State is expanded from the seed with
/// splitmix64, so output depends only on (seed, stream) and the draw order.
class RngStream {
 public:
  static constexpr std::string_view kGenerator = "xoshiro256starstar-splitmix64/v1";

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed) {
    std::uint64_t sm = seed ^ (stream * 0xD1B54A32D192ED03ull);
    for (auto& w : s_) w = splitmix64(sm);
  }

  /// Independent stream for (seed, worker, iteration).
  static RngStream substream(std::uint64_t seed, std::uint64_t worker, std::uint64_t iteration) {
    std::uint64_t h = seed;
    std::uint64_t key = splitmix64(h) ^ worker;
    key = splitmix64(key) ^ iteration;
    return RngStream(seed, splitmix64(key));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next() {
    ++draws_;
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on {0, ..., n-1} (Lemire's multiply-shift with rejection).
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t range = n;
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4]{};
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

class SamplingScheme {
 public:
  enum class Kind { IidUniform, IidWeighted, Partition };

  static SamplingScheme iid_uniform(std::size_t n) {
    detail::require(n >= 1, "sampling needs n >= 1");
    SamplingScheme s;
    s.kind_ = Kind::IidUniform;
    s.n_ = n;
    return s;
  }

  /// q_i = L_i / sum(L); every weight must be positive.
  static SamplingScheme iid_weighted(std::span<const double> smoothness) {
    detail::require(!smoothness.empty(), "sampling needs n >= 1");
    SamplingScheme s;
    s.kind_ = Kind::IidWeighted;
    s.n_ = smoothness.size();
    const double total = std::accumulate(smoothness.begin(), smoothness.end(), 0.0);
    s.mean_ = total / static_cast<double>(s.n_);
    s.q_.resize(s.n_);
    s.weight_.resize(s.n_);
    for (std::size_t i = 0; i < s.n_; ++i) {
      detail::require(smoothness[i] > 0.0, "sampling weights must be positive");
      s.q_[i] = smoothness[i] / total;
      s.weight_[i] = s.mean_ / smoothness[i];
    }
    s.build_alias();
    return s;
  }

  /// Contiguous blocks of size n / blocks; blocks must divide n.
  static SamplingScheme partition(std::size_t n, std::size_t blocks) {
    detail::require(blocks >= 1 && blocks <= n, "partition block count out of range");
    detail::require(n % blocks == 0, "partition sampling requires the batch size to divide n");
    SamplingScheme s;
    s.kind_ = Kind::Partition;
    s.n_ = n;
    s.blocks_ = blocks;
    return s;
  }

  Kind kind() const { return kind_; }
  std::size_t n() const { return n_; }
  std::size_t blocks() const { return blocks_; }

  /// Selection probabilities (IidWeighted only; empty otherwise).
  std::span<const double> probabilities() const { return q_; }

  /// Block ell covers [ell * n/b, (ell + 1) * n/b).
  std::pair<std::size_t, std::size_t> block_range(std::size_t ell) const {
    const std::size_t size = n_ / blocks_;
    return {ell * size, (ell + 1) * size};
  }

  /// 1/(n q_i): Lbar / L_i for weighted draws, 1 otherwise.
  double importance_weight(std::size_t i) const {
    detail::require(i < n_, "sample index out of range");
    return kind_ == Kind::IidWeighted ? weight_[i] : 1.0;
  }

  void draw_batch(RngStream& rng, std::size_t b, std::vector<std::size_t>& out) const {
    detail::require(b >= 1 && b <= n_, "batch size out of range");
    out.resize(b);
    switch (kind_) {
      case Kind::IidUniform:
        for (auto& i : out) i = rng.uniform_index(n_);
        break;
      case Kind::IidWeighted:
        for (auto& i : out) {
          const std::size_t col = rng.uniform_index(n_);
          i = rng.uniform01() < prob_[col] ? col : alias_[col];
        }
        break;
      case Kind::Partition: {
        detail::require(b == blocks_, "partition sampling needs batch size equal to block count");
        const std::size_t size = n_ / blocks_;
        for (std::size_t ell = 0; ell < b; ++ell) out[ell] = ell * size + rng.uniform_index(size);
        break;
      }
    }
  }

 private:
  SamplingScheme() = default;

  // Vose's alias method.
  void build_alias() {
    prob_.assign(n_, 0.0);
    alias_.assign(n_, 0);
    std::vector<double> scaled(n_);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < n_; ++i) {
      scaled[i] = q_[i] * static_cast<double>(n_);
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  Kind kind_ = Kind::IidUniform;
  std::size_t n_ = 0;
  std::size_t blocks_ = 0;
  double mean_ = 0.0;
  std::vector<double> q_;
  std::vector<double> weight_;
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

inline std::vector<std::size_t> draw_batch(const SamplingScheme& scheme, RngStream& rng,
                                           std::size_t b) {
  std::vector<std::size_t> out;
  scheme.draw_batch(rng, b, out);
  return out;
}

inline double importance_weight(const SamplingScheme& scheme, std::size_t i) {
  return scheme.importance_weight(i);
}

}  // namespace erm
