#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace tghoa {

// Deterministic PRNG (splitmix64). Distributions are hand-rolled so that a
// (config, seed) pair produces identical bytes on every platform; the standard
// library's distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 random mantissa bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // exp(uniform over logs); requires 0 < lo <= hi
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Box-Muller; one value per call, no caching, to keep streams simple
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // integer in [lo, hi] inclusive
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_u64() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  // derive an independent stream (for per-patient / per-attempt substreams)
  Rng split(uint64_t salt) {
    uint64_t s = state_ ^ (0x632be59bd9b4e019ULL * (salt + 1));
    Rng r(s);
    r.next_u64();
    return r;
  }

 private:
  uint64_t state_;
};

// Zipf sampler over {0..n-1} via a precomputed inverse CDF.
class ZipfSampler {
 public:
  ZipfSampler(int n, double s) : cdf_(n) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += 1.0 / std::pow(static_cast<double>(k + 1), s);
      cdf_[k] = acc;
    }
    for (int k = 0; k < n; ++k) cdf_[k] /= acc;
  }

  int sample(Rng& rng) const {
    double u = rng.uniform();
    int lo = 0, hi = static_cast<int>(cdf_.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (cdf_[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace tghoa
