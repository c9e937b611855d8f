#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "ptgan/autodiff.hpp"

namespace ptgan {

/// Seeded pseudo-random stream. All sampling in the library goes through
/// this type so that a run is reproducible from its seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream `stream` derived from `seed`.
  static Rng derive(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    std::mt19937_64 e(seq);
    return Rng(e());
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean, double sd) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next() { return engine_(); }

  ad::Matrix uniform_matrix(ad::Index rows, ad::Index cols, double lo, double hi) {
    ad::Matrix m(rows, cols);
    for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(lo, hi);
    return m;
  }
  ad::Matrix normal_matrix(ad::Index rows, ad::Index cols, double sd = 1.0) {
    ad::Matrix m(rows, cols);
    for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(0.0, sd);
    return m;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ptgan
