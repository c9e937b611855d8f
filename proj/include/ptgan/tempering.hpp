#pragma once

// Temperature sampling and convex-interpolation minibatch construction.

#include <cstddef>
#include <span>
#include <vector>

#include "ptgan/autodiff.hpp"
#include "ptgan/random.hpp"

namespace ptgan::tempering {

using ad::Index;
using ad::Matrix;

/// alpha ~ r * delta_1 + (1 - r) * Unif(0, 1).
struct AlphaDist {
  double r = 1.0;

  void validate() const;
  double mean() const;
  double variance() const;
};

std::vector<double> sample_alpha(const AlphaDist& dist, std::size_t n, Rng& rng);

/// alpha * a + (1 - alpha) * b.
Matrix interpolate(const Matrix& a, const Matrix& b, std::span<const double> alpha);

struct TemperedBatch {
  Matrix q1;       ///< alpha1-interpolated rows, used by the loss
  Matrix q2;       ///< alpha2-interpolated rows, used by the penalty only
  Matrix q_tilde;  ///< nu * q1 + (1 - nu) * q2
  std::vector<double> alpha1;
  std::vector<double> alpha2;
  std::vector<double> nu;
  std::vector<double> alpha_tilde;
  Matrix z;        ///< reference noise
  Matrix z_alpha;  ///< alpha1 * z + (1 - alpha1) * z'

  Index size() const { return q1.rows(); }
};

/// Minibatch for tempered training from one sample matrix. Pairs are drawn
/// independently with replacement; alpha1 ~ dist, alpha2, nu ~ Unif(0,1);
/// reference noise ~ Unif(-1,1)^d_z.
TemperedBatch make_batch(const Matrix& data, Index n_b, const AlphaDist& dist, Index d_z, Rng& rng);

/// Samples partitioned by a binary sensitive attribute.
struct GroupedData {
  Matrix rows_a0;
  Matrix rows_a1;
};

/// Fair minibatch: every pair mixes one group-0 and one group-1 row, and both
/// directions alpha and 1 - alpha enter the batch in equal halves. The
/// recorded temperature of a row is the weight on its group-0 sample.
TemperedBatch make_fair_batch(const GroupedData& groups, Index n_b, const AlphaDist& dist,
                              Index d_z, Rng& rng);

}  // namespace ptgan::tempering
