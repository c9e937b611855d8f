#pragma once

// Distribution distances, mode coverage, downstream-task scores and the
// quantile repair baseline.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptgan/autodiff.hpp"
#include "ptgan/random.hpp"

namespace ptgan::eval {

using ad::Index;
using ad::Matrix;

enum class W1Method { Sorted1d, ExactAssignment, Subsampled };

std::string to_string(W1Method m);

struct W1Result {
  double value = 0.0;
  W1Method method = W1Method::Sorted1d;
};

/// Largest sample count solved exactly in more than one dimension.
inline constexpr Index kW1ExactCap = 1024;

/// 1-Wasserstein distance between two empirical measures with Euclidean
/// ground cost. One dimension: exact quantile coupling (counts may differ).
/// More dimensions: exact optimal assignment when both sides have the same
/// count n <= cap; otherwise both sides are subsampled without replacement
/// to min(n_a, n_b, cap) rows using `subsample_seed`.
W1Result w1_distance(const Matrix& a, const Matrix& b, std::uint64_t subsample_seed = 0,
                     Index cap = kW1ExactCap);

struct Assignment {
  double cost = 0.0;
  std::vector<Index> row_to_col;
};

/// Minimum-cost perfect matching on a square cost matrix (shortest
/// augmenting paths with potentials, O(n^3)).
Assignment solve_assignment(const Matrix& cost);

struct Coverage {
  int covered = 0;
  std::vector<double> fractions;  ///< share of all samples assigned to each center
  double assigned = 0.0;          ///< share of samples within radius of some center
};

/// Each sample goes to its nearest center when within `radius`; a center is
/// covered when it receives at least `min_fraction` of all samples.
Coverage mode_coverage(const Matrix& samples, const Matrix& centers, double radius,
                       double min_fraction = 0.02);

struct MomentEstimate {
  double gap = 0.0;
  double gap_se = 0.0;
  double sigma = 0.0;
  double sigma_se = 0.0;
};

/// Monte-Carlo moments of the two interpolated components
/// alpha * u_k + (1 - alpha) * X2, alpha ~ Unif(0.5, 1), u_k ~ N(mu_k, sigma),
/// X2 ~ the equal two-mixture. Each draw picks a component with probability
/// one half; sigma is the pooled within-component standard deviation.
MomentEstimate interpolated_moments(double mu1, double mu2, double sigma, std::size_t n_mc,
                                  Rng& rng);

/// Reference closed forms: 3|mu1 - mu2| / 4 and
/// sqrt(3 sigma^2 / 4 + 5 |mu1 - mu2|^2 / 192).
double interpolated_gap(double mu1, double mu2);
double interpolated_sigma_closed_form(double mu1, double mu2, double sigma);
/// Direct evaluation of E[a^2] sigma^2 + E[(1-a)^2] Var(X2) + Var(a) (mu1 - E X2)^2,
/// which gives 2 sigma^2 / 3 + 5 |mu1 - mu2|^2 / 192.
double interpolated_sigma_direct(double mu1, double mu2, double sigma);

struct LogisticModel {
  std::vector<double> weights;
  double intercept = 0.0;

  std::vector<double> predict(const Matrix& x) const;
};

struct LogisticOptions {
  double l2 = 1e-4;
  int iterations = 1000;
};

/// L2-regularized maximum likelihood by full-batch gradient ascent on the
/// mean log-likelihood with a fixed step 1/L from a curvature bound.
/// Throws ConfigError when the labels contain a single class.
LogisticModel logistic_fit(const Matrix& x, std::span<const int> y,
                           const LogisticOptions& opt = {});

std::vector<double> logistic_fit_predict(const Matrix& x_train, std::span<const int> y_train,
                                         const Matrix& x_test, const LogisticOptions& opt = {});

/// Rank statistic with tied scores sharing their average rank.
double auc(std::span<const double> scores, std::span<const int> labels);

/// |mean(score > tau | A=1) - mean(score > tau | A=0)|.
double statistical_parity(std::span<const double> scores, std::span<const int> groups,
                          double tau);

/// Threshold tau maximizing the accuracy of 1[score > tau]. Ties in accuracy
/// keep the smallest tau.
double select_threshold(std::span<const double> scores, std::span<const int> labels);

/// Late-half mean gap between the real-data score and the per-checkpoint
/// synthetic-data scores: sum_{t = ceil(T/2)+1}^{T} |s_train - s_t| / (T - ceil(T/2) + 2).
double s_t_score(double s_train, std::span<const double> s_t);

struct ParetoPoint {
  double auc = 0.0;
  double sp = 0.0;
  std::string tag;
};

/// Points not dominated by another point (at least as high auc and at most as
/// high sp, strictly better in one). Output ordered by increasing auc, stable.
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

/// Moves each value toward a common quantile function:
/// c -> (1 - lambda) F_a^{-1}(q) + lambda F_A^{-1}(q), q = F_a(c), where F_A^{-1}
/// is the midpoint of the two group quantile functions.
std::vector<double> geo_repair(std::span<const double> column, std::span<const int> groups,
                               double lambda);

}  // namespace ptgan::eval
