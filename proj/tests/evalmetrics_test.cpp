#include "ptgan/evalmetrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "ptgan/error.hpp"
#include "test_util.hpp"

using namespace ptgan;
using ad::Index;
using ad::Matrix;
using ptgan::testing::random_matrix;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Minimum mean Euclidean matching cost over all permutations.
double brute_force_w1(const Matrix& a, const Matrix& b) {
  std::vector<Index> perm(static_cast<std::size_t>(a.rows()));
  std::iota(perm.begin(), perm.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Index i = 0; i < a.rows(); ++i) c += (a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).norm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.rows());
}

Matrix ring_centers(int k, double radius) {
  Matrix c(k, 2);
  for (int i = 0; i < k; ++i) {
    const double t = 2.0 * M_PI * i / k;
    c(i, 0) = radius * std::cos(t);
    c(i, 1) = radius * std::sin(t);
  }
  return c;
}

}  // namespace

TEST(W1, IdenticalSetsGiveZero) {
  std::mt19937_64 g(1);
  const Matrix a = random_matrix(20, 3, g);
  EXPECT_EQ(eval::w1_distance(a, a).value, 0.0);
  EXPECT_EQ(eval::w1_distance(column({1, 2, 3}), column({3, 1, 2})).value, 0.0);
}

TEST(W1, SortedPairingIn1d) {
  const auto r = eval::w1_distance(column({0, 2}), column({1, 3}));
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.method, eval::W1Method::Sorted1d);
}

TEST(W1, UnequalCountsIn1d) {
  // Quantile functions: 0 on (0,1); 0 on (0,0.5), 2 on (0.5,1).
  EXPECT_DOUBLE_EQ(eval::w1_distance(column({0}), column({0, 2})).value, 1.0);
  EXPECT_DOUBLE_EQ(eval::w1_distance(column({0, 0, 3}), column({0, 3})).value, 0.5);
}

TEST(W1, MatchesBruteForceOnSixPoints) {
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(6, 2, g);
    const Matrix b = random_matrix(6, 2, g);
    const auto r = eval::w1_distance(a, b);
    EXPECT_EQ(r.method, eval::W1Method::ExactAssignment);
    EXPECT_NEAR(r.value, brute_force_w1(a, b), 1e-12);
  }
}

TEST(W1, MetricProperties) {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 8 + trial;
    const Matrix a = random_matrix(n, 3, g);
    const Matrix b = random_matrix(n, 3, g, -0.5, 1.5);
    const Matrix c = random_matrix(n, 3, g, -2.0, 0.5);
    const double ab = eval::w1_distance(a, b).value;
    const double ba = eval::w1_distance(b, a).value;
    const double bc = eval::w1_distance(b, c).value;
    const double ac = eval::w1_distance(a, c).value;
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_GT(ab, 0.0);
    EXPECT_LE(ac, ab + bc + 1e-12);
  }
}

TEST(W1, SubsamplesLargeOrUnequalSets) {
  std::mt19937_64 g(4);
  const Matrix a = random_matrix(40, 2, g);
  const Matrix b = random_matrix(30, 2, g);
  const auto r = eval::w1_distance(a, b, 7);
  EXPECT_EQ(r.method, eval::W1Method::Subsampled);
  EXPECT_EQ(r.value, eval::w1_distance(a, b, 7).value);
  const auto capped = eval::w1_distance(a, a, 0, 16);
  EXPECT_EQ(capped.method, eval::W1Method::Subsampled);
}

TEST(W1, EmptyInputIsAnError) {
  EXPECT_THROW(eval::w1_distance(Matrix(0, 2), Matrix::Zero(3, 2)), ShapeError);
}

TEST(Assignment, KnownOptimum) {
  Matrix c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto a = eval::solve_assignment(c);
  EXPECT_DOUBLE_EQ(a.cost, 5.0);
  EXPECT_EQ(a.row_to_col, (std::vector<Index>{1, 0, 2}));
}

TEST(ModeCoverage, SamplesAtEveryCenter) {
  const Matrix centers = ring_centers(8, 1.5);
  Matrix samples(80, 2);
  for (Index i = 0; i < 80; ++i) samples.row(i) = centers.row(i % 8);
  const auto c = eval::mode_coverage(samples, centers, 0.4);
  EXPECT_EQ(c.covered, 8);
  EXPECT_DOUBLE_EQ(c.assigned, 1.0);
}

TEST(ModeCoverage, CollapsedSamples) {
  const Matrix centers = ring_centers(8, 1.5);
  Matrix samples(50, 2);
  for (Index i = 0; i < 50; ++i) samples.row(i) = centers.row(3);
  EXPECT_EQ(eval::mode_coverage(samples, centers, 0.4).covered, 1);
}

TEST(ModeCoverage, GroundTruthMixture) {
  const Matrix centers = ring_centers(8, 1.5);
  Rng rng(5);
  Matrix samples(10000, 2);
  for (Index i = 0; i < samples.rows(); ++i) {
    const auto k = static_cast<Index>(rng.index(8));
    samples(i, 0) = centers(k, 0) + rng.normal(0.0, 0.1);
    samples(i, 1) = centers(k, 1) + rng.normal(0.0, 0.1);
  }
  const auto c = eval::mode_coverage(samples, centers, 0.4);
  EXPECT_EQ(c.covered, 8);
  EXPECT_GE(c.assigned, 0.99);
}

TEST(InterpolatedMoments, GapAndSpreadMatchDirectMoments) {
  Rng rng(6);
  const auto e = eval::interpolated_moments(-1.5, 1.5, 0.1, 400000, rng);
  EXPECT_LE(std::abs(e.gap - eval::interpolated_gap(-1.5, 1.5)), 3.0 * e.gap_se);
  EXPECT_LE(std::abs(e.sigma - eval::interpolated_sigma_direct(-1.5, 1.5, 0.1)), 3.0 * e.sigma_se);
  EXPECT_DOUBLE_EQ(eval::interpolated_gap(-1.5, 1.5), 2.25);
}

TEST(InterpolatedMoments, DirectFormulaClosedForm) {
  for (double d : {0.5, 3.0, 6.0}) {
    const double s = 0.3;
    EXPECT_NEAR(eval::interpolated_sigma_direct(0.0, d, s), std::sqrt(2.0 * s * s / 3.0 + 5.0 * d * d / 192.0),
                1e-14);
  }
}

TEST(InterpolatedMoments, EqualMeansGiveNoGap) {
  Rng rng(7);
  const auto e = eval::interpolated_moments(1.0, 1.0, 0.1, 200000, rng);
  EXPECT_LE(e.gap, 3.0 * e.gap_se);
}

TEST(Logistic, SeparableDataGivesPerfectAuc) {
  Rng rng(8);
  auto draw = [&](Index n, Matrix& x, std::vector<int>& y) {
    x.resize(n, 1);
    y.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const int label = rng.uniform() < 0.5 ? 1 : 0;
      x(i, 0) = label == 1 ? rng.uniform(0.1, 2.0) : rng.uniform(-2.0, -0.1);
      y[static_cast<std::size_t>(i)] = label;
    }
  };
  Matrix xtr, xte;
  std::vector<int> ytr, yte;
  draw(500, xtr, ytr);
  draw(500, xte, yte);
  EXPECT_DOUBLE_EQ(eval::auc(eval::logistic_fit_predict(xtr, ytr, xte), yte), 1.0);
}

TEST(Logistic, NullLabelsGiveChanceAuc) {
  Rng rng(9);
  const Index n = 10000;
  const Matrix xtr = rng.normal_matrix(n, 3);
  const Matrix xte = rng.normal_matrix(n, 3);
  std::vector<int> ytr(n), yte(n);
  for (auto& v : ytr) v = rng.bernoulli(0.5) ? 1 : 0;
  for (auto& v : yte) v = rng.bernoulli(0.5) ? 1 : 0;
  const double a = eval::auc(eval::logistic_fit_predict(xtr, ytr, xte), yte);
  EXPECT_GE(a, 0.45);
  EXPECT_LE(a, 0.55);
}

TEST(Logistic, DuplicatedTrainingSetGivesSameCoefficients) {
  Rng rng(10);
  const Matrix x = rng.normal_matrix(200, 2);
  std::vector<int> y(200);
  for (Index i = 0; i < 200; ++i) y[static_cast<std::size_t>(i)] = x(i, 0) + 0.5 * rng.normal() > 0 ? 1 : 0;
  Matrix x2(400, 2);
  x2 << x, x;
  std::vector<int> y2(y);
  y2.insert(y2.end(), y.begin(), y.end());
  const auto a = eval::logistic_fit(x, y);
  const auto b = eval::logistic_fit(x2, y2);
  for (std::size_t k = 0; k < a.weights.size(); ++k) EXPECT_NEAR(a.weights[k], b.weights[k], 1e-12);
  EXPECT_NEAR(a.intercept, b.intercept, 1e-12);
}

TEST(Logistic, SingleClassIsAnError) {
  const Matrix x = Matrix::Ones(4, 1);
  const std::vector<int> y{1, 1, 1, 1};
  EXPECT_THROW(eval::logistic_fit(x, y), ConfigError);
}

TEST(Auc, OrderedTiedAndTransformed) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(eval::auc(s, y), 1.0);
  EXPECT_DOUBLE_EQ(eval::auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  const std::vector<double> s2{0.1, 0.35, 0.3, 0.4};
  const std::vector<int> y2{0, 1, 0, 1};
  std::vector<double> t(s2.size());
  std::transform(s2.begin(), s2.end(), t.begin(), [](double v) { return std::exp(3.0 * v) - 7.0; });
  EXPECT_DOUBLE_EQ(eval::auc(s2, y2), eval::auc(t, y2));
  EXPECT_THROW(eval::auc(s, std::vector<int>{1, 1, 1, 1}), ConfigError);
}

TEST(StatisticalParity, Cases) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  const std::vector<int> a{0, 1, 0, 1};
  EXPECT_EQ(eval::statistical_parity(s, a, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(eval::statistical_parity(s, std::vector<int>{1, 1, 0, 0}, 0.75), 1.0);
  EXPECT_THROW(eval::statistical_parity(s, std::vector<int>{1, 1, 1, 1}, 0.5), ConfigError);
  Rng rng(11);
  std::vector<double> s3(10000);
  std::vector<int> a3(10000);
  for (std::size_t i = 0; i < s3.size(); ++i) {
    s3[i] = rng.uniform();
    a3[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  EXPECT_LT(eval::statistical_parity(s3, a3, 0.5), 0.03);
}

TEST(SelectThreshold, MaximizesAccuracy) {
  const std::vector<double> s{0.1, 0.2, 0.6, 0.7};
  const std::vector<int> y{0, 0, 1, 1};
  const double tau = eval::select_threshold(s, y);
  EXPECT_GE(tau, 0.2);
  EXPECT_LT(tau, 0.6);
  EXPECT_LT(eval::select_threshold(s, std::vector<int>{1, 1, 1, 1}), 0.1);
}

TEST(STScore, Examples) {
  EXPECT_EQ(eval::s_t_score(0.8, std::vector<double>{0.8, 0.8, 0.8}), 0.0);
  EXPECT_NEAR(eval::s_t_score(0.8, std::vector<double>{0.1, 0.2, 0.7, 0.7}), 0.05, 1e-15);
  const double delta = 0.03;
  for (std::size_t t : {2u, 5u, 50u}) {
    const std::vector<double> s(t, 0.6 - delta);
    const double late = static_cast<double>(t - (t + 1) / 2);
    EXPECT_NEAR(eval::s_t_score(0.6, s), delta * late / (late + 2.0), 1e-15) << t;
  }
  EXPECT_THROW(eval::s_t_score(0.5, std::vector<double>{0.5}), ConfigError);
}

TEST(Pareto, DominanceExample) {
  const std::vector<eval::ParetoPoint> pts{{0.8, 0.4, "a"}, {0.7, 0.7, "b"}};
  const auto f = eval::pareto_frontier(pts);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].tag, "a");
}

TEST(Pareto, SingleAndAntichain) {
  const std::vector<eval::ParetoPoint> one{{0.6, 0.2, "x"}};
  EXPECT_EQ(eval::pareto_frontier(one).size(), 1u);
  const std::vector<eval::ParetoPoint> chain{{0.9, 0.5, "c"}, {0.7, 0.1, "a"}, {0.8, 0.3, "b"}};
  const auto f = eval::pareto_frontier(chain);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[0].tag, "a");
  EXPECT_EQ(f[2].tag, "c");
}

TEST(Pareto, FrontierProperties) {
  Rng rng(12);
  std::vector<eval::ParetoPoint> pts(60);
  for (auto& p : pts) p = {rng.uniform(0.5, 1.0), rng.uniform(0.0, 0.5), ""};
  const auto f = eval::pareto_frontier(pts);
  auto dominates = [](const eval::ParetoPoint& q, const eval::ParetoPoint& p) {
    return q.auc >= p.auc && q.sp <= p.sp && (q.auc > p.auc || q.sp < p.sp);
  };
  for (const auto& a : f) {
    for (const auto& b : f) EXPECT_FALSE(dominates(a, b));
  }
  for (const auto& p : pts) {
    bool ok = false;
    for (const auto& q : f) ok = ok || dominates(q, p) || (q.auc == p.auc && q.sp == p.sp);
    EXPECT_TRUE(ok);
  }
}

TEST(GeoRepair, IdentityAndFullRepair) {
  const std::vector<double> col{0, 2, 10, 12};
  const std::vector<int> grp{0, 0, 1, 1};
  EXPECT_EQ(eval::geo_repair(col, grp, 0.0), col);
  EXPECT_EQ(eval::geo_repair(col, grp, 1.0), (std::vector<double>{5, 7, 5, 7}));
}

TEST(GeoRepair, FullRepairAlignsGroups) {
  Rng rng(13);
  std::vector<double> col(400);
  std::vector<int> grp(400);
  for (std::size_t i = 0; i < col.size(); ++i) {
    grp[i] = i % 2 == 0 ? 0 : 1;
    col[i] = grp[i] == 0 ? rng.normal(0.0, 1.0) : rng.normal(3.0, 2.0);
  }
  const auto rep = eval::geo_repair(col, grp, 1.0);
  Matrix g0(200, 1), g1(200, 1);
  for (std::size_t i = 0; i < rep.size(); ++i) (grp[i] == 0 ? g0 : g1)(static_cast<Index>(i / 2), 0) = rep[i];
  EXPECT_LT(eval::w1_distance(g0, g1).value, 1e-9);
}
