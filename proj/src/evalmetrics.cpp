#include "ptgan/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ptgan/error.hpp"

namespace ptgan::eval {

std::string to_string(W1Method m) {
  switch (m) {
    case W1Method::Sorted1d: return "sorted-1d";
    case W1Method::ExactAssignment: return "exact-assignment";
    case W1Method::Subsampled: return "subsampled";
  }
  return "sorted-1d";
}

Assignment solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw ShapeError("solve_assignment: cost matrix must be square");
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials and matching; column 0 is the virtual source.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(u);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(match);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j) {
    out.row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  for (Index i = 0; i < n; ++i) out.cost += cost(i, out.row_to_col[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

std::vector<double> sorted_column(const Matrix& m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  std::sort(v.begin(), v.end());
  return v;
}

// Integral over u in (0,1) of |F_a^{-1}(u) - F_b^{-1}(u)| for step quantile
// functions; reduces to the mean sorted difference when counts agree.
double w1_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  if (a.size() == b.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / na;
  }
  double total = 0.0, prev = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    total += (next - prev) * std::abs(a[i] - b[j]);
    prev = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

Matrix take_rows(const Matrix& m, Index k, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(m.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const auto pick = static_cast<std::size_t>(i) +
                      rng.index(static_cast<std::size_t>(m.rows() - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[pick]);
  }
  Matrix out(k, m.cols());
  for (Index i = 0; i < k; ++i) out.row(i) = m.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

double w1_assignment(const Matrix& a, const Matrix& b) {
  const Index n = a.rows();
  Matrix cost(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
  }
  return solve_assignment(cost).cost / static_cast<double>(n);
}

}  // namespace

W1Result w1_distance(const Matrix& a, const Matrix& b, std::uint64_t subsample_seed, Index cap) {
  if (a.rows() == 0 || b.rows() == 0) throw ShapeError("w1_distance: empty sample set");
  if (a.cols() != b.cols()) {
    throw ShapeError("w1_distance: dimension mismatch (" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()) + ")");
  }
  W1Result r;
  if (a.cols() == 1) {
    r.method = W1Method::Sorted1d;
    r.value = w1_sorted(sorted_column(a), sorted_column(b));
    return r;
  }
  if (a.rows() == b.rows() && a.rows() <= cap) {
    r.method = W1Method::ExactAssignment;
    r.value = w1_assignment(a, b);
    return r;
  }
  const Index k = std::min({a.rows(), b.rows(), cap});
  Rng rng = Rng::derive(subsample_seed, 0x57315);
  const Matrix sa = take_rows(a, k, rng);
  const Matrix sb = take_rows(b, k, rng);
  r.method = W1Method::Subsampled;
  r.value = w1_assignment(sa, sb);
  return r;
}

Coverage mode_coverage(const Matrix& samples, const Matrix& centers, double radius,
                       double min_fraction) {
  if (!(radius > 0.0)) throw DomainError("mode_coverage: radius must be > 0");
  if (samples.cols() != centers.cols()) throw ShapeError("mode_coverage: dimension mismatch");
  Coverage c;
  c.fractions.assign(static_cast<std::size_t>(centers.rows()), 0.0);
  if (samples.rows() == 0) return c;
  std::vector<Index> counts(static_cast<std::size_t>(centers.rows()), 0);
  Index assigned = 0;
  for (Index i = 0; i < samples.rows(); ++i) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < centers.rows(); ++k) {
      const double d = (samples.row(i) - centers.row(k)).norm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    if (best_d <= radius) {
      ++counts[static_cast<std::size_t>(best)];
      ++assigned;
    }
  }
  const double n = static_cast<double>(samples.rows());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    c.fractions[k] = static_cast<double>(counts[k]) / n;
    if (c.fractions[k] >= min_fraction) ++c.covered;
  }
  c.assigned = static_cast<double>(assigned) / n;
  return c;
}

double interpolated_gap(double mu1, double mu2) { return 0.75 * std::abs(mu1 - mu2); }

double interpolated_sigma_closed_form(double mu1, double mu2, double sigma) {
  const double d = mu1 - mu2;
  return std::sqrt(0.75 * sigma * sigma + 5.0 * d * d / 192.0);
}

double interpolated_sigma_direct(double mu1, double mu2, double sigma) {
  const double d = mu1 - mu2;
  const double e_a2 = 7.0 / 12.0, e_1a2 = 1.0 / 12.0, var_a = 1.0 / 48.0;
  const double var_x2 = sigma * sigma + d * d / 4.0;
  return std::sqrt(e_a2 * sigma * sigma + e_1a2 * var_x2 + var_a * d * d / 4.0);
}

MomentEstimate interpolated_moments(double mu1, double mu2, double sigma, std::size_t n_mc,
                                  Rng& rng) {
  if (!(sigma > 0.0)) throw DomainError("interpolated_moments: sigma must be > 0");
  if (n_mc < 4) throw ConfigError("interpolated_moments: need at least 4 draws");
  std::vector<double> draws[2];
  for (std::size_t i = 0; i < n_mc; ++i) {
    const int k = rng.uniform() < 0.5 ? 0 : 1;
    const double alpha = rng.uniform(0.5, 1.0);
    const double u = rng.normal(k == 0 ? mu1 : mu2, sigma);
    const double x2 = rng.normal(rng.uniform() < 0.5 ? mu1 : mu2, sigma);
    draws[k].push_back(alpha * u + (1.0 - alpha) * x2);
  }
  double mean[2], m2[2], m4[2], n[2];
  for (int k = 0; k < 2; ++k) {
    n[k] = static_cast<double>(draws[k].size());
    if (n[k] < 2) throw ConfigError("interpolated_moments: a component received < 2 draws");
    double acc = 0.0;
    for (double q : draws[k]) acc += q;
    mean[k] = acc / n[k];
    double a2 = 0.0, a4 = 0.0;
    for (double q : draws[k]) {
      const double c = (q - mean[k]) * (q - mean[k]);
      a2 += c;
      a4 += c * c;
    }
    m2[k] = a2 / (n[k] - 1.0);
    m4[k] = a4 / n[k];
  }
  MomentEstimate e;
  e.gap = std::abs(mean[0] - mean[1]);
  e.gap_se = std::sqrt(m2[0] / n[0] + m2[1] / n[1]);
  const double pooled = ((n[0] - 1.0) * m2[0] + (n[1] - 1.0) * m2[1]) / (n[0] + n[1] - 2.0);
  // Var(s^2) ~ (m4 - s^4) / n per component, then the delta method for sqrt.
  const double total = n[0] + n[1];
  const double var_pooled =
      (n[0] * (m4[0] - m2[0] * m2[0]) + n[1] * (m4[1] - m2[1] * m2[1])) / (total * total);
  e.sigma = std::sqrt(pooled);
  e.sigma_se = std::sqrt(var_pooled) / (2.0 * e.sigma);
  return e;
}

std::vector<double> LogisticModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != weights.size()) {
    throw ShapeError("logistic predict: feature count mismatch");
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Index>(weights.size()));
  const Eigen::VectorXd eta = (x * w).array() + intercept;
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Index i = 0; i < eta.size(); ++i) out[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-eta(i)));
  return out;
}

LogisticModel logistic_fit(const Matrix& x, std::span<const int> y, const LogisticOptions& opt) {
  if (static_cast<Index>(y.size()) != x.rows()) throw ShapeError("logistic_fit: label count mismatch");
  if (x.rows() == 0) throw ConfigError("logistic_fit: empty training set");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 1) has1 = true;
    else if (v == 0) has0 = true;
    else throw ConfigError("logistic_fit: labels must be 0 or 1");
  }
  if (!has0 || !has1) throw ConfigError("logistic_fit: training labels contain a single class");
  const Index n = x.rows(), d = x.cols();
  const double nd = static_cast<double>(n);
  Eigen::VectorXd yv(n);
  for (Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  // The mean log-likelihood has curvature at most ||[X 1]||_F^2 / (4n).
  const double lipschitz = 0.25 * (x.squaredNorm() + nd) / nd + opt.l2;
  const double step = 1.0 / lipschitz;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  for (int it = 0; it < opt.iterations; ++it) {
    const Eigen::VectorXd eta = (x * w).array() + b;
    const Eigen::VectorXd p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    const Eigen::VectorXd r = yv - p;
    const Eigen::VectorXd gw = x.transpose() * r / nd - opt.l2 * w;
    const double gb = r.sum() / nd;
    w += step * gw;
    b += step * gb;
  }
  LogisticModel m;
  m.weights.assign(w.data(), w.data() + d);
  m.intercept = b;
  return m;
}

std::vector<double> logistic_fit_predict(const Matrix& x_train, std::span<const int> y_train,
                                         const Matrix& x_test, const LogisticOptions& opt) {
  return logistic_fit(x_train, y_train, opt).predict(x_test);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("auc: score and label counts differ");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0, n_pos = 0;
  for (int l : labels) n_pos += l == 1 ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ConfigError("auc: labels contain a single class");
  while (pos < n) {
    std::size_t end = pos;
    while (end + 1 < n && scores[order[end + 1]] == scores[order[pos]]) ++end;
    const double avg_rank = 0.5 * static_cast<double>(pos + end) + 1.0;
    for (std::size_t k = pos; k <= end; ++k) {
      if (labels[order[k]] == 1) rank_sum += avg_rank;
    }
    pos = end + 1;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double statistical_parity(std::span<const double> scores, std::span<const int> groups, double tau) {
  if (scores.size() != groups.size()) throw ShapeError("statistical_parity: count mismatch");
  double pos[2] = {0, 0}, cnt[2] = {0, 0};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int g = groups[i];
    if (g != 0 && g != 1) throw ConfigError("statistical_parity: groups must be 0 or 1");
    cnt[g] += 1.0;
    if (scores[i] > tau) pos[g] += 1.0;
  }
  if (cnt[0] == 0 || cnt[1] == 0) throw ConfigError("statistical_parity: empty group");
  return std::abs(pos[1] / cnt[1] - pos[0] / cnt[0]);
}

double select_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ShapeError("select_threshold: need matching, non-empty inputs");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Threshold below every score predicts all positive.
  long correct = 0;
  for (int l : labels) correct += l == 1 ? 1 : 0;
  long best = correct;
  double best_tau = std::nextafter(scores[order[0]], -std::numeric_limits<double>::infinity());
  std::size_t pos = 0;
  while (pos < order.size()) {
    std::size_t end = pos;
    while (end + 1 < order.size() && scores[order[end + 1]] == scores[order[pos]]) ++end;
    // tau = this score: every row up to `end` flips to negative.
    for (std::size_t k = pos; k <= end; ++k) correct += labels[order[k]] == 1 ? -1 : 1;
    if (correct > best) {
      best = correct;
      best_tau = scores[order[pos]];
    }
    pos = end + 1;
  }
  return best_tau;
}

double s_t_score(double s_train, std::span<const double> s_t) {
  const std::size_t t = s_t.size();
  if (t < 2) throw ConfigError("s_t_score: need at least 2 checkpoints");
  const std::size_t half = (t + 1) / 2;
  double sum = 0.0;
  for (std::size_t k = half; k < t; ++k) sum += std::abs(s_train - s_t[k]);
  return sum / static_cast<double>(t - half + 2);
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
  std::vector<ParetoPoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      if (j == i) continue;
      const auto& p = points[i];
      const auto& q = points[j];
      dominated = q.auc >= p.auc && q.sp <= p.sp && (q.auc > p.auc || q.sp < p.sp);
    }
    if (!dominated) out.push_back(points[i]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ParetoPoint& a, const ParetoPoint& b) { return a.auc < b.auc; });
  return out;
}

std::vector<double> geo_repair(std::span<const double> column, std::span<const int> groups,
                               double lambda) {
  if (column.size() != groups.size()) throw ShapeError("geo_repair: count mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("geo_repair: lambda must lie in [0,1]");
  std::vector<double> sorted[2];
  for (std::size_t i = 0; i < column.size(); ++i) {
    const int g = groups[i];
    if (g != 0 && g != 1) throw ConfigError("geo_repair: groups must be 0 or 1");
    sorted[g].push_back(column[i]);
  }
  if (sorted[0].empty() || sorted[1].empty()) throw ConfigError("geo_repair: empty group");
  for (auto& s : sorted) std::sort(s.begin(), s.end());
  auto quantile = [](const std::vector<double>& s, double q) {
    const double n = static_cast<double>(s.size());
    auto k = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, s.size());
    return s[k - 1];
  };
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    const auto& s = sorted[groups[i]];
    const auto rank = static_cast<double>(std::upper_bound(s.begin(), s.end(), column[i]) - s.begin());
    const double q = rank / static_cast<double>(s.size());
    const double own = quantile(s, q);
    const double common = 0.5 * (quantile(sorted[0], q) + quantile(sorted[1], q));
    out[i] = (1.0 - lambda) * own + lambda * common;
  }
  return out;
}

}  // namespace ptgan::eval
