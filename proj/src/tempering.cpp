#include "ptgan/tempering.hpp"

#include <string>

#include "ptgan/error.hpp"

namespace ptgan::tempering {

void AlphaDist::validate() const {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("r must lie in [0,1], got " + std::to_string(r));
}

double AlphaDist::mean() const { return r + (1.0 - r) * 0.5; }

double AlphaDist::variance() const {
  const double second = r + (1.0 - r) / 3.0;
  const double m = mean();
  return second - m * m;
}

std::vector<double> sample_alpha(const AlphaDist& dist, std::size_t n, Rng& rng) {
  dist.validate();
  std::vector<double> out(n);
  for (auto& a : out) {
    // One uniform decides the atom, a second one places the continuous draw,
    // so the stream layout does not depend on r.
    const double pick = rng.uniform();
    const double u = rng.uniform();
    a = pick < dist.r ? 1.0 : u;
  }
  return out;
}

Matrix interpolate(const Matrix& a, const Matrix& b, std::span<const double> alpha) {
  if (a.rows() != b.rows() || a.cols() != b.cols() ||
      static_cast<Index>(alpha.size()) != a.rows()) {
    throw ShapeError("interpolate: operands and weights disagree in shape");
  }
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    const double w = alpha[static_cast<std::size_t>(i)];
    out.row(i) = w * a.row(i) + (1.0 - w) * b.row(i);
  }
  return out;
}

namespace {

Matrix gather(const Matrix& src, Index n, Rng& rng) {
  Matrix out(n, src.cols());
  for (Index i = 0; i < n; ++i) {
    out.row(i) = src.row(static_cast<Index>(rng.index(static_cast<std::size_t>(src.rows()))));
  }
  return out;
}

std::vector<double> uniforms(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform();
  return out;
}

void finish(TemperedBatch& b, Index d_z, Rng& rng) {
  const auto n = static_cast<std::size_t>(b.q1.rows());
  b.nu = uniforms(n, rng);
  b.q_tilde = interpolate(b.q1, b.q2, b.nu);
  b.alpha_tilde.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.alpha_tilde[i] = b.nu[i] * b.alpha1[i] + (1.0 - b.nu[i]) * b.alpha2[i];
  }
  b.z = rng.uniform_matrix(b.q1.rows(), d_z, -1.0, 1.0);
  const Matrix z_other = rng.uniform_matrix(b.q1.rows(), d_z, -1.0, 1.0);
  b.z_alpha = interpolate(b.z, z_other, b.alpha1);
}

}  // namespace

TemperedBatch make_batch(const Matrix& data, Index n_b, const AlphaDist& dist, Index d_z,
                         Rng& rng) {
  if (data.rows() < 2) throw ConfigError("make_batch: need at least 2 data rows");
  if (n_b < 1) throw ConfigError("make_batch: batch size must be >= 1");
  TemperedBatch b;
  const Matrix x = gather(data, n_b, rng);
  const Matrix x_prime = gather(data, n_b, rng);
  b.alpha1 = sample_alpha(dist, static_cast<std::size_t>(n_b), rng);
  b.alpha2 = uniforms(static_cast<std::size_t>(n_b), rng);
  b.q1 = interpolate(x, x_prime, b.alpha1);
  b.q2 = interpolate(x, x_prime, b.alpha2);
  finish(b, d_z, rng);
  return b;
}

TemperedBatch make_fair_batch(const GroupedData& groups, Index n_b, const AlphaDist& dist,
                              Index d_z, Rng& rng) {
  if (n_b < 2 || n_b % 2 != 0) throw ConfigError("make_fair_batch: batch size must be even");
  if (groups.rows_a0.rows() == 0 || groups.rows_a1.rows() == 0) {
    throw ConfigError("make_fair_batch: both sensitive groups must be non-empty");
  }
  const Index half = n_b / 2;
  if (half > groups.rows_a0.rows() || half > groups.rows_a1.rows()) {
    throw ConfigError("make_fair_batch: half batch exceeds a group size");
  }
  if (groups.rows_a0.cols() != groups.rows_a1.cols()) {
    throw ShapeError("make_fair_batch: groups have different column counts");
  }
  const Matrix x0 = gather(groups.rows_a0, half, rng);
  const Matrix x0p = gather(groups.rows_a0, half, rng);
  const Matrix x1 = gather(groups.rows_a1, half, rng);
  const Matrix x1p = gather(groups.rows_a1, half, rng);
  const auto a1 = sample_alpha(dist, static_cast<std::size_t>(half), rng);
  const auto a2 = uniforms(static_cast<std::size_t>(half), rng);

  TemperedBatch b;
  b.q1.resize(n_b, x0.cols());
  b.q2.resize(n_b, x0.cols());
  b.alpha1.resize(static_cast<std::size_t>(n_b));
  b.alpha2.resize(static_cast<std::size_t>(n_b));
  for (Index i = 0; i < half; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto k2 = static_cast<std::size_t>(i + half);
    b.alpha1[k] = a1[k];
    b.alpha1[k2] = 1.0 - a1[k];
    b.alpha2[k] = a2[k];
    b.alpha2[k2] = 1.0 - a2[k];
    b.q1.row(i) = a1[k] * x0.row(i) + (1.0 - a1[k]) * x1.row(i);
    b.q1.row(i + half) = (1.0 - a1[k]) * x0.row(i) + a1[k] * x1.row(i);
    b.q2.row(i) = a2[k] * x0p.row(i) + (1.0 - a2[k]) * x1p.row(i);
    b.q2.row(i + half) = (1.0 - a2[k]) * x0p.row(i) + a2[k] * x1p.row(i);
  }
  finish(b, d_z, rng);
  return b;
}

}  // namespace ptgan::tempering
