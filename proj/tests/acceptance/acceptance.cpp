// Acceptance checks. Each criterion prints one [PASS] or [FAIL] line and the
// process exits nonzero on failure.
//
//   acceptance --criterion N [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <nlohmann/json.hpp>

#include "ptgan/data.hpp"
#include "ptgan/evalmetrics.hpp"
#include "ptgan/experiment.hpp"
#include "ptgan/nets.hpp"
#include "ptgan/objectives.hpp"
#include "ptgan/tempering.hpp"
#include "ptgan/trainer.hpp"

using namespace ptgan;
using ad::Index;
using ad::Matrix;
using ad::Tensor;
using nlohmann::json;
using objectives::LossKind;
using objectives::PenaltyKind;
namespace fs = std::filesystem;

namespace {

constexpr int kSeeds = 10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string join(const std::vector<double>& v, int precision = 3) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt::format("{:.{}g}", v[i], precision);
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

experiment::ExperimentConfig config(const json& j, std::uint64_t seed, const fs::path& out) {
  auto cfg = experiment::ExperimentConfig::from_json(j);
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.out = out.string();
  return cfg;
}

// 1. Analytic gradients against central differences.

// max |a - r| / max(max |r|, floor) over all entries of all slots.
double relative_error(const std::vector<Matrix>& analytic, const std::vector<Matrix>& reference) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff = std::max(diff, (analytic[k] - reference[k]).cwiseAbs().maxCoeff());
    scale = std::max(scale, reference[k].cwiseAbs().maxCoeff());
  }
  return diff / std::max(scale, 1e-8);
}

double check_instance(const nets::MlpParams& params,
                      const std::function<Tensor(ad::Graph&, const nets::BoundMlp&)>& build) {
  ad::Graph graph;
  const auto bound = nets::bind(graph, params);
  const auto wrt = bound.all();
  const auto grads = graph.backward(build(graph, bound), wrt);
  std::vector<Matrix> analytic, reference;
  for (std::size_t slot = 0; slot < wrt.size(); ++slot) {
    auto f = [&](const Matrix& theta) {
      nets::MlpParams q = params;
      *nets::parameter_slots(q)[slot] = theta;
      ad::Graph g;
      return build(g, nets::bind(g, q)).item();
    };
    analytic.push_back(grads[slot].value());
    reference.push_back(ad::finite_diff_gradient(f, *nets::parameter_slots(params)[slot], 1e-5));
  }
  return relative_error(analytic, reference);
}

Outcome criterion_1() {
  constexpr double kTol = 1e-4;
  constexpr int kInstances = 50;
  Rng rng(1001);
  double worst = 0.0;
  std::string worst_case;
  int checks = 0;
  for (LossKind loss : {LossKind::ND, LossKind::JSD, LossKind::PD}) {
    for (PenaltyKind pen : {PenaltyKind::None, PenaltyKind::CP, PenaltyKind::MP, PenaltyKind::GP, PenaltyKind::R1}) {
      for (int i = 0; i < kInstances; ++i) {
        const Index d = 1 + static_cast<Index>(rng.index(3));
        const Index dz = 1 + static_cast<Index>(rng.index(3));
        const Index n = 3 + static_cast<Index>(rng.index(4));
        const Index width = 2 + static_cast<Index>(rng.index(4));
        const int depth = 1 + static_cast<int>(rng.index(2));
        const auto act = rng.bernoulli(0.5) ? nets::Activation::Tanh : nets::Activation::Sigmoid;
        const auto cspec = nets::MlpSpec::uniform(d, width, depth, 1, act, objectives::critic_head(loss));
        const auto gspec = nets::MlpSpec::uniform(dz, width, depth, d, act);
        const auto cparams = nets::init_params(cspec, rng.next());
        const auto gparams = nets::init_params(gspec, rng.next());
        const Matrix data = rng.normal_matrix(4 * n, d);
        const auto batch = tempering::make_batch(data, n, {0.5}, dz, rng);
        const double lambda = rng.uniform(0.5, 2.0);
        const Matrix fake_const =
            nets::generator_forward(gspec, nets::constants(gparams), Tensor(batch.z_alpha), batch.alpha1).value();
        const Matrix points = objectives::interpolation_points(batch.q1, fake_const, rng);

        auto critic_objective = [&](ad::Graph& g, const nets::BoundMlp& net) {
          const Tensor dr = nets::critic_forward(cspec, net, Tensor(batch.q1), batch.alpha1);
          const Tensor df = nets::critic_forward(cspec, net, Tensor(fake_const), batch.alpha1);
          Tensor v = objectives::critic_loss(loss, dr, df);
          switch (pen) {
            case PenaltyKind::None: break;
            case PenaltyKind::CP: v = ad::sub(v, objectives::coherency_penalty(g, cspec, net, batch, lambda)); break;
            case PenaltyKind::MP:
              v = ad::sub(v, objectives::mp_penalty(g, cspec, net, points, batch.alpha1, lambda));
              break;
            case PenaltyKind::GP:
              v = ad::sub(v, objectives::gp_penalty(g, cspec, net, points, batch.alpha1, lambda));
              break;
            case PenaltyKind::R1:
              v = ad::sub(v, objectives::r1_penalty(g, cspec, net, batch.q1, batch.alpha1, lambda));
              break;
          }
          return v;
        };
        const auto cbound = nets::constants(cparams);
        auto generator_objective = [&](ad::Graph&, const nets::BoundMlp& net) {
          const Tensor fake = nets::generator_forward(gspec, net, Tensor(batch.z_alpha), batch.alpha1);
          return objectives::generator_loss(loss, nets::critic_forward(cspec, cbound, fake, batch.alpha1));
        };

        const double ec = check_instance(cparams, critic_objective);
        const double eg = check_instance(gparams, generator_objective);
        checks += 2;
        const double e = std::max(ec, eg);
        if (e > worst) {
          worst = e;
          worst_case = objectives::to_string(loss) + "+" + objectives::to_string(pen) + " #" + std::to_string(i);
        }
      }
    }
  }
  return {worst <= kTol, fmt::format("gradient check, {} critic/generator checks over 3 losses x 5 penalties, worst "
                                     "relative error {:.2e} ({}) tol {:.0e}",
                                     checks, worst, worst_case, kTol)};
}

// 2. Linear-critic covariance identity.

Outcome criterion_2() {
  constexpr double kZ = 3.0;
  Rng data_rng(2002);
  const Matrix data = data::sample_mixture(data::ring8(), 10000, data_rng);
  const auto gspec = nets::MlpSpec::uniform(2, 8, 1, 2, nets::Activation::Tanh);
  const auto g0_params = nets::constants(nets::init_params(gspec, 2003));
  const auto g0 = [&](const Matrix& z) -> Matrix {
    const std::vector<double> ones(static_cast<std::size_t>(z.rows()), 1.0);
    return nets::generator_forward(gspec, g0_params, Tensor(z), ones).value();
  };
  bool pass = true;
  std::string parts;
  for (double r : {0.0, 1.0 / 3.0, 0.9, 1.0}) {
    Rng rng = Rng::derive(2004, static_cast<std::uint64_t>(r * 1000));
    const auto res = trainer::linear_critic_covariance(data, g0, 2, r, 100, 100, 100000, rng);
    pass = pass && std::abs(res.z_score) <= kZ;
    parts += fmt::format(" r={:.3g}: tempered {:.5g} predicted {:.5g} z={:+.2f};", r, res.tempered_trace,
                         res.predicted, res.z_score);
  }
  return {pass, "linear-critic covariance trace vs (2/3 + r/3) vanilla + Var(alpha)(1/n_b + 1/m_b), |z| <= 3:" +
                    parts};
}

// 3. Moments of the interpolated two-mode components.

Outcome criterion_3() {
  constexpr double kZ = 3.0;
  Rng rng(3003);
  const auto est = eval::interpolated_moments(-1.5, 1.5, 0.1, 1000000, rng);
  const double gap = eval::interpolated_gap(-1.5, 1.5);
  const double sigma = eval::interpolated_sigma_closed_form(-1.5, 1.5, 0.1);
  const double direct = eval::interpolated_sigma_direct(-1.5, 1.5, 0.1);
  const double z_gap = (est.gap - gap) / est.gap_se;
  const double z_sigma = (est.sigma - sigma) / est.sigma_se;
  const double z_direct = (est.sigma - direct) / est.sigma_se;
  const bool pass = std::abs(z_gap) <= kZ && std::abs(z_sigma) <= kZ;
  return {pass, fmt::format("interpolated moments, gap {:.6f} vs {:.6f} (z={:+.2f}); sigma {:.6f} vs closed form "
                            "{:.6f} (z={:+.2f}); direct evaluation {:.6f} (z={:+.2f})",
                            est.gap, gap, z_gap, est.sigma, sigma, z_sigma, direct, z_direct)};
}

// 4. Exact assignment W1 against permutation brute force.

Outcome criterion_4() {
  Rng rng(4004);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const Index n = 1 + static_cast<Index>(rng.index(7));
    const Index d = 1 + static_cast<Index>(rng.index(3));
    const Matrix a = rng.normal_matrix(n, d);
    const Matrix b = rng.normal_matrix(n, d);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (Index i = 0; i < n; ++i) c += (a.row(i) - b.row(perm[static_cast<std::size_t>(i)])).norm();
      best = std::min(best, c / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    double got;
    if (d == 1) {
      got = eval::w1_distance(a, b).value;
    } else {
      Matrix cost(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) cost(i, j) = (a.row(i) - b.row(j)).norm();
      got = eval::solve_assignment(cost).cost / static_cast<double>(n);
      worst = std::max(worst, std::abs(eval::w1_distance(a, b).value - best));
    }
    worst = std::max(worst, std::abs(got - best));
  }
  return {worst <= 1e-9, fmt::format("W1 vs brute force on 100 instances (n <= 7, d <= 3), max |diff| {:.2e} tol 1e-9",
                                     worst)};
}

// 5 and 6. Critic-only probes on the two-mode toy.

json probe_config(const std::string& kind) {
  return {{"dataset", {{"kind", "two1d"}, {"samples", 10000}}},
          {"train", {{"loss", "nd"}, {"penalty", "r1"}, {"r", 1.0}, {"iterations", 2000}, {"critic", {{"width", 64}}}}},
          {"probe", {{"kind", kind}, {"mu2", {1.5, 3.0}}, {"r", {1.0, 0.99}}}}};
}

std::map<std::string, std::vector<experiment::ProbeArm>> run_probe_seeds(const std::string& kind,
                                                                         const fs::path& dir) {
  std::map<std::string, std::vector<experiment::ProbeArm>> by_arm;
  for (int s = 0; s < kSeeds; ++s) {
    const auto cfg = config(probe_config(kind), static_cast<std::uint64_t>(s), dir / ("seed-" + std::to_string(s)));
    for (auto& arm : experiment::run_probe(cfg, fs::path(cfg.out))) by_arm[arm.name].push_back(std::move(arm));
  }
  return by_arm;
}

Outcome criterion_5(const fs::path& work) {
  const auto arms = run_probe_seeds("fixed-generator", work / "c5");
  std::map<std::string, std::vector<double>> terminal;
  for (const auto& [name, runs] : arms) {
    for (const auto& run : runs) terminal[name].push_back(run.log.back().grad_var_sum.value_or(std::nan("")));
  }
  const double lo = median(terminal["mu2=1.5"]);
  const double hi = median(terminal["mu2=3"]);
  return {hi > lo, fmt::format("fixed-generator probe, median terminal summed gradient variance mu2=3: {:.4g} vs "
                               "mu2=1.5: {:.4g} over {} seeds",
                               hi, lo, kSeeds)};
}

Outcome criterion_6(const fs::path& work) {
  const auto arms = run_probe_seeds("variance-reduction", work / "c6");
  std::map<std::string, std::vector<double>> terminal;
  for (const auto& [name, runs] : arms) {
    for (const auto& run : runs) terminal[name].push_back(run.log.back().loss_var);
  }
  const double tempered = median(terminal["mu2=3_r=0.99"]);
  const double vanilla = median(terminal["mu2=3_r=1"]);
  return {tempered < vanilla,
          fmt::format("variance-reduction probe at mu2=3, median final loss variance r=0.99: {:.4g} vs r=1: {:.4g} "
                      "over {} seeds",
                      tempered, vanilla, kSeeds)};
}

// 7. Mode recovery on ring8.

json ring8_config(const std::string& penalty, double r, double sigma) {
  return {{"dataset", {{"kind", "ring8"}}},
          {"train",
           {{"loss", "nd"},
            {"penalty", penalty},
            {"r", r},
            {"iterations", 20000},
            {"grad_noise_sigma", sigma},
            {"critic", {{"width", 64}}},
            {"generator", {{"width", 64}}}}},
          {"eval", {{"w1_samples", 256}}}};
}

struct FinalEval {
  double log_w1 = 0.0;
  int coverage = 0;
};

FinalEval final_eval(const std::vector<trainer::MetricsRecord>& log) {
  const json& e = log.back().eval;
  return {e.at("log_w1").get<double>(), e.contains("coverage") ? e.at("coverage").get<int>() : 0};
}

std::vector<FinalEval> ring8_seeds(const json& j, const fs::path& dir) {
  std::vector<FinalEval> out;
  for (int s = 0; s < kSeeds; ++s) {
    const auto cfg = config(j, static_cast<std::uint64_t>(s), dir / ("seed-" + std::to_string(s)));
    const auto t0 = std::chrono::steady_clock::now();
    out.push_back(final_eval(experiment::run_train(cfg, fs::path(cfg.out)).log));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << fmt::format("  {} seed {}: log-W1 {:.3f} coverage {} ({:.0f} s)\n", dir.filename().string(), s,
                             out.back().log_w1, out.back().coverage, secs);
  }
  return out;
}

Outcome criterion_7(const fs::path& work) {
  const auto pt = ring8_seeds(ring8_config("cp", 0.9, 0.0), work / "c7" / "pt-cp");
  const auto vanilla = ring8_seeds(ring8_config("none", 1.0, 0.0), work / "c7" / "vanilla");
  int full = 0;
  std::vector<double> pt_w1, van_w1, cov;
  for (const auto& e : pt) {
    full += e.coverage == 8 ? 1 : 0;
    pt_w1.push_back(e.log_w1);
    cov.push_back(e.coverage);
  }
  for (const auto& e : vanilla) van_w1.push_back(e.log_w1);
  const bool pass = full >= 8 && median(pt_w1) < median(van_w1);
  return {pass, fmt::format("ring8 at 20k iterations, PT+CP covers 8/8 in {}/{} seeds (coverage {}); median final "
                            "log-W1 PT+CP {:.3f} vs vanilla {:.3f}",
                            full, kSeeds, join(cov), median(pt_w1), median(van_w1))};
}

// 8. Gradient noise injection under MP.

Outcome criterion_8(const fs::path& work) {
  std::map<std::string, std::vector<double>> finals;
  for (int s = 0; s < kSeeds; ++s) {
    json j = ring8_config("mp", 1.0, 0.0);
    j["eval"]["coverage"] = false;
    j["probe"] = {{"kind", "noise-injection"}, {"sigma", {0.0, 0.01}}};
    const auto cfg = config(j, static_cast<std::uint64_t>(s), work / "c8" / ("seed-" + std::to_string(s)));
    for (const auto& arm : experiment::run_probe(cfg, fs::path(cfg.out))) {
      finals[arm.name].push_back(final_eval(arm.log).log_w1);
      std::cerr << fmt::format("  seed {} {}: log-W1 {:.3f}\n", s, arm.name, finals[arm.name].back());
    }
  }
  const double sd0 = sample_sd(finals["sigma=0"]);
  const double sd1 = sample_sd(finals["sigma=0.01"]);
  return {sd1 > sd0, fmt::format("noise injection under MP, across-seed sd of final log-W1 sigma=0.01: {:.4f} vs "
                                 "sigma=0: {:.4f} ({} seeds; sigma=0 [{}], sigma=0.01 [{}])",
                                 sd1, sd0, kSeeds, join(finals["sigma=0"]), join(finals["sigma=0.01"]))};
}

// 9. Fair generation on a planted-discrimination table.

json fair_config() {
  return {{"dataset", {{"kind", "planted"}, {"samples", 5000}}},
          {"train", {{"iterations", 10000}}},
          {"eval", {{"downstream", false}}},
          {"fairgen", {{"alphas", {1.0, 0.5}}}}};
}

Outcome criterion_9(const fs::path& work) {
  std::vector<double> sp1, sp05, auc05, band;
  for (int s = 0; s < kSeeds; ++s) {
    const auto cfg = config(fair_config(), static_cast<std::uint64_t>(s), work / "c9" / ("seed-" + std::to_string(s)));
    const auto res = experiment::run_fairgen(cfg, fs::path(cfg.out));
    for (const auto& row : res.rows) {
      if (row.alpha == 1.0) sp1.push_back(row.score.sp);
      if (row.alpha == 0.5) {
        sp05.push_back(row.score.sp);
        auc05.push_back(row.score.auc);
      }
    }
    const auto data = experiment::load_dataset(cfg.dataset, cfg.seed);
    const auto y = data::binary_column(data.test, *data.meta, *data.meta->schema.label);
    const double n1 = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double n0 = static_cast<double>(y.size()) - n1;
    band.push_back(0.5 + 3.0 * std::sqrt((n0 + n1 + 1.0) / (12.0 * n0 * n1)));
    std::cerr << fmt::format("  seed {}: sp(1) {:.4f} sp(0.5) {:.4f} auc(0.5) {:.4f}\n", s, sp1.back(), sp05.back(),
                             auc05.back());
  }
  const double chance = *std::max_element(band.begin(), band.end());
  const bool pass = median(sp05) < median(sp1) && median(auc05) > chance;
  return {pass, fmt::format("fair generation, median SP alpha=0.5: {:.4f} vs alpha=1: {:.4f}; median AUC alpha=0.5 "
                            "{:.4f} vs chance band {:.4f} over {} seeds",
                            median(sp05), median(sp1), median(auc05), chance, kSeeds)};
}

// 10. Quantile repair.

double between_group_w1(const std::vector<double>& col, const std::vector<int>& groups) {
  std::vector<double> a, b;
  for (std::size_t i = 0; i < col.size(); ++i) (groups[i] ? b : a).push_back(col[i]);
  const Matrix ma = Eigen::Map<const Matrix>(a.data(), static_cast<Index>(a.size()), 1);
  const Matrix mb = Eigen::Map<const Matrix>(b.data(), static_cast<Index>(b.size()), 1);
  return eval::w1_distance(ma, mb).value;
}

Outcome criterion_10() {
  Rng rng(10010);
  double identity_diff = 0.0, worst_w1 = 0.0, before = 0.0;
  int columns = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t half = 50 + rng.index(200);
    std::vector<int> groups(2 * half);
    for (std::size_t i = 0; i < half; ++i) groups[i] = 1;
    std::shuffle(groups.begin(), groups.end(), rng.engine());
    for (int c = 0; c < 3; ++c) {
      std::vector<double> col(groups.size());
      for (std::size_t i = 0; i < col.size(); ++i) {
        col[i] = groups[i] ? rng.normal(1.0 + c, 2.0) : std::exp(rng.normal(0.0, 0.5));
      }
      const auto same = eval::geo_repair(col, groups, 0.0);
      for (std::size_t i = 0; i < col.size(); ++i) identity_diff = std::max(identity_diff, std::abs(same[i] - col[i]));
      before = std::max(before, between_group_w1(col, groups));
      worst_w1 = std::max(worst_w1, between_group_w1(eval::geo_repair(col, groups, 1.0), groups));
      ++columns;
    }
  }
  const bool pass = identity_diff == 0.0 && worst_w1 < 1e-9;
  return {pass, fmt::format("quantile repair on {} tie-free columns, lambda=0 max change {:.1e}; lambda=1 max "
                            "between-group W1 {:.2e} (before up to {:.3f}) tol 1e-9",
                            columns, identity_diff, worst_w1, before)};
}

// 11. Reruns reproduce metrics logs byte for byte.

std::vector<fs::path> metric_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("metrics", 0) == 0 && e.path().extension() == ".jsonl") out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome criterion_11(const fs::path& work) {
  const fs::path root = work / "c11";
  fs::remove_all(root);
  using Runner = std::function<void(const experiment::ExperimentConfig&)>;
  const Runner train = [](const experiment::ExperimentConfig& c) { experiment::run_train(c, fs::path(c.out)); };
  const Runner probe = [](const experiment::ExperimentConfig& c) { experiment::run_probe(c, fs::path(c.out)); };
  const Runner fair = [](const experiment::ExperimentConfig& c) { experiment::run_fairgen(c, fs::path(c.out)); };

  json small_train = ring8_config("cp", 0.9, 0.0);
  small_train["train"]["iterations"] = 300;
  json noisy = ring8_config("mp", 1.0, 0.01);
  noisy["train"]["iterations"] = 300;
  json small_probe = probe_config("variance-reduction");
  small_probe["train"]["iterations"] = 200;
  json small_fair = fair_config();
  small_fair["train"]["iterations"] = 200;
  small_fair["train"]["fairness"] = {{"lambda_f", 1.0}, {"penalty_iterations", 50}};

  const std::vector<std::tuple<std::string, json, Runner>> cases{
      {"train", small_train, train}, {"noise", noisy, train}, {"probe", small_probe, probe}, {"fair", small_fair, fair}};
  int compared = 0;
  std::vector<std::string> mismatches;
  for (const auto& [name, j, run] : cases) {
    const auto a = config(j, 7, root / name / "a");
    const auto b = config(j, 7, root / name / "b");
    run(a);
    run(b);
    auto frozen = experiment::ExperimentConfig::load(root / name / "a" / "config.json");
    frozen.out = (root / name / "frozen").string();
    run(frozen);
    const auto files = metric_files(root / name / "a");
    if (files.empty()) mismatches.push_back(name + ": no metrics files");
    for (const auto& f : files) {
      const std::string ref = read_file(root / name / "a" / f);
      for (const char* other : {"b", "frozen"}) {
        ++compared;
        if (read_file(root / name / other / f) != ref) mismatches.push_back(name + "/" + other + "/" + f.string());
      }
    }
  }
  std::string detail = fmt::format("reruns and frozen-config reruns of train, noisy train, probe and fair runs, "
                                   "{} metrics files compared byte for byte",
                                   compared);
  for (const auto& m : mismatches) detail += "; differs: " + m;
  return {mismatches.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  std::string workdir = "acceptance_runs";
  app.add_option("--criterion", criterion, "criterion number 1-11")->required()->check(CLI::Range(1, 11));
  app.add_option("--workdir", workdir, "directory for run outputs");
  CLI11_PARSE(app, argc, argv);

  const fs::path work(workdir);
  fs::create_directories(work);
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    switch (criterion) {
      case 1: out = criterion_1(); break;
      case 2: out = criterion_2(); break;
      case 3: out = criterion_3(); break;
      case 4: out = criterion_4(); break;
      case 5: out = criterion_5(work); break;
      case 6: out = criterion_6(work); break;
      case 7: out = criterion_7(work); break;
      case 8: out = criterion_8(work); break;
      case 9: out = criterion_9(work); break;
      case 10: out = criterion_10(); break;
      case 11: out = criterion_11(work); break;
    }
  } catch (const std::exception& e) {
    out = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << out.detail
            << fmt::format(" ({:.1f} s)", secs) << std::endl;
  return out.pass ? 0 : 1;
}
