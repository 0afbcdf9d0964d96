#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "pfsgld/diagnostics.hpp"
#include "pfsgld/errors.hpp"

using namespace pfsgld;

TEST_CASE("imq kernel values") {
  const std::vector<double> a = {0.3, -1.2, 0.5};
  CHECK(imq_kernel(a, a) == 1.0);
  for (int d = 0; d < 3; ++d) {
    const ImqParts p = imq_parts(a, a, d);
    CHECK(p.da == 0.0);
    CHECK(p.db == 0.0);
  }
  // ||a - b||^2 = 3 gives K = (1+3)^{-1/2} = 0.5.
  const std::vector<double> b = {0.3 + 1.0, -1.2 + 1.0, 0.5 + 1.0};
  CHECK(imq_kernel(a, b) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("imq derivatives match finite differences") {
  RandomSource rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> a(3), b(3);
    for (int d = 0; d < 3; ++d) {
      a[d] = rng.normal(0.0, 1.5);
      b[d] = rng.normal(0.0, 1.5);
    }
    for (int d = 0; d < 3; ++d) {
      const ImqParts p = imq_parts(a, b, d);
      const auto fd_a = oracle::fd_gradient(
          [&](std::span<const double> x) { return imq_kernel(x, b); }, a);
      const auto fd_b = oracle::fd_gradient(
          [&](std::span<const double> x) { return imq_kernel(a, x); }, b);
      CHECK(oracle::rel_err(p.da, fd_a[d]) < 1e-6);
      CHECK(oracle::rel_err(p.db, fd_b[d]) < 1e-6);
      // Cross derivative via nested differences of K itself.
      const double h = 1e-4;
      std::vector<double> ap = a, am = a, bp = b, bm = b;
      ap[d] += h;
      am[d] -= h;
      bp[d] += h;
      bm[d] -= h;
      const double dd = (imq_kernel(ap, bp) - imq_kernel(ap, bm) -
                         imq_kernel(am, bp) + imq_kernel(am, bm)) /
                        (4.0 * h * h);
      CHECK(oracle::rel_err(p.dadb, dd) < 1e-5);
    }
  }
}

namespace {

// Brute-force Stein kernel assembled from imq_parts, for cross-checking
// the fused loop inside ksd_components.
double k0_brute(std::span<const double> t, std::span<const double> tp,
                std::span<const double> g, std::span<const double> gp,
                int d) {
  const ImqParts p = imq_parts(t, tp, d);
  return p.dadb + p.da * gp[d] + p.db * g[d] + p.k * g[d] * gp[d];
}

}  // namespace

TEST_CASE("ksd: coincident samples with zero score") {
  // Duplicated identical samples behave like the single-pair sum: each
  // component is sqrt(d2K at zero distance) = 1.
  KsdInput in;
  in.samples = {{0.2, -0.4}, {0.2, -0.4}};
  in.scores = {{0.0, 0.0}, {0.0, 0.0}};
  const auto comps = ksd_components(in);
  CHECK(comps[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(comps[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ksd_total(in) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("ksd matches a brute-force double loop") {
  RandomSource rng(5);
  KsdInput in;
  for (int k = 0; k < 40; ++k) {
    std::vector<double> t(3), g(3);
    for (int d = 0; d < 3; ++d) {
      t[d] = rng.normal(0.0, 1.0);
      g[d] = rng.normal(0.0, 2.0);
    }
    in.samples.push_back(t);
    in.scores.push_back(g);
  }
  const auto comps = ksd_components(in, 2);
  for (int d = 0; d < 3; ++d) {
    double sum = 0.0;
    for (int k = 0; k < 40; ++k)
      for (int kp = 0; kp < 40; ++kp)
        sum += k0_brute(in.samples[k], in.samples[kp], in.scores[k],
                        in.scores[kp], d);
    CHECK(oracle::rel_err(comps[d], std::sqrt(sum / (40.0 * 40.0))) < 1e-10);
  }
}

TEST_CASE("ksd invariances") {
  RandomSource rng(6);
  KsdInput in;
  for (int k = 0; k < 30; ++k) {
    std::vector<double> t(2), g(2);
    for (int d = 0; d < 2; ++d) {
      t[d] = rng.normal(0.0, 1.0);
      g[d] = rng.normal(0.0, 1.0);
    }
    in.samples.push_back(t);
    in.scores.push_back(g);
  }
  const double base = ksd_total(in);

  // Duplicating the whole set leaves the V-statistic unchanged.
  KsdInput doubled = in;
  doubled.samples.insert(doubled.samples.end(), in.samples.begin(),
                         in.samples.end());
  doubled.scores.insert(doubled.scores.end(), in.scores.begin(),
                        in.scores.end());
  CHECK(ksd_total(doubled) == doctest::Approx(base).epsilon(1e-12));

  // Permutation invariance.
  KsdInput shuffled = in;
  std::reverse(shuffled.samples.begin(), shuffled.samples.end());
  std::reverse(shuffled.scores.begin(), shuffled.scores.end());
  CHECK(ksd_total(shuffled) == doctest::Approx(base).epsilon(1e-9));

  // Thread count does not change the result.
  CHECK(ksd_total(in, 2) == ksd_total(in, 1));

  KsdInput bad = in;
  bad.scores.pop_back();
  CHECK_THROWS_AS(ksd_total(bad), DomainError);
  KsdInput tiny;
  tiny.samples = {{0.0}};
  tiny.scores = {{0.0}};
  CHECK_THROWS_AS(ksd_total(tiny), DomainError);
}

TEST_CASE("mse_to_truth") {
  Chain chain;
  chain.kind = ModelKind::Lgssm;
  const ModelParams star = ModelParams::lgssm(0.9, 0.7, 1.0);

  // Constant at theta*: zero; constant at theta*+1: one per coordinate.
  const ModelParams off = ModelParams::lgssm(1.9, 1.7, 2.0);
  for (int k = 0; k < 10; ++k) chain.samples.push_back(star.unconstrained());
  auto m = mse_to_truth(chain, star.natural(), 0);
  for (const auto& row : m)
    for (double v : row) CHECK(std::abs(v) < 1e-20);
  chain.samples.clear();
  for (int k = 0; k < 10; ++k) chain.samples.push_back(off.unconstrained());
  m = mse_to_truth(chain, star.natural(), 0);
  for (const auto& row : m)
    for (double v : row) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // Brute-force agreement on a random chain with burnin.
  RandomSource rng(9);
  chain.samples.clear();
  for (int k = 0; k < 60; ++k)
    chain.samples.push_back(ModelParams::lgssm(rng.uniform(-0.5, 0.9),
                                               rng.uniform(0.5, 1.5),
                                               rng.uniform(0.5, 1.5))
                                .unconstrained());
  const int burnin = 13;
  m = mse_to_truth(chain, star.natural(), burnin);
  REQUIRE(static_cast<int>(m.size()) == 60 - burnin);
  for (size_t step = 0; step < m.size(); ++step) {
    std::vector<double> mean(3, 0.0);
    for (size_t k = burnin; k <= burnin + step; ++k) {
      const auto nat = chain.natural_sample(static_cast<int>(k));
      for (int d = 0; d < 3; ++d) mean[d] += nat[d];
    }
    for (int d = 0; d < 3; ++d) {
      const double e = mean[d] / (step + 1) - star.natural()[d];
      CHECK(std::abs(m[step][d] - e * e) < 1e-12);
    }
  }
}

TEST_CASE("grad_bias_experiment: SE scaling and reference checks") {
  RandomSource rng(10);
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const Trajectory traj = simulate(p, 48, rng);
  const std::vector<double> unit(48, 1.0);
  const GradientEstimate ref = exact_score(p, traj.observations, unit);

  CHECK_THROWS_AS(grad_bias_experiment(p, traj.observations, {BiasCell{}}, 10,
                                       std::vector<double>{1.0, 2.0},
                                       ProposalKind::OptimalInstrumental,
                                       ResamplingKind::Multinomial, 1, 1),
                  DomainError);

  // 33 window positions; both replicate counts sit in the stratified
  // regime so the standard error halves when replications quadruple.
  BiasCell cell;
  cell.subsequence = 16;
  cell.buffer = 4;
  cell.particles = 200;
  const auto rows_n = grad_bias_experiment(
      p, traj.observations, {cell}, 132, ref.grad,
      ProposalKind::OptimalInstrumental, ResamplingKind::Multinomial, 5, 2);
  const auto rows_4n = grad_bias_experiment(
      p, traj.observations, {cell}, 528, ref.grad,
      ProposalKind::OptimalInstrumental, ResamplingKind::Multinomial, 5, 2);
  REQUIRE(rows_n.size() == 4);  // 3 coordinates + norm
  REQUIRE(rows_4n.size() == 4);
  // Quadrupling replications halves the standard error (within 20%).
  for (int d = 0; d < 3; ++d) {
    const double ratio = rows_n[d].bias_se / (2.0 * rows_4n[d].bias_se);
    CHECK(ratio > 0.8);
    CHECK(ratio < 1.2);
  }
  CHECK(rows_n[3].param == "norm");

  // N = infinity cells use the Kalman path: the geometric buffering decay
  // shows up directly in the norm rows.
  std::vector<BiasCell> analytic_cells;
  for (int B : {0, 2, 4, 8}) {
    BiasCell c = cell;
    c.buffer = B;
    c.particles = 0;
    analytic_cells.push_back(c);
  }
  const auto rows = grad_bias_experiment(
      p, traj.observations, analytic_cells, 200, ref.grad,
      ProposalKind::OptimalInstrumental, ResamplingKind::Multinomial, 6, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < analytic_cells.size(); ++c) {
    const double norm_bias = rows[c * 4 + 3].bias;
    CHECK(norm_bias <= prev + 1e-12);
    prev = norm_bias;
  }

  // Analytic cells require the LGSSM.
  const ModelParams sv = ModelParams::svm(0.9, 0.5, 0.5);
  CHECK_THROWS_AS(
      grad_bias_experiment(sv, traj.observations, {analytic_cells[0]}, 10,
                           std::vector<double>(3, 0.0), ProposalKind::Prior,
                           ResamplingKind::Multinomial, 2, 1),
      UnsupportedModelError);
}
