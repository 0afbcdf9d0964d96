#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pfsgld/errors.hpp"
#include "pfsgld/diagnostics.hpp"
#include "pfsgld/gradient.hpp"

using namespace pfsgld;

TEST_CASE("subsequence sampling: partition") {
  RandomSource rng(1);
  CHECK(partition_block_count(256, 16) == 16);
  for (int b = 0; b < 16; ++b) {
    const SubsequenceSpec spec = partition_block(256, 16, 4, b);
    CHECK(spec.s_len() == 16);
    CHECK(spec.s_start == b * 16 + 1);
    for (int t = spec.s_start; t <= spec.s_end; ++t)
      CHECK(spec.scale(t) == doctest::Approx(16.0));
    CHECK(spec.star_start == std::max(1, spec.s_start - 4));
    CHECK(spec.star_end == std::min(256, spec.s_end + 4));
  }
  // Ragged final block still uses scale T/S.
  const SubsequenceSpec ragged = partition_block(10, 3, 0, 3);
  CHECK(ragged.s_start == 10);
  CHECK(ragged.s_end == 10);
  CHECK(ragged.scale(10) == doctest::Approx(10.0 / 3.0));
}

TEST_CASE("subsequence sampling: uniform start") {
  // S = T: everything covered once, any buffer collapses to S.
  RandomSource full_rng(2);
  const SubsequenceSpec full =
      sample_subsequence(50, 50, 7, SamplingScheme::UniformStart, full_rng);
  CHECK(full.s_start == 1);
  CHECK(full.s_end == 50);
  CHECK(full.star_start == 1);
  CHECK(full.star_end == 50);
  for (int t = 1; t <= 50; ++t) CHECK(full.scale(t) == doctest::Approx(1.0));

  // T=10, S=3: Pr(1 in S) = 1/8, Pr(5 in S) = 3/8.
  const SubsequenceSpec first = subsequence_at(10, 3, 0, 0);
  CHECK(first.scale(1) == doctest::Approx(8.0));
  const SubsequenceSpec mid = subsequence_at(10, 3, 0, 3);
  CHECK(mid.scale(5) == doctest::Approx(8.0 / 3.0));
  CHECK(mid.scale(1) == 0.0);
  CHECK(mid.scale(8) == 0.0);

  CHECK_THROWS_AS(subsequence_at(10, 11, 0, 0), DomainError);
  RandomSource rng(3);
  CHECK_THROWS_AS(sample_subsequence(10, 3, -1, SamplingScheme::UniformStart,
                                     rng),
                  DomainError);

  // Empirical inclusion frequencies match the exact probabilities, and
  // the scaled indicator averages to one (Eq. 5 unbiasedness).
  const int T = 40, S = 8, reps = 20000;
  std::vector<double> freq(T + 1, 0.0), scaled(T + 1, 0.0);
  for (int rep = 0; rep < reps; ++rep) {
    const SubsequenceSpec spec =
        sample_subsequence(T, S, 2, SamplingScheme::UniformStart, rng);
    for (int t = spec.s_start; t <= spec.s_end; ++t) {
      freq[t] += 1.0 / reps;
      scaled[t] += spec.scale(t) / reps;
    }
  }
  for (int t : {1, 2, 7, 20, 34, 39, 40}) {
    const int covering = std::min(T - S, t - 1) - std::max(0, t - S) + 1;
    const double pr = covering / static_cast<double>(T - S + 1);
    const double se = std::sqrt(pr * (1.0 - pr) / reps);
    CHECK(std::abs(freq[t] - pr) < 4.0 * se);
    CHECK(scaled[t] == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("buffered statistic masks the buffers") {
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const SubsequenceSpec spec = subsequence_at(100, 10, 5, 40);  // S = 41..50
  const PairwiseStat h = buffered_statistic(spec, p);

  std::vector<double> out(3, 0.0);
  h(38, 0.5, 0.2, 0.0, 0.1, 0.0, out);  // left buffer
  h(53, 0.5, 0.2, 0.0, 0.1, 0.0, out);  // right buffer
  for (double v : out) CHECK(v == 0.0);

  h(45, 0.5, 0.2, 0.0, 0.1, 0.0, out);  // inside S
  const auto grad = complete_data_grad(p, LatentState{0.2, {}},
                                       LatentState{0.1, {}}, 0.5);
  for (int d = 0; d < 3; ++d)
    CHECK(out[d] == doctest::Approx(spec.scale(45) * grad[d]).epsilon(1e-12));

  // B = 0 leaves h live on all of S* = S.
  const SubsequenceSpec nob = subsequence_at(100, 10, 0, 40);
  CHECK(nob.star_start == nob.s_start);
  CHECK(nob.star_end == nob.s_end);
  for (int t = nob.s_start; t <= nob.s_end; ++t) CHECK(nob.scale(t) > 0.0);
}

TEST_CASE("partition average of fully-buffered estimates telescopes") {
  RandomSource rng(4);
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const int T = 128, S = 16;
  const Trajectory traj = simulate(p, T, rng);
  const GradientEstimate full =
      exact_score(p, traj.observations, std::vector<double>(T, 1.0));

  std::vector<double> avg(3, 0.0);
  const int blocks = partition_block_count(T, S);
  for (int b = 0; b < blocks; ++b) {
    const GradientEstimate part = analytic_buffered_gradient(
        p, traj.observations, partition_block(T, S, T, b));
    for (int d = 0; d < 3; ++d) avg[d] += part.grad[d] / blocks;
  }
  for (int d = 0; d < 3; ++d) CHECK(std::abs(avg[d] - full.grad[d]) < 1e-10);
}

TEST_CASE("analytic estimate with B >= T avoids truncation entirely") {
  RandomSource rng(5);
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const int T = 64;
  const Trajectory traj = simulate(p, T, rng);
  const SubsequenceSpec spec = subsequence_at(T, 8, T, 30);
  const GradientEstimate windowed =
      analytic_buffered_gradient(p, traj.observations, spec);
  std::vector<double> w(T, 0.0);
  for (int t = spec.s_start; t <= spec.s_end; ++t) w[t - 1] = spec.scale(t);
  const GradientEstimate direct = exact_score(p, traj.observations, w);
  for (int d = 0; d < 3; ++d)
    CHECK(windowed.grad[d] == doctest::Approx(direct.grad[d]).epsilon(1e-12));

  CHECK_THROWS_AS(analytic_buffered_gradient(ModelParams::svm(0.9, 0.5, 0.5),
                                             traj.observations, spec),
                  UnsupportedModelError);
}

TEST_CASE("buffering error decays geometrically (analytic)") {
  RandomSource rng(6);
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const int T = 256, S = 16;
  const Trajectory traj = simulate(p, T, rng);

  // Mean over partition blocks of ghat(S,B) - ghat(S,T), then norm.
  auto bias_norm = [&](int B) {
    std::vector<double> mean(3, 0.0);
    const int blocks = partition_block_count(T, S);
    for (int b = 0; b < blocks; ++b) {
      const auto gb = analytic_buffered_gradient(p, traj.observations,
                                                 partition_block(T, S, B, b));
      const auto gt = analytic_buffered_gradient(p, traj.observations,
                                                 partition_block(T, S, T, b));
      for (int d = 0; d < 3; ++d) mean[d] += (gb.grad[d] - gt.grad[d]) / blocks;
    }
    double n = 0.0;
    for (double m : mean) n += m * m;
    return std::sqrt(n);
  };

  double prev = std::numeric_limits<double>::infinity();
  double b0 = 0.0, b8 = 0.0;
  for (int B : {0, 1, 2, 4, 8, 16}) {
    const double bias = bias_norm(B);
    CHECK(bias <= prev + 1e-12);
    if (B == 0) b0 = bias;
    if (B == 8) b8 = bias;
    prev = bias;
  }
  const double rate_cap = lipschitz_bound(p) * std::exp(0.25);
  CHECK(b8 / b0 <= std::pow(rate_cap, 8));
}

TEST_CASE("pf gradient agrees with the exact score on the full window") {
  RandomSource rng(7);
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const int T = 64;
  const Trajectory traj = simulate(p, T, rng);
  const GradientEstimate score =
      exact_score(p, traj.observations, std::vector<double>(T, 1.0));
  const SubsequenceSpec spec = full_sequence_spec(T);

  const int reps = 200;
  std::vector<std::vector<double>> draws(3, std::vector<double>(reps));
  for (int rep = 0; rep < reps; ++rep) {
    RandomSource r(derive_seed(42, rep));
    const GradientEstimate est = pf_buffered_gradient(
        p, traj.observations, spec, 2000, ProposalKind::OptimalInstrumental,
        ResamplingKind::Multinomial, r);
    CHECK(est.s_len == T);
    for (int d = 0; d < 3; ++d) draws[d][rep] = est.grad[d];
  }
  for (int d = 0; d < 3; ++d) {
    const auto s = oracle::summarize(draws[d]);
    CHECK(std::abs(s.mean - score.grad[d]) < 3.0 * s.se);
  }
}

TEST_CASE("buffering shrinks the finite-N phi bias") {
  RandomSource rng(8);
  const ModelParams p = ModelParams::lgssm(0.9, 0.7, 1.0);
  const int T = 256;
  const Trajectory traj = simulate(p, T, rng);
  const GradientEstimate ref =
      exact_score(p, traj.observations, std::vector<double>(T, 1.0));

  std::vector<BiasCell> cells;
  for (int B : {0, 8, 16})
    cells.push_back(BiasCell{16, B, 1000, SamplingScheme::UniformStart});
  const auto rows = grad_bias_experiment(
      p, traj.observations, cells, 500, ref.grad,
      ProposalKind::OptimalInstrumental, ResamplingKind::Multinomial, 8, 2);
  // rows: [phi, 1/sigma, 1/tau, norm] x cells
  const double b0 = std::abs(rows[0].bias);
  const double b8 = std::abs(rows[4].bias);
  const double b16 = std::abs(rows[8].bias);
  CHECK(b8 < b0);
  // Once the particle error floor dominates, more buffer stops helping
  // but must not blow the bias up either.
  CHECK(b16 < 2.0 * b8 + 2.0 * rows[8].bias_se);
}

TEST_CASE("scale-adjusted subsequence variance grows linearly in S") {
  RandomSource rng(9);
  const ModelParams p = ModelParams::lgssm(0.7, 0.7, 1.0);
  const int T = 256;
  const Trajectory traj = simulate(p, T, rng);

  auto adjusted = [&](int S) {
    const int n_starts = T - S + 1;
    std::vector<std::vector<double>> vals;
    std::vector<double> mean(3, 0.0);
    for (int s = 0; s < n_starts; ++s) {
      const GradientEstimate est = analytic_buffered_gradient(
          p, traj.observations, subsequence_at(T, S, T, s));
      vals.push_back(est.grad);
      for (int d = 0; d < 3; ++d) mean[d] += est.grad[d] / n_starts;
    }
    double var = 0.0;
    for (const auto& v : vals)
      for (int d = 0; d < 3; ++d)
        var += (v[d] - mean[d]) * (v[d] - mean[d]) / n_starts;
    const double gamma_interior = static_cast<double>(n_starts) / S;
    return var / (gamma_interior * gamma_interior * S);
  };
  const double a8 = adjusted(8), a32 = adjusted(32);
  CHECK(std::max(a8, a32) / std::min(a8, a32) < 3.0);
}
