#include "pfsgld/gradient.hpp"

#include <algorithm>
#include <cmath>

#include "pfsgld/errors.hpp"

namespace pfsgld {

std::string scheme_name(SamplingScheme s) {
  return s == SamplingScheme::UniformStart ? "uniform" : "partition";
}

SamplingScheme scheme_from_name(const std::string& name) {
  if (name == "uniform") return SamplingScheme::UniformStart;
  if (name == "partition") return SamplingScheme::StrictPartition;
  throw DomainError("unknown sampling scheme '" + name + "'");
}

namespace {

void check_sizes(int T, int S, int B) {
  if (S < 1 || S > T) throw DomainError("subsequence size must be in [1, T]");
  if (B < 0) throw DomainError("buffer size must be >= 0");
}

SubsequenceSpec make_uniform(int T, int S, int B, int start) {
  SubsequenceSpec spec;
  spec.T = T;
  spec.scheme = SamplingScheme::UniformStart;
  spec.s_start = start + 1;
  spec.s_end = start + S;
  spec.buffer = B;
  spec.star_start = std::max(1, spec.s_start - B);
  spec.star_end = std::min(T, spec.s_end + B);
  spec.scale_s.resize(S);
  const double n_starts = T - S + 1;
  for (int t = spec.s_start; t <= spec.s_end; ++t) {
    const int covering = std::min(T - S, t - 1) - std::max(0, t - S) + 1;
    spec.scale_s[t - spec.s_start] = n_starts / covering;
  }
  return spec;
}

SubsequenceSpec make_block(int T, int S, int B, int block) {
  SubsequenceSpec spec;
  spec.T = T;
  spec.scheme = SamplingScheme::StrictPartition;
  spec.s_start = block * S + 1;
  spec.s_end = std::min((block + 1) * S, T);
  spec.buffer = B;
  spec.star_start = std::max(1, spec.s_start - B);
  spec.star_end = std::min(T, spec.s_end + B);
  spec.scale_s.assign(spec.s_len(), static_cast<double>(T) / S);
  return spec;
}

}  // namespace

int partition_block_count(int T, int S) { return (T + S - 1) / S; }

SubsequenceSpec sample_subsequence(int T, int S, int B, SamplingScheme scheme,
                                   RandomSource& rng) {
  check_sizes(T, S, B);
  if (scheme == SamplingScheme::UniformStart)
    return make_uniform(T, S, B, static_cast<int>(rng.below(T - S + 1)));
  return make_block(T, S, B,
                    static_cast<int>(rng.below(partition_block_count(T, S))));
}

SubsequenceSpec subsequence_at(int T, int S, int B, int start) {
  check_sizes(T, S, B);
  if (start < 0 || start > T - S) throw DomainError("start out of range");
  return make_uniform(T, S, B, start);
}

SubsequenceSpec partition_block(int T, int S, int B, int block) {
  check_sizes(T, S, B);
  if (block < 0 || block >= partition_block_count(T, S))
    throw DomainError("block index out of range");
  return make_block(T, S, B, block);
}

SubsequenceSpec full_sequence_spec(int T) {
  if (T < 1) throw DomainError("need T >= 1");
  return make_uniform(T, T, 0, 0);
}

PairwiseStat buffered_statistic(const SubsequenceSpec& spec,
                                const ModelParams& params) {
  return [spec, params](int t, double y, double x, double aux, double x_prev,
                        double aux_prev, std::span<double> out) {
    const double w = spec.scale(t);
    if (w == 0.0) return;  // buffer index: traversed but masked
    double g[4];
    complete_data_grad_raw(params, x, aux, x_prev, aux_prev, y, g);
    for (size_t d = 0; d < out.size(); ++d) out[d] += w * g[d];
  };
}

GradientEstimate pf_buffered_gradient(const ModelParams& params,
                                      std::span<const double> y,
                                      const SubsequenceSpec& spec,
                                      int n_particles, ProposalKind proposal,
                                      ResamplingKind resampling,
                                      RandomSource& rng) {
  if (spec.T != static_cast<int>(y.size()))
    throw DomainError("subsequence spec does not match data length");
  const PairwiseStat h = buffered_statistic(spec, params);
  const std::span<const double> window =
      y.subspan(spec.star_start - 1, spec.window_len());
  FilterResult res =
      run_filter(params, window, &h, params.dim(), n_particles, proposal,
                 resampling, rng, spec.star_start);
  GradientEstimate est;
  est.grad = std::move(res.stats);
  est.s_start = spec.s_start;
  est.s_len = spec.s_len();
  est.buffer = spec.buffer;
  est.particles = n_particles;
  est.estimator = "pf";
  est.loglik_estimate = res.loglik;
  return est;
}

GradientEstimate analytic_buffered_gradient(const ModelParams& params,
                                            std::span<const double> y,
                                            const SubsequenceSpec& spec) {
  if (params.kind() != ModelKind::Lgssm)
    throw UnsupportedModelError(
        "analytic buffered gradient requires the LGSSM");
  if (spec.T != static_cast<int>(y.size()))
    throw DomainError("subsequence spec does not match data length");
  const std::span<const double> window =
      y.subspan(spec.star_start - 1, spec.window_len());
  std::vector<double> weights(spec.window_len());
  for (int j = 0; j < spec.window_len(); ++j)
    weights[j] = spec.scale(spec.star_start + j);
  GradientEstimate est = exact_score(params, window, weights);
  est.s_start = spec.s_start;
  est.s_len = spec.s_len();
  est.buffer = spec.buffer;
  est.particles = 0;
  est.estimator = "kalman";
  return est;
}

}  // namespace pfsgld
