#ifndef PFSGLD_GRADIENT_HPP_
#define PFSGLD_GRADIENT_HPP_

#include <span>
#include <vector>

#include "pfsgld/estimate.hpp"
#include "pfsgld/kalman.hpp"
#include "pfsgld/particle.hpp"

namespace pfsgld {

enum class SamplingScheme { UniformStart, StrictPartition };

std::string scheme_name(SamplingScheme s);
SamplingScheme scheme_from_name(const std::string& name);

// A sampled subsequence S = {s_start..s_end} (1-based, inclusive) with its
// buffered extension S* = {s_start-B..s_end+B} clipped to [1, T], and the
// exact inverse inclusion probabilities used as statistic scale factors.
struct SubsequenceSpec {
  int T = 0;
  int s_start = 1, s_end = 0;
  int buffer = 0;
  int star_start = 1, star_end = 0;
  SamplingScheme scheme = SamplingScheme::UniformStart;
  std::vector<double> scale_s;  // indexed t - s_start for t in S

  int s_len() const { return s_end - s_start + 1; }
  int window_len() const { return star_end - star_start + 1; }
  // Pr(t in S)^{-1} for t in S, 0 elsewhere.
  double scale(int t) const {
    return (t >= s_start && t <= s_end) ? scale_s[t - s_start] : 0.0;
  }
};

// UniformStart: start uniform on {0..T-S}, Pr(t in S) counted exactly, so
// the unbuffered estimator stays unbiased at the sequence edges.
// StrictPartition: one of the ceil(T/S) contiguous blocks, scale T/S.
SubsequenceSpec sample_subsequence(int T, int S, int B, SamplingScheme scheme,
                                   RandomSource& rng);

// Deterministic variants (tests, partition sweeps).
SubsequenceSpec subsequence_at(int T, int S, int B, int start);
SubsequenceSpec partition_block(int T, int S, int B, int block);
int partition_block_count(int T, int S);
SubsequenceSpec full_sequence_spec(int T);

// h_t of Eq.-(8) shape: scale_t * complete-data gradient inside S, zero on
// the buffers. The filter still traverses the buffer indices.
PairwiseStat buffered_statistic(const SubsequenceSpec& spec,
                                const ModelParams& params);

// g^PF(S, B, N): particle filter over y restricted to S* with stationary
// prior at star_start - 1, accumulating the masked statistics above.
GradientEstimate pf_buffered_gradient(const ModelParams& params,
                                      std::span<const double> y,
                                      const SubsequenceSpec& spec,
                                      int n_particles, ProposalKind proposal,
                                      ResamplingKind resampling,
                                      RandomSource& rng);

// ghat(S, B): the N = infinity analogue via the Kalman smoother on the
// window S*. LGSSM only.
GradientEstimate analytic_buffered_gradient(const ModelParams& params,
                                            std::span<const double> y,
                                            const SubsequenceSpec& spec);

}  // namespace pfsgld

#endif  // PFSGLD_GRADIENT_HPP_
