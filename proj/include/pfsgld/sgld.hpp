#ifndef PFSGLD_SGLD_HPP_
#define PFSGLD_SGLD_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfsgld/gradient.hpp"

namespace pfsgld {

// The gradient regimes: g^PF(S,0,N), g^PF(S,B,N), g^PF(S,T,N), g^PF(T,T,N),
// and the per-segment estimator used for week-segmented series.
enum class EstimatorKind { NoBuffer, Buffered, FullyBuffered, Full, Weekly };

std::string estimator_name(EstimatorKind e);
EstimatorKind estimator_from_name(const std::string& name);

struct SgldConfig {
  // Per-observation stepsize; the Langevin update applies eps = stepsize/T
  // so one grid {1, 0.1, 0.01, 0.001} works across sequence lengths.
  double stepsize = 0.1;
  int iterations = 1000;
  int subsequence = 40;
  int buffer = 10;
  int particles = 1000;
  EstimatorKind estimator = EstimatorKind::Buffered;
  SamplingScheme scheme = SamplingScheme::UniformStart;
  ResamplingKind resampling = ResamplingKind::Multinomial;
  bool use_default_proposal = true;  // per-model default
  ProposalKind proposal = ProposalKind::Prior;
  int burnin = 0;
  int thin = 1;
  // Abort after this many consecutive failed gradient evaluations
  // (degenerate filter or parameters outside the stationarity region).
  int max_consecutive_failures = 25;
};

struct Chain {
  ModelKind kind = ModelKind::Lgssm;
  std::vector<std::string> natural_names;
  std::vector<std::string> unconstrained_names;
  std::vector<std::vector<double>> samples;  // theta^(k), gradient coords
  std::vector<std::vector<double>> grads;    // g^PF used at step k
  std::vector<double> stepsizes;             // effective eps applied
  std::vector<double> wall_seconds;          // per-step wall clock

  int length() const { return static_cast<int>(samples.size()); }
  std::vector<double> natural_sample(int k) const;
};

// theta' = theta + eps*(grad + grad log prior) + N(0, 2 eps I) in gradient
// coordinates. If theta' leaves the prior support the noise is redrawn (up
// to 100 times); if that fails the step is abandoned and theta returned.
// with_noise = false is the deterministic (gradient ascent) test hook.
ModelParams sgld_step(const ModelParams& params, std::span<const double> grad,
                      double eps, RandomSource& rng, bool with_noise = true);

Chain run_chain(const ModelParams& theta0, std::span<const double> y,
                const SgldConfig& config, RandomSource& rng);

// Weekly-segment variant: each step picks one segment uniformly and scales
// its full-sequence gradient by the segment count.
Chain run_chain_segments(const ModelParams& theta0,
                         const std::vector<std::vector<double>>& segments,
                         const SgldConfig& config, RandomSource& rng);

// Coordinate-wise mean of the retained samples, in natural coordinates.
std::vector<double> posterior_mean(const Chain& chain, int burnin, int thin);

}  // namespace pfsgld

#endif  // PFSGLD_SGLD_HPP_
