#ifndef PFSGLD_PARTICLE_HPP_
#define PFSGLD_PARTICLE_HPP_

#include <functional>
#include <span>
#include <vector>

#include "pfsgld/model.hpp"

namespace pfsgld {

enum class ProposalKind { Prior, OptimalInstrumental };
enum class ResamplingKind { Multinomial, Stratified, Residual };

std::string proposal_name(ProposalKind p);
ProposalKind proposal_from_name(const std::string& name);
std::string resampling_name(ResamplingKind r);
ResamplingKind resampling_from_name(const std::string& name);

// The proposal each model uses in the experiments: the optimal instrumental
// kernel where it exists (LGSSM, GARCH), the prior kernel for the SVM.
ProposalKind default_proposal(ModelKind kind);

// Pairwise statistic h_t(x_t, x_{t-1}); adds its value into out. aux values
// carry sigma_t^2 for GARCH and are zero otherwise.
using PairwiseStat = std::function<void(
    int t, double y, double x, double aux, double x_prev, double aux_prev,
    std::span<double> out)>;

// Draw n_out ancestor indices from normalized log-weights. Every scheme
// satisfies E[#offspring of i] = n_out * w_i. n_out = 0 means "as many as
// there are weights".
std::vector<int> resample(std::span<const double> log_weights,
                          ResamplingKind kind, RandomSource& rng,
                          int n_out = 0);

// Weighted particle cloud with running pairwise statistics. One SIR sweep
// is: resample ancestors, propagate through the proposal, reweight, update
// H_t^(i) = H_{t-1}^(a_i) + h_t. Weights stay normalized in log space.
class ParticleCloud {
 public:
  // Particles drawn from the stationary prior, uniform weights, zero stats.
  ParticleCloud(const ModelParams& params, int n, int stat_dim,
                RandomSource& rng);

  // One SIR iteration against observation y_t at (global) time index t.
  // h may be null (no statistic accumulation). Throws
  // DegenerateFilterError(t) if every weight underflows to zero.
  void step(const ModelParams& params, double y_t, int t,
            const PairwiseStat* h, ProposalKind proposal,
            ResamplingKind resampling, RandomSource& rng);

  int size() const { return n_; }
  int stat_dim() const { return stat_dim_; }
  std::span<const double> positions() const { return x_; }
  std::span<const double> aux_variances() const { return aux_; }
  std::span<const double> log_weights() const { return log_w_; }
  std::span<const int> ancestors() const { return ancestors_; }
  std::span<const double> stats_row(int i) const {
    return {stats_.data() + static_cast<size_t>(i) * stat_dim_,
            static_cast<size_t>(stat_dim_)};
  }
  double log_marginal() const { return log_marginal_; }

  // H = sum_i w_i H^(i).
  std::vector<double> weighted_stats() const;
  LatentState particle(int i) const;

  // Relabel particles; order must be a permutation of 0..n-1. All weighted
  // quantities are invariant under this.
  void permute(std::span<const int> order);

 private:
  int n_;
  int stat_dim_;
  bool has_aux_;
  std::vector<double> x_, aux_, log_w_, stats_;
  std::vector<int> ancestors_;
  double log_marginal_ = 0.0;
  // scratch for the gather step
  std::vector<double> x_prev_, aux_prev_, stats_prev_, w_new_;
};

struct FilterResult {
  std::vector<double> stats;   // H
  double loglik = 0.0;         // log-marginal estimate over the window
  ParticleCloud cloud;
};

// Full SIR pass over a window of observations. t_start is the global time
// index of y.front(), forwarded to the statistic callback.
FilterResult run_filter(const ModelParams& params, std::span<const double> y,
                        const PairwiseStat* h, int stat_dim, int n_particles,
                        ProposalKind proposal, ResamplingKind resampling,
                        RandomSource& rng, int t_start = 1);

// sum_t sum_i w_{t-1}^(i) log p(y_t | x_{t-1}^(i)): the particle heldout
// loglikelihood. The inner term is the closed-form one-step marginal for
// LGSSM/GARCH and a single-sample plug-in for the SVM.
double heldout_loglik(const ModelParams& params, std::span<const double> y,
                      int n_particles, RandomSource& rng);

// r-step ahead variant: sum_{t: t+r <= T} sum_i w_{t-1}^(i)
// log p(y_{t+r} | x_{t-1}^(i)). Each particle is pushed x_{t-1} -> x_{t+r-1}
// by sampling transitions; the final step reuses the one-step marginal.
double predictive_loglik(const ModelParams& params, std::span<const double> y,
                         int r, int n_particles, RandomSource& rng);

}  // namespace pfsgld

#endif  // PFSGLD_PARTICLE_HPP_
