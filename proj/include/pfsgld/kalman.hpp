#ifndef PFSGLD_KALMAN_HPP_
#define PFSGLD_KALMAN_HPP_

#include <span>
#include <vector>

#include "pfsgld/estimate.hpp"
#include "pfsgld/model.hpp"

namespace pfsgld {

// One-dimensional Gaussian belief about x_t. cross_prev holds the smoothed
// lag-one covariance Cov(x_t, x_{t-1} | y) and is only filled by the
// smoother (NaN from the filter, and at t = 0).
struct GaussianBelief {
  double mean = 0.0;
  double variance = 0.0;
  double cross_prev = std::numeric_limits<double>::quiet_NaN();
};

struct KalmanResult {
  // beliefs[t] for t = 0..T; index 0 is the (unobserved) stationary prior
  // on the latent preceding the first observation in y.
  std::vector<GaussianBelief> beliefs;
  double loglik = 0.0;
};

// Exact filter for the LGSSM via the prediction-error decomposition.
// y may be any window of the observation sequence; the latent before the
// first index is given the stationary prior N(0, sigma^2/(1-phi^2)), or
// `init` when provided (e.g. to hold the initial law fixed while
// differentiating the loglikelihood).
KalmanResult kalman_filter(const ModelParams& params,
                           std::span<const double> y,
                           const GaussianBelief* init = nullptr);

// Fixed-interval (RTS) smoother; returns smoothed beliefs with lag-one
// cross covariances.
std::vector<GaussianBelief> kalman_smoother(const ModelParams& params,
                                            std::span<const double> y,
                                            const GaussianBelief* init =
                                                nullptr);

// Score via Fisher's identity with exact Gaussian expectations:
//   sum_t weight_t * E[ grad log p(x_t, y_t | x_{t-1}) | y ],
// in gradient coordinates (phi, 1/sigma, 1/tau). weights has length
// y.size(); weight_t = 1 gives the full score, 0 masks an index, and
// Pr(t in S)^{-1} yields the subsequence estimators.
GradientEstimate exact_score(const ModelParams& params,
                             std::span<const double> y,
                             std::span<const double> weights);

// The boundary term the pairwise sum leaves out: E[grad log nu(x_0 | theta)]
// under the smoothed law of x_0, in gradient coordinates. Adding it to
// exact_score with unit weights yields the exact gradient of the marginal
// loglikelihood including the stationary prior's theta-dependence.
std::vector<double> initial_state_grad(const ModelParams& params,
                                       const GaussianBelief& x0_smoothed);

}  // namespace pfsgld

#endif  // PFSGLD_KALMAN_HPP_
