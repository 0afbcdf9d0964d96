#ifndef PFSGLD_DIAGNOSTICS_HPP_
#define PFSGLD_DIAGNOSTICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfsgld/gradient.hpp"
#include "pfsgld/sgld.hpp"

namespace pfsgld {

// Inverse multiquadratic kernel K(a, b) = (1 + ||a-b||^2)^(-1/2) and the
// derivatives the Stein kernel needs along one coordinate.
double imq_kernel(std::span<const double> a, std::span<const double> b);

struct ImqParts {
  double k;         // K(a, b)
  double da;        // dK/da_d
  double db;        // dK/db_d
  double dadb;      // d2K/da_d db_d
};
ImqParts imq_parts(std::span<const double> a, std::span<const double> b,
                   int d);

// Chain samples (gradient coordinates, post burnin/thinning) paired with
// stochastic estimates of the posterior score at each sample.
struct KsdInput {
  std::vector<std::vector<double>> samples;
  std::vector<std::vector<double>> scores;
};

// Per-dimension kernel Stein discrepancy: sqrt(sum_{k,k'} K0^d / Ktilde^2)
// with the four-term score expansion of the Stein kernel.
std::vector<double> ksd_components(const KsdInput& input, int threads = 1);
double ksd_total(const KsdInput& input, int threads = 1);

// Squared error of the running posterior-mean estimate against the true
// parameters, per step from burnin onward, in natural coordinates.
std::vector<std::vector<double>> mse_to_truth(
    const Chain& chain, std::span<const double> theta_star_natural,
    int burnin);

// One cell of a gradient bias sweep; particles = 0 requests the analytic
// N = infinity estimator (LGSSM only).
struct BiasCell {
  int subsequence = 16;
  int buffer = 0;
  long particles = 1000;
  SamplingScheme scheme = SamplingScheme::UniformStart;
};

struct BiasRow {
  std::string model;
  std::string param;  // coordinate name, or "norm"
  int subsequence = 0;
  int buffer = 0;
  long particles = 0;
  std::string scheme;
  int n_reps = 0;
  double bias = 0.0;
  double bias_se = 0.0;
  double mse = 0.0;
  double wall_time_s = 0.0;
};

// Replicated bias/MSE of the buffered estimators against a reference score
// (Kalman for LGSSM, a cached large-N particle gradient otherwise). Each
// replicate draws its own subsequence and particles from a seed stream
// derived from (seed, cell, rep), so results do not depend on threading.
std::vector<BiasRow> grad_bias_experiment(
    const ModelParams& params, std::span<const double> y,
    const std::vector<BiasCell>& cells, int n_reps,
    std::span<const double> reference, ProposalKind proposal,
    ResamplingKind resampling, std::uint64_t seed, int threads = 1);

}  // namespace pfsgld

#endif  // PFSGLD_DIAGNOSTICS_HPP_
