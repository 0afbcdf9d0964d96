#ifndef PFSGLD_MODEL_HPP_
#define PFSGLD_MODEL_HPP_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pfsgld/rng.hpp"

namespace pfsgld {

enum class ModelKind { Lgssm, Svm, Garch };

std::string model_name(ModelKind kind);
ModelKind model_from_name(const std::string& name);

// Latent state; GARCH carries the conditional variance sigma_t^2 alongside
// x_t as part of the (augmented) Markov state.
struct LatentState {
  double x = 0.0;
  std::optional<double> aux_variance;  // GARCH only
};

struct Trajectory {
  std::vector<LatentState> latents;  // length T+1, index 0 = initial draw
  std::vector<double> observations;  // length T
};

// Parameter vector of one model, held in natural coordinates.
//
// Natural coordinates:   LGSSM/SVM (phi, sigma, tau); GARCH (mu, phi, lambda,
//                        tau) with alpha = mu(1-phi), beta = phi*lambda,
//                        gamma = phi(1-lambda).
// Gradient coordinates:  LGSSM/SVM (phi, 1/sigma, 1/tau); GARCH (log mu,
//                        logit phi, logit lambda, tau). All gradients, SGLD
//                        noise, and KSD computations live in these.
class ModelParams {
 public:
  static ModelParams lgssm(double phi, double sigma, double tau);
  static ModelParams svm(double phi, double sigma, double tau);
  static ModelParams garch(double mu, double phi, double lambda, double tau);
  // Accepts the (alpha, beta, gamma) parametrization and inverts it.
  static ModelParams garch_abc(double alpha, double beta, double gamma,
                               double tau);
  static ModelParams from_natural(ModelKind kind, std::span<const double> v);
  static ModelParams from_unconstrained(ModelKind kind,
                                        std::span<const double> u);
  // True iff from_unconstrained(kind, u) would yield parameters strictly
  // inside the prior support (positivity, mu < 2 for GARCH, ...).
  static bool unconstrained_in_support(ModelKind kind,
                                       std::span<const double> u);

  ModelKind kind() const { return kind_; }
  int dim() const { return kind_ == ModelKind::Garch ? 4 : 3; }

  double phi() const;
  double sigma() const;   // LGSSM/SVM
  double tau() const;
  double mu() const;      // GARCH
  double lambda() const;  // GARCH
  double alpha() const { return mu() * (1.0 - phi()); }
  double beta() const { return phi() * lambda(); }
  double gamma() const { return phi() * (1.0 - lambda()); }

  std::vector<double> natural() const;
  std::vector<double> unconstrained() const;
  std::vector<std::string> natural_names() const;
  std::vector<std::string> unconstrained_names() const;

 private:
  ModelParams(ModelKind kind, std::array<double, 4> v);
  ModelKind kind_;
  std::array<double, 4> v_;  // natural values; unused slots zero
};

// Variance of the model's stationary/initial latent distribution:
// sigma^2/(1-phi^2) for LGSSM/SVM (requires |phi| < 1), the fixed point
// alpha/(1-beta-gamma) = mu of the variance recursion for GARCH.
double stationary_variance(const ModelParams& params);

// Initial-law variance for a window filter. Equals the stationary variance
// inside the stationarity region; outside it (|phi| >= 1 can happen
// mid-inference since the priors do not constrain phi) it falls back to the
// one-step innovation variance sigma^2 so gradient evaluations stay defined
// and the chain can pull itself back.
double window_prior_variance(const ModelParams& params);

LatentState prior_initial_sample(const ModelParams& params, RandomSource& rng);

// GARCH variance recursion sigma_t^2 = alpha + beta x^2 + gamma s2.
double garch_next_variance(const ModelParams& params, double x_prev,
                           double s2_prev);

double transition_logpdf(const ModelParams& params, const LatentState& x_prev,
                         const LatentState& x);
double emission_logpdf(const ModelParams& params, const LatentState& x,
                       double y);

// Gradient of log p(y_t, x_t | x_{t-1}, theta) in gradient coordinates.
// The raw variant is the particle-filter hot path; aux values are ignored
// for LGSSM/SVM.
void complete_data_grad_raw(const ModelParams& params, double x, double aux,
                            double x_prev, double aux_prev, double y,
                            double* out);
std::vector<double> complete_data_grad(const ModelParams& params,
                                       const LatentState& x,
                                       const LatentState& x_prev, double y);

double log_prior(const ModelParams& params);
std::vector<double> log_prior_grad(const ModelParams& params);

LatentState sample_transition(const ModelParams& params,
                              const LatentState& x_prev, RandomSource& rng);

// Closed-form one-step observation marginal log p(y_t | x_{t-1}) for LGSSM
// and GARCH; for the SVM it is intractable and evaluated by plugging in a
// single sampled transition.
double obs_marginal_logpdf(const ModelParams& params,
                           const LatentState& x_prev, double y,
                           RandomSource& rng);

Trajectory simulate(const ModelParams& params, int T, RandomSource& rng);

// Lipschitz bound L_theta on the latent smoothing kernels: LGSSM
// |phi| tau^2/(sigma^2+tau^2) (filtered kernels), SVM |phi| (prior kernels).
// GARCH is not log-concave, so no bound is available.
double lipschitz_bound(const ModelParams& params);

// Parameter initialization used by the synthetic-data experiments:
// LGSSM/SVM draw 1/sigma, 1/tau ~ Gamma(2, 0.5) then phi ~ N(0, sigma^2);
// GARCH starts from the fixed point documented in the README.
ModelParams draw_init_params(ModelKind kind, RandomSource& rng);

}  // namespace pfsgld

#endif  // PFSGLD_MODEL_HPP_
