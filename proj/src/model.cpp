#include "pfsgld/model.hpp"

#include <cmath>

#include "pfsgld/errors.hpp"

namespace pfsgld {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double gaussian_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var)) - d * d / (2.0 * var);
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

double garch_aux(const LatentState& s, const char* who) {
  if (!s.aux_variance)
    throw ContractError(std::string("GARCH state missing aux_variance in ") +
                        who);
  return *s.aux_variance;
}

}  // namespace

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lgssm:
      return "lgssm";
    case ModelKind::Svm:
      return "svm";
    case ModelKind::Garch:
      return "garch";
  }
  return "?";
}

ModelKind model_from_name(const std::string& name) {
  if (name == "lgssm") return ModelKind::Lgssm;
  if (name == "svm") return ModelKind::Svm;
  if (name == "garch") return ModelKind::Garch;
  throw DomainError("unknown model '" + name + "'");
}

ModelParams::ModelParams(ModelKind kind, std::array<double, 4> v)
    : kind_(kind), v_(v) {
  for (int i = 0; i < dim(); ++i)
    require(std::isfinite(v_[i]), "non-finite parameter");
  if (kind_ == ModelKind::Garch) {
    require(v_[0] > 0.0, "GARCH requires mu > 0");
    require(v_[1] > 0.0 && v_[1] < 1.0, "GARCH requires phi in (0,1)");
    require(v_[2] > 0.0 && v_[2] < 1.0, "GARCH requires lambda in (0,1)");
    require(v_[3] > 0.0, "GARCH requires tau > 0");
  } else {
    require(v_[1] > 0.0, "sigma must be > 0");
    require(v_[2] > 0.0, "tau must be > 0");
  }
}

ModelParams ModelParams::lgssm(double phi, double sigma, double tau) {
  return ModelParams(ModelKind::Lgssm, {phi, sigma, tau, 0.0});
}

ModelParams ModelParams::svm(double phi, double sigma, double tau) {
  return ModelParams(ModelKind::Svm, {phi, sigma, tau, 0.0});
}

ModelParams ModelParams::garch(double mu, double phi, double lambda,
                               double tau) {
  return ModelParams(ModelKind::Garch, {mu, phi, lambda, tau});
}

ModelParams ModelParams::garch_abc(double alpha, double beta, double gamma,
                                   double tau) {
  require(alpha > 0.0 && beta > 0.0 && gamma > 0.0,
          "GARCH requires alpha, beta, gamma > 0");
  const double phi = beta + gamma;
  require(phi < 1.0, "GARCH requires beta + gamma < 1");
  return garch(alpha / (1.0 - phi), phi, beta / phi, tau);
}

ModelParams ModelParams::from_natural(ModelKind kind,
                                      std::span<const double> v) {
  require(static_cast<int>(v.size()) == (kind == ModelKind::Garch ? 4 : 3),
          "wrong parameter count");
  if (kind == ModelKind::Garch) return garch(v[0], v[1], v[2], v[3]);
  return ModelParams(kind, {v[0], v[1], v[2], 0.0});
}

ModelParams ModelParams::from_unconstrained(ModelKind kind,
                                            std::span<const double> u) {
  require(static_cast<int>(u.size()) == (kind == ModelKind::Garch ? 4 : 3),
          "wrong parameter count");
  if (kind == ModelKind::Garch)
    return garch(std::exp(u[0]), sigmoid(u[1]), sigmoid(u[2]), u[3]);
  require(u[1] > 0.0 && u[2] > 0.0, "1/sigma and 1/tau must be > 0");
  return ModelParams(kind, {u[0], 1.0 / u[1], 1.0 / u[2], 0.0});
}

bool ModelParams::unconstrained_in_support(ModelKind kind,
                                           std::span<const double> u) {
  for (double v : u)
    if (!std::isfinite(v)) return false;
  if (kind == ModelKind::Garch) {
    // mu < 2 comes from the Uniform(0,2) prior; sigmoid must stay strictly
    // inside (0,1) in double precision.
    return u.size() == 4 && u[0] < std::log(2.0) && u[3] > 0.0 &&
           sigmoid(u[1]) > 0.0 && sigmoid(u[1]) < 1.0 && sigmoid(u[2]) > 0.0 &&
           sigmoid(u[2]) < 1.0;
  }
  return u.size() == 3 && u[1] > 0.0 && u[2] > 0.0;
}

double ModelParams::phi() const {
  return kind_ == ModelKind::Garch ? v_[1] : v_[0];
}
double ModelParams::sigma() const {
  require(kind_ != ModelKind::Garch, "GARCH has no sigma parameter");
  return v_[1];
}
double ModelParams::tau() const {
  return kind_ == ModelKind::Garch ? v_[3] : v_[2];
}
double ModelParams::mu() const {
  require(kind_ == ModelKind::Garch, "mu is GARCH-only");
  return v_[0];
}
double ModelParams::lambda() const {
  require(kind_ == ModelKind::Garch, "lambda is GARCH-only");
  return v_[2];
}

std::vector<double> ModelParams::natural() const {
  return {v_.begin(), v_.begin() + dim()};
}

std::vector<double> ModelParams::unconstrained() const {
  if (kind_ == ModelKind::Garch)
    return {std::log(v_[0]), logit(v_[1]), logit(v_[2]), v_[3]};
  return {v_[0], 1.0 / v_[1], 1.0 / v_[2]};
}

std::vector<std::string> ModelParams::natural_names() const {
  if (kind_ == ModelKind::Garch) return {"mu", "phi", "lambda", "tau"};
  return {"phi", "sigma", "tau"};
}

std::vector<std::string> ModelParams::unconstrained_names() const {
  if (kind_ == ModelKind::Garch)
    return {"log_mu", "logit_phi", "logit_lambda", "tau"};
  return {"phi", "sigma_inv", "tau_inv"};
}

double stationary_variance(const ModelParams& params) {
  if (params.kind() == ModelKind::Garch) return params.mu();
  const double phi = params.phi();
  require(std::abs(phi) < 1.0,
          "stationary distribution requires |phi| < 1");
  const double sigma = params.sigma();
  return sigma * sigma / (1.0 - phi * phi);
}

double window_prior_variance(const ModelParams& params) {
  if (params.kind() == ModelKind::Garch) return params.mu();
  const double phi = params.phi();
  const double sigma = params.sigma();
  if (std::abs(phi) < 1.0) return sigma * sigma / (1.0 - phi * phi);
  return sigma * sigma;
}

LatentState prior_initial_sample(const ModelParams& params,
                                 RandomSource& rng) {
  const double var = stationary_variance(params);
  LatentState s;
  s.x = rng.normal(0.0, std::sqrt(var));
  if (params.kind() == ModelKind::Garch) s.aux_variance = var;
  return s;
}

double garch_next_variance(const ModelParams& params, double x_prev,
                           double s2_prev) {
  return params.alpha() + params.beta() * x_prev * x_prev +
         params.gamma() * s2_prev;
}

double transition_logpdf(const ModelParams& params, const LatentState& x_prev,
                         const LatentState& x) {
  if (params.kind() == ModelKind::Garch) {
    const double s2 =
        garch_next_variance(params, x_prev.x, garch_aux(x_prev, "transition"));
    const double claimed = garch_aux(x, "transition");
    if (std::abs(claimed - s2) > 1e-9 * std::max(1.0, std::abs(s2)))
      throw ContractError("GARCH aux_variance does not match recursion");
    return gaussian_logpdf(x.x, 0.0, s2);
  }
  const double sigma = params.sigma();
  return gaussian_logpdf(x.x, params.phi() * x_prev.x, sigma * sigma);
}

double emission_logpdf(const ModelParams& params, const LatentState& x,
                       double y) {
  const double tau = params.tau();
  switch (params.kind()) {
    case ModelKind::Lgssm:
    case ModelKind::Garch:
      return gaussian_logpdf(y, x.x, tau * tau);
    case ModelKind::Svm:
      return -0.5 * kLog2Pi - 0.5 * x.x - std::log(tau) -
             y * y * std::exp(-x.x) / (2.0 * tau * tau);
  }
  return 0.0;
}

void complete_data_grad_raw(const ModelParams& params, double x, double aux,
                            double x_prev, double aux_prev, double y,
                            double* out) {
  switch (params.kind()) {
    case ModelKind::Lgssm: {
      const double sigma = params.sigma(), tau = params.tau();
      const double rx = x - params.phi() * x_prev;
      const double ry = y - x;
      out[0] = rx * x_prev / (sigma * sigma);
      out[1] = sigma - rx * rx / sigma;
      out[2] = tau - ry * ry / tau;
      return;
    }
    case ModelKind::Svm: {
      const double sigma = params.sigma(), tau = params.tau();
      const double rx = x - params.phi() * x_prev;
      out[0] = rx * x_prev / (sigma * sigma);
      out[1] = sigma - rx * rx / sigma;
      out[2] = tau - y * y * std::exp(-x) / tau;
      return;
    }
    case ModelKind::Garch: {
      const double mu = params.mu(), phi = params.phi(),
                   lambda = params.lambda(), tau = params.tau();
      const double s2 = aux;
      const double c = (x * x - s2) / (2.0 * s2 * s2);
      const double xp2 = x_prev * x_prev;
      const double ry = y - x;
      out[0] = c * (1.0 - phi) * mu;
      out[1] = c * (lambda * xp2 + (1.0 - lambda) * aux_prev - mu) * phi *
               (1.0 - phi);
      out[2] = c * (phi * xp2 - phi * aux_prev) * lambda * (1.0 - lambda);
      out[3] = (ry * ry - tau * tau) / (tau * tau * tau);
      return;
    }
  }
}

std::vector<double> complete_data_grad(const ModelParams& params,
                                       const LatentState& x,
                                       const LatentState& x_prev, double y) {
  std::vector<double> out(params.dim());
  double aux = 0.0, aux_prev = 0.0;
  if (params.kind() == ModelKind::Garch) {
    aux_prev = garch_aux(x_prev, "complete_data_grad");
    aux = garch_aux(x, "complete_data_grad");
    const double s2 = garch_next_variance(params, x_prev.x, aux_prev);
    if (std::abs(aux - s2) > 1e-9 * std::max(1.0, std::abs(s2)))
      throw ContractError("GARCH aux_variance does not match recursion");
  }
  complete_data_grad_raw(params, x.x, aux, x_prev.x, aux_prev, y, out.data());
  return out;
}

// Priors (Appendix conventions):
//   LGSSM/SVM: phi | sigma ~ N(0, 100 sigma^2),
//              1/sigma, 1/tau ~ Gamma(101, scale 1/101).
//   GARCH:     mu ~ Uniform(0,2), (phi+1)/2 ~ Beta(10, 1.5),
//              (lambda+1)/2 ~ Beta(20, 1.5), tau^2 ~ InvGamma(2, 0.5).
// Densities are expressed in the gradient coordinates, so the GARCH terms
// carry the log-Jacobians of mu -> log mu, phi -> logit phi,
// lambda -> logit lambda and tau^2 -> tau.

namespace {

void check_prior_support(const ModelParams& params) {
  if (params.kind() == ModelKind::Garch) {
    require(params.mu() < 2.0, "GARCH prior requires mu in (0,2)");
  }
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace

double log_prior(const ModelParams& params) {
  check_prior_support(params);
  if (params.kind() == ModelKind::Garch) {
    const double mu = params.mu(), phi = params.phi(),
                 lambda = params.lambda(), tau = params.tau();
    double lp = -std::log(2.0) + std::log(mu);  // Uniform(0,2) + Jacobian
    const double zp = (phi + 1.0) / 2.0;
    lp += 9.0 * std::log(zp) + 0.5 * std::log(1.0 - zp) -
          log_beta_fn(10.0, 1.5) - std::log(2.0) +
          std::log(phi * (1.0 - phi));
    const double zl = (lambda + 1.0) / 2.0;
    lp += 19.0 * std::log(zl) + 0.5 * std::log(1.0 - zl) -
          log_beta_fn(20.0, 1.5) - std::log(2.0) +
          std::log(lambda * (1.0 - lambda));
    // InvGamma(2, 0.5) on tau^2, Jacobian 2*tau.
    lp += 2.0 * std::log(0.5) - std::lgamma(2.0) - 6.0 * std::log(tau) -
          0.5 / (tau * tau) + std::log(2.0 * tau);
    return lp;
  }
  const double phi = params.phi();
  const double s = 1.0 / params.sigma(), r = 1.0 / params.tau();
  double lp = -0.5 * std::log(200.0 * M_PI) + std::log(s) -
              phi * phi * s * s / 200.0;
  const double gamma_const = 101.0 * std::log(101.0) - std::lgamma(101.0);
  lp += 100.0 * std::log(s) - 101.0 * s + gamma_const;
  lp += 100.0 * std::log(r) - 101.0 * r + gamma_const;
  return lp;
}

std::vector<double> log_prior_grad(const ModelParams& params) {
  check_prior_support(params);
  if (params.kind() == ModelKind::Garch) {
    const double mu = params.mu(), phi = params.phi(),
                 lambda = params.lambda(), tau = params.tau();
    std::vector<double> g(4);
    g[0] = 1.0;
    g[1] = (9.0 / (phi + 1.0) - 0.5 / (1.0 - phi)) * phi * (1.0 - phi) + 1.0 -
           2.0 * phi;
    g[2] = (19.0 / (lambda + 1.0) - 0.5 / (1.0 - lambda)) * lambda *
               (1.0 - lambda) +
           1.0 - 2.0 * lambda;
    g[3] = -5.0 / tau + 1.0 / (tau * tau * tau);
    (void)mu;
    return g;
  }
  const double phi = params.phi();
  const double s = 1.0 / params.sigma(), r = 1.0 / params.tau();
  std::vector<double> g(3);
  g[0] = -phi * s * s / 100.0;
  g[1] = 101.0 / s - phi * phi * s / 100.0 - 101.0;
  g[2] = 100.0 / r - 101.0;
  return g;
}

LatentState sample_transition(const ModelParams& params,
                              const LatentState& x_prev, RandomSource& rng) {
  LatentState next;
  if (params.kind() == ModelKind::Garch) {
    const double s2 = garch_next_variance(params, x_prev.x,
                                          garch_aux(x_prev, "transition"));
    next.x = rng.normal(0.0, std::sqrt(s2));
    next.aux_variance = s2;
  } else {
    next.x = rng.normal(params.phi() * x_prev.x, params.sigma());
  }
  return next;
}

double obs_marginal_logpdf(const ModelParams& params,
                           const LatentState& x_prev, double y,
                           RandomSource& rng) {
  const double tau = params.tau();
  switch (params.kind()) {
    case ModelKind::Lgssm: {
      const double sigma = params.sigma();
      return gaussian_logpdf(y, params.phi() * x_prev.x,
                             sigma * sigma + tau * tau);
    }
    case ModelKind::Garch: {
      const double s2 = garch_next_variance(
          params, x_prev.x, garch_aux(x_prev, "obs_marginal"));
      return gaussian_logpdf(y, 0.0, s2 + tau * tau);
    }
    case ModelKind::Svm: {
      // No closed form; plug in one sampled transition.
      const LatentState x = sample_transition(params, x_prev, rng);
      return emission_logpdf(params, x, y);
    }
  }
  return 0.0;
}

Trajectory simulate(const ModelParams& params, int T, RandomSource& rng) {
  require(T >= 1, "simulate requires T >= 1");
  Trajectory traj;
  traj.latents.reserve(T + 1);
  traj.observations.reserve(T);
  traj.latents.push_back(prior_initial_sample(params, rng));
  const double tau = params.tau();
  for (int t = 1; t <= T; ++t) {
    const LatentState x = sample_transition(params, traj.latents.back(), rng);
    double y;
    if (params.kind() == ModelKind::Svm)
      y = rng.normal(0.0, std::exp(0.5 * x.x) * tau);
    else
      y = rng.normal(x.x, tau);
    traj.latents.push_back(x);
    traj.observations.push_back(y);
  }
  return traj;
}

double lipschitz_bound(const ModelParams& params) {
  switch (params.kind()) {
    case ModelKind::Lgssm: {
      const double s2 = params.sigma() * params.sigma();
      const double t2 = params.tau() * params.tau();
      return std::abs(params.phi()) * t2 / (s2 + t2);
    }
    case ModelKind::Svm:
      return std::abs(params.phi());
    case ModelKind::Garch:
      throw UnsupportedModelError(
          "no Lipschitz bound for GARCH (not log-concave)");
  }
  return 0.0;
}

ModelParams draw_init_params(ModelKind kind, RandomSource& rng) {
  if (kind == ModelKind::Garch) {
    // Jittered version of the fixed starting point used for the exchange
    // rate experiments: (log mu, logit phi, logit lambda, tau).
    const double u0 = -0.4 + 0.1 * rng.normal();
    const double u1 = 1.7 + 0.1 * rng.normal();
    const double u2 = 2.7 + 0.1 * rng.normal();
    const double u3 = std::abs(0.1 + 0.01 * rng.normal());
    const double u[4] = {u0, u1, u2, u3};
    return ModelParams::from_unconstrained(kind, u);
  }
  const double s = rng.gamma(2.0, 0.5);
  const double r = rng.gamma(2.0, 0.5);
  const double sigma = 1.0 / s;
  const double phi = rng.normal(0.0, sigma);
  return kind == ModelKind::Lgssm ? ModelParams::lgssm(phi, sigma, 1.0 / r)
                                  : ModelParams::svm(phi, sigma, 1.0 / r);
}

}  // namespace pfsgld
