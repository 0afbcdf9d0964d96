#include "pfsgld/kalman.hpp"

#include <cmath>

#include "pfsgld/errors.hpp"

namespace pfsgld {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_lgssm(const ModelParams& params) {
  if (params.kind() != ModelKind::Lgssm)
    throw UnsupportedModelError("Kalman recursions require the LGSSM");
}

struct FilterPass {
  std::vector<double> m, p;       // filtered, index 0..T
  std::vector<double> p_pred;     // one-step predicted variance, index 1..T
  double loglik = 0.0;
};

FilterPass run_filter_pass(const ModelParams& params,
                           std::span<const double> y,
                           const GaussianBelief* init) {
  require_lgssm(params);
  const double phi = params.phi();
  const double s2 = params.sigma() * params.sigma();
  const double t2 = params.tau() * params.tau();
  const int T = static_cast<int>(y.size());

  FilterPass f;
  f.m.resize(T + 1);
  f.p.resize(T + 1);
  f.p_pred.resize(T + 1);
  f.m[0] = init ? init->mean : 0.0;
  f.p[0] = init ? init->variance : stationary_variance(params);
  for (int t = 1; t <= T; ++t) {
    const double m_pred = phi * f.m[t - 1];
    const double p_pred = phi * phi * f.p[t - 1] + s2;
    const double innov_var = p_pred + t2;
    const double innov = y[t - 1] - m_pred;
    f.loglik += -0.5 * (kLog2Pi + std::log(innov_var)) -
                innov * innov / (2.0 * innov_var);
    const double gain = p_pred / innov_var;
    f.m[t] = m_pred + gain * innov;
    f.p[t] = (1.0 - gain) * p_pred;
    f.p_pred[t] = p_pred;
  }
  return f;
}

}  // namespace

KalmanResult kalman_filter(const ModelParams& params,
                           std::span<const double> y,
                           const GaussianBelief* init) {
  const FilterPass f = run_filter_pass(params, y, init);
  KalmanResult out;
  out.loglik = f.loglik;
  out.beliefs.resize(y.size() + 1);
  for (size_t t = 0; t < out.beliefs.size(); ++t) {
    out.beliefs[t].mean = f.m[t];
    out.beliefs[t].variance = f.p[t];
  }
  return out;
}

std::vector<GaussianBelief> kalman_smoother(const ModelParams& params,
                                            std::span<const double> y,
                                            const GaussianBelief* init) {
  const FilterPass f = run_filter_pass(params, y, init);
  const double phi = params.phi();
  const int T = static_cast<int>(y.size());

  std::vector<GaussianBelief> s(T + 1);
  s[T].mean = f.m[T];
  s[T].variance = f.p[T];
  for (int t = T - 1; t >= 0; --t) {
    const double gain = f.p[t] * phi / f.p_pred[t + 1];
    s[t].mean = f.m[t] + gain * (s[t + 1].mean - phi * f.m[t]);
    s[t].variance =
        f.p[t] + gain * gain * (s[t + 1].variance - f.p_pred[t + 1]);
    // Cov(x_{t+1}, x_t | y_{1:T}) from the same smoother gain.
    s[t + 1].cross_prev = gain * s[t + 1].variance;
  }
  return s;
}

GradientEstimate exact_score(const ModelParams& params,
                             std::span<const double> y,
                             std::span<const double> weights) {
  require_lgssm(params);
  if (weights.size() != y.size())
    throw DomainError("exact_score: weights must have length T");

  const double phi = params.phi();
  const double sigma = params.sigma();
  const double tau = params.tau();
  const std::vector<GaussianBelief> s = kalman_smoother(params, y);

  GradientEstimate est;
  est.grad.assign(3, 0.0);
  est.s_len = static_cast<int>(y.size());
  est.estimator = "kalman";
  for (size_t t = 1; t <= y.size(); ++t) {
    const double w = weights[t - 1];
    if (w == 0.0) continue;
    const double ex2 = s[t].variance + s[t].mean * s[t].mean;
    const double ex2_prev =
        s[t - 1].variance + s[t - 1].mean * s[t - 1].mean;
    const double exx = s[t].cross_prev + s[t].mean * s[t - 1].mean;
    // E[(x_t - phi x_{t-1})^2] and E[(y_t - x_t)^2] under the smoothed law.
    const double a = ex2 - 2.0 * phi * exx + phi * phi * ex2_prev;
    const double yt = y[t - 1];
    const double b = yt * yt - 2.0 * yt * s[t].mean + ex2;
    est.grad[0] += w * (exx - phi * ex2_prev) / (sigma * sigma);
    est.grad[1] += w * (sigma - a / sigma);
    est.grad[2] += w * (tau - b / tau);
  }
  return est;
}

std::vector<double> initial_state_grad(const ModelParams& params,
                                       const GaussianBelief& x0_smoothed) {
  require_lgssm(params);
  const double phi = params.phi();
  const double sigma = params.sigma();
  const double s = 1.0 / sigma;
  const double ex2 =
      x0_smoothed.variance + x0_smoothed.mean * x0_smoothed.mean;
  // log nu = log s + 0.5 log(1 - phi^2) - x0^2 (1 - phi^2) s^2 / 2 + const
  std::vector<double> g(3, 0.0);
  g[0] = phi * (ex2 / (sigma * sigma) - 1.0 / (1.0 - phi * phi));
  g[1] = 1.0 / s - ex2 * (1.0 - phi * phi) * s;
  return g;
}

}  // namespace pfsgld
