// Test-only reference implementations, independent of the library's
// recursions: central finite differences, a dense multivariate-Gaussian
// treatment of the LGSSM, and small statistics helpers.
#ifndef PFSGLD_TESTS_ORACLES_HPP_
#define PFSGLD_TESTS_ORACLES_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pfsgld/model.hpp"

namespace oracle {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite differences of f at u.
inline std::vector<double> fd_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> u, double h = 1e-5) {
  std::vector<double> g(u.size());
  std::vector<double> p(u.begin(), u.end());
  for (size_t d = 0; d < u.size(); ++d) {
    const double step = h * std::max(1.0, std::abs(u[d]));
    const double saved = p[d];
    p[d] = saved + step;
    const double fp = f(p);
    p[d] = saved - step;
    const double fm = f(p);
    p[d] = saved;
    g[d] = (fp - fm) / (2.0 * step);
  }
  return g;
}

// Dense treatment of the LGSSM: the joint law of (x_0..x_T, y_1..y_T) is
// Gaussian with stationary AR(1) latent covariance, so the marginal
// likelihood and all conditional moments follow from matrix identities.
struct DenseLgssm {
  Eigen::VectorXd smoothed_mean;   // E[x_t | y], t = 0..T
  Eigen::MatrixXd smoothed_cov;    // Cov(x | y), (T+1)x(T+1)
  double loglik = 0.0;

  DenseLgssm(const pfsgld::ModelParams& params, std::span<const double> y) {
    const double phi = params.phi();
    const double s2 = params.sigma() * params.sigma();
    const double t2 = params.tau() * params.tau();
    const double v0 = s2 / (1.0 - phi * phi);
    const int T = static_cast<int>(y.size());

    Eigen::MatrixXd sx(T + 1, T + 1);
    for (int i = 0; i <= T; ++i)
      for (int j = 0; j <= T; ++j)
        sx(i, j) = v0 * std::pow(phi, std::abs(i - j));

    // y_t = x_t + noise for t = 1..T
    Eigen::MatrixXd sy = sx.block(1, 1, T, T);
    sy.diagonal().array() += t2;
    Eigen::MatrixXd sxy = sx.block(0, 1, T + 1, T);

    Eigen::VectorXd yv(T);
    for (int t = 0; t < T; ++t) yv(t) = y[t];

    const Eigen::LLT<Eigen::MatrixXd> llt(sy);
    const Eigen::VectorXd alpha = llt.solve(yv);
    double logdet = 0.0;
    for (int t = 0; t < T; ++t) logdet += 2.0 * std::log(llt.matrixL()(t, t));
    loglik = -0.5 * (T * std::log(2.0 * M_PI) + logdet + yv.dot(alpha));

    smoothed_mean = sxy * alpha;
    smoothed_cov = sx - sxy * llt.solve(sxy.transpose());
  }
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) s.mean += x;
  s.mean /= n;
  double m2 = 0.0;
  for (double x : xs) m2 += (x - s.mean) * (x - s.mean);
  s.sd = xs.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  s.se = s.sd / std::sqrt(n);
  return s;
}

// chi-square upper quantiles at p = 0.999 (test threshold "p > 0.001").
inline double chi2_q999(int df) {
  switch (df) {
    case 1: return 10.828;
    case 2: return 13.816;
    case 3: return 16.266;
    case 4: return 18.467;
    default: return 0.0;
  }
}

}  // namespace oracle

#endif  // PFSGLD_TESTS_ORACLES_HPP_
