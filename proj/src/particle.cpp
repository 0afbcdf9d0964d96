#include "pfsgld/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pfsgld/errors.hpp"

namespace pfsgld {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::string proposal_name(ProposalKind p) {
  return p == ProposalKind::Prior ? "prior" : "optimal";
}

ProposalKind proposal_from_name(const std::string& name) {
  if (name == "prior") return ProposalKind::Prior;
  if (name == "optimal") return ProposalKind::OptimalInstrumental;
  throw DomainError("unknown proposal '" + name + "'");
}

std::string resampling_name(ResamplingKind r) {
  switch (r) {
    case ResamplingKind::Multinomial:
      return "multinomial";
    case ResamplingKind::Stratified:
      return "stratified";
    case ResamplingKind::Residual:
      return "residual";
  }
  return "?";
}

ResamplingKind resampling_from_name(const std::string& name) {
  if (name == "multinomial") return ResamplingKind::Multinomial;
  if (name == "stratified") return ResamplingKind::Stratified;
  if (name == "residual") return ResamplingKind::Residual;
  throw DomainError("unknown resampling '" + name + "'");
}

ProposalKind default_proposal(ModelKind kind) {
  return kind == ModelKind::Svm ? ProposalKind::Prior
                                : ProposalKind::OptimalInstrumental;
}

std::vector<int> resample(std::span<const double> log_weights,
                          ResamplingKind kind, RandomSource& rng, int n_out) {
  const int n = static_cast<int>(log_weights.size());
  if (n_out <= 0) n_out = n;
  std::vector<double> cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = std::exp(log_weights[i]);
    if (std::isnan(w)) throw NumericError("resample: non-finite weight");
    acc += w;
    cum[i] = acc;
  }
  if (!(acc > 0.0) || !std::isfinite(acc))
    throw NumericError("resample: weights sum to zero or overflow");

  std::vector<int> idx(n_out);
  switch (kind) {
    case ResamplingKind::Multinomial: {
      for (int j = 0; j < n_out; ++j) {
        const double u = rng.uniform01() * acc;
        idx[j] = static_cast<int>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (idx[j] >= n) idx[j] = n - 1;
      }
      break;
    }
    case ResamplingKind::Stratified: {
      int i = 0;
      for (int j = 0; j < n_out; ++j) {
        const double u = (j + rng.uniform01()) / n_out * acc;
        while (i < n - 1 && cum[i] <= u) ++i;
        idx[j] = i;
      }
      break;
    }
    case ResamplingKind::Residual: {
      int filled = 0;
      std::vector<double> residual(n);
      double res_sum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double target =
            n_out * std::exp(log_weights[i]) / acc;
        const int copies = static_cast<int>(std::floor(target));
        for (int c = 0; c < copies && filled < n_out; ++c) idx[filled++] = i;
        residual[i] = target - copies;
        res_sum += residual[i];
      }
      // Remaining slots multinomially from fractional parts.
      double racc = 0.0;
      for (int i = 0; i < n; ++i) {
        racc += residual[i];
        residual[i] = racc;
      }
      while (filled < n_out) {
        const double u = rng.uniform01() * res_sum;
        int i = static_cast<int>(
            std::upper_bound(residual.begin(), residual.end(), u) -
            residual.begin());
        if (i >= n) i = n - 1;
        idx[filled++] = i;
      }
      break;
    }
  }
  return idx;
}

ParticleCloud::ParticleCloud(const ModelParams& params, int n, int stat_dim,
                             RandomSource& rng)
    : n_(n),
      stat_dim_(stat_dim),
      has_aux_(params.kind() == ModelKind::Garch) {
  if (n < 1) throw DomainError("particle cloud needs n >= 1");
  const double v0 = window_prior_variance(params);
  const double sd = std::sqrt(v0);
  x_.resize(n);
  for (int i = 0; i < n; ++i) x_[i] = rng.normal(0.0, sd);
  if (has_aux_) aux_.assign(n, v0);
  log_w_.assign(n, -std::log(static_cast<double>(n)));
  stats_.assign(static_cast<size_t>(n) * stat_dim, 0.0);
  ancestors_.resize(n);
  for (int i = 0; i < n; ++i) ancestors_[i] = i;
  x_prev_.resize(n);
  if (has_aux_) aux_prev_.resize(n);
  stats_prev_.resize(stats_.size());
  w_new_.resize(n);
}

LatentState ParticleCloud::particle(int i) const {
  LatentState s;
  s.x = x_[i];
  if (has_aux_) s.aux_variance = aux_[i];
  return s;
}

std::vector<double> ParticleCloud::weighted_stats() const {
  std::vector<double> out(stat_dim_, 0.0);
  for (int i = 0; i < n_; ++i) {
    const double w = std::exp(log_w_[i]);
    const double* row = stats_.data() + static_cast<size_t>(i) * stat_dim_;
    for (int d = 0; d < stat_dim_; ++d) out[d] += w * row[d];
  }
  return out;
}

void ParticleCloud::permute(std::span<const int> order) {
  if (static_cast<int>(order.size()) != n_)
    throw DomainError("permute: order must have one entry per particle");
  std::vector<double> x(n_), w(n_);
  std::vector<int> anc(n_);
  for (int i = 0; i < n_; ++i) {
    x[i] = x_[order[i]];
    w[i] = log_w_[order[i]];
    anc[i] = ancestors_[order[i]];
  }
  x_.swap(x);
  log_w_.swap(w);
  ancestors_.swap(anc);
  if (has_aux_) {
    std::vector<double> aux(n_);
    for (int i = 0; i < n_; ++i) aux[i] = aux_[order[i]];
    aux_.swap(aux);
  }
  if (stat_dim_ > 0) {
    std::vector<double> stats(stats_.size());
    for (int i = 0; i < n_; ++i)
      std::copy_n(
          stats_.data() + static_cast<size_t>(order[i]) * stat_dim_, stat_dim_,
          stats.data() + static_cast<size_t>(i) * stat_dim_);
    stats_.swap(stats);
  }
}

void ParticleCloud::step(const ModelParams& params, double y_t, int t,
                         const PairwiseStat* h, ProposalKind proposal,
                         ResamplingKind resampling, RandomSource& rng) {
  if (proposal == ProposalKind::OptimalInstrumental &&
      params.kind() == ModelKind::Svm)
    throw DomainError("no optimal instrumental kernel for the SVM");

  ancestors_ = resample(log_w_, resampling, rng, n_);
  for (int i = 0; i < n_; ++i) x_prev_[i] = x_[ancestors_[i]];
  if (has_aux_)
    for (int i = 0; i < n_; ++i) aux_prev_[i] = aux_[ancestors_[i]];
  if (stat_dim_ > 0) {
    for (int i = 0; i < n_; ++i)
      std::copy_n(stats_.data() + static_cast<size_t>(ancestors_[i]) *
                                      stat_dim_,
                  stat_dim_,
                  stats_prev_.data() + static_cast<size_t>(i) * stat_dim_);
    stats_.swap(stats_prev_);
  }

  const double tau = params.tau();
  const double t2 = tau * tau;
  switch (params.kind()) {
    case ModelKind::Lgssm: {
      const double phi = params.phi();
      const double sigma = params.sigma();
      const double s2 = sigma * sigma;
      if (proposal == ProposalKind::Prior) {
        const double c = -0.5 * (kLog2Pi + std::log(t2));
        for (int i = 0; i < n_; ++i) {
          x_[i] = phi * x_prev_[i] + sigma * rng.normal();
          const double d = y_t - x_[i];
          w_new_[i] = c - d * d / (2.0 * t2);
        }
      } else {
        const double denom = s2 + t2;
        const double pv = s2 * t2 / denom;
        const double psd = std::sqrt(pv);
        const double c = -0.5 * (kLog2Pi + std::log(denom));
        for (int i = 0; i < n_; ++i) {
          const double mean = (t2 * phi * x_prev_[i] + s2 * y_t) / denom;
          x_[i] = mean + psd * rng.normal();
          const double d = y_t - phi * x_prev_[i];
          w_new_[i] = c - d * d / (2.0 * denom);
        }
      }
      break;
    }
    case ModelKind::Svm: {
      const double phi = params.phi();
      const double sigma = params.sigma();
      const double c = -0.5 * kLog2Pi - std::log(tau);
      for (int i = 0; i < n_; ++i) {
        x_[i] = phi * x_prev_[i] + sigma * rng.normal();
        w_new_[i] =
            c - 0.5 * x_[i] - y_t * y_t * std::exp(-x_[i]) / (2.0 * t2);
      }
      break;
    }
    case ModelKind::Garch: {
      if (proposal == ProposalKind::Prior) {
        for (int i = 0; i < n_; ++i) {
          const double s2 =
              garch_next_variance(params, x_prev_[i], aux_prev_[i]);
          aux_[i] = s2;
          x_[i] = std::sqrt(s2) * rng.normal();
          const double d = y_t - x_[i];
          w_new_[i] = -0.5 * (kLog2Pi + std::log(t2)) - d * d / (2.0 * t2);
        }
      } else {
        for (int i = 0; i < n_; ++i) {
          const double s2 =
              garch_next_variance(params, x_prev_[i], aux_prev_[i]);
          aux_[i] = s2;
          const double denom = s2 + t2;
          const double mean = s2 * y_t / denom;
          x_[i] = mean + std::sqrt(s2 * t2 / denom) * rng.normal();
          w_new_[i] = -0.5 * (kLog2Pi + std::log(denom)) -
                      y_t * y_t / (2.0 * denom);
        }
      }
      break;
    }
  }

  if (h != nullptr && stat_dim_ > 0) {
    for (int i = 0; i < n_; ++i) {
      std::span<double> row(stats_.data() + static_cast<size_t>(i) * stat_dim_,
                            stat_dim_);
      (*h)(t, y_t, x_[i], has_aux_ ? aux_[i] : 0.0, x_prev_[i],
           has_aux_ ? aux_prev_[i] : 0.0, row);
    }
  }

  // Normalize in log space; the increment log(mean incremental weight)
  // accumulates the marginal likelihood estimate.
  double max_w = kNegInf;
  for (int i = 0; i < n_; ++i) {
    if (std::isnan(w_new_[i]))
      throw NumericError("particle step produced NaN weight");
    max_w = std::max(max_w, w_new_[i]);
  }
  if (max_w == kNegInf) throw DegenerateFilterError(t);
  double sum = 0.0;
  for (int i = 0; i < n_; ++i) sum += std::exp(w_new_[i] - max_w);
  const double lse = max_w + std::log(sum);
  log_marginal_ += lse - std::log(static_cast<double>(n_));
  for (int i = 0; i < n_; ++i) log_w_[i] = w_new_[i] - lse;
}

FilterResult run_filter(const ModelParams& params, std::span<const double> y,
                        const PairwiseStat* h, int stat_dim, int n_particles,
                        ProposalKind proposal, ResamplingKind resampling,
                        RandomSource& rng, int t_start) {
  if (y.empty()) throw DomainError("run_filter: empty window");
  if (n_particles < 2) throw DomainError("run_filter: need N >= 2");
  ParticleCloud cloud(params, n_particles, stat_dim, rng);
  for (size_t j = 0; j < y.size(); ++j)
    cloud.step(params, y[j], t_start + static_cast<int>(j), h, proposal,
               resampling, rng);
  FilterResult out{cloud.weighted_stats(), cloud.log_marginal(),
                   std::move(cloud)};
  return out;
}

double heldout_loglik(const ModelParams& params, std::span<const double> y,
                      int n_particles, RandomSource& rng) {
  if (y.empty()) return 0.0;
  if (n_particles < 2) throw DomainError("heldout_loglik: need N >= 2");
  const ProposalKind proposal = default_proposal(params.kind());
  ParticleCloud cloud(params, n_particles, 0, rng);
  double total = 0.0;
  for (size_t j = 0; j < y.size(); ++j) {
    for (int i = 0; i < n_particles; ++i) {
      const double w = std::exp(cloud.log_weights()[i]);
      total += w * obs_marginal_logpdf(params, cloud.particle(i), y[j], rng);
    }
    cloud.step(params, y[j], static_cast<int>(j) + 1, nullptr, proposal,
               ResamplingKind::Multinomial, rng);
  }
  return total;
}

double predictive_loglik(const ModelParams& params, std::span<const double> y,
                         int r, int n_particles, RandomSource& rng) {
  if (r < 1) throw DomainError("predictive_loglik: need r >= 1");
  const int T = static_cast<int>(y.size());
  if (T <= r) throw DomainError("predictive_loglik: need T > r");
  if (n_particles < 2) throw DomainError("predictive_loglik: need N >= 2");
  const ProposalKind proposal = default_proposal(params.kind());
  ParticleCloud cloud(params, n_particles, 0, rng);
  double total = 0.0;
  for (int t = 1; t + r <= T; ++t) {
    const double y_ahead = y[t + r - 1];
    for (int i = 0; i < n_particles; ++i) {
      const double w = std::exp(cloud.log_weights()[i]);
      // Push x_{t-1} to x_{t+r-1}; the marginal closes the last step.
      LatentState state = cloud.particle(i);
      for (int k = 0; k < r; ++k)
        state = sample_transition(params, state, rng);
      total += w * obs_marginal_logpdf(params, state, y_ahead, rng);
    }
    cloud.step(params, y[t - 1], t, nullptr, proposal,
               ResamplingKind::Multinomial, rng);
  }
  return total;
}

}  // namespace pfsgld
