#include "pfsgld/sgld.hpp"

#include <chrono>
#include <cmath>

#include "pfsgld/errors.hpp"

namespace pfsgld {

std::string estimator_name(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::NoBuffer:
      return "nobuffer";
    case EstimatorKind::Buffered:
      return "buffered";
    case EstimatorKind::FullyBuffered:
      return "fullybuffered";
    case EstimatorKind::Full:
      return "full";
    case EstimatorKind::Weekly:
      return "weekly";
  }
  return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "nobuffer") return EstimatorKind::NoBuffer;
  if (name == "buffered") return EstimatorKind::Buffered;
  if (name == "fullybuffered") return EstimatorKind::FullyBuffered;
  if (name == "full") return EstimatorKind::Full;
  if (name == "weekly") return EstimatorKind::Weekly;
  throw DomainError("unknown estimator '" + name + "'");
}

std::vector<double> Chain::natural_sample(int k) const {
  return ModelParams::from_unconstrained(kind, samples[k]).natural();
}

ModelParams sgld_step(const ModelParams& params, std::span<const double> grad,
                      double eps, RandomSource& rng, bool with_noise) {
  for (double g : grad)
    if (!std::isfinite(g)) throw DomainError("sgld_step: non-finite gradient");
  const std::vector<double> u = params.unconstrained();
  if (grad.size() != u.size())
    throw DomainError("sgld_step: gradient dimension mismatch");
  const std::vector<double> prior = log_prior_grad(params);
  const double noise_sd = std::sqrt(2.0 * eps);

  std::vector<double> drift(u.size());
  for (size_t d = 0; d < u.size(); ++d)
    drift[d] = u[d] + eps * (grad[d] + prior[d]);

  std::vector<double> proposal(u.size());
  const int max_tries = with_noise ? 100 : 1;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    for (size_t d = 0; d < u.size(); ++d)
      proposal[d] = drift[d] + (with_noise ? noise_sd * rng.normal() : 0.0);
    if (ModelParams::unconstrained_in_support(params.kind(), proposal))
      return ModelParams::from_unconstrained(params.kind(), proposal);
  }
  return params;  // step abandoned, previous value retained
}

namespace {

struct StepPlan {
  int s = 0, b = 0;
};

StepPlan plan_for(EstimatorKind e, const SgldConfig& c, int T) {
  switch (e) {
    case EstimatorKind::NoBuffer:
      return {c.subsequence, 0};
    case EstimatorKind::Buffered:
      return {c.subsequence, c.buffer};
    case EstimatorKind::FullyBuffered:
      return {c.subsequence, T};
    case EstimatorKind::Full:
      return {T, 0};
    case EstimatorKind::Weekly:
      throw DomainError("weekly estimator requires segmented input");
  }
  return {};
}

Chain run_chain_impl(const ModelParams& theta0,
                     const std::vector<std::vector<double>>& segments,
                     const SgldConfig& config, RandomSource& rng) {
  if (config.iterations < 1) throw DomainError("need iterations >= 1");
  if (config.burnin >= config.iterations)
    throw DomainError("burnin must be < iterations");
  if (config.stepsize <= 0.0) throw DomainError("stepsize must be > 0");

  long total_obs = 0;
  for (const auto& seg : segments) total_obs += seg.size();
  if (total_obs == 0) throw DomainError("no observations");
  const bool weekly = config.estimator == EstimatorKind::Weekly;
  if (!weekly && static_cast<long>(segments[0].size()) < config.subsequence)
    throw DomainError("subsequence longer than the data");

  const ProposalKind proposal = config.use_default_proposal
                                    ? default_proposal(theta0.kind())
                                    : config.proposal;
  const double eps = config.stepsize / static_cast<double>(total_obs);

  Chain chain;
  chain.kind = theta0.kind();
  chain.natural_names = theta0.natural_names();
  chain.unconstrained_names = theta0.unconstrained_names();
  chain.samples.reserve(config.iterations);

  ModelParams theta = theta0;
  int consecutive_failures = 0;
  for (int k = 0; k < config.iterations; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> grad(theta.dim(), 0.0);
    bool ok = true;
    try {
      if (weekly) {
        const auto& seg =
            segments[static_cast<size_t>(rng.below(segments.size()))];
        const SubsequenceSpec spec =
            full_sequence_spec(static_cast<int>(seg.size()));
        GradientEstimate est =
            pf_buffered_gradient(theta, seg, spec, config.particles, proposal,
                                 config.resampling, rng);
        const double scale = static_cast<double>(segments.size());
        for (size_t d = 0; d < grad.size(); ++d) grad[d] = scale * est.grad[d];
      } else {
        const auto& y = segments[0];
        const StepPlan plan =
            plan_for(config.estimator, config, static_cast<int>(y.size()));
        const SubsequenceSpec spec =
            sample_subsequence(static_cast<int>(y.size()), plan.s, plan.b,
                               config.scheme, rng);
        GradientEstimate est =
            pf_buffered_gradient(theta, y, spec, config.particles, proposal,
                                 config.resampling, rng);
        grad = std::move(est.grad);
      }
    } catch (const NumericError&) {
      ok = false;  // degenerate filter
    } catch (const DomainError&) {
      ok = false;  // parameters drifted where the estimator is undefined
    }

    if (ok) {
      theta = sgld_step(theta, grad, eps, rng);
      consecutive_failures = 0;
    } else {
      // Move under the prior and injected noise alone so the chain can
      // drift back into the region where the gradient is computable.
      std::fill(grad.begin(), grad.end(), 0.0);
      theta = sgld_step(theta, grad, eps, rng);
      if (++consecutive_failures > config.max_consecutive_failures)
        throw NumericError(
            "SGLD aborted: " + std::to_string(consecutive_failures) +
            " consecutive gradient failures at iteration " +
            std::to_string(k + 1));
    }

    const auto t1 = std::chrono::steady_clock::now();
    chain.samples.push_back(theta.unconstrained());
    chain.grads.push_back(std::move(grad));
    chain.stepsizes.push_back(eps);
    chain.wall_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());
  }
  return chain;
}

}  // namespace

Chain run_chain(const ModelParams& theta0, std::span<const double> y,
                const SgldConfig& config, RandomSource& rng) {
  if (config.estimator == EstimatorKind::Weekly)
    throw DomainError("weekly estimator requires segmented input");
  std::vector<std::vector<double>> segments(1);
  segments[0].assign(y.begin(), y.end());
  return run_chain_impl(theta0, segments, config, rng);
}

Chain run_chain_segments(const ModelParams& theta0,
                         const std::vector<std::vector<double>>& segments,
                         const SgldConfig& config, RandomSource& rng) {
  if (segments.empty()) throw DomainError("no segments");
  for (const auto& seg : segments)
    if (seg.empty()) throw DomainError("empty segment");
  return run_chain_impl(theta0, segments, config, rng);
}

std::vector<double> posterior_mean(const Chain& chain, int burnin, int thin) {
  if (burnin < 0 || burnin >= chain.length())
    throw DomainError("burnin must be < chain length");
  if (thin < 1) throw DomainError("thin must be >= 1");
  std::vector<double> mean;
  long count = 0;
  for (int k = burnin; k < chain.length(); k += thin) {
    const std::vector<double> nat = chain.natural_sample(k);
    if (mean.empty()) mean.assign(nat.size(), 0.0);
    for (size_t d = 0; d < nat.size(); ++d) mean[d] += nat[d];
    ++count;
  }
  if (count == 0) throw DomainError("no retained samples");
  for (double& m : mean) m /= static_cast<double>(count);
  return mean;
}

}  // namespace pfsgld
