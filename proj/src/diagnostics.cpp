#include "pfsgld/diagnostics.hpp"

#include <chrono>
#include <cmath>

#include "pfsgld/errors.hpp"
#include "pfsgld/parallel.hpp"

namespace pfsgld {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

}  // namespace

double imq_kernel(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("imq_kernel: dim mismatch");
  return 1.0 / std::sqrt(1.0 + sq_dist(a, b));
}

ImqParts imq_parts(std::span<const double> a, std::span<const double> b,
                   int d) {
  if (a.size() != b.size()) throw DomainError("imq_parts: dim mismatch");
  const double base = 1.0 + sq_dist(a, b);
  const double k1 = 1.0 / std::sqrt(base);
  const double k3 = k1 / base;
  const double k5 = k3 / base;
  const double diff = a[d] - b[d];
  ImqParts p;
  p.k = k1;
  p.da = -diff * k3;
  p.db = diff * k3;
  p.dadb = k3 - 3.0 * diff * diff * k5;
  return p;
}

std::vector<double> ksd_components(const KsdInput& input, int threads) {
  const size_t n = input.samples.size();
  if (n < 2) throw DomainError("ksd: need at least 2 samples");
  if (input.scores.size() != n)
    throw DomainError("ksd: samples/scores length mismatch");
  const size_t dim = input.samples[0].size();
  for (size_t k = 0; k < n; ++k) {
    if (input.samples[k].size() != dim || input.scores[k].size() != dim)
      throw DomainError("ksd: inconsistent dimensions");
    for (size_t d = 0; d < dim; ++d)
      if (!std::isfinite(input.samples[k][d]) ||
          !std::isfinite(input.scores[k][d]))
        throw DomainError("ksd: non-finite entry");
  }

  // Row-wise partial sums, reduced in fixed order so the result does not
  // depend on the thread count.
  std::vector<double> row_sums(n * dim, 0.0);
  parallel_for(static_cast<int>(n), threads, [&](int ki) {
    const size_t k = static_cast<size_t>(ki);
    const std::span<const double> tk(input.samples[k]);
    const std::span<const double> gk(input.scores[k]);
    double* out = row_sums.data() + k * dim;
    // Upper triangle doubled (the Stein kernel is symmetric), diagonal once.
    for (size_t kp = k; kp < n; ++kp) {
      const std::span<const double> tp(input.samples[kp]);
      const std::span<const double> gp(input.scores[kp]);
      const double base = 1.0 + sq_dist(tk, tp);
      const double k1 = 1.0 / std::sqrt(base);
      const double k3 = k1 / base;
      const double k5 = k3 / base;
      const double mult = (kp == k) ? 1.0 : 2.0;
      for (size_t d = 0; d < dim; ++d) {
        const double diff = tk[d] - tp[d];
        const double dadb = k3 - 3.0 * diff * diff * k5;
        const double k0 = dadb + (-diff * k3) * gp[d] + (diff * k3) * gk[d] +
                          k1 * gk[d] * gp[d];
        out[d] += mult * k0;
      }
    }
  });

  std::vector<double> comps(dim, 0.0);
  for (size_t k = 0; k < n; ++k)
    for (size_t d = 0; d < dim; ++d) comps[d] += row_sums[k * dim + d];
  const double norm = static_cast<double>(n) * static_cast<double>(n);
  for (size_t d = 0; d < dim; ++d)
    comps[d] = std::sqrt(std::max(0.0, comps[d] / norm));
  return comps;
}

double ksd_total(const KsdInput& input, int threads) {
  double total = 0.0;
  for (double c : ksd_components(input, threads)) total += c;
  return total;
}

std::vector<std::vector<double>> mse_to_truth(
    const Chain& chain, std::span<const double> theta_star_natural,
    int burnin) {
  if (burnin < 0 || burnin >= chain.length())
    throw DomainError("mse_to_truth: burnin must be < chain length");
  const size_t dim = theta_star_natural.size();
  std::vector<std::vector<double>> out;
  out.reserve(chain.length() - burnin);
  std::vector<double> running(dim, 0.0);
  long count = 0;
  for (int k = burnin; k < chain.length(); ++k) {
    const std::vector<double> nat = chain.natural_sample(k);
    if (nat.size() != dim)
      throw DomainError("mse_to_truth: dimension mismatch");
    ++count;
    std::vector<double> row(dim);
    for (size_t d = 0; d < dim; ++d) {
      running[d] += nat[d];
      const double err = running[d] / count - theta_star_natural[d];
      row[d] = err * err;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<BiasRow> grad_bias_experiment(
    const ModelParams& params, std::span<const double> y,
    const std::vector<BiasCell>& cells, int n_reps,
    std::span<const double> reference, ProposalKind proposal,
    ResamplingKind resampling, std::uint64_t seed, int threads) {
  const int dim = params.dim();
  if (static_cast<int>(reference.size()) != dim)
    throw DomainError(
        "grad_bias_experiment: reference gradient missing or of wrong "
        "dimension; generate one with make-reference");
  if (n_reps < 1) throw DomainError("need n_reps >= 1");
  const int T = static_cast<int>(y.size());
  const std::vector<std::string> names = params.unconstrained_names();

  std::vector<BiasRow> rows;
  for (size_t c = 0; c < cells.size(); ++c) {
    const BiasCell& cell = cells[c];
    if (cell.particles == 0 && params.kind() != ModelKind::Lgssm)
      throw UnsupportedModelError(
          "N = infinity cells require the LGSSM Kalman oracle");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> errs(static_cast<size_t>(n_reps) * dim);
    const int n_positions = cell.scheme == SamplingScheme::UniformStart
                                ? T - cell.subsequence + 1
                                : partition_block_count(T, cell.subsequence);
    // Window positions are scheduled stratified across replicates rather
    // than drawn iid, and replicate streams are shared across cells
    // (common random numbers). Each replicate is still a draw of the same
    // estimator, but the position-average in the bias is taken with equal
    // weights below, so the standard error is driven by particle noise.
    const int strata = std::min(n_reps, n_positions);
    std::vector<int> position_of(n_reps);
    for (int rep = 0; rep < n_reps; ++rep)
      position_of[rep] =
          n_reps >= n_positions
              ? rep % n_positions
              : static_cast<int>((static_cast<long>(rep) * n_positions) /
                                 n_reps);
    parallel_for(n_reps, threads, [&](int rep) {
      RandomSource rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
      const int position = position_of[rep];
      const SubsequenceSpec spec =
          cell.scheme == SamplingScheme::UniformStart
              ? subsequence_at(T, cell.subsequence, cell.buffer, position)
              : partition_block(T, cell.subsequence, cell.buffer, position);
      const GradientEstimate est =
          cell.particles == 0
              ? analytic_buffered_gradient(params, y, spec)
              : pf_buffered_gradient(params, y, spec,
                                     static_cast<int>(cell.particles),
                                     proposal, resampling, rng);
      for (int d = 0; d < dim; ++d)
        errs[static_cast<size_t>(rep) * dim + d] = est.grad[d] - reference[d];
    });
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    // Equal-weight average over strata; SE combines the within-stratum
    // sampling variances.
    std::vector<double> mean(dim, 0.0), m2(dim, 0.0), mse(dim, 0.0);
    std::vector<double> s_sum(static_cast<size_t>(strata) * dim, 0.0);
    std::vector<double> s_sq(static_cast<size_t>(strata) * dim, 0.0);
    std::vector<int> s_count(strata, 0);
    for (int rep = 0; rep < n_reps; ++rep) {
      const int stratum = n_reps >= n_positions ? position_of[rep] : rep;
      ++s_count[stratum];
      for (int d = 0; d < dim; ++d) {
        const double e = errs[static_cast<size_t>(rep) * dim + d];
        s_sum[static_cast<size_t>(stratum) * dim + d] += e;
        s_sq[static_cast<size_t>(stratum) * dim + d] += e * e;
        mse[d] += e * e;
      }
    }
    for (int st = 0; st < strata; ++st)
      for (int d = 0; d < dim; ++d)
        mean[d] += s_sum[static_cast<size_t>(st) * dim + d] /
                   (static_cast<double>(s_count[st]) * strata);
    int min_count = n_reps;
    for (int st = 0; st < strata; ++st) min_count = std::min(min_count, s_count[st]);
    if (min_count >= 2) {
      for (int st = 0; st < strata; ++st)
        for (int d = 0; d < dim; ++d) {
          const int n = s_count[st];
          const double sm = s_sum[static_cast<size_t>(st) * dim + d] / n;
          const double var =
              (s_sq[static_cast<size_t>(st) * dim + d] - n * sm * sm) /
              (n - 1);
          m2[d] += var / n / (static_cast<double>(strata) * strata);
        }
    } else {
      // Single replicate per window: fall back on the plain (conservative)
      // across-replicate variance.
      for (int d = 0; d < dim; ++d) {
        double naive_mean = 0.0, naive_m2 = 0.0;
        for (int rep = 0; rep < n_reps; ++rep)
          naive_mean += errs[static_cast<size_t>(rep) * dim + d] / n_reps;
        for (int rep = 0; rep < n_reps; ++rep) {
          const double e = errs[static_cast<size_t>(rep) * dim + d];
          naive_m2 += (e - naive_mean) * (e - naive_mean);
        }
        m2[d] = n_reps > 1 ? naive_m2 / (n_reps - 1) / n_reps : 0.0;
      }
    }

    BiasRow base;
    base.model = model_name(params.kind());
    base.subsequence = cell.subsequence;
    base.buffer = cell.buffer;
    base.particles = cell.particles;
    base.scheme = scheme_name(cell.scheme);
    base.n_reps = n_reps;
    base.wall_time_s = wall;

    double norm_bias = 0.0, norm_se = 0.0, norm_mse = 0.0;
    for (int d = 0; d < dim; ++d) {
      BiasRow row = base;
      row.param = names[d];
      row.bias = mean[d];
      row.bias_se = std::sqrt(m2[d]);
      row.mse = mse[d] / n_reps;
      rows.push_back(row);
      norm_bias += mean[d] * mean[d];
      norm_se += row.bias_se * row.bias_se;
      norm_mse += row.mse;
    }
    BiasRow norm = base;
    norm.param = "norm";
    norm.bias = std::sqrt(norm_bias);
    norm.bias_se = std::sqrt(norm_se);
    norm.mse = norm_mse;
    rows.push_back(norm);
  }
  return rows;
}

}  // namespace pfsgld
