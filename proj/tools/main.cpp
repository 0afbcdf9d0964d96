// pfsgld command line: synthetic data generation, reference gradients,
// gradient-bias sweeps, SGLD runs, predictive evaluation and KSD reports.
// Every command is deterministic given (config, input files, seed); wall
// clock goes only to manifests and *_timing.csv sidecars.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "pfsgld/csv.hpp"
#include "pfsgld/data.hpp"
#include "pfsgld/diagnostics.hpp"
#include "pfsgld/errors.hpp"
#include "pfsgld/kalman.hpp"
#include "pfsgld/manifest.hpp"
#include "pfsgld/parallel.hpp"
#include "pfsgld/sgld.hpp"

using namespace pfsgld;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

// Model parameter flags shared by several subcommands.
struct ParamOpts {
  std::string model = "lgssm";
  double phi = 0.9, sigma = 0.7, tau = 1.0;
  double mu = -1.0, lambda = -1.0;
  double alpha = -1.0, beta = -1.0, gamma = -1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--model", model, "Model: lgssm, svm or garch")
        ->required();
    cmd->add_option("--phi", phi, "AR / persistence parameter");
    cmd->add_option("--sigma", sigma, "Latent noise scale (lgssm/svm)");
    cmd->add_option("--tau", tau, "Observation noise scale");
    cmd->add_option("--mu", mu, "GARCH stationary variance mu");
    cmd->add_option("--lambda", lambda, "GARCH lambda in (0,1)");
    cmd->add_option("--alpha", alpha, "GARCH alpha (with --beta/--gamma)");
    cmd->add_option("--beta", beta, "GARCH beta");
    cmd->add_option("--gamma", gamma, "GARCH gamma");
  }

  ModelParams build() const {
    const ModelKind kind = model_from_name(model);
    if (kind != ModelKind::Garch)
      return kind == ModelKind::Lgssm ? ModelParams::lgssm(phi, sigma, tau)
                                      : ModelParams::svm(phi, sigma, tau);
    if (alpha > 0.0 || beta > 0.0 || gamma > 0.0)
      return ModelParams::garch_abc(alpha, beta, gamma, tau);
    if (mu <= 0.0 || lambda <= 0.0)
      throw ConfigError(
          "GARCH needs --mu/--phi/--lambda or --alpha/--beta/--gamma");
    return ModelParams::garch(mu, phi, lambda, tau);
  }
};

std::map<std::string, std::string> config_snapshot(const CLI::App& cmd) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames()[0];
    if (name == "help") continue;
    std::string value;
    for (const auto& r : opt->results()) {
      if (!value.empty()) value += ",";
      value += r;
    }
    if (!value.empty()) out[name] = value;
  }
  return out;
}

std::vector<double> read_series(const std::string& path,
                                const std::string& column = "y") {
  const CsvTable t = read_csv(path);
  const int col = t.require_column(column);
  std::vector<double> y;
  y.reserve(t.rows.size());
  for (const auto& row : t.rows) y.push_back(parse_double(row[col]));
  return y;
}

std::vector<std::vector<double>> read_segments(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int kcol = t.require_column("segment");
  const int vcol = t.require_column("value");
  std::vector<std::string> keys;
  std::vector<double> values;
  for (const auto& row : t.rows) {
    keys.push_back(row[kcol]);
    values.push_back(parse_double(row[vcol]));
  }
  return segment_by_key(values, keys).segments;
}

std::vector<double> read_reference(const std::string& path,
                                   const ModelParams& params) {
  const CsvTable t = read_csv(path);
  const int pcol = t.require_column("param");
  const int vcol = t.require_column("value");
  const std::vector<std::string> names = params.unconstrained_names();
  std::vector<double> out(names.size(),
                          std::numeric_limits<double>::quiet_NaN());
  for (const auto& row : t.rows)
    for (size_t d = 0; d < names.size(); ++d)
      if (row[pcol] == names[d]) out[d] = parse_double(row[vcol]);
  for (double v : out)
    if (std::isnan(v))
      throw DataError("reference file '" + path +
                      "' does not cover every coordinate of " +
                      model_name(params.kind()) +
                      "; regenerate it with make-reference");
  return out;
}

void write_chain_csv(const std::string& path, const Chain& chain) {
  CsvWriter w(path);
  std::vector<std::string> cols = {"step"};
  for (const auto& n : chain.natural_names) cols.push_back("param_" + n);
  for (const auto& n : chain.unconstrained_names) cols.push_back("grad_" + n);
  cols.push_back("eps");
  w.header(cols);
  for (int k = 0; k < chain.length(); ++k) {
    std::vector<std::string> row = {std::to_string(k + 1)};
    for (double v : chain.natural_sample(k)) row.push_back(format_double(v));
    for (double v : chain.grads[k]) row.push_back(format_double(v));
    row.push_back(format_double(chain.stepsizes[k]));
    w.row(row);
  }
  w.close();
}

void write_timing_csv(const std::string& path, const Chain& chain) {
  CsvWriter w(path);
  w.header({"step", "wall_time_s"});
  for (int k = 0; k < chain.length(); ++k)
    w.row({std::to_string(k + 1), format_double(chain.wall_seconds[k])});
  w.close();
}

ModelParams probe_params(ModelKind kind) {
  if (kind == ModelKind::Garch) return ModelParams::garch(0.5, 0.5, 0.5, 0.5);
  const double nat[3] = {0.5, 1.0, 1.0};
  return ModelParams::from_natural(kind, nat);
}

// Reads chain samples back as gradient-coordinate vectors.
std::vector<std::vector<double>> read_chain_samples(const std::string& path,
                                                    ModelKind kind) {
  const CsvTable t = read_csv(path);
  const std::vector<std::string> names = probe_params(kind).natural_names();
  std::vector<int> cols;
  for (const auto& n : names) {
    const int c = t.column("param_" + n);
    if (c < 0)
      throw DomainError("chain file '" + path + "' is not a " +
                        model_name(kind) + " chain (missing param_" + n +
                        ")");
    cols.push_back(c);
  }
  std::vector<std::vector<double>> samples;
  samples.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    std::vector<double> nat;
    for (int c : cols) nat.push_back(parse_double(row[c]));
    samples.push_back(ModelParams::from_natural(kind, nat).unconstrained());
  }
  return samples;
}

std::string with_suffix(const std::string& out, const std::string& suffix) {
  const size_t dot = out.rfind(".csv");
  return dot == std::string::npos ? out + suffix
                                  : out.substr(0, dot) + suffix + ".csv";
}

// ---------------------------------------------------------------- generate

void cmd_generate(const std::string& out, const ParamOpts& popts, int T,
                  std::uint64_t seed, const CLI::App& cmd) {
  Timer timer;
  const ModelParams params = popts.build();
  RandomSource rng(seed);
  const Trajectory traj = simulate(params, T, rng);
  CsvWriter w(out);
  w.header({"t", "x", "y"});
  for (int t = 1; t <= T; ++t)
    w.row({std::to_string(t), format_double(traj.latents[t].x),
           format_double(traj.observations[t - 1])});
  w.close();
  write_manifest(out + ".manifest.json", "generate", config_snapshot(cmd),
                 seed, {}, {out}, timer.seconds());
}

// ------------------------------------------------------------------ ingest

void cmd_ingest(const std::string& in, const std::string& out,
                const std::string& price_col, const std::string& value_col,
                const std::string& key_col, const std::string& timestamp_col,
                const CLI::App& cmd) {
  Timer timer;
  const CsvTable t = read_csv(in);
  std::vector<double> values;
  std::vector<std::string> keys;

  if (t.column(value_col) >= 0 && t.column(key_col) >= 0) {
    // Pre-computed returns with explicit segment keys.
    const int vc = t.column(value_col), kc = t.column(key_col);
    for (const auto& row : t.rows) {
      values.push_back(parse_double(row[vc]));
      keys.push_back(row[kc]);
    }
  } else {
    const int pc = t.require_column(price_col);
    std::vector<double> prices;
    for (const auto& row : t.rows) prices.push_back(parse_double(row[pc]));
    values = demean_log_returns(prices);
    const int tc = t.column(timestamp_col);
    for (size_t i = 1; i < t.rows.size(); ++i)
      keys.push_back(tc >= 0 ? iso_week_key(t.rows[i][tc]) : "all");
  }

  const SegmentedSeries series = segment_by_key(values, keys);
  CsvWriter w(out);
  w.header({"segment", "value"});
  for (size_t s = 0; s < series.segments.size(); ++s)
    for (double v : series.segments[s])
      w.row({std::to_string(s), format_double(v)});
  w.close();
  write_manifest(out + ".manifest.json", "ingest", config_snapshot(cmd), 0,
                 {in}, {out}, timer.seconds());
}

// ---------------------------------------------------------- make-reference

void cmd_make_reference(const std::string& data, const std::string& out,
                        const ParamOpts& popts, long n_particles,
                        std::uint64_t seed, const std::string& resampling,
                        const CLI::App& cmd) {
  Timer timer;
  const ModelParams params = popts.build();
  const std::vector<double> y = read_series(data);
  RandomSource rng(seed);
  const GradientEstimate est = pf_buffered_gradient(
      params, y, full_sequence_spec(static_cast<int>(y.size())),
      static_cast<int>(n_particles), default_proposal(params.kind()),
      resampling_from_name(resampling), rng);
  CsvWriter w(out);
  w.header({"param", "value"});
  const std::vector<std::string> names = params.unconstrained_names();
  for (size_t d = 0; d < names.size(); ++d)
    w.row({names[d], format_double(est.grad[d])});
  w.close();
  write_manifest(out + ".manifest.json", "make-reference",
                 config_snapshot(cmd), seed, {data}, {out}, timer.seconds());
}

// --------------------------------------------------------------- grad-bias

void cmd_grad_bias(const std::string& data, const std::string& out,
                   const ParamOpts& popts, const std::vector<int>& s_list,
                   const std::vector<int>& b_list,
                   const std::vector<std::string>& n_list,
                   const std::string& scheme, int reps,
                   const std::string& reference, std::uint64_t seed,
                   int threads, const std::string& resampling,
                   const CLI::App& cmd) {
  Timer timer;
  const ModelParams params = popts.build();
  const std::vector<double> y = read_series(data);

  std::vector<double> ref;
  std::vector<std::string> inputs = {data};
  std::vector<BiasCell> cells;
  for (int S : s_list)
    for (int B : b_list)
      for (const std::string& n : n_list) {
        BiasCell cell;
        cell.subsequence = S;
        cell.buffer = B;
        if (n == "inf") {
          cell.particles = 0;
        } else {
          cell.particles = std::stol(n);
          if (cell.particles < 2) throw ConfigError("need N >= 2 or 'inf'");
        }
        cell.scheme = scheme_from_name(scheme);
        cells.push_back(cell);
      }

  if (params.kind() == ModelKind::Lgssm) {
    ref = exact_score(params, y, std::vector<double>(y.size(), 1.0)).grad;
  } else if (!cells.empty()) {
    if (reference.empty())
      throw ConfigError(
          "non-LGSSM bias sweeps need --reference; create one with "
          "make-reference");
    ref = read_reference(reference, params);
    inputs.push_back(reference);
  } else {
    ref.assign(params.dim(), 0.0);
  }

  const auto rows = grad_bias_experiment(
      params, y, cells, reps, ref, default_proposal(params.kind()),
      resampling_from_name(resampling), seed, threads);

  CsvWriter w(out);
  w.header({"model", "param", "S", "B", "N", "scheme", "n_reps", "bias",
            "bias_se", "mse"});
  for (const auto& r : rows)
    w.row({r.model, r.param, std::to_string(r.subsequence),
           std::to_string(r.buffer),
           r.particles == 0 ? "inf" : std::to_string(r.particles), r.scheme,
           std::to_string(r.n_reps), format_double(r.bias),
           format_double(r.bias_se), format_double(r.mse)});
  w.close();
  // Wall clock per cell goes to the volatile timing sidecar so the data
  // CSV stays byte-stable across re-runs.
  const std::string tpath = with_suffix(out, "_timing");
  CsvWriter tw(tpath);
  tw.header({"model", "param", "S", "B", "N", "scheme", "wall_time_s"});
  for (const auto& r : rows)
    tw.row({r.model, r.param, std::to_string(r.subsequence),
            std::to_string(r.buffer),
            r.particles == 0 ? "inf" : std::to_string(r.particles), r.scheme,
            format_double(r.wall_time_s)});
  tw.close();
  write_manifest(out + ".manifest.json", "grad-bias", config_snapshot(cmd),
                 seed, inputs, {out, tpath}, timer.seconds());
}

// -------------------------------------------------------------------- sgld

void cmd_sgld(const std::string& data, const std::string& segments_path,
              const std::string& out, const ParamOpts& popts, bool init_draw,
              const SgldConfig& base, const std::vector<double>& eps_grid,
              std::uint64_t seed, int threads, const std::string& eval_data,
              int eval_every, int eval_r, long eval_particles,
              const CLI::App& cmd) {
  Timer timer;
  const ModelKind kind = model_from_name(popts.model);
  std::vector<std::vector<double>> segments;
  std::vector<std::string> inputs;
  if (!segments_path.empty()) {
    segments = read_segments(segments_path);
    inputs.push_back(segments_path);
  } else {
    if (base.estimator == EstimatorKind::Weekly)
      throw ConfigError("the weekly estimator needs --segments input");
    if (data.empty()) throw ConfigError("sgld needs --data or --segments");
    segments.push_back(read_series(data));
    inputs.push_back(data);
  }

  RandomSource init_rng(derive_seed(seed, 0xC0FFEE));
  const ModelParams theta0 =
      init_draw ? draw_init_params(kind, init_rng) : popts.build();

  std::vector<std::string> outputs;
  std::vector<Chain> chains(eps_grid.size());
  parallel_for(static_cast<int>(eps_grid.size()), threads, [&](int i) {
    SgldConfig cfg = base;
    cfg.stepsize = eps_grid[i];
    RandomSource rng(derive_seed(seed, i + 1));
    chains[i] = cfg.estimator == EstimatorKind::Weekly
                    ? run_chain_segments(theta0, segments, cfg, rng)
                    : run_chain(theta0, segments[0], cfg, rng);
  });

  for (size_t i = 0; i < eps_grid.size(); ++i) {
    const std::string path =
        eps_grid.size() == 1
            ? out
            : with_suffix(out, "_eps" + format_double(eps_grid[i]));
    write_chain_csv(path, chains[i]);
    write_timing_csv(with_suffix(path, "_timing"), chains[i]);
    outputs.push_back(path);
    outputs.push_back(with_suffix(path, "_timing"));

    if (!eval_data.empty()) {
      const std::vector<double> y_test = read_series(eval_data);
      RandomSource erng(derive_seed(seed, 0xE5A1 + i));
      const std::string epath = with_suffix(path, "_eval");
      CsvWriter w(epath);
      w.header({"step", "heldout", "predictive_r" + std::to_string(eval_r)});
      for (int k = eval_every - 1; k < chains[i].length(); k += eval_every) {
        const ModelParams theta =
            ModelParams::from_unconstrained(kind, chains[i].samples[k]);
        const double held = heldout_loglik(
            theta, y_test, static_cast<int>(eval_particles), erng);
        const double pred = predictive_loglik(
            theta, y_test, eval_r, static_cast<int>(eval_particles), erng);
        w.row({std::to_string(k + 1), format_double(held),
               format_double(pred)});
      }
      w.close();
      outputs.push_back(epath);
      if (inputs.size() == 1) inputs.push_back(eval_data);
    }
  }
  write_manifest(out + ".manifest.json", "sgld", config_snapshot(cmd), seed,
                 inputs, outputs, timer.seconds());
}

// ---------------------------------------------------------------- evaluate

void cmd_evaluate(const std::string& chain_path, const std::string& data,
                  const std::string& out, const std::string& model,
                  int burnin, int thin, long n_particles,
                  const std::vector<int>& r_list, std::uint64_t seed,
                  const CLI::App& cmd) {
  Timer timer;
  const ModelKind kind = model_from_name(model);
  const auto samples = read_chain_samples(chain_path, kind);
  if (burnin >= static_cast<int>(samples.size()))
    throw ConfigError("burnin exceeds chain length");
  const std::vector<double> y_test = read_series(data);

  CsvWriter w(out);
  std::vector<std::string> cols = {"step", "heldout"};
  for (int r : r_list) cols.push_back("predictive_r" + std::to_string(r));
  w.header(cols);
  RandomSource rng(derive_seed(seed, 0xEA7));
  for (int k = burnin; k < static_cast<int>(samples.size()); k += thin) {
    const ModelParams theta =
        ModelParams::from_unconstrained(kind, samples[k]);
    std::vector<std::string> row = {std::to_string(k + 1)};
    row.push_back(format_double(
        heldout_loglik(theta, y_test, static_cast<int>(n_particles), rng)));
    for (int r : r_list)
      row.push_back(format_double(predictive_loglik(
          theta, y_test, r, static_cast<int>(n_particles), rng)));
    w.row(row);
  }
  w.close();
  write_manifest(out + ".manifest.json", "evaluate", config_snapshot(cmd),
                 seed, {chain_path, data}, {out}, timer.seconds());
}

// --------------------------------------------------------------------- ksd

void cmd_ksd(const std::vector<std::string>& chain_specs,
             const std::string& data, const std::string& out,
             const std::string& model, int burnin, int thin, long n_particles,
             int S, int B, const std::string& scheme, std::uint64_t seed,
             int threads, const CLI::App& cmd) {
  Timer timer;
  const ModelKind kind = model_from_name(model);
  const std::vector<double> y = read_series(data);

  // Chains are given as <estimator>:<path>; the score estimator matches
  // the chain's estimator kind (buffered chains get buffered scores).
  struct Entry {
    EstimatorKind est;
    std::string path;
    double log10_total = 0.0;
    std::vector<double> log10_comp;
  };
  std::vector<Entry> entries;
  for (const auto& spec : chain_specs) {
    const size_t colon = spec.find(':');
    if (colon == std::string::npos)
      throw ConfigError("--chain expects <estimator>:<path>");
    Entry e;
    e.est = estimator_from_name(spec.substr(0, colon));
    e.path = spec.substr(colon + 1);
    entries.push_back(e);
  }

  const int T = static_cast<int>(y.size());
  parallel_for(static_cast<int>(entries.size()), threads, [&](int idx) {
    Entry& e = entries[idx];
    const auto samples = read_chain_samples(e.path, kind);
    if (burnin >= static_cast<int>(samples.size()))
      throw ConfigError("burnin exceeds chain length in " + e.path);
    // Fresh score randomness per distinct chain, derived from the chain's
    // contents so byte-identical chains get byte-identical reports.
    const std::uint64_t stream =
        std::stoull(file_content_hash(e.path), nullptr, 16);
    int s_eff = S, b_eff = B;
    switch (e.est) {
      case EstimatorKind::NoBuffer:
        b_eff = 0;
        break;
      case EstimatorKind::Buffered:
        break;
      case EstimatorKind::FullyBuffered:
        b_eff = T;
        break;
      case EstimatorKind::Full:
      case EstimatorKind::Weekly:
        s_eff = T;
        b_eff = 0;
        break;
    }
    KsdInput in;
    RandomSource rng(derive_seed(seed, stream));
    for (int k = burnin; k < static_cast<int>(samples.size()); k += thin) {
      const ModelParams theta =
          ModelParams::from_unconstrained(kind, samples[k]);
      GradientEstimate g;
      try {
        const SubsequenceSpec sp = sample_subsequence(
            T, s_eff, b_eff, scheme_from_name(scheme), rng);
        g = pf_buffered_gradient(theta, y, sp, static_cast<int>(n_particles),
                                 default_proposal(kind),
                                 ResamplingKind::Multinomial, rng);
      } catch (const NumericError&) {
        continue;  // skip samples whose score estimate degenerates
      } catch (const DomainError&) {
        continue;
      }
      const std::vector<double> pg = log_prior_grad(theta);
      std::vector<double> score(g.grad.size());
      for (size_t d = 0; d < score.size(); ++d) score[d] = g.grad[d] + pg[d];
      in.samples.push_back(samples[k]);
      in.scores.push_back(score);
    }
    const std::vector<double> comps = ksd_components(in, 1);
    double total = 0.0;
    e.log10_comp.clear();
    for (double c : comps) {
      total += c;
      e.log10_comp.push_back(std::log10(c));
    }
    e.log10_total = std::log10(total);
  });

  // Group by estimator kind; report mean/sd of log10 KSD per parameter and
  // in total.
  const std::vector<std::string> names =
      probe_params(kind).unconstrained_names();
  CsvWriter w(out);
  w.header({"method", "param", "log10_ksd_mean", "log10_ksd_sd", "n_chains"});
  std::vector<std::string> inputs = {data};
  for (const auto& e : entries) inputs.push_back(e.path);
  std::vector<EstimatorKind> seen;
  for (const auto& e : entries) {
    bool dup = false;
    for (EstimatorKind k : seen) dup |= (k == e.est);
    if (dup) continue;
    seen.push_back(e.est);
    std::vector<const Entry*> group;
    for (const auto& o : entries)
      if (o.est == e.est) group.push_back(&o);
    auto emit = [&](const std::string& param, auto getter) {
      double mean = 0.0, sd = 0.0;
      for (const Entry* g : group) mean += getter(*g) / group.size();
      for (const Entry* g : group)
        sd += (getter(*g) - mean) * (getter(*g) - mean);
      sd = group.size() > 1 ? std::sqrt(sd / (group.size() - 1)) : 0.0;
      w.row({estimator_name(e.est), param, format_double(mean),
             format_double(sd), std::to_string(group.size())});
    };
    for (size_t d = 0; d < names.size(); ++d)
      emit(names[d], [d](const Entry& g) { return g.log10_comp[d]; });
    emit("total", [](const Entry& g) { return g.log10_total; });
  }
  w.close();
  write_manifest(out + ".manifest.json", "ksd", config_snapshot(cmd), seed,
                 inputs, {out}, timer.seconds());
}


// Expands "--config FILE" (key=value lines, '#' comments) into long flags
// appended after the explicit arguments, skipping keys the command line
// already sets, so flags always override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> out;
  std::string config_path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config_path.empty()) return out;

  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' ||
                             line.back() == '\t'))
      line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line without '=': " + line);
    const std::string key = "--" + line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    bool overridden = false;
    for (const auto& a : out)
      overridden |= a == key || a.rfind(key + "=", 0) == 0;
    if (overridden) continue;
    out.push_back(key);
    if (!value.empty()) out.push_back(value);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Particle-buffered stochastic gradient MCMC for state space models",
      "pfsgld"};
  app.require_subcommand(1);
  app.footer("Every subcommand also accepts --config FILE with key=value\n"
             "lines mirroring the long flags; explicit flags override.");

  // generate
  auto* gen = app.add_subcommand("generate", "Simulate a synthetic dataset");
  ParamOpts gen_p;
  gen_p.attach(gen);
  int gen_T = 256;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "data.csv";
  gen->add_option("--T", gen_T, "Sequence length");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output CSV (t,x,y)")->required();

  // ingest
  auto* ing = app.add_subcommand(
      "ingest", "Demean log-returns and segment a financial series");
  std::string ing_in, ing_out = "segments.csv";
  std::string ing_price = "price", ing_value = "value", ing_key = "segment",
              ing_ts = "timestamp";
  ing->add_option("--in", ing_in, "Input CSV")->required();
  ing->add_option("--out", ing_out, "Output segments CSV");
  ing->add_option("--price-col", ing_price, "Price column name");
  ing->add_option("--value-col", ing_value, "Pre-computed return column");
  ing->add_option("--key-col", ing_key, "Segment key column");
  ing->add_option("--timestamp-col", ing_ts,
                  "Timestamp column for ISO-week segmentation");

  // make-reference
  auto* ref = app.add_subcommand(
      "make-reference", "Cache a large-N full-sequence reference gradient");
  ParamOpts ref_p;
  ref_p.attach(ref);
  std::string ref_data, ref_out = "reference.csv",
              ref_resampling = "multinomial";
  long ref_N = 100000;
  std::uint64_t ref_seed = 0;
  ref->add_option("--data", ref_data, "Training data CSV")->required();
  ref->add_option("--N", ref_N, "Particle count (desk default 1e5)");
  ref->add_option("--seed", ref_seed, "RNG seed");
  ref->add_option("--resampling", ref_resampling,
                  "multinomial, stratified or residual");
  ref->add_option("--out", ref_out, "Output CSV (param,value)");

  // grad-bias
  auto* gb =
      app.add_subcommand("grad-bias", "Replicated gradient bias/MSE sweep");
  ParamOpts gb_p;
  gb_p.attach(gb);
  std::string gb_data, gb_out = "grad_bias.csv", gb_scheme = "uniform",
              gb_reference, gb_resampling = "multinomial";
  std::vector<int> gb_S, gb_B;
  std::vector<std::string> gb_N;
  int gb_reps = 200, gb_threads = default_threads();
  std::uint64_t gb_seed = 0;
  gb->add_option("--data", gb_data, "Training data CSV")->required();
  gb->add_option("--S", gb_S, "Subsequence sizes");
  gb->add_option("--B", gb_B, "Buffer sizes");
  gb->add_option("--N", gb_N, "Particle counts (or 'inf' for LGSSM)");
  gb->add_option("--scheme", gb_scheme, "uniform or partition");
  gb->add_option("--reps", gb_reps, "Replications per cell");
  gb->add_option("--reference", gb_reference,
                 "Reference gradient CSV (required for svm/garch)");
  gb->add_option("--resampling", gb_resampling, "Resampling scheme");
  gb->add_option("--seed", gb_seed, "RNG seed");
  gb->add_option("--threads", gb_threads, "Worker threads");
  gb->add_option("--out", gb_out, "Output CSV");

  // sgld
  auto* sg = app.add_subcommand("sgld", "Run buffered PF-SGLD chains");
  ParamOpts sg_p;
  sg_p.attach(sg);
  std::string sg_data, sg_segments, sg_out = "chain.csv",
              sg_estimator = "buffered", sg_scheme = "uniform",
              sg_resampling = "multinomial", sg_eval;
  std::vector<double> sg_eps = {0.1};
  int sg_iters = 1000, sg_S = 40, sg_B = 10, sg_burnin = 0;
  long sg_N = 1000, sg_eval_N = 1000;
  int sg_eval_every = 100, sg_eval_r = 3;
  int sg_threads = default_threads(), sg_failures = 25;
  bool sg_init_draw = false;
  std::uint64_t sg_seed = 0;
  sg->add_option("--data", sg_data, "Training data CSV (single series)");
  sg->add_option("--segments", sg_segments,
                 "Segmented series CSV (weekly estimator)");
  sg->add_option("--estimator", sg_estimator,
                 "nobuffer, buffered, fullybuffered, full or weekly");
  sg->add_option("--eps", sg_eps,
                 "Per-observation stepsize(s); several launch a grid");
  sg->add_option("--iters", sg_iters, "Iterations");
  sg->add_option("--S", sg_S, "Subsequence size");
  sg->add_option("--B", sg_B, "Buffer size");
  sg->add_option("--N", sg_N, "Particles");
  sg->add_option("--burnin", sg_burnin,
                 "Burn-in (recorded for downstream diagnostics)");
  sg->add_option("--scheme", sg_scheme, "uniform or partition");
  sg->add_option("--resampling", sg_resampling, "Resampling scheme");
  sg->add_flag("--init-draw", sg_init_draw,
               "Draw theta0 from the synthetic-experiment initializer");
  sg->add_option("--max-failures", sg_failures,
                 "Abort after this many consecutive gradient failures");
  sg->add_option("--seed", sg_seed, "RNG seed");
  sg->add_option("--threads", sg_threads, "Worker threads (eps grid)");
  sg->add_option("--eval-data", sg_eval, "Heldout series for periodic eval");
  sg->add_option("--eval-every", sg_eval_every, "Evaluate every k steps");
  sg->add_option("--eval-r", sg_eval_r, "Predictive horizon");
  sg->add_option("--eval-N", sg_eval_N, "Particles for evaluation");
  sg->add_option("--out", sg_out, "Chain CSV")->required();

  // evaluate
  auto* ev = app.add_subcommand(
      "evaluate", "Heldout/predictive loglikelihood along a chain");
  std::string ev_chain, ev_data, ev_out = "eval.csv", ev_model;
  int ev_burnin = 0, ev_thin = 1;
  long ev_N = 1000;
  std::vector<int> ev_r = {3};
  std::uint64_t ev_seed = 0;
  ev->add_option("--chain", ev_chain, "Chain CSV")->required();
  ev->add_option("--model", ev_model, "Model name")->required();
  ev->add_option("--data", ev_data, "Test series CSV")->required();
  ev->add_option("--burnin", ev_burnin, "Samples to discard");
  ev->add_option("--thin", ev_thin, "Evaluate every k-th sample");
  ev->add_option("--N", ev_N, "Particles");
  ev->add_option("--r", ev_r, "Predictive horizons");
  ev->add_option("--seed", ev_seed, "RNG seed");
  ev->add_option("--out", ev_out, "Output CSV");

  // ksd
  auto* kd = app.add_subcommand("ksd", "Kernel Stein discrepancy report");
  std::vector<std::string> kd_chains;
  std::string kd_data, kd_out = "ksd.csv", kd_model, kd_scheme = "uniform";
  int kd_burnin = 0, kd_thin = 1, kd_S = 40, kd_B = 10;
  long kd_N = 1000;
  int kd_threads = default_threads();
  std::uint64_t kd_seed = 0;
  kd->add_option("--chain", kd_chains,
                 "Chains as <estimator>:<path>; repeatable")
      ->required();
  kd->add_option("--model", kd_model, "Model name")->required();
  kd->add_option("--data", kd_data, "Training series CSV")->required();
  kd->add_option("--burnin", kd_burnin, "Samples to discard");
  kd->add_option("--thin", kd_thin, "Keep every k-th sample");
  kd->add_option("--N", kd_N, "Particles for score estimates");
  kd->add_option("--S", kd_S, "Subsequence size for score estimates");
  kd->add_option("--B", kd_B, "Buffer size for buffered scores");
  kd->add_option("--scheme", kd_scheme, "uniform or partition");
  kd->add_option("--seed", kd_seed, "RNG seed");
  kd->add_option("--threads", kd_threads, "Worker threads");
  kd->add_option("--out", kd_out, "Report CSV");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));

    if (gen->parsed()) {
      cmd_generate(gen_out, gen_p, gen_T, gen_seed, *gen);
    } else if (ing->parsed()) {
      cmd_ingest(ing_in, ing_out, ing_price, ing_value, ing_key, ing_ts,
                 *ing);
    } else if (ref->parsed()) {
      cmd_make_reference(ref_data, ref_out, ref_p, ref_N, ref_seed,
                         ref_resampling, *ref);
    } else if (gb->parsed()) {
      cmd_grad_bias(gb_data, gb_out, gb_p, gb_S, gb_B, gb_N, gb_scheme,
                    gb_reps, gb_reference, gb_seed, gb_threads, gb_resampling,
                    *gb);
    } else if (sg->parsed()) {
      SgldConfig cfg;
      cfg.iterations = sg_iters;
      cfg.subsequence = sg_S;
      cfg.buffer = sg_B;
      cfg.particles = static_cast<int>(sg_N);
      cfg.estimator = estimator_from_name(sg_estimator);
      cfg.scheme = scheme_from_name(sg_scheme);
      cfg.resampling = resampling_from_name(sg_resampling);
      cfg.burnin = sg_burnin;
      cfg.max_consecutive_failures = sg_failures;
      cmd_sgld(sg_data, sg_segments, sg_out, sg_p, sg_init_draw, cfg, sg_eps,
               sg_seed, sg_threads, sg_eval, sg_eval_every, sg_eval_r,
               sg_eval_N, *sg);
    } else if (ev->parsed()) {
      cmd_evaluate(ev_chain, ev_data, ev_out, ev_model, ev_burnin, ev_thin,
                   ev_N, ev_r, ev_seed, *ev);
    } else if (kd->parsed()) {
      cmd_ksd(kd_chains, kd_data, kd_out, kd_model, kd_burnin, kd_thin, kd_N,
              kd_S, kd_B, kd_scheme, kd_seed, kd_threads, *kd);
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
