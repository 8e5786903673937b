#include "care/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "care/error.hpp"
#include "care/inference.hpp"
#include "care/normal.hpp"

namespace care {
namespace {

constexpr std::uint64_t kTruthStream = 0;

const std::set<std::string> kDistributionalKeys = {"alpha1_std", "A", "B"};

bool wants(const ExperimentPlan& plan, Statistic s) {
  return plan.statistics.count(s) > 0;
}

Vector unit_vector(Eigen::Index dim, Eigen::Index k) {
  Vector e = Vector::Zero(dim);
  e[k] = 1.0;
  return e;
}

Vector default_contrast(std::size_t n, std::size_t d) {
  Vector c = unit_vector(static_cast<Eigen::Index>(n + d), 0);
  if (d > 0) c[static_cast<Eigen::Index>(n)] = 1.0;
  return c;
}

struct ConnectedDraw {
  ComparisonData data;
  std::uint64_t stream_id = 0;
  std::size_t resamples = 0;
};

ConnectedDraw draw_connected(const SyntheticTruth& truth, const PLPair& pair,
                             std::size_t pair_index, std::size_t replication,
                             const SyntheticSpec& spec,
                             const ExperimentPlan& plan) {
  ConnectedDraw out;
  for (std::size_t attempt = 0; attempt < plan.max_attempts; ++attempt) {
    out.stream_id = replication_stream_id(pair_index, replication, attempt);
    out.data = sample_comparisons(truth.covariates, truth.truth, pair.p,
                                  pair.trials, spec.seed, out.stream_id);
    if (is_connected(out.data)) return out;
    ++out.resamples;
  }
  std::ostringstream os;
  os << "no connected comparison graph in " << plan.max_attempts
     << " draws at p = " << pair.p << "; increase p";
  throw ConfigError(os.str());
}

using ReplicationFn = std::function<void(const ComparisonData&, const FitResult&,
                                         ReplicationRecord&)>;

ExperimentResult run_experiment(const std::string& kind,
                                const SyntheticSpec& spec,
                                const ExperimentPlan& plan,
                                const SyntheticTruth& truth,
                                const ReplicationFn& record_fn) {
  ExperimentResult result;
  result.kind = kind;
  result.spec = spec;
  result.plan = plan;
  result.truth_kappa1 = truth.kappa1;

  const std::size_t reps = plan.replications;
  const std::size_t total = plan.pl_pairs.size() * reps;
  result.records.resize(total);
  parallel_for(total, plan.threads, [&](std::size_t idx) {
    const std::size_t k = idx / reps;
    const std::size_t r = idx % reps;
    ReplicationRecord& rec = result.records[idx];
    rec.pair_index = k;
    rec.replication = r;
    ConnectedDraw draw = draw_connected(truth, plan.pl_pairs[k], k, r, spec, plan);
    rec.stream_id = draw.stream_id;
    rec.resamples = draw.resamples;
    const FitResult fit =
        fit_mle(draw.data, truth.covariates, truth.projection, plan.fit);
    rec.converged = fit.converged;
    rec.iterations = fit.diagnostics.iterations;
    record_fn(draw.data, fit, rec);
  });

  for (std::size_t k = 0; k < plan.pl_pairs.size(); ++k) {
    PairSummary summary;
    summary.pair = plan.pl_pairs[k];
    summary.replications = reps;
    std::map<std::string, std::vector<double>> columns;
    for (std::size_t r = 0; r < reps; ++r) {
      const ReplicationRecord& rec = result.records[k * reps + r];
      summary.resamples += rec.resamples;
      for (const auto& [key, value] : rec.values) columns[key].push_back(value);
    }
    const double draws = static_cast<double>(reps + summary.resamples);
    if (static_cast<double>(summary.resamples) > 0.5 * draws) {
      std::ostringstream os;
      os << "more than half of the comparison graphs drawn at p = "
         << summary.pair.p << " were disconnected (" << summary.resamples
         << " of " << reps + summary.resamples << "); increase p";
      throw ConfigError(os.str());
    }
    for (const auto& [key, values] : columns) {
      summary.stats[key] = summarize(values);
      if (kDistributionalKeys.count(key)) {
        summary.ks_distance[key] = ks_distance_normal(values);
        summary.histograms[key] = histogram(values);
        summary.qq[key] = qq_normal(values);
      }
    }
    result.pairs.push_back(std::move(summary));
  }
  return result;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n < 2) throw ConfigError("synthetic spec needs n >= 2");
  if (d + 1 >= n) throw ConfigError("synthetic spec needs d + 1 < n");
  if (!(alpha_low <= alpha_high)) {
    throw ConfigError("synthetic spec needs alpha_low <= alpha_high");
  }
  if (!(covariate_half_width > 0.0)) {
    throw ConfigError("covariate half width must be positive");
  }
  if (beta_norm && !(*beta_norm >= 0.0)) {
    throw ConfigError("beta norm must be nonnegative");
  }
}

double SyntheticSpec::resolved_beta_norm() const {
  return beta_norm.value_or(0.5 * std::sqrt(static_cast<double>(n) /
                                            static_cast<double>(d + 1)));
}

SyntheticTruth generate_truth(const SyntheticSpec& spec) {
  spec.validate();
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto d = static_cast<Eigen::Index>(spec.d);
  RngStream rng = rng_stream(spec.seed, kTruthStream);

  Matrix raw(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      raw(i, j) = rng.uniform(-spec.covariate_half_width,
                              spec.covariate_half_width);
    }
  }
  ParamVector pre;
  pre.alpha.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pre.alpha[i] = rng.uniform(spec.alpha_low, spec.alpha_high);
  }
  pre.beta.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) pre.beta[j] = rng.normal();
  if (d > 0) pre.beta *= spec.resolved_beta_norm() / pre.beta.norm();

  SyntheticTruth out;
  out.covariates = preprocess_covariates(raw, true);
  out.projection = build_projection(out.covariates);
  out.pre_projection = pre;
  out.truth = project_to_theta(pre, out.projection);
  out.kappa1 = condition_number(out.covariates, out.truth);
  return out;
}

ComparisonData sample_comparisons(const CovariateMatrix& cov,
                                  const ParamVector& truth, double p,
                                  std::int64_t trials, RngStream& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument("p must lie in (0, 1]");
  if (trials < 1) throw InvalidArgument("L must be at least 1");
  const Vector s = item_scores(cov, truth);
  const std::size_t n = cov.n_items();
  std::vector<Comparison> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (p < 1.0 && !rng.bernoulli(p)) continue;
      const double prob = win_probability(s[static_cast<Eigen::Index>(i)],
                                          s[static_cast<Eigen::Index>(j)]);
      edges.push_back({i, j, trials, rng.binomial(trials, prob)});
    }
  }
  return ComparisonData(n, std::move(edges));
}

ComparisonData sample_comparisons(const CovariateMatrix& cov,
                                  const ParamVector& truth, double p,
                                  std::int64_t trials, std::uint64_t seed,
                                  std::uint64_t stream_id) {
  RngStream rng = rng_stream(seed, stream_id);
  return sample_comparisons(cov, truth, p, trials, rng);
}

std::string to_string(Statistic stat) {
  switch (stat) {
    case Statistic::kAlphaLinf:
      return "alpha_linf";
    case Statistic::kBetaRelL2:
      return "beta_rel_l2";
    case Statistic::kQqAlpha1:
      return "qq_alpha1";
    case Statistic::kHistA:
      return "hist_A";
    case Statistic::kHistB:
      return "hist_B";
    case Statistic::kCoverage:
      return "coverage";
  }
  return "unknown";
}

Statistic statistic_from_string(const std::string& name) {
  for (Statistic s : {Statistic::kAlphaLinf, Statistic::kBetaRelL2,
                      Statistic::kQqAlpha1, Statistic::kHistA,
                      Statistic::kHistB, Statistic::kCoverage}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown statistic '" + name + "'");
}

void ExperimentPlan::validate() const {
  if (pl_pairs.empty()) throw ConfigError("experiment plan has no (p, L) pairs");
  for (const PLPair& pl : pl_pairs) {
    if (!(pl.p > 0.0 && pl.p <= 1.0)) {
      throw ConfigError("every p must lie in (0, 1]");
    }
    if (pl.trials < 1) throw ConfigError("every L must be at least 1");
  }
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("level must lie in (0, 1)");
  }
  fit.validate();
}

double effective_sample_size(std::size_t n, std::size_t d) {
  const double nd = static_cast<double>(n);
  return nd / (static_cast<double>(d + 1) * std::log(nd));
}

std::vector<PLPair> rate_study_pairs() {
  return {{1.0, 50}, {0.5, 25}, {0.222, 25}, {0.625, 5}, {0.4, 5}, {0.278, 5}};
}

std::vector<PLPair> distribution_study_pairs(std::size_t n, std::size_t d) {
  const double na = effective_sample_size(n, d);
  std::vector<PLPair> out;
  for (double c : {1.25, 2.0}) {
    for (std::int64_t l : {2, 6, 20}) out.push_back({std::min(1.0, c / na), l});
  }
  return out;
}

std::uint64_t replication_stream_id(std::size_t pair_index,
                                    std::size_t replication,
                                    std::size_t attempt) {
  std::uint64_t h = mix64(0x43415245ULL ^ static_cast<std::uint64_t>(pair_index));
  h = mix64(h ^ static_cast<std::uint64_t>(replication));
  h = mix64(h ^ static_cast<std::uint64_t>(attempt));
  return h == kTruthStream ? 1 : h;
}

ExperimentResult run_rate_experiment(const SyntheticSpec& spec,
                                     const ExperimentPlan& plan) {
  plan.validate();
  if (!wants(plan, Statistic::kAlphaLinf) && !wants(plan, Statistic::kBetaRelL2)) {
    throw ConfigError("rate experiment needs alpha_linf or beta_rel_l2");
  }
  const SyntheticTruth truth = generate_truth(spec);
  const double beta_norm = truth.truth.beta.norm();
  return run_experiment(
      "rate", spec, plan, truth,
      [&](const ComparisonData&, const FitResult& fit, ReplicationRecord& rec) {
        if (wants(plan, Statistic::kAlphaLinf)) {
          rec.values["alpha_linf"] =
              (fit.params.alpha - truth.truth.alpha).lpNorm<Eigen::Infinity>();
        }
        if (wants(plan, Statistic::kBetaRelL2) && beta_norm > 0.0) {
          rec.values["beta_rel_l2"] =
              (fit.params.beta - truth.truth.beta).norm() / beta_norm;
        }
      });
}

ExperimentResult run_distribution_experiment(const SyntheticSpec& spec,
                                             const ExperimentPlan& plan) {
  plan.validate();
  const bool qq = wants(plan, Statistic::kQqAlpha1);
  const bool hist = wants(plan, Statistic::kHistA) || wants(plan, Statistic::kHistB);
  const bool coverage = wants(plan, Statistic::kCoverage);
  if (!qq && !hist && !coverage) {
    throw ConfigError(
        "distribution experiment needs qq_alpha1, hist_A, hist_B or coverage");
  }
  const SyntheticTruth truth = generate_truth(spec);
  const std::size_t n = spec.n;
  const std::size_t d = spec.d;
  const auto dim = static_cast<Eigen::Index>(n + d);
  const Vector contrast = plan.contrast.value_or(default_contrast(n, d));
  if (contrast.size() != dim) {
    throw ConfigError("contrast length must equal n + d");
  }
  if (plan.coverage_alpha_index >= n ||
      (d > 0 && plan.coverage_beta_index >= d)) {
    throw ConfigError("coverage index out of range");
  }
  const Vector theta_star = truth.truth.joint();

  return run_experiment(
      "distribution", spec, plan, truth,
      [&](const ComparisonData& data, const FitResult& fit,
          ReplicationRecord& rec) {
        const VarianceModel vm_plugin =
            variance_model_at(data, truth.covariates, truth.projection, fit.params);
        const VarianceModel vm_true =
            variance_model_at(data, truth.covariates, truth.projection, truth.truth);
        if (qq) {
          const Vector e0 = unit_vector(dim, 0);
          const double var = vm_true.variance(vm_true.projection * e0);
          rec.values["alpha1"] = fit.params.alpha[0];
          rec.values["alpha1_std"] =
              (fit.params.alpha[0] - truth.truth.alpha[0]) / std::sqrt(var);
        }
        if (hist) {
          const StandardizedStats ab =
              standardized_stats(fit, vm_true, vm_plugin, contrast, truth.truth);
          const Vector cbar = vm_true.projection * contrast;
          if (wants(plan, Statistic::kHistA)) rec.values["A"] = ab.a_stat;
          if (wants(plan, Statistic::kHistB)) rec.values["B"] = ab.b_stat;
          rec.values["contrast_estimate"] = contrast.dot(fit.params.joint());
          rec.values["contrast_oracle_var"] = vm_true.variance(cbar);
          rec.values["contrast_plugin_var"] = vm_plugin.variance(cbar);
        }
        if (coverage) {
          auto record = [&](const std::string& prefix, Eigen::Index k) {
            const Vector c = unit_vector(dim, k);
            const ContrastResult r = contrast_inference(c, fit, vm_plugin, plan.level);
            const double target = theta_star[k];
            rec.values[prefix + "_cover"] =
                (r.ci_low <= target && target <= r.ci_high) ? 1.0 : 0.0;
            rec.values[prefix + "_estimate"] = r.estimate;
            rec.values[prefix + "_plugin_se"] = r.std_error;
            rec.values[prefix + "_oracle_var"] =
                vm_true.variance(vm_true.projection * c);
          };
          record("alpha", static_cast<Eigen::Index>(plan.coverage_alpha_index));
          if (d > 0) {
            record("beta",
                   static_cast<Eigen::Index>(n + plan.coverage_beta_index));
          }
        }
      });
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

double ks_distance_normal(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  double dist = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double f = normal_cdf(values[k]);
    dist = std::max({dist, static_cast<double>(k + 1) / m - f,
                     f - static_cast<double>(k) / m});
  }
  return dist;
}

Histogram histogram(const std::vector<double>& values, std::size_t bins,
                    double lo, double hi) {
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (v < lo) {
      ++h.below;
    } else if (v > hi) {
      ++h.above;
    } else {
      auto b = static_cast<std::size_t>((v - lo) / width);
      ++h.counts[std::min(b, bins - 1)];
    }
  }
  return h;
}

QqData qq_normal(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  QqData qq;
  const double m = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    qq.theoretical.push_back(
        normal_quantile((static_cast<double>(k) + 0.5) / m));
  }
  qq.sample = std::move(values);
  return qq;
}

ScalingFit fit_rate_scaling(const ExperimentResult& result,
                            const std::string& statistic) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const PairSummary& ps : result.pairs) {
    const auto it = ps.stats.find(statistic);
    if (it == ps.stats.end() || !(it->second.mean > 0.0)) continue;
    xs.push_back(-0.5 * std::log(ps.pair.p * static_cast<double>(ps.pair.trials)));
    ys.push_back(std::log(it->second.mean));
  }
  if (xs.size() < 2) {
    throw InvalidArgument("need at least two (p, L) pairs with statistic " +
                          statistic);
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace care
