#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "care/estimation.hpp"
#include "care/model.hpp"
#include "care/rng.hpp"

namespace care {

// Synthetic design: covariates entrywise Uniform[-h, h] then standardized and
// rescaled, alpha* iid Uniform[alpha_low, alpha_high], beta* uniform on the
// sphere of radius 0.5 sqrt(n / (d+1)), and (alpha*, beta*) projected onto the
// identifiable subspace.
struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t d = 5;
  double alpha_low = 0.5;
  double alpha_high = 1.1094379124341003;  // ln 5 - 0.5
  std::optional<double> beta_norm;
  double covariate_half_width = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  double resolved_beta_norm() const;
};

struct SyntheticTruth {
  CovariateMatrix covariates;
  ProjectionOperator projection;
  ParamVector truth;           // projected, identified
  ParamVector pre_projection;  // raw draws of alpha* and beta*
  double kappa1 = 1.0;
};

// Stream 0 of the spec seed is reserved for the truth.
SyntheticTruth generate_truth(const SyntheticSpec& spec);

// Erdos-Renyi G(n, p) over pairs (i < j) in lexicographic order, then
// wins_j ~ Binomial(L, P(j beats i)) on each included pair.
ComparisonData sample_comparisons(const CovariateMatrix& cov,
                                  const ParamVector& truth, double p,
                                  std::int64_t trials, RngStream& rng);
ComparisonData sample_comparisons(const CovariateMatrix& cov,
                                  const ParamVector& truth, double p,
                                  std::int64_t trials, std::uint64_t seed,
                                  std::uint64_t stream_id = 0);

enum class Statistic {
  kAlphaLinf,
  kBetaRelL2,
  kQqAlpha1,
  kHistA,
  kHistB,
  kCoverage,
};

std::string to_string(Statistic stat);
Statistic statistic_from_string(const std::string& name);

struct PLPair {
  double p = 1.0;
  std::int64_t trials = 1;
};

struct ExperimentPlan {
  std::vector<PLPair> pl_pairs;
  std::size_t replications = 200;
  std::set<Statistic> statistics;
  // Contrast for the A/B statistics; defaults to e_1 + e_{n+1} (e_1 when d = 0).
  std::optional<Vector> contrast;
  std::size_t coverage_alpha_index = 0;
  std::size_t coverage_beta_index = 0;
  double level = 0.95;
  FitConfig fit;
  std::size_t threads = 1;
  std::size_t max_attempts = 200;

  void validate() const;
};

double effective_sample_size(std::size_t n, std::size_t d);
// The six (p, L) settings of the rate study.
std::vector<PLPair> rate_study_pairs();
// p in {1.25 / n_a, 2 / n_a} crossed with L in {2, 6, 20}.
std::vector<PLPair> distribution_study_pairs(std::size_t n, std::size_t d);

struct ReplicationRecord {
  std::size_t pair_index = 0;
  std::size_t replication = 0;
  std::uint64_t stream_id = 0;
  std::size_t resamples = 0;
  bool converged = false;
  std::size_t iterations = 0;
  std::map<std::string, double> values;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

struct Histogram {
  double lo = -4.0;
  double hi = 4.0;
  std::vector<std::size_t> counts;
  std::size_t below = 0;
  std::size_t above = 0;
};

struct QqData {
  std::vector<double> theoretical;
  std::vector<double> sample;
};

struct PairSummary {
  PLPair pair;
  std::size_t replications = 0;
  std::size_t resamples = 0;
  std::map<std::string, Summary> stats;
  std::map<std::string, double> ks_distance;
  std::map<std::string, Histogram> histograms;
  std::map<std::string, QqData> qq;
};

struct ExperimentResult {
  std::string kind;
  SyntheticSpec spec;
  ExperimentPlan plan;
  double truth_kappa1 = 1.0;
  std::vector<PairSummary> pairs;
  std::vector<ReplicationRecord> records;  // ordered by (pair, replication)
};

ExperimentResult run_rate_experiment(const SyntheticSpec& spec,
                                     const ExperimentPlan& plan);
ExperimentResult run_distribution_experiment(const SyntheticSpec& spec,
                                             const ExperimentPlan& plan);

// Stream id of one sampling attempt of one replication.
std::uint64_t replication_stream_id(std::size_t pair_index,
                                    std::size_t replication,
                                    std::size_t attempt);

// Runs task(i) for i in [0, count) on `threads` workers. The first exception
// is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

Summary summarize(const std::vector<double>& values);
// Kolmogorov-Smirnov distance between the empirical CDF and N(0, 1).
double ks_distance_normal(std::vector<double> values);
Histogram histogram(const std::vector<double>& values, std::size_t bins = 30,
                    double lo = -4.0, double hi = 4.0);
QqData qq_normal(std::vector<double> values);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares of log(mean statistic) on log(1 / sqrt(p L)) across pairs.
ScalingFit fit_rate_scaling(const ExperimentResult& result,
                            const std::string& statistic);

}  // namespace care
