#include <cmath>
#include <set>

#include "doctest.h"
#include "test_support.hpp"

#include "care/error.hpp"
#include "care/rng.hpp"
#include "care/simulation.hpp"

using namespace care;
using namespace care::testing;

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(5, 3), b(5, 3), c(5, 4), d(6, 3);
  bool differs_c = false, differs_d = false;
  for (int k = 0; k < 100; ++k) {
    const auto x = a();
    CHECK(x == b());
    differs_c |= x != c();
    differs_d |= x != d();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(rng_stream(5, 3).seed() == 5);
  CHECK(rng_stream(5, 3).stream_id() == 3);
}

TEST_CASE("no collisions across streams") {
  std::set<std::uint64_t> seen;
  std::size_t draws = 0;
  for (std::uint64_t stream = 1; stream <= 10; ++stream) {
    RngStream rng(42, replication_stream_id(0, stream, 0));
    for (int k = 0; k < 10000; ++k, ++draws) seen.insert(rng());
  }
  CHECK(seen.size() == draws);
}

TEST_CASE("variates have the right moments") {
  RngStream rng(1, 1);
  const int m = 200000;
  double su = 0, sn = 0, sn2 = 0, sb = 0;
  for (int k = 0; k < m; ++k) {
    const double u = rng.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  for (int k = 0; k < 20000; ++k) sb += static_cast<double>(rng.binomial(10, 0.3));
  CHECK(su / m == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / m) < 0.01);
  CHECK(sn2 / m == doctest::Approx(1.0).epsilon(0.01));
  CHECK(sb / 20000 == doctest::Approx(3.0).epsilon(0.02));
  CHECK(rng.binomial(7, 0.0) == 0);
  CHECK(rng.binomial(7, 1.0) == 7);
}

TEST_CASE("synthetic truth") {
  SyntheticSpec spec;
  spec.seed = 3;
  const SyntheticTruth truth = generate_truth(spec);
  CHECK(truth.pre_projection.beta.norm() ==
        doctest::Approx(0.5 * std::sqrt(200.0 / 6.0)).epsilon(1e-12));
  CHECK(max_abs(truth.covariates.augmented.transpose() * truth.truth.alpha) <= 1e-8);
  CHECK(truth.truth.identified);
  CHECK(max_abs(truth.truth.beta - truth.pre_projection.beta) == 0.0);
  const double lo = 0.5, hi = std::log(5.0) - 0.5;
  const double sd = (hi - lo) / std::sqrt(12.0);
  CHECK(std::abs(truth.pre_projection.alpha.mean() - 0.5 * (lo + hi)) <=
        3 * sd / std::sqrt(200.0));
  CHECK(truth.pre_projection.alpha.minCoeff() >= lo);
  CHECK(truth.pre_projection.alpha.maxCoeff() <= hi);
  CHECK(truth.kappa1 >= 1.0);
  // Raw covariates are U[-0.5, 0.5]: mean 0, variance 1/12, fourth moment 1/80.
  const Matrix& raw = truth.covariates.raw;
  const double cells = static_cast<double>(raw.size());
  CHECK(std::abs(raw.mean()) <= 4.0 * std::sqrt(1.0 / 12.0 / cells));
  const double var_sd = std::sqrt((1.0 / 80.0 - 1.0 / 144.0) / cells);
  CHECK(std::abs(raw.array().square().mean() - 1.0 / 12.0) <= 4.0 * var_sd);
  CHECK(raw.cwiseAbs().maxCoeff() <= 0.5);
  const SyntheticTruth again = generate_truth(spec);
  CHECK(again.truth.joint() == truth.truth.joint());

  SyntheticSpec bad;
  bad.n = 5;
  bad.d = 4;
  CHECK_THROWS_AS(generate_truth(bad), ConfigError);
}

TEST_CASE("comparison sampling") {
  SyntheticSpec spec;
  spec.seed = 2;
  const SyntheticTruth truth = generate_truth(spec);
  SUBCASE("complete graph") {
    const ComparisonData all = sample_comparisons(truth.covariates, truth.truth, 1.0, 3, 2, 1);
    CHECK(all.n_edges() == 200 * 199 / 2);
  }
  SUBCASE("edge count is binomial") {
    const ComparisonData half = sample_comparisons(truth.covariates, truth.truth, 0.5, 3, 2, 1);
    const double mean = 19900 * 0.5, sd = std::sqrt(19900 * 0.25);
    CHECK(std::abs(static_cast<double>(half.n_edges()) - mean) <= 4 * sd);
  }
  SUBCASE("equal scores win half the time") {
    const CovariateMatrix cov = intercept_only_covariates(10);
    const ComparisonData data =
        sample_comparisons(cov, ParamVector::zeros(10, 0), 1.0, 10000, 9, 1);
    double wins = 0, trials = 0;
    for (const Comparison& e : data.edges()) {
      wins += static_cast<double>(e.wins_j);
      trials += static_cast<double>(e.trials);
    }
    CHECK(std::abs(wins / trials - 0.5) <= 0.02);
  }
  SUBCASE("deterministic") {
    CHECK(sample_comparisons(truth.covariates, truth.truth, 0.3, 4, 2, 8) ==
          sample_comparisons(truth.covariates, truth.truth, 0.3, 4, 2, 8));
  }
  CHECK_THROWS_AS(sample_comparisons(truth.covariates, truth.truth, 0.0, 4, 2, 8),
                  InvalidArgument);
  CHECK_THROWS_AS(sample_comparisons(truth.covariates, truth.truth, 0.5, 0, 2, 8),
                  InvalidArgument);
}

TEST_CASE("random graphs above the threshold are connected") {
  const std::size_t n = 200;
  const double p = 3.0 * std::log(static_cast<double>(n)) / static_cast<double>(n);
  const CovariateMatrix cov = intercept_only_covariates(n);
  int connected = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    connected += is_connected(
        sample_comparisons(cov, ParamVector::zeros(n, 0), p, 1, seed, 1));
  }
  CHECK(connected >= 99);
}

TEST_CASE("study settings") {
  const auto rate = rate_study_pairs();
  REQUIRE(rate.size() == 6);
  CHECK(rate[0].p == 1.0);
  CHECK(rate[0].trials == 50);
  CHECK(rate[5].p == 0.278);
  CHECK(rate[5].trials == 5);
  const double na = effective_sample_size(200, 5);
  CHECK(na == doctest::Approx(200.0 / (6.0 * std::log(200.0))));
  const auto dist = distribution_study_pairs(200, 5);
  REQUIRE(dist.size() == 6);
  CHECK(dist[5].p == doctest::Approx(2.0 / na));
  CHECK(dist[5].trials == 20);
  CHECK(dist[0].p == doctest::Approx(1.25 / na));
}

TEST_CASE("summary helpers") {
  const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.count == 4);

  const Histogram h = histogram({-5.0, -3.9, 0.0, 0.1, 3.99, 4.0, 4.5}, 8, -4.0, 4.0);
  REQUIRE(h.counts.size() == 8);
  CHECK(h.below == 1);
  CHECK(h.above == 1);
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[4] == 2);
  CHECK(h.counts[7] == 2);  // the upper edge belongs to the last bin

  const QqData qq = qq_normal({0.3, -1.0, 2.0});
  CHECK(qq.sample == std::vector<double>{-1.0, 0.3, 2.0});
  CHECK(qq.theoretical[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(qq.theoretical[0] == doctest::Approx(-qq.theoretical[2]));

  RngStream rng(8, 8);
  std::vector<double> z(250);
  for (double& v : z) v = rng.normal();
  CHECK(ks_distance_normal(z) <= 0.086);
  for (double& v : z) v += 1.0;
  CHECK(ks_distance_normal(z) > 0.2);
}

TEST_CASE("rate experiment") {
  SyntheticSpec spec;
  spec.n = 100;
  spec.d = 3;
  spec.seed = 4;
  ExperimentPlan plan;
  plan.pl_pairs = {{1.0, 50}, {0.278, 5}};
  plan.replications = 50;
  plan.statistics = {Statistic::kAlphaLinf, Statistic::kBetaRelL2};
  const ExperimentResult result = run_rate_experiment(spec, plan);
  REQUIRE(result.pairs.size() == 2);
  CHECK(result.records.size() == 100);
  CHECK(result.pairs[0].stats.at("alpha_linf").mean <
        result.pairs[1].stats.at("alpha_linf").mean);
  const ScalingFit fit = fit_rate_scaling(result, "alpha_linf");
  CHECK(fit.slope > 0.5);
  for (const auto& rec : result.records) CHECK(rec.converged);

  ExperimentPlan empty = plan;
  empty.statistics = {Statistic::kHistA};
  CHECK_THROWS_AS(run_rate_experiment(spec, empty), ConfigError);
}

TEST_CASE("mostly disconnected settings are rejected") {
  SyntheticSpec spec;
  spec.n = 40;
  spec.d = 1;
  ExperimentPlan plan;
  plan.pl_pairs = {{0.02, 5}};
  plan.replications = 5;
  plan.statistics = {Statistic::kAlphaLinf};
  CHECK_THROWS_AS(run_rate_experiment(spec, plan), ConfigError);
}

TEST_CASE("experiments do not depend on the thread count") {
  SyntheticSpec spec;
  spec.n = 40;
  spec.d = 2;
  spec.seed = 12;
  ExperimentPlan plan;
  plan.pl_pairs = {{0.4, 4}, {0.8, 10}};
  plan.replications = 16;
  plan.statistics = {Statistic::kQqAlpha1, Statistic::kHistA, Statistic::kHistB,
                     Statistic::kCoverage};
  plan.threads = 1;
  const ExperimentResult one = run_distribution_experiment(spec, plan);
  plan.threads = 8;
  const ExperimentResult eight = run_distribution_experiment(spec, plan);
  REQUIRE(one.records.size() == eight.records.size());
  for (std::size_t k = 0; k < one.records.size(); ++k) {
    CHECK(one.records[k].stream_id == eight.records[k].stream_id);
    CHECK(one.records[k].values == eight.records[k].values);
  }
  CHECK(one.pairs[1].ks_distance == eight.pairs[1].ks_distance);
  CHECK(one.pairs[0].stats.count("A") == 1);
  CHECK(one.pairs[0].stats.count("alpha_cover") == 1);
  CHECK(one.pairs[0].histograms.count("B") == 1);
  CHECK(one.pairs[0].qq.count("alpha1_std") == 1);
}

TEST_CASE("parallel for rethrows") {
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw InvalidArgument("boom");
                               }),
                  InvalidArgument);
}
