#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

#include "care/error.hpp"
#include "care/estimation.hpp"
#include "care/inference.hpp"
#include "care/normal.hpp"
#include "care/simulation.hpp"

using namespace care;
using namespace care::testing;

namespace {

struct Fitted {
  ComparisonData data;
  CovariateMatrix cov;
  ProjectionOperator proj;
  FitResult fit;
  VarianceModel vm;
};

Fitted fitted(std::size_t n, std::size_t d, double p, std::int64_t trials,
              std::uint64_t seed) {
  Fitted f;
  f.data = random_comparisons(n, p, trials, seed);
  f.cov = d == 0 ? intercept_only_covariates(n)
                 : preprocess_covariates(random_matrix(n, d, seed));
  f.proj = build_projection(f.cov);
  f.fit = fit_mle(f.data, f.cov, f.proj);
  f.vm = variance_model_at(f.data, f.cov, f.proj, f.fit.params);
  return f;
}

}  // namespace

TEST_CASE("normal helpers") {
  CHECK(two_sided_p_value(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(std::abs(two_sided_p_value(1.959964) - 0.05) < 1e-6);
  for (double z : {0.0, 0.3, 1.7, 4.2, 9.0}) {
    CHECK(two_sided_p_value(z) == two_sided_p_value(-z));
  }
  CHECK(two_sided_p_value(0.0) == 1.0);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_cdf(normal_quantile(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(1.0), InvalidArgument);
}

TEST_CASE("pseudoinverse on the triangle") {
  const ComparisonData k3(3, {{0, 1, 1, 0}, {0, 2, 1, 1}, {1, 2, 1, 0}});
  const CovariateMatrix cov = intercept_only_covariates(3);
  const ProjectionOperator proj = build_projection(cov);
  const VarianceModel vm = variance_model_at(k3, cov, proj, ParamVector::zeros(3, 0));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(vm.pseudoinverse);
  const Vector ev = eig.eigenvalues();
  CHECK(std::abs(ev[0]) < 1e-12);
  CHECK(ev[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(ev[2] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(vm.null_dim == 1);
  CHECK_FALSE(vm.warning.has_value());
}

TEST_CASE("Penrose conditions on a random matrix positive on the identifiable space") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const CovariateMatrix cov = preprocess_covariates(random_matrix(8, 2, seed));
    const ProjectionOperator proj = build_projection(cov);
    const Matrix o = proj.theta_basis();
    const Matrix a = random_matrix(o.cols(), o.cols(), seed + 3);
    const Matrix spd = a * a.transpose() + 0.1 * Matrix::Identity(o.cols(), o.cols());
    const Matrix m = o * spd * o.transpose();
    const VarianceModel vm = projected_hessian_pinv(m, proj);
    const Matrix& x = vm.pseudoinverse;
    const double scale = std::max(1.0, max_abs(m));
    CHECK(max_abs(m * x * m - m) < 1e-8 * scale);
    CHECK(max_abs(x * m * x - x) < 1e-8 * std::max(1.0, max_abs(x)));
    CHECK(max_abs((m * x).transpose() - m * x) < 1e-8);
    CHECK(max_abs((x * m).transpose() - x * m) < 1e-8);
    const VarianceModel back = projected_hessian_pinv(x, proj);
    CHECK(max_abs(back.pseudoinverse - m) < 1e-8 * scale);
  }
  const CovariateMatrix cov = intercept_only_covariates(3);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(projected_hessian_pinv(asym, build_projection(cov)), InvalidArgument);
}

TEST_CASE("rank deficiency is reported") {
  const ComparisonData split(4, {{0, 1, 3, 1}, {2, 3, 3, 2}});
  const CovariateMatrix cov = intercept_only_covariates(4);
  const VarianceModel vm =
      variance_model_at(split, cov, build_projection(cov), ParamVector::zeros(4, 0));
  CHECK(vm.null_dim == 2);
  CHECK(vm.warning.has_value());
}

TEST_CASE("contrast inference") {
  const Fitted f = fitted(12, 2, 0.7, 8, 4);
  REQUIRE(f.fit.converged);
  const auto dim = static_cast<Eigen::Index>(f.proj.dim());

  SUBCASE("pairwise contrast") {
    Vector c = Vector::Zero(dim);
    c[0] = 1.0;
    c[1] = -1.0;
    c.tail(2) = (f.cov.scaled.row(0) - f.cov.scaled.row(1)).transpose();
    const ContrastResult r = contrast_inference(c, f.fit, f.vm, 0.95);
    CHECK(std::isfinite(r.std_error));
    CHECK(r.std_error > 0.0);
    CHECK(r.estimate == doctest::Approx(f.fit.scores[0] - f.fit.scores[1]).epsilon(1e-10));
    const double half = normal_quantile(0.975) * r.std_error;
    CHECK(r.ci_low == doctest::Approx(r.estimate - half));
    CHECK(r.ci_high == doctest::Approx(r.estimate + half));
    CHECK(r.p_value == doctest::Approx(two_sided_p_value(r.z_stat)));
  }
  SUBCASE("contrast in the unidentifiable space") {
    Vector c = Vector::Zero(dim);
    c.head(12) = f.cov.augmented.col(0);
    CHECK_THROWS_AS(contrast_inference(c, f.fit, f.vm, 0.95), DegenerateContrastError);
    CHECK_THROWS_AS(contrast_inference(Vector::Ones(3), f.fit, f.vm, 0.95), InvalidArgument);
    CHECK_THROWS_AS(contrast_inference(Vector::Ones(dim), f.fit, f.vm, 1.5), InvalidArgument);
  }
  SUBCASE("coefficient rows") {
    const auto alpha = alpha_inference(f.fit, f.vm, 0.9);
    const auto beta = beta_inference(f.fit, f.vm, 0.9);
    REQUIRE(alpha.size() == 12);
    REQUIRE(beta.size() == 2);
    for (const auto& row : alpha) CHECK(row.std_error > 0.0);
    CHECK(beta[1].estimate == f.fit.params.beta[1]);
    CHECK(beta[1].level == 0.9);
    const InferenceReport report = build_inference_report(f.fit, f.vm, 0.9);
    CHECK(report.rows.size() == 14);
    CHECK(report.rows[12].kind == CoefficientKind::kBeta);
  }
}

TEST_CASE("symmetric two item instance") {
  const ComparisonData data(2, {{0, 1, 6, 3}});
  const CovariateMatrix cov = intercept_only_covariates(2);
  const ProjectionOperator proj = build_projection(cov);
  const FitResult fit = fit_mle(data, cov, proj);
  const VarianceModel vm = variance_model_at(data, cov, proj, fit.params);
  for (const auto& row : alpha_inference(fit, vm)) {
    CHECK(std::abs(row.z_stat) < 1e-9);
    CHECK(row.p_value == doctest::Approx(1.0));
  }
}

TEST_CASE("scale equivariance of tests") {
  const ComparisonData data = random_comparisons(15, 0.6, 5, 11);
  const Matrix raw = random_matrix(15, 2, 11);
  const PipelineResult a = fit_care_scores_pipeline(data, raw);
  const PipelineResult b = fit_care_scores_pipeline(data, raw * 7.5);
  const auto ra = build_inference_report(
      a.fit, variance_model_at(data, a.covariates, a.projection, a.fit.params));
  const auto rb = build_inference_report(
      b.fit, variance_model_at(data, b.covariates, b.projection, b.fit.params));
  REQUIRE(ra.rows.size() == rb.rows.size());
  for (std::size_t k = 0; k < ra.rows.size(); ++k) {
    CHECK(std::abs(ra.rows[k].z_stat - rb.rows[k].z_stat) < 1e-8);
    CHECK(std::abs(ra.rows[k].p_value - rb.rows[k].p_value) < 1e-8);
  }
}

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-2.5, 1.0) == -1.5);
  CHECK(soft_threshold(1.0, 0.0) == 1.0);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), InvalidArgument);
}

TEST_CASE("descending ranks break ties by index") {
  Vector s(5);
  s << 0.1, 0.7, 0.1, -2.0, 0.7;
  CHECK(descending_ranks(s) == std::vector<std::size_t>{3, 1, 4, 5, 2});
}

TEST_CASE("ranking scores") {
  const Fitted f = fitted(20, 2, 0.5, 3, 6);
  REQUIRE(f.fit.converged);
  const RankingScores r = care_ranking_scores(f.fit, f.vm, 0.995);
  CHECK(max_abs(r.scores1 - f.cov.scaled * f.fit.params.beta) < 1e-14);
  for (Eigen::Index i = 0; i < 20; ++i) {
    const double a = f.fit.params.alpha[i];
    CHECK(r.taus[i] == doctest::Approx(normal_quantile(0.995) *
                                       std::sqrt(f.vm.pseudoinverse(i, i))));
    if (std::abs(a) <= r.taus[i]) CHECK(r.scores2[i] == r.scores1[i]);
    CHECK(r.scores2[i] ==
          doctest::Approx(r.scores1[i] + soft_threshold(a, r.taus[i])).epsilon(1e-14));
  }
  CHECK(r.ranks1 == descending_ranks(r.scores1));
  CHECK(r.ranks2 == descending_ranks(r.scores2));

  const RankingScores loose = care_ranking_scores(f.fit, f.vm, 0.500001);
  CHECK(max_abs(loose.scores2 - f.fit.scores) < 1e-4);
  CHECK_THROWS_AS(care_ranking_scores(f.fit, f.vm, 0.5), InvalidArgument);
  CHECK_THROWS_AS(care_ranking_scores(f.fit, f.vm, 1.0), InvalidArgument);

  // Covariate ranks ignore any move of alpha orthogonal to the identifiable space.
  FitResult moved = f.fit;
  moved.params.alpha += f.cov.augmented * random_vector(3, 1);
  CHECK(care_ranking_scores(moved, f.vm, 0.995).ranks1 == r.ranks1);
}

TEST_CASE("thresholds shrink with doubled trials") {
  const ComparisonData data = random_comparisons(10, 0.8, 4, 21);
  std::vector<Comparison> doubled;
  for (Comparison e : data.edges()) {
    e.trials *= 2;
    e.wins_j *= 2;
    doubled.push_back(e);
  }
  const CovariateMatrix cov = preprocess_covariates(random_matrix(10, 1, 21));
  const ProjectionOperator proj = build_projection(cov);
  auto taus = [&](const ComparisonData& d) {
    const FitResult fit = fit_mle(d, cov, proj);
    return care_ranking_scores(fit, variance_model_at(d, cov, proj, fit.params)).taus;
  };
  const Vector t1 = taus(data);
  const Vector t2 = taus(ComparisonData(10, doubled));
  CHECK(max_abs(t2 * std::sqrt(2.0) - t1) < 1e-6);
}

TEST_CASE("quadratic approximation") {
  SUBCASE("exact data gives the projected truth") {
    ParamVector truth = ParamVector::zeros(3, 0);
    truth.alpha << 0.0, std::log(3.0), -std::log(3.0);
    const ComparisonData data(3, {{0, 1, 4, 3}, {0, 2, 4, 1}, {1, 2, 10, 1}});
    const CovariateMatrix cov = intercept_only_covariates(3);
    const ProjectionOperator proj = build_projection(cov);
    const QuadraticApproximation q = quadratic_approx_minimizer(data, cov, truth, proj);
    CHECK(max_abs(q.minimizer.joint() - project_to_theta(truth, proj).joint()) < 1e-12);
  }
  SUBCASE("matches a linear solve on a basis") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const ComparisonData data = random_comparisons(9, 0.8, 6, seed);
      const CovariateMatrix cov = preprocess_covariates(random_matrix(9, 2, seed));
      const ProjectionOperator proj = build_projection(cov);
      const ParamVector truth =
          project_to_theta(ParamVector::from_joint(random_vector(11, seed), 9), proj);
      const QuadraticApproximation q = quadratic_approx_minimizer(data, cov, truth, proj);
      const Matrix o = proj.theta_basis();
      const Matrix h = hessian(data, cov, truth);
      const Vector g = gradient(data, cov, truth);
      const Vector t = truth.joint();
      const Vector u = (o.transpose() * h * o).ldlt().solve(
          o.transpose() * (h * t - g));
      CHECK(max_abs(q.minimizer.joint() - o * u) < 1e-8);
      CHECK(q.residual_norm <= 1e-8);
    }
  }
}

TEST_CASE("standardized statistics vanish at the truth") {
  const Fitted f = fitted(10, 1, 0.9, 5, 2);
  const Vector c = Vector::Unit(11, 0) + Vector::Unit(11, 10);
  const StandardizedStats s = standardized_stats(f.fit, f.vm, f.vm, c, f.fit.params);
  CHECK(s.a_stat == 0.0);
  CHECK(s.b_stat == 0.0);
}

TEST_CASE("covariate tests hold their size") {
  // beta_1 = 0 in the generating process; the level 0.05 test should reject
  // about 5% of the time.
  SyntheticSpec spec;
  spec.n = 60;
  spec.d = 2;
  spec.seed = 17;
  SyntheticTruth truth = generate_truth(spec);
  truth.truth.beta[0] = 0.0;
  std::size_t rejections = 0;
  const std::size_t reps = 300;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    ComparisonData data;
    for (std::size_t attempt = 0;; ++attempt) {
      data = sample_comparisons(truth.covariates, truth.truth, 0.3, 10, spec.seed,
                                replication_stream_id(0, rep, attempt));
      if (is_connected(data)) break;
    }
    const FitResult fit = fit_mle(data, truth.covariates, truth.projection);
    const VarianceModel vm =
        variance_model_at(data, truth.covariates, truth.projection, fit.params);
    if (beta_inference(fit, vm, 0.95)[0].p_value < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  INFO("rejection rate " << rate);
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.08);
}

TEST_CASE("strong covariate effects are detected") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.d = 3;
  spec.seed = 5;
  const SyntheticTruth truth = generate_truth(spec);
  const ComparisonData data =
      sample_comparisons(truth.covariates, truth.truth, 0.3, 10, spec.seed, 1);
  const FitResult fit = fit_mle(data, truth.covariates, truth.projection);
  const VarianceModel vm =
      variance_model_at(data, truth.covariates, truth.projection, fit.params);
  std::size_t significant = 0;
  for (const auto& row : beta_inference(fit, vm)) significant += row.p_value < 0.05;
  CHECK(significant >= 2);
}
