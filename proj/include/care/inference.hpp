#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "care/estimation.hpp"
#include "care/model.hpp"

namespace care {

inline constexpr double kDefaultEigenCutoff = 1e-10;
inline constexpr double kDefaultQuantileLevel = 0.995;

// Moore-Penrose inverse of P H P, the plug-in covariance of the constrained
// estimator. Trial counts are already folded into H, so the divisor
// `effective_l` is 1.
struct VarianceModel {
  Matrix projection;
  Matrix projected_hessian;
  Matrix pseudoinverse;
  Vector eigenvalues;  // of projected_hessian, ascending
  double eigen_threshold = kDefaultEigenCutoff;
  double effective_l = 1.0;
  std::size_t n_items = 0;
  std::size_t null_dim = 0;
  std::size_t expected_null_dim = 0;
  // Set when more directions than d + 1 were dropped.
  std::optional<std::string> warning;

  double variance(const Eigen::Ref<const Vector>& projected_contrast) const;
};

VarianceModel projected_hessian_pinv(const Matrix& hess,
                                     const ProjectionOperator& proj,
                                     double rel_eigen_cutoff = kDefaultEigenCutoff);

// Hessian at `params` followed by projected_hessian_pinv.
VarianceModel variance_model_at(const ComparisonData& data,
                                const CovariateMatrix& cov,
                                const ProjectionOperator& proj,
                                const ParamVector& params,
                                double rel_eigen_cutoff = kDefaultEigenCutoff);

struct ContrastResult {
  double estimate = 0.0;
  double std_error = 0.0;
  double z_stat = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  // max(||c_alpha||_1, sqrt(n/(d+1)) ||c_beta||_2) / ||P c||_2. Large values
  // mean the normal approximation is not backed by theory for this contrast.
  double validity_ratio = 0.0;
};

// Wald test of c' theta = 0 and a two-sided CI at `level`.
ContrastResult contrast_inference(const Eigen::Ref<const Vector>& c,
                                  const FitResult& fit, const VarianceModel& vm,
                                  double level = 0.95);

enum class CoefficientKind { kAlpha, kBeta };

struct CoefficientRow {
  CoefficientKind kind = CoefficientKind::kAlpha;
  std::size_t index = 0;  // within its block
  double estimate = 0.0;
  double std_error = 0.0;
  double z_stat = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
};

std::vector<CoefficientRow> beta_inference(const FitResult& fit,
                                           const VarianceModel& vm,
                                           double level = 0.95);
std::vector<CoefficientRow> alpha_inference(const FitResult& fit,
                                            const VarianceModel& vm,
                                            double level = 0.95);

// sign(x) * max(|x| - tau, 0).
double soft_threshold(double x, double tau);

struct RankingScores {
  Vector scores1;  // covariate part only
  Vector scores2;  // soft-thresholded alpha plus covariate part
  Vector taus;
  std::vector<std::size_t> ranks1;  // 1 = best
  std::vector<std::size_t> ranks2;
};

RankingScores care_ranking_scores(const FitResult& fit, const VarianceModel& vm,
                                  double quantile_level = kDefaultQuantileLevel);

// 1-based descending ranks; ties go to the lower item index.
std::vector<std::size_t> descending_ranks(const Eigen::Ref<const Vector>& scores);

struct InferenceReport {
  std::vector<CoefficientRow> rows;  // alpha rows then beta rows
  Vector care_scores_1;
  Vector care_scores_2;
  Vector tau;
  std::vector<std::size_t> ranks1;
  std::vector<std::size_t> ranks2;
};

InferenceReport build_inference_report(
    const FitResult& fit, const VarianceModel& vm, double level = 0.95,
    double quantile_level = kDefaultQuantileLevel);

struct QuadraticApproximation {
  ParamVector minimizer;
  double residual_norm = 0.0;  // ||P grad of the quadratic model||_2
};

// Minimizer over the identifiable subspace of the second-order expansion of
// the negative log-likelihood around `truth`.
QuadraticApproximation quadratic_approx_minimizer(const ComparisonData& data,
                                                  const CovariateMatrix& cov,
                                                  const ParamVector& truth,
                                                  const ProjectionOperator& proj);

struct StandardizedStats {
  double a_stat = 0.0;  // variance from the Hessian at the truth
  double b_stat = 0.0;  // variance from the Hessian at the estimate
};

StandardizedStats standardized_stats(const FitResult& fit,
                                     const VarianceModel& vm_true,
                                     const VarianceModel& vm_plugin,
                                     const Eigen::Ref<const Vector>& c,
                                     const ParamVector& truth);

}  // namespace care
