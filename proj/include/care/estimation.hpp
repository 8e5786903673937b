#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "care/model.hpp"

namespace care {

enum class StopReason {
  kGradientTolerance,
  kStepTolerance,
  kMaxIterations,
};

std::string to_string(StopReason reason);

struct FitConfig {
  // nullopt selects the automatic step size 1 / (ridge + lambda_max / 4) where
  // lambda_max is the top eigenvalue of the trial-weighted graph design scaled
  // by the likelihood divisor. That bounds the curvature, so plain projected
  // steps never increase the objective.
  std::optional<double> step_size;
  std::size_t max_iters = 20000;
  double grad_tol = 1e-8;
  double step_tol = 1e-14;
  // Ridge penalty (lambda / 2) ||alpha||^2, added after scaling.
  double ridge_alpha = 0.0;
  // Divisor of the negative log-likelihood; nullopt means total trial count.
  std::optional<double> likelihood_scale;
  std::uint64_t seed = 0;
  bool record_trace = true;

  void validate() const;
};

struct FitResult {
  ParamVector params;
  FitDiagnostics diagnostics;
  bool converged = false;
  StopReason stop_reason = StopReason::kMaxIterations;
  std::vector<double> objective_trace;
  double step_size = 0.0;
  double likelihood_scale = 1.0;
  // alpha + X beta and X beta on the scaled covariates.
  Vector scores;
  Vector covariate_scores;
};

// Standardizes columns to mean 0 and (population) sd 1 when requested, then
// divides by K so the largest row norm equals sqrt((d+1)/n).
CovariateMatrix preprocess_covariates(const Matrix& raw, bool standardize = true);

// Items without covariates: X-bar is the all-ones column.
CovariateMatrix intercept_only_covariates(std::size_t n);

ParamVector project_to_theta(const ParamVector& params,
                             const ProjectionOperator& proj);

// Objective NLL / scale + (ridge / 2) ||alpha||^2 and its gradient.
double fit_objective(const ComparisonData& data, const CovariateMatrix& cov,
                     const Eigen::Ref<const Vector>& joint, double scale,
                     double ridge);

// Constrained maximum likelihood by projected gradient descent started at 0.
// Throws ConnectivityError on a disconnected comparison graph. Running out of
// iterations yields converged == false rather than an exception.
FitResult fit_mle(const ComparisonData& data, const CovariateMatrix& cov,
                  const FitConfig& config = {});
FitResult fit_mle(const ComparisonData& data, const CovariateMatrix& cov,
                  const ProjectionOperator& proj, const FitConfig& config = {});

struct PipelineResult {
  CovariateMatrix covariates;
  ProjectionOperator projection;
  FitResult fit;
};

// preprocess_covariates -> build_projection -> fit_mle.
PipelineResult fit_care_scores_pipeline(const ComparisonData& data,
                                        const Matrix& raw_covariates,
                                        const FitConfig& config = {},
                                        bool standardize = true);

}  // namespace care
