#include "care/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "care/error.hpp"

namespace care {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kGradientTolerance:
      return "gradient_tolerance";
    case StopReason::kStepTolerance:
      return "step_tolerance";
    case StopReason::kMaxIterations:
      return "max_iterations";
  }
  return "unknown";
}

void FitConfig::validate() const {
  if (step_size && !(*step_size > 0.0)) {
    throw InvalidArgument("step_size must be positive");
  }
  if (max_iters == 0) throw InvalidArgument("max_iters must be positive");
  if (!(grad_tol > 0.0) || !(step_tol > 0.0)) {
    throw InvalidArgument("tolerances must be positive");
  }
  if (!(ridge_alpha >= 0.0)) {
    throw InvalidArgument("ridge_alpha must be nonnegative");
  }
  if (likelihood_scale && !(*likelihood_scale > 0.0)) {
    throw InvalidArgument("likelihood_scale must be positive");
  }
}

CovariateMatrix preprocess_covariates(const Matrix& raw, bool standardize) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index d = raw.cols();
  if (n < 2) throw InvalidArgument("need at least two items");
  if (d + 1 >= n) {
    std::ostringstream os;
    os << "too many covariates: d + 1 = " << d + 1 << " must be below n = "
       << n;
    throw InvalidArgument(os.str());
  }
  if (!raw.allFinite()) throw InvalidArgument("covariates must be finite");

  CovariateMatrix cov;
  cov.raw = raw;
  cov.standardized = standardize;
  cov.column_means = Vector::Zero(d);
  cov.column_sds = Vector::Ones(d);
  Matrix x = raw;
  if (standardize && d > 0) {
    cov.column_means = raw.colwise().mean().transpose();
    x.rowwise() -= cov.column_means.transpose();
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(n));
      if (!(sd > 1e-12 * (1.0 + std::abs(cov.column_means[c])))) {
        std::ostringstream os;
        os << "covariate column " << c << " is constant";
        throw DegenerateDesignError(os.str());
      }
      cov.column_sds[c] = sd;
      x.col(c) /= sd;
    }
  }

  if (d > 0) {
    const double max_norm = x.rowwise().norm().maxCoeff();
    if (!(max_norm > 0.0)) {
      throw DegenerateDesignError("all covariate rows are zero");
    }
    const double target = std::sqrt(static_cast<double>(d + 1) /
                                     static_cast<double>(n));
    cov.scale_k = max_norm / target;
  }
  cov.scaled = x / cov.scale_k;
  cov.augmented.resize(n, d + 1);
  cov.augmented.col(0).setOnes();
  cov.augmented.rightCols(d) = cov.scaled;
  return cov;
}

CovariateMatrix intercept_only_covariates(std::size_t n) {
  return preprocess_covariates(Matrix(static_cast<Eigen::Index>(n), 0), false);
}

ParamVector project_to_theta(const ParamVector& params,
                             const ProjectionOperator& proj) {
  return ParamVector::from_joint(proj.apply(params.joint()), proj.n_items(),
                                 true);
}

double fit_objective(const ComparisonData& data, const CovariateMatrix& cov,
                     const Eigen::Ref<const Vector>& joint, double scale,
                     double ridge) {
  const auto n = static_cast<Eigen::Index>(cov.n_items());
  return neg_log_likelihood(data, cov, joint) / scale +
         0.5 * ridge * joint.head(n).squaredNorm();
}

namespace {

Vector objective_gradient(const ComparisonData& data, const CovariateMatrix& cov,
                          const Vector& joint, double scale, double ridge) {
  const auto n = static_cast<Eigen::Index>(cov.n_items());
  Vector g = gradient(data, cov, joint) / scale;
  if (ridge > 0.0) g.head(n) += ridge * joint.head(n);
  return g;
}

void require_connected(const ComparisonData& data) {
  auto components = connected_components(data);
  if (components.size() <= 1) return;
  std::ostringstream os;
  os << "comparison graph is disconnected (" << components.size()
     << " components):";
  const std::size_t shown = std::min<std::size_t>(components.size(), 8);
  for (std::size_t c = 0; c < shown; ++c) {
    os << " {";
    const auto& comp = components[c];
    const std::size_t m = std::min<std::size_t>(comp.size(), 10);
    for (std::size_t k = 0; k < m; ++k) os << (k ? "," : "") << comp[k];
    if (comp.size() > m) os << ",...";
    os << "}";
  }
  if (components.size() > shown) os << " ...";
  throw ConnectivityError(os.str(), std::move(components));
}

}  // namespace

FitResult fit_mle(const ComparisonData& data, const CovariateMatrix& cov,
                  const FitConfig& config) {
  return fit_mle(data, cov, build_projection(cov), config);
}

FitResult fit_mle(const ComparisonData& data, const CovariateMatrix& cov,
                  const ProjectionOperator& proj, const FitConfig& config) {
  config.validate();
  const std::size_t n = cov.n_items();
  const std::size_t d = cov.n_features();
  if (data.n_items() != n || proj.dim() != n + d) {
    throw InvalidArgument("fit_mle: data, covariates and projection disagree");
  }
  require_connected(data);

  const double scale = config.likelihood_scale.value_or(
      static_cast<double>(data.total_trials()));
  const double ridge = config.ridge_alpha;
  double eta = 0.0;
  if (config.step_size) {
    eta = *config.step_size;
  } else {
    const double curvature =
        design_operator_norm(data, cov, /*weight_by_trials=*/true) /
        (4.0 * scale);
    eta = 1.0 / (ridge + curvature);
  }

  FitResult result;
  result.likelihood_scale = scale;
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(n + d));
  double f = fit_objective(data, cov, theta, scale, ridge);
  if (config.record_trace) result.objective_trace.push_back(f);

  double grad_norm = 0.0;
  double last_step = 0.0;
  std::size_t iter = 0;
  for (;; ++iter) {
    const Vector pg =
        proj.apply(objective_gradient(data, cov, theta, scale, ridge));
    grad_norm = pg.norm();
    if (grad_norm <= config.grad_tol) {
      result.stop_reason = StopReason::kGradientTolerance;
      break;
    }
    if (iter > 0 && last_step <= config.step_tol) {
      result.stop_reason = StopReason::kStepTolerance;
      break;
    }
    if (iter == config.max_iters) {
      result.stop_reason = StopReason::kMaxIterations;
      break;
    }
    // Backtrack only on a genuine increase; the slack absorbs rounding once
    // the iterates sit at the optimum.
    const double slack = 1e-14 * std::max(1.0, std::abs(f));
    Vector next;
    double f_next = 0.0;
    for (int halvings = 0;; ++halvings) {
      next = proj.apply(theta - eta * pg);
      f_next = fit_objective(data, cov, next, scale, ridge);
      if (f_next <= f + slack || halvings >= 60) break;
      eta *= 0.5;
    }
    last_step = (next - theta).norm();
    theta = std::move(next);
    f = f_next;
    if (config.record_trace) result.objective_trace.push_back(f);
  }

  result.converged = grad_norm <= config.grad_tol;
  result.step_size = eta;
  result.params = ParamVector::from_joint(theta, n, true);
  result.scores = item_scores(cov, theta);
  result.covariate_scores = Vector::Zero(static_cast<Eigen::Index>(n));
  if (d > 0) result.covariate_scores = cov.scaled * result.params.beta;
  result.diagnostics.kappa1 = condition_number(cov, result.params);
  result.diagnostics.incoherence = incoherence(proj);
  result.diagnostics.connectivity = true;
  result.diagnostics.iterations = iter;
  result.diagnostics.final_grad_norm = grad_norm;
  return result;
}

PipelineResult fit_care_scores_pipeline(const ComparisonData& data,
                                        const Matrix& raw_covariates,
                                        const FitConfig& config,
                                        bool standardize) {
  PipelineResult out;
  out.covariates = preprocess_covariates(raw_covariates, standardize);
  out.projection = build_projection(out.covariates);
  out.fit = fit_mle(data, out.covariates, out.projection, config);
  return out;
}

}  // namespace care
