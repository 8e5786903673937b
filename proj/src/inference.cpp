#include "care/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "care/error.hpp"
#include "care/normal.hpp"

namespace care {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("confidence level must lie in (0, 1)");
  }
}

Vector projected(const VarianceModel& vm, const Eigen::Ref<const Vector>& c) {
  if (c.size() != vm.projection.rows()) {
    throw InvalidArgument("contrast length does not match the parameter vector");
  }
  Vector cbar = vm.projection * c;
  if (!(cbar.norm() > 1e-12 * std::max(1.0, c.norm()))) {
    throw DegenerateContrastError(
        "contrast lies entirely in the unidentifiable subspace (P c = 0)");
  }
  return cbar;
}

std::vector<CoefficientRow> coefficient_rows(const FitResult& fit,
                                             const VarianceModel& vm,
                                             double level, CoefficientKind kind) {
  check_level(level);
  const auto n = static_cast<Eigen::Index>(vm.n_items);
  const Eigen::Index count =
      kind == CoefficientKind::kAlpha ? n : vm.projection.rows() - n;
  const Eigen::Index offset = kind == CoefficientKind::kAlpha ? 0 : n;
  std::vector<CoefficientRow> rows;
  rows.reserve(static_cast<std::size_t>(count));
  Vector c = Vector::Zero(vm.projection.rows());
  for (Eigen::Index k = 0; k < count; ++k) {
    c.setZero();
    c[offset + k] = 1.0;
    const ContrastResult r = contrast_inference(c, fit, vm, level);
    rows.push_back({kind, static_cast<std::size_t>(k), r.estimate, r.std_error,
                    r.z_stat, r.p_value, r.ci_low, r.ci_high, r.level});
  }
  return rows;
}

}  // namespace

double VarianceModel::variance(
    const Eigen::Ref<const Vector>& projected_contrast) const {
  return projected_contrast.dot(pseudoinverse * projected_contrast) / effective_l;
}

VarianceModel projected_hessian_pinv(const Matrix& hess,
                                     const ProjectionOperator& proj,
                                     double rel_eigen_cutoff) {
  const auto dim = static_cast<Eigen::Index>(proj.dim());
  if (hess.rows() != dim || hess.cols() != dim) {
    throw InvalidArgument("Hessian dimension does not match the projection");
  }
  if (!(rel_eigen_cutoff > 0.0 && rel_eigen_cutoff < 1.0)) {
    throw InvalidArgument("eigenvalue cutoff must lie in (0, 1)");
  }
  const double asym = (hess - hess.transpose()).norm();
  if (asym > 1e-8 * (1.0 + hess.norm())) {
    throw InvalidArgument("Hessian is not symmetric");
  }

  VarianceModel vm;
  vm.projection = proj.matrix_p;
  vm.n_items = proj.n_items();
  vm.expected_null_dim = static_cast<std::size_t>(proj.basis.cols());
  vm.eigen_threshold = rel_eigen_cutoff;
  const Matrix php = proj.matrix_p * hess * proj.matrix_p;
  vm.projected_hessian = 0.5 * (php + php.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> es(vm.projected_hessian);
  vm.eigenvalues = es.eigenvalues();
  const double top = std::max(0.0, vm.eigenvalues.maxCoeff());
  const double cutoff = rel_eigen_cutoff * top;
  const Matrix& v = es.eigenvectors();
  vm.pseudoinverse = Matrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double lam = vm.eigenvalues[k];
    if (top > 0.0 && lam > cutoff) {
      vm.pseudoinverse.noalias() += (1.0 / lam) * v.col(k) * v.col(k).transpose();
    } else {
      ++vm.null_dim;
    }
  }
  const Matrix pinv = vm.pseudoinverse;
  vm.pseudoinverse = 0.5 * (pinv + pinv.transpose());
  if (vm.null_dim > vm.expected_null_dim) {
    std::ostringstream os;
    os << "projected Hessian has " << vm.null_dim
       << " near-zero eigenvalues, expected " << vm.expected_null_dim
       << "; the comparison graph may be disconnected or the design collinear";
    vm.warning = os.str();
  }
  return vm;
}

VarianceModel variance_model_at(const ComparisonData& data,
                                const CovariateMatrix& cov,
                                const ProjectionOperator& proj,
                                const ParamVector& params,
                                double rel_eigen_cutoff) {
  return projected_hessian_pinv(hessian(data, cov, params), proj,
                                rel_eigen_cutoff);
}

ContrastResult contrast_inference(const Eigen::Ref<const Vector>& c,
                                  const FitResult& fit, const VarianceModel& vm,
                                  double level) {
  check_level(level);
  const Vector cbar = projected(vm, c);
  const Vector theta = fit.params.joint();
  if (theta.size() != c.size()) {
    throw InvalidArgument("fit and variance model disagree on dimension");
  }
  ContrastResult r;
  r.level = level;
  r.estimate = c.dot(theta);
  const double var = vm.variance(cbar);
  if (!(var > 0.0)) {
    throw DegenerateContrastError("contrast has zero estimated variance");
  }
  r.std_error = std::sqrt(var);
  r.z_stat = r.estimate / r.std_error;
  r.p_value = two_sided_p_value(r.z_stat);
  const double zq = normal_quantile(1.0 - 0.5 * (1.0 - level));
  r.ci_low = r.estimate - zq * r.std_error;
  r.ci_high = r.estimate + zq * r.std_error;

  const auto n = static_cast<Eigen::Index>(vm.n_items);
  const Eigen::Index d = c.size() - n;
  const double alpha_l1 = c.head(n).lpNorm<1>();
  const double beta_l2 =
      d > 0 ? std::sqrt(static_cast<double>(n) / static_cast<double>(d + 1)) *
                  c.tail(d).norm()
            : 0.0;
  r.validity_ratio = std::max(alpha_l1, beta_l2) / cbar.norm();
  return r;
}

std::vector<CoefficientRow> beta_inference(const FitResult& fit,
                                           const VarianceModel& vm,
                                           double level) {
  return coefficient_rows(fit, vm, level, CoefficientKind::kBeta);
}

std::vector<CoefficientRow> alpha_inference(const FitResult& fit,
                                            const VarianceModel& vm,
                                            double level) {
  return coefficient_rows(fit, vm, level, CoefficientKind::kAlpha);
}

double soft_threshold(double x, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("soft_threshold: tau must be >= 0");
  const double shrunk = std::abs(x) - tau;
  if (shrunk <= 0.0) return 0.0;
  return x > 0.0 ? shrunk : -shrunk;
}

std::vector<std::size_t> descending_ranks(const Eigen::Ref<const Vector>& scores) {
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] >
           scores[static_cast<Eigen::Index>(b)];
  });
  std::vector<std::size_t> ranks(n);
  for (std::size_t k = 0; k < n; ++k) ranks[order[k]] = k + 1;
  return ranks;
}

RankingScores care_ranking_scores(const FitResult& fit, const VarianceModel& vm,
                                  double quantile_level) {
  if (!(quantile_level > 0.5 && quantile_level < 1.0)) {
    throw InvalidArgument("quantile_level must lie in (0.5, 1)");
  }
  const auto n = static_cast<Eigen::Index>(vm.n_items);
  if (fit.params.alpha.size() != n) {
    throw InvalidArgument("fit and variance model disagree on item count");
  }
  const double zq = normal_quantile(quantile_level);
  RankingScores out;
  out.scores1 = fit.covariate_scores;
  out.scores2.resize(n);
  out.taus.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector cbar = vm.projection.col(i);
    out.taus[i] = zq * std::sqrt(std::max(0.0, vm.variance(cbar)));
    out.scores2[i] =
        soft_threshold(fit.params.alpha[i], out.taus[i]) + out.scores1[i];
  }
  out.ranks1 = descending_ranks(out.scores1);
  out.ranks2 = descending_ranks(out.scores2);
  return out;
}

InferenceReport build_inference_report(const FitResult& fit,
                                       const VarianceModel& vm, double level,
                                       double quantile_level) {
  InferenceReport report;
  report.rows = alpha_inference(fit, vm, level);
  const auto beta_rows = beta_inference(fit, vm, level);
  report.rows.insert(report.rows.end(), beta_rows.begin(), beta_rows.end());
  RankingScores ranking = care_ranking_scores(fit, vm, quantile_level);
  report.care_scores_1 = std::move(ranking.scores1);
  report.care_scores_2 = std::move(ranking.scores2);
  report.tau = std::move(ranking.taus);
  report.ranks1 = std::move(ranking.ranks1);
  report.ranks2 = std::move(ranking.ranks2);
  return report;
}

QuadraticApproximation quadratic_approx_minimizer(const ComparisonData& data,
                                                  const CovariateMatrix& cov,
                                                  const ParamVector& truth,
                                                  const ProjectionOperator& proj) {
  const auto components = connected_components(data);
  if (components.size() > 1) {
    throw ConnectivityError("quadratic approximation needs a connected graph",
                            components);
  }
  const Vector theta_star = truth.joint();
  const Vector g = gradient(data, cov, theta_star);
  const Matrix h = hessian(data, cov, theta_star);
  const VarianceModel vm = projected_hessian_pinv(h, proj);
  const Vector pg = proj.apply(g);
  const Vector minimizer = proj.apply(theta_star - vm.pseudoinverse * pg);

  QuadraticApproximation out;
  out.minimizer = ParamVector::from_joint(minimizer, proj.n_items(), true);
  out.residual_norm = proj.apply(g + h * (minimizer - theta_star)).norm();
  return out;
}

StandardizedStats standardized_stats(const FitResult& fit,
                                     const VarianceModel& vm_true,
                                     const VarianceModel& vm_plugin,
                                     const Eigen::Ref<const Vector>& c,
                                     const ParamVector& truth) {
  const Vector cbar = projected(vm_true, c);
  const double diff = c.dot(fit.params.joint() - truth.joint());
  const double var_true = vm_true.variance(cbar);
  const double var_plugin = vm_plugin.variance(cbar);
  if (!(var_true > 0.0) || !(var_plugin > 0.0)) {
    throw DegenerateContrastError("contrast has zero variance");
  }
  return {diff / std::sqrt(var_true), diff / std::sqrt(var_plugin)};
}

}  // namespace care
