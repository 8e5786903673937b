#pragma once

// Covariate-assisted pairwise comparison model: item i carries the score
// alpha_i + x_i' beta and item j beats item i with probability
// exp(s_j) / (exp(s_i) + exp(s_j)).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace care {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// One compared pair with aggregated outcomes. `wins_j` counts the trials in
// which item j was preferred over item i.
struct Comparison {
  std::size_t i = 0;
  std::size_t j = 0;
  std::int64_t trials = 1;
  std::int64_t wins_j = 0;

  double win_fraction() const {
    return static_cast<double>(wins_j) / static_cast<double>(trials);
  }
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

// Edge list of a comparison graph with sufficient statistics per edge. Edges
// are stored with i < j; pairs supplied as (j, i) are flipped and their wins
// re-oriented. Edge order is preserved otherwise.
class ComparisonData {
 public:
  ComparisonData() = default;
  ComparisonData(std::size_t n_items, std::vector<Comparison> edges);

  std::size_t n_items() const noexcept { return n_items_; }
  std::span<const Comparison> edges() const noexcept { return edges_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  std::int64_t total_trials() const noexcept { return total_trials_; }

  friend bool operator==(const ComparisonData&, const ComparisonData&) = default;

 private:
  std::size_t n_items_ = 0;
  std::vector<Comparison> edges_;
  std::int64_t total_trials_ = 0;
};

// Item features after standardization and rescaling. `scaled` holds the
// features the model actually uses; `augmented` is [1, scaled].
struct CovariateMatrix {
  Matrix raw;
  double scale_k = 1.0;
  Matrix scaled;
  Matrix augmented;
  Vector column_means;
  Vector column_sds;
  bool standardized = false;

  std::size_t n_items() const { return static_cast<std::size_t>(raw.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(raw.cols()); }
};

// Intrinsic scores alpha (length n) and covariate effects beta (length d).
struct ParamVector {
  Vector alpha;
  Vector beta;
  bool identified = false;

  static ParamVector zeros(std::size_t n, std::size_t d);
  static ParamVector from_joint(const Eigen::Ref<const Vector>& joint,
                                std::size_t n, bool identified = false);
  Vector joint() const;
  std::size_t size() const {
    return static_cast<std::size_t>(alpha.size() + beta.size());
  }
};

// Orthogonal projector onto the identifiable subspace {(alpha, beta) :
// [1, X]' alpha = 0}. `basis` is an orthonormal basis of span([1, X]), so the
// projector only touches the alpha block.
struct ProjectionOperator {
  Matrix matrix_p;
  Matrix z_pad;
  Matrix basis;

  std::size_t n_items() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_p.rows()); }

  // P v without forming the dense product.
  Vector apply(const Eigen::Ref<const Vector>& v) const;
  // Orthonormal basis of the identifiable subspace, (n+d) x (n-1).
  Matrix theta_basis() const;
};

struct GraphDesign {
  Matrix sigma_g;
  double lambda_min_perp = 0.0;
  double lambda_max = 0.0;
};

struct FitDiagnostics {
  double kappa1 = 1.0;
  double incoherence = 0.0;
  bool connectivity = false;
  std::size_t iterations = 0;
  double final_grad_norm = 0.0;
};

// P(item j preferred over item i).
double win_probability(double score_i, double score_j);

// log(1 + e^t) without overflow.
double softplus(double t);

Vector item_scores(const CovariateMatrix& cov, const ParamVector& params);
Vector item_scores(const CovariateMatrix& cov,
                   const Eigen::Ref<const Vector>& joint);

// Negative log-likelihood summed over all trials (no 1/L normalization).
double neg_log_likelihood(const ComparisonData& data, const CovariateMatrix& cov,
                          const ParamVector& params);
double neg_log_likelihood(const ComparisonData& data, const CovariateMatrix& cov,
                          const Eigen::Ref<const Vector>& joint);

Vector gradient(const ComparisonData& data, const CovariateMatrix& cov,
                const ParamVector& params);
Vector gradient(const ComparisonData& data, const CovariateMatrix& cov,
                const Eigen::Ref<const Vector>& joint);

Matrix hessian(const ComparisonData& data, const CovariateMatrix& cov,
               const ParamVector& params);
Matrix hessian(const ComparisonData& data, const CovariateMatrix& cov,
               const Eigen::Ref<const Vector>& joint);

ProjectionOperator build_projection(const CovariateMatrix& cov);

// Sum over edges of (x~_i - x~_j)(x~_i - x~_j)'. With `weight_by_trials` each
// edge is weighted by its trial count.
GraphDesign graph_design(const ComparisonData& data, const CovariateMatrix& cov,
                         bool weight_by_trials = false);
GraphDesign graph_design(const ComparisonData& data, const CovariateMatrix& cov,
                         const ProjectionOperator& proj,
                         bool weight_by_trials = false);

// Largest eigenvalue of the (optionally trial-weighted) graph design without
// the restricted-spectrum work done by graph_design.
double design_operator_norm(const ComparisonData& data,
                            const CovariateMatrix& cov,
                            bool weight_by_trials = false);

bool is_connected(const ComparisonData& data);
// Components sorted by smallest member; members ascending.
std::vector<std::vector<std::size_t>> connected_components(
    const ComparisonData& data);

// exp(max_i s_i - min_i s_i).
double condition_number(const CovariateMatrix& cov, const ParamVector& params);
// ||X(X'X)^{-1}X'||_{2,inf} for the augmented design.
double incoherence(const ProjectionOperator& proj);

}  // namespace care
