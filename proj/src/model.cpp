#include "care/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

#include "care/error.hpp"

namespace care {
namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_dims(const ComparisonData& data, const CovariateMatrix& cov,
                Eigen::Index joint_size) {
  const auto n = static_cast<Eigen::Index>(cov.n_items());
  const auto d = static_cast<Eigen::Index>(cov.n_features());
  if (static_cast<Eigen::Index>(data.n_items()) != n) {
    std::ostringstream os;
    os << "comparison data has " << data.n_items()
       << " items but covariates have " << n << " rows";
    throw InvalidArgument(os.str());
  }
  if (cov.scaled.rows() != n || cov.scaled.cols() != d) {
    throw InvalidArgument("covariate matrix is not preprocessed");
  }
  if (joint_size != n + d) {
    std::ostringstream os;
    os << "parameter vector has length " << joint_size << ", expected "
       << n + d;
    throw InvalidArgument(os.str());
  }
}

// Lifts an n x n matrix acting on item scores to the (n+d) x (n+d) parameter
// space through s = alpha + X beta.
Matrix lift_score_matrix(const Matrix& score_block, const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix out(n + d, n + d);
  out.topLeftCorner(n, n) = score_block;
  if (d > 0) {
    const Matrix sx = score_block * x;
    out.topRightCorner(n, d) = sx;
    out.bottomLeftCorner(d, n) = sx.transpose();
    out.bottomRightCorner(d, d) = x.transpose() * sx;
    // Exact symmetry for downstream eigen solvers.
    Matrix br = out.bottomRightCorner(d, d);
    out.bottomRightCorner(d, d) = 0.5 * (br + br.transpose());
  }
  return out;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

ComparisonData::ComparisonData(std::size_t n_items, std::vector<Comparison> edges)
    : n_items_(n_items), edges_(std::move(edges)) {
  std::vector<std::pair<std::size_t, std::size_t>> keys;
  keys.reserve(edges_.size());
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    Comparison& e = edges_[k];
    std::ostringstream where;
    where << "edge " << k << " (" << e.i << ", " << e.j << ")";
    if (e.i >= n_items_ || e.j >= n_items_) {
      throw InvalidArgument(where.str() + ": item index out of range");
    }
    if (e.i == e.j) throw InvalidArgument(where.str() + ": self-comparison");
    if (e.trials <= 0) {
      throw InvalidArgument(where.str() + ": trials must be positive");
    }
    if (e.wins_j < 0 || e.wins_j > e.trials) {
      throw InvalidArgument(where.str() + ": wins must lie in [0, trials]");
    }
    if (e.i > e.j) {
      std::swap(e.i, e.j);
      e.wins_j = e.trials - e.wins_j;
    }
    keys.emplace_back(e.i, e.j);
    total_trials_ += e.trials;
  }
  std::sort(keys.begin(), keys.end());
  const auto dup = std::adjacent_find(keys.begin(), keys.end());
  if (dup != keys.end()) {
    std::ostringstream os;
    os << "duplicate comparison pair (" << dup->first << ", " << dup->second
       << ")";
    throw InvalidArgument(os.str());
  }
}

ParamVector ParamVector::zeros(std::size_t n, std::size_t d) {
  return {Vector::Zero(static_cast<Eigen::Index>(n)),
          Vector::Zero(static_cast<Eigen::Index>(d)), true};
}

ParamVector ParamVector::from_joint(const Eigen::Ref<const Vector>& joint,
                                    std::size_t n, bool identified) {
  const auto ni = static_cast<Eigen::Index>(n);
  if (joint.size() < ni) throw InvalidArgument("joint vector shorter than n");
  return {joint.head(ni), joint.tail(joint.size() - ni), identified};
}

Vector ParamVector::joint() const {
  Vector out(alpha.size() + beta.size());
  out << alpha, beta;
  return out;
}

Vector ProjectionOperator::apply(const Eigen::Ref<const Vector>& v) const {
  if (static_cast<std::size_t>(v.size()) != dim()) {
    throw InvalidArgument("projection applied to vector of wrong length");
  }
  Vector out = v;
  const Eigen::Index n = basis.rows();
  out.head(n) -= basis * (basis.transpose() * v.head(n));
  return out;
}

Matrix ProjectionOperator::theta_basis() const {
  const Eigen::Index n = basis.rows();
  const Eigen::Index k = basis.cols();
  const Eigen::Index d = static_cast<Eigen::Index>(dim()) - n;
  Eigen::HouseholderQR<Matrix> qr(basis);
  const Matrix q_full = qr.householderQ();
  Matrix out = Matrix::Zero(n + d, n - k + d);
  out.topLeftCorner(n, n - k) = q_full.rightCols(n - k);
  out.bottomRightCorner(d, d).setIdentity();
  return out;
}

double win_probability(double score_i, double score_j) {
  if (!std::isfinite(score_i) || !std::isfinite(score_j)) {
    throw InvalidArgument("win_probability: scores must be finite");
  }
  return sigmoid(score_j - score_i);
}

double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

Vector item_scores(const CovariateMatrix& cov, const ParamVector& params) {
  return item_scores(cov, params.joint());
}

Vector item_scores(const CovariateMatrix& cov,
                   const Eigen::Ref<const Vector>& joint) {
  const Eigen::Index n = cov.scaled.rows();
  const Eigen::Index d = cov.scaled.cols();
  if (joint.size() != n + d) {
    throw InvalidArgument("parameter vector does not match covariates");
  }
  Vector s = joint.head(n);
  if (d > 0) s.noalias() += cov.scaled * joint.tail(d);
  return s;
}

double neg_log_likelihood(const ComparisonData& data, const CovariateMatrix& cov,
                          const ParamVector& params) {
  return neg_log_likelihood(data, cov, params.joint());
}

double neg_log_likelihood(const ComparisonData& data, const CovariateMatrix& cov,
                          const Eigen::Ref<const Vector>& joint) {
  check_dims(data, cov, joint.size());
  const Vector s = item_scores(cov, joint);
  double total = 0.0;
  for (const Comparison& e : data.edges()) {
    const double t = s[static_cast<Eigen::Index>(e.j)] -
                     s[static_cast<Eigen::Index>(e.i)];
    total += static_cast<double>(e.trials) * softplus(t) -
             static_cast<double>(e.wins_j) * t;
  }
  return total;
}

Vector gradient(const ComparisonData& data, const CovariateMatrix& cov,
                const ParamVector& params) {
  return gradient(data, cov, params.joint());
}

Vector gradient(const ComparisonData& data, const CovariateMatrix& cov,
                const Eigen::Ref<const Vector>& joint) {
  check_dims(data, cov, joint.size());
  const Vector s = item_scores(cov, joint);
  const Eigen::Index n = s.size();
  const Eigen::Index d = cov.scaled.cols();
  // Gradient with respect to the item scores, then chained through
  // s = alpha + X beta.
  Vector gs = Vector::Zero(n);
  for (const Comparison& e : data.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    const double r = static_cast<double>(e.trials) * sigmoid(s[j] - s[i]) -
                     static_cast<double>(e.wins_j);
    gs[j] += r;
    gs[i] -= r;
  }
  Vector g(n + d);
  g.head(n) = gs;
  if (d > 0) g.tail(d).noalias() = cov.scaled.transpose() * gs;
  return g;
}

Matrix hessian(const ComparisonData& data, const CovariateMatrix& cov,
               const ParamVector& params) {
  return hessian(data, cov, params.joint());
}

Matrix hessian(const ComparisonData& data, const CovariateMatrix& cov,
               const Eigen::Ref<const Vector>& joint) {
  check_dims(data, cov, joint.size());
  const Vector s = item_scores(cov, joint);
  const Eigen::Index n = s.size();
  Matrix hs = Matrix::Zero(n, n);
  for (const Comparison& e : data.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    const double q = sigmoid(s[j] - s[i]);
    const double w = static_cast<double>(e.trials) * q * (1.0 - q);
    hs(i, i) += w;
    hs(j, j) += w;
    hs(i, j) -= w;
    hs(j, i) -= w;
  }
  return lift_score_matrix(hs, cov.scaled);
}

ProjectionOperator build_projection(const CovariateMatrix& cov) {
  const Matrix& xbar = cov.augmented;
  const Eigen::Index n = xbar.rows();
  const Eigen::Index k = xbar.cols();
  if (n == 0 || k == 0 || cov.scaled.cols() != k - 1) {
    throw InvalidArgument("build_projection: covariates are not preprocessed");
  }
  if (k > n) {
    throw DegenerateDesignError("augmented design has more columns than rows",
                                n);
  }
  Eigen::JacobiSVD<Matrix> svd(xbar);
  const Vector& sv = svd.singularValues();
  const double cutoff = 1e-10 * sv[0];
  const auto rank = static_cast<Eigen::Index>((sv.array() > cutoff).count());
  if (rank < k) {
    std::ostringstream os;
    os << "augmented design [1, X] has rank " << rank << " < " << k;
    throw DegenerateDesignError(os.str(), rank);
  }

  ProjectionOperator proj;
  Eigen::HouseholderQR<Matrix> qr(xbar);
  proj.basis = qr.householderQ() * Matrix::Identity(n, k);
  const Eigen::Index d = k - 1;
  proj.z_pad = Matrix::Zero(n + d, k);
  proj.z_pad.topRows(n) = xbar;
  proj.matrix_p = Matrix::Identity(n + d, n + d);
  proj.matrix_p.topLeftCorner(n, n) -= proj.basis * proj.basis.transpose();
  const Matrix p = proj.matrix_p;
  proj.matrix_p = 0.5 * (p + p.transpose());
  return proj;
}

namespace {

Matrix graph_laplacian(const ComparisonData& data, bool weight_by_trials) {
  const auto n = static_cast<Eigen::Index>(data.n_items());
  Matrix laplacian = Matrix::Zero(n, n);
  for (const Comparison& e : data.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    const double w = weight_by_trials ? static_cast<double>(e.trials) : 1.0;
    laplacian(i, i) += w;
    laplacian(j, j) += w;
    laplacian(i, j) -= w;
    laplacian(j, i) -= w;
  }
  return laplacian;
}

}  // namespace

double design_operator_norm(const ComparisonData& data,
                            const CovariateMatrix& cov, bool weight_by_trials) {
  check_dims(data, cov,
             static_cast<Eigen::Index>(cov.n_items() + cov.n_features()));
  const Matrix sigma =
      lift_score_matrix(graph_laplacian(data, weight_by_trials), cov.scaled);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

GraphDesign graph_design(const ComparisonData& data, const CovariateMatrix& cov,
                         bool weight_by_trials) {
  return graph_design(data, cov, build_projection(cov), weight_by_trials);
}

GraphDesign graph_design(const ComparisonData& data, const CovariateMatrix& cov,
                         const ProjectionOperator& proj, bool weight_by_trials) {
  check_dims(data, cov, static_cast<Eigen::Index>(proj.dim()));
  GraphDesign out;
  out.sigma_g =
      lift_score_matrix(graph_laplacian(data, weight_by_trials), cov.scaled);
  Eigen::SelfAdjointEigenSolver<Matrix> full(out.sigma_g,
                                             Eigen::EigenvaluesOnly);
  out.lambda_max = full.eigenvalues().maxCoeff();
  const Matrix o = proj.theta_basis();
  if (o.cols() > 0) {
    const Matrix restricted = o.transpose() * out.sigma_g * o;
    Eigen::SelfAdjointEigenSolver<Matrix> perp(
        0.5 * (restricted + restricted.transpose()), Eigen::EigenvaluesOnly);
    out.lambda_min_perp = perp.eigenvalues().minCoeff();
  }
  return out;
}

bool is_connected(const ComparisonData& data) {
  return connected_components(data).size() <= 1;
}

std::vector<std::vector<std::size_t>> connected_components(
    const ComparisonData& data) {
  const std::size_t n = data.n_items();
  UnionFind uf(n);
  for (const Comparison& e : data.edges()) uf.unite(e.i, e.j);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = uf.find(v);
    if (slot[root] == n) {
      slot[root] = out.size();
      out.emplace_back();
    }
    out[slot[root]].push_back(v);
  }
  return out;
}

double condition_number(const CovariateMatrix& cov, const ParamVector& params) {
  const Vector s = item_scores(cov, params);
  if (s.size() == 0) return 1.0;
  return std::exp(s.maxCoeff() - s.minCoeff());
}

double incoherence(const ProjectionOperator& proj) {
  // Rows of Q Q' have the same norms as rows of Q.
  return proj.basis.rowwise().norm().maxCoeff();
}

}  // namespace care
