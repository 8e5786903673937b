#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "care/estimation.hpp"
#include "care/model.hpp"
#include "care/rng.hpp"

namespace care::testing {

// Random instance: every pair included with probability p, L trials, wins
// drawn uniformly (not from the model) so the data is generic.
inline ComparisonData random_comparisons(std::size_t n, double p, std::int64_t trials,
                                  std::uint64_t seed) {
  RngStream rng(seed, 99);
  std::vector<Comparison> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() >= p) continue;
      const auto w = static_cast<std::int64_t>(rng.uniform() * (trials + 1));
      edges.push_back({i, j, trials, std::min(w, trials)});
    }
  }
  return ComparisonData(n, std::move(edges));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols,
                            std::uint64_t seed) {
  RngStream rng(seed, 7);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal();
  }
  return m;
}

inline Vector random_vector(std::size_t size, std::uint64_t seed) {
  return random_matrix(size, 1, seed).col(0);
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Central differences of the likelihood.
inline Vector fd_gradient(const ComparisonData& data, const CovariateMatrix& cov,
                          const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector up = x, down = x;
    up[k] += h;
    down[k] -= h;
    g[k] = (neg_log_likelihood(data, cov, up) - neg_log_likelihood(data, cov, down)) /
           (2 * h);
  }
  return g;
}

inline Matrix fd_hessian(const ComparisonData& data, const CovariateMatrix& cov,
                         const Vector& x, double h = 1e-5) {
  Matrix hess(x.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vector up = x, down = x;
    up[k] += h;
    down[k] -= h;
    hess.col(k) = (gradient(data, cov, up) - gradient(data, cov, down)) / (2 * h);
  }
  return hess;
}

// Brute force minimizer of the likelihood over a 2-dim identifiable space
// spanned by the columns of `basis`: a coarse grid followed by two rounds of
// local refinement.
inline Vector grid_oracle(const ComparisonData& data, const CovariateMatrix& cov,
                          const Matrix& basis) {
  auto value = [&](double u, double v) {
    return neg_log_likelihood(data, cov,
                              Vector(basis.col(0) * u + basis.col(1) * v));
  };
  double bu = 0.0, bv = 0.0, best = value(0.0, 0.0);
  auto scan = [&](double half, double step) {
    const int k = static_cast<int>(std::lround(half / step));
    const double u0 = bu, v0 = bv;
    for (int a = -k; a <= k; ++a) {
      for (int b = -k; b <= k; ++b) {
        const double f = value(u0 + a * step, v0 + b * step);
        if (f < best) {
          best = f;
          bu = u0 + a * step;
          bv = v0 + b * step;
        }
      }
    }
  };
  scan(8.0, 0.05);
  scan(0.06, 1e-3);
  scan(2e-3, 2e-5);
  return basis.col(0) * bu + basis.col(1) * bv;
}

}  // namespace care::testing
