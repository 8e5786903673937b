#include "care/normal.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "care/error.hpp"

namespace care {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw InvalidArgument("normal_quantile: probability must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

double two_sided_p_value(double z) {
  const double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  return p > 1.0 ? 1.0 : p;
}

}  // namespace care
