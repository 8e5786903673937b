#pragma once

namespace care {

// Standard normal CDF.
double normal_cdf(double z);

// Inverse standard normal CDF; prob must lie in (0, 1).
double normal_quantile(double prob);

// P(|Z| >= |z|). Symmetric in z by construction.
double two_sided_p_value(double z);

}  // namespace care
