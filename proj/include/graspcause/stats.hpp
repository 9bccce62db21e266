#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace graspcause {

/// Order-invariant mean: values are sorted before a Neumaier-compensated
/// summation, so permuting the input never changes the result bit.
double stable_mean(std::span<const double> values);
double stable_sum(std::span<const double> values);

/// Sample variance (n-1 denominator); 0 for fewer than two values.
double sample_variance(std::span<const double> values);

double median_sorted(std::span<const double> sorted);

/// Inverse standard normal CDF (Acklam's rational approximation with one
/// Halley refinement step; |error| < 1e-13 over (0, 1)).
double normal_quantile(double p);

double normal_cdf(double x);

/// Student-t quantile via the Cornish-Fisher expansion around the normal;
/// accurate to ~1e-6 for df >= 10, which covers every use in this project
/// (df is n minus the design rank, or the little-bag group count minus one).
double student_t_quantile(double p, double df);

}  // namespace graspcause
