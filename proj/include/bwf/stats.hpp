#ifndef BWF_STATS_HPP
#define BWF_STATS_HPP

#include <span>
#include <vector>

namespace bwf::stats {

double mean(std::span<const double> v);
/// Sample variance with the n-1 denominator.
double variance(std::span<const double> v);
double sd(std::span<const double> v);
/// Linear-interpolation quantile (R type 7). p in [0, 1].
double quantile(std::span<const double> v, double p);
double log_sum_exp(std::span<const double> v);

}  // namespace bwf::stats

#endif  // BWF_STATS_HPP
