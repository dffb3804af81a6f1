#pragma once

#include <span>
#include <utility>
#include <vector>

namespace gumbelmark {

double mean(std::span<const double> x);
// Sample standard deviation (n − 1 denominator).
double stddev(std::span<const double> x);
double median(std::vector<double> x);

// Two-sided Clopper–Pearson interval for k successes in n trials.
std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence = 0.95);

// One-sample Kolmogorov–Smirnov statistic against U(0, 1).
double ks_uniform_statistic(std::vector<double> u);
// Asymptotic KS p-value for statistic d on n samples.
double ks_pvalue(double d, std::size_t n);

}  // namespace gumbelmark
