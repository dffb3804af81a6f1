#include "gumbelmark/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "gumbelmark/types.hpp"

namespace gumbelmark {

double mean(std::span<const double> x) {
    require(!x.empty(), "mean: empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
    require(x.size() >= 2, "stddev: need two samples");
    double m = mean(x), s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double median(std::vector<double> x) {
    require(!x.empty(), "median: empty sample");
    auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
    std::nth_element(x.begin(), mid, x.end());
    double hi = *mid;
    if (x.size() % 2 == 1) return hi;
    double lo = *std::max_element(x.begin(), mid);
    return 0.5 * (lo + hi);
}

std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence) {
    require(n > 0 && k <= n, "clopper_pearson: need 0 <= k <= n, n > 0");
    const double a = (1.0 - confidence) / 2.0;
    double lo = k == 0 ? 0.0 : boost::math::ibeta_inv(static_cast<double>(k), static_cast<double>(n - k + 1), a);
    double hi = k == n ? 1.0 : boost::math::ibeta_inv(static_cast<double>(k + 1), static_cast<double>(n - k), 1.0 - a);
    return {lo, hi};
}

double ks_uniform_statistic(std::vector<double> u) {
    require(!u.empty(), "ks_uniform_statistic: empty sample");
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d = std::max(d, (i + 1) / n - u[i]);
        d = std::max(d, u[i] - i / n);
    }
    return d;
}

double ks_pvalue(double d, std::size_t n) {
    // Kolmogorov distribution with the Stephens small-sample correction.
    const double sn = std::sqrt(static_cast<double>(n));
    const double t = (sn + 0.12 + 0.11 / sn) * d;
    if (t < 0.2) return 1.0;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
        p += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace gumbelmark
