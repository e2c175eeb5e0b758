#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "kesten/rng.hpp"

namespace kesten {

/// Streaming mean/variance (Welford) with associative merge, so worker
/// batches can be pooled in a fixed order.
struct RunningStat {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const RunningStat& o) {
        if (o.n == 0) return;
        if (n == 0) { *this = o; return; }
        double nn = static_cast<double>(n), on = static_cast<double>(o.n);
        double d = o.mean - mean;
        double tot = nn + on;
        mean += d * on / tot;
        m2 += o.m2 + d * d * nn * on / tot;
        n += o.n;
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderror() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double p_hat, lo, hi;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

/// One-sample Kolmogorov-Smirnov statistic of `sample` against the
/// exponential CDF with the given rate; p-value from the asymptotic
/// Kolmogorov distribution with the Stephens small-sample correction.
struct KsResult {
    double statistic;
    double p_value;
};
KsResult ks_test_exponential(std::vector<double> sample, double rate);
KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b);
double kolmogorov_sf(double t);

/// Kolmogorov distance between the empirical CDFs of two samples.
double empirical_ks_distance(std::vector<double> a, std::vector<double> b);

/// Standard error of a statistic by nonparametric bootstrap over items.
/// `statistic` maps a multiset of indices into [0,n) to a scalar.
template <typename F>
double bootstrap_stderr(std::size_t n, std::size_t n_boot, CounterRng& rng, F&& statistic) {
    RunningStat rs;
    std::vector<std::size_t> idx(n);
    for (std::size_t b = 0; b < n_boot; ++b) {
        for (std::size_t i = 0; i < n; ++i)
            idx[i] = static_cast<std::size_t>(rng.next_u64() % n);
        rs.add(statistic(idx));
    }
    return std::sqrt(rs.variance());
}

/// True if x/y is within tol of a rational p/q with q <= max_den
/// (continued-fraction expansion).
bool near_rational_ratio(double x, double y, long max_den = 1000000, double tol = 1e-9);

/// Lattice detection for a set of positive reals: returns the approximate
/// generator g > 0 if every value is within tol of an integer multiple of a
/// common g (real-GCD by Euclid with tolerance), or 0 when the values behave
/// incommensurately (the GCD iteration collapses below tol).
double detect_lattice(std::vector<double> values, double tol = 1e-9);

}  // namespace kesten
