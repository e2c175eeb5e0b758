#include "kesten/stats.hpp"

#include <algorithm>
#include <cmath>

namespace kesten {

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    double n = static_cast<double>(trials);
    if (trials == 0) return {0.0, 0.0, 1.0};
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2 * n)) / denom;
    double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
    return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

double kolmogorov_sf(double t) {
    // Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)
    if (t <= 0) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
        s += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, s));
}

KsResult ks_test_exponential(std::vector<double> sample, double rate) {
    std::sort(sample.begin(), sample.end());
    double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = 1.0 - std::exp(-rate * std::max(0.0, sample[i]));
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
    }
    double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    return {d, kolmogorov_sf(t)};
}

double empirical_ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = empirical_ks_distance(std::move(a), std::move(b));
    double ne = std::sqrt(na * nb / (na + nb));
    double t = (ne + 0.12 + 0.11 / ne) * d;
    return {d, kolmogorov_sf(t)};
}

bool near_rational_ratio(double x, double y, long max_den, double tol) {
    if (y == 0.0) return false;
    double r = x / y;
    // continued fraction convergents of r
    double v = std::abs(r);
    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (int it = 0; it < 64; ++it) {
        double fl = std::floor(v);
        long a = static_cast<long>(fl);
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > max_den || q2 < 0) break;
        if (q2 > 0 && std::abs(std::abs(r) - static_cast<double>(p2) / static_cast<double>(q2)) < tol)
            return true;
        double frac = v - fl;
        if (frac < 1e-15) break;
        v = 1.0 / frac;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    }
    return false;
}

double detect_lattice(std::vector<double> values, double tol) {
    std::vector<double> pos;
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    for (double v : values) {
        double a = std::abs(v);
        if (a > tol * scale) pos.push_back(a);
    }
    if (pos.empty()) return 0.0;
    const double eps = tol * scale;
    double g = pos[0];
    for (std::size_t i = 1; i < pos.size(); ++i) {
        double a = std::max(g, pos[i]), b = std::min(g, pos[i]);
        // Euclid on reals, stopping at the noise floor
        while (b > eps) {
            double r = std::fmod(a, b);
            if (r > b - eps) r = 0.0;  // remainder just under b means divisible
            a = b;
            b = r;
        }
        g = a;
        // a generator many orders below the data scale signals incommensurate
        // inputs collapsing to roundoff, not a lattice
        if (g < 1e-6 * scale) return 0.0;
    }
    for (double v : pos) {
        double k = std::round(v / g);
        if (std::abs(v - k * g) > eps) return 0.0;
    }
    return g;
}

}  // namespace kesten
