#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "kesten/errors.hpp"

namespace kesten {

using Vec = std::vector<double>;

/// Dense d x d matrix, row-major.  Dimensions here are tiny (d <= 3 for
/// spectral grids), so no external linear algebra package is warranted.
struct Mat {
    std::size_t d = 0;
    std::vector<double> a;  // row-major, size d*d

    Mat() = default;
    explicit Mat(std::size_t dim, double fill = 0.0) : d(dim), a(dim * dim, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * d + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * d + j]; }

    Mat transpose() const {
        Mat t(d);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
};

enum class NormKind { L1, L2, Linf };

inline double norm_of(const Vec& v, NormKind k) {
    switch (k) {
        case NormKind::L1: {
            double s = 0;
            for (double x : v) s += std::abs(x);
            return s;
        }
        case NormKind::L2: {
            double s = 0;
            for (double x : v) s += x * x;
            return std::sqrt(s);
        }
        case NormKind::Linf: {
            double m = 0;
            for (double x : v) m = std::max(m, std::abs(x));
            return m;
        }
    }
    return 0;
}

inline Vec normalized(Vec v, NormKind k) {
    double n = norm_of(v, k);
    assert(n > 0);
    for (double& x : v) x /= n;
    return v;
}

inline Vec matvec(const Mat& m, const Vec& v) {
    Vec r(m.d, 0.0);
    for (std::size_t i = 0; i < m.d; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < m.d; ++j) s += m.a[i * m.d + j] * v[j];
        r[i] = s;
    }
    return r;
}

inline double dot(const Vec& x, const Vec& y) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline Vec axpy(double a, const Vec& x, const Vec& y) {  // a*x + y
    Vec r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = a * x[i] + y[i];
    return r;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.d, 0.0);
    for (std::size_t i = 0; i < a.d; ++i)
        for (std::size_t k = 0; k < a.d; ++k) {
            double aik = a(i, k);
            if (aik == 0) continue;
            for (std::size_t j = 0; j < a.d; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

/// Operator norm sup_{|x|=1} |mx| for a nonnegative matrix.  The supremum is
/// attained on the nonnegative part of the sphere, which gives closed forms
/// for L1 (max column sum) and Linf (max row sum); L2 is the spectral norm,
/// obtained by power iteration on m^T m.
double operator_norm(const Mat& m, NormKind k);

/// i(m) = inf over the nonnegative unit sphere of |mx|.  Closed form for L1
/// (min column sum) and Linf (min over j of max_i m_ij); L2 by scan + refine.
double min_gain(const Mat& m, NormKind k);

inline bool strictly_positive(const Mat& m) {
    for (double x : m.a)
        if (!(x > 0)) return false;
    return true;
}

inline bool is_allowable(const Mat& m) {
    for (std::size_t i = 0; i < m.d; ++i) {
        bool row = false, col = false;
        for (std::size_t j = 0; j < m.d; ++j) {
            if (m(i, j) > 0) row = true;
            if (m(j, i) > 0) col = true;
        }
        if (!row || !col) return false;
    }
    return true;
}

}  // namespace kesten
