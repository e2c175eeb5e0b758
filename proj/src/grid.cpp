#include "kesten/grid.hpp"

#include <algorithm>
#include <cmath>

#include "kesten/errors.hpp"

namespace kesten {

namespace {
constexpr double kHalfPi = 1.5707963267948966;

Vec l2_direction(const Vec& x) {
    Vec v = x;
    double n = norm_of(v, NormKind::L2);
    for (auto& c : v) c /= n;
    return v;
}
}  // namespace

SphereGrid SphereGrid::make(std::size_t dim, NormKind norm, std::size_t resolution) {
    if (dim == 0 || dim > 3)
        throw KestenError(ErrorCode::BadModelFile, "sphere grids support dim in {1,2,3}");
    SphereGrid g;
    g.dim = dim;
    g.norm = norm;
    if (dim == 1) {
        g.n1 = g.n2 = 1;
        g.nodes = {Vec{1.0}};
        g.weights = {1.0};
        return g;
    }
    if (dim == 2) {
        g.n1 = resolution ? resolution : 257;
        g.n2 = 1;
        double h = kHalfPi / static_cast<double>(g.n1 - 1);
        for (std::size_t i = 0; i < g.n1; ++i) {
            double a = h * static_cast<double>(i);
            g.nodes.push_back(normalized(Vec{std::cos(a), std::sin(a)}, norm));
            g.weights.push_back((i == 0 || i + 1 == g.n1) ? h / 2 : h);
        }
        return g;
    }
    g.n1 = g.n2 = resolution ? resolution : 33;
    double h1 = kHalfPi / static_cast<double>(g.n1 - 1);
    double h2 = kHalfPi / static_cast<double>(g.n2 - 1);
    for (std::size_t i = 0; i < g.n1; ++i) {
        double th = h1 * static_cast<double>(i);  // polar, 0 at the z-axis
        for (std::size_t j = 0; j < g.n2; ++j) {
            double ph = h2 * static_cast<double>(j);
            Vec v{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
            // exact zeros on the chart boundary keep nodes on the cone faces
            for (auto& c : v)
                if (std::abs(c) < 1e-15) c = 0.0;
            if (norm_of(v, NormKind::L1) == 0.0) v = Vec{0, 0, 1};
            g.nodes.push_back(normalized(v, norm));
            double wi = (i == 0 || i + 1 == g.n1) ? h1 / 2 : h1;
            double wj = (j == 0 || j + 1 == g.n2) ? h2 / 2 : h2;
            g.weights.push_back(wi * wj);
        }
    }
    return g;
}

std::array<double, 2> SphereGrid::chart(const Vec& x) const {
    if (dim == 1) return {0.0, 0.0};
    Vec v = l2_direction(x);
    if (dim == 2) {
        double a = std::atan2(v[1], v[0]);
        return {std::clamp(a, 0.0, kHalfPi), 0.0};
    }
    double th = std::acos(std::clamp(v[2], -1.0, 1.0));
    double ph = (v[0] == 0.0 && v[1] == 0.0) ? 0.0 : std::atan2(v[1], v[0]);
    return {std::clamp(th, 0.0, kHalfPi), std::clamp(ph, 0.0, kHalfPi)};
}

SphereGrid::InterpCoef SphereGrid::interp_at(const Vec& x) const {
    InterpCoef c;
    if (dim == 1) {
        c.idx[0] = 0;
        c.w[0] = 1.0;
        c.count = 1;
        return c;
    }
    auto [a, b] = chart(x);
    if (dim == 2) {
        double h = kHalfPi / static_cast<double>(n1 - 1);
        double t = a / h;
        auto i0 = static_cast<std::size_t>(std::min(t, static_cast<double>(n1 - 2)));
        double f = t - static_cast<double>(i0);
        c.idx = {i0, i0 + 1, 0, 0};
        c.w = {1.0 - f, f, 0.0, 0.0};
        c.count = 2;
        return c;
    }
    double h1 = kHalfPi / static_cast<double>(n1 - 1);
    double h2 = kHalfPi / static_cast<double>(n2 - 1);
    double t1 = a / h1, t2 = b / h2;
    auto i0 = static_cast<std::size_t>(std::min(t1, static_cast<double>(n1 - 2)));
    auto j0 = static_cast<std::size_t>(std::min(t2, static_cast<double>(n2 - 2)));
    double f1 = t1 - static_cast<double>(i0);
    double f2 = t2 - static_cast<double>(j0);
    c.idx = {i0 * n2 + j0, i0 * n2 + j0 + 1, (i0 + 1) * n2 + j0, (i0 + 1) * n2 + j0 + 1};
    c.w = {(1 - f1) * (1 - f2), (1 - f1) * f2, f1 * (1 - f2), f1 * f2};
    c.count = 4;
    return c;
}

double SphereGrid::interpolate(const std::vector<double>& f, const Vec& x) const {
    InterpCoef c = interp_at(x);
    double s = 0;
    for (int k = 0; k < c.count; ++k) s += c.w[k] * f[c.idx[k]];
    return s;
}

std::size_t SphereGrid::nearest_node(const Vec& x) const {
    InterpCoef c = interp_at(x);
    std::size_t best = c.idx[0];
    double bw = c.w[0];
    for (int k = 1; k < c.count; ++k)
        if (c.w[k] > bw) { bw = c.w[k]; best = c.idx[k]; }
    return best;
}

double SphereGrid::angular_distance(const Vec& a, const Vec& b) const {
    if (dim == 1) return 0.0;
    auto ca = chart(a), cb = chart(b);
    double d1 = ca[0] - cb[0], d2 = ca[1] - cb[1];
    return std::sqrt(d1 * d1 + d2 * d2);
}

}  // namespace kesten
