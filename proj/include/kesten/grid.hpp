#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "kesten/linalg.hpp"

namespace kesten {

/// Discretization of the nonnegative part of the unit sphere.
/// d=1 has the single node {1}; d=2 a uniform angular grid on [0, pi/2];
/// d=3 a product angular grid (polar x azimuthal) on [0, pi/2]^2.
/// Off-node function values use piecewise-linear interpolation in the chart.
struct SphereGrid {
    std::size_t dim = 1;
    NormKind norm = NormKind::L1;
    std::size_t n1 = 1, n2 = 1;  // chart resolution (n2 == 1 unless dim == 3)
    std::vector<Vec> nodes;      // unit vectors in the chosen norm
    std::vector<double> weights; // trapezoid quadrature weights in the chart

    static SphereGrid make(std::size_t dim, NormKind norm, std::size_t resolution = 0);

    std::size_t size() const { return nodes.size(); }

    /// Chart coordinates (angles of the L2-normalized direction).
    std::array<double, 2> chart(const Vec& x) const;

    struct InterpCoef {
        std::array<std::size_t, 4> idx{};
        std::array<double, 4> w{};
        int count = 0;
    };
    InterpCoef interp_at(const Vec& x) const;

    double interpolate(const std::vector<double>& f, const Vec& x) const;
    std::size_t nearest_node(const Vec& x) const;

    /// Angular (chart) distance between two directions; for d=1 always 0.
    double angular_distance(const Vec& a, const Vec& b) const;
};

}  // namespace kesten
