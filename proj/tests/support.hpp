#pragma once

#include "kesten/model.hpp"

namespace kesten::test {

// d = 1, atoms (0.4, M=2, Q=1), (0.6, M=1/3, Q=1): alpha = 1,
// Lambda'(1) = 0.8 ln 2 - 0.2 ln 3, Lambda'(0) < 0, nonarithmetic.
inline ModelSpec scalar2() {
    ModelSpec spec;
    spec.dim = 1;
    Atom a1{0.4, Mat(1), {1.0}};
    a1.M(0, 0) = 2.0;
    Atom a2{0.6, Mat(1), {1.0}};
    a2.M(0, 0) = 1.0 / 3.0;
    spec.atoms = {a1, a2};
    spec.cycle.return_radius = 3.0;
    spec.cycle.escape_threshold = 3.0e4;
    spec.cycle.max_cycle_steps = 100000;
    spec.target = TargetSet::norm_ball_complement(1.0);
    return spec;
}

// d = 1, atoms (1/3, M=2, Q=1), (2/3, M=1/2, Q=1): alpha = 1, arithmetic
// (both log-gains are multiples of ln 2).
inline ModelSpec scalar1() {
    ModelSpec spec;
    spec.dim = 1;
    Atom a1{1.0 / 3.0, Mat(1), {1.0}};
    a1.M(0, 0) = 2.0;
    Atom a2{2.0 / 3.0, Mat(1), {1.0}};
    a2.M(0, 0) = 0.5;
    spec.atoms = {a1, a2};
    spec.cycle.return_radius = 3.0;
    spec.cycle.escape_threshold = 3.0e4;
    spec.target = TargetSet::norm_ball_complement(1.0);
    return spec;
}

// d = 2 common-direction model: both atoms scale A0 = [[1,1],[1,0]].
// With mixing probability q on c = 1 (vs c = 1/4), lambda(1) = E[c] phi.
inline ModelSpec scaled_fib(double q = 0.5) {
    ModelSpec spec;
    spec.dim = 2;
    Mat a0(2);
    a0(0, 0) = 1; a0(0, 1) = 1; a0(1, 0) = 1; a0(1, 1) = 0;
    Atom a1{q, a0, {1.0, 1.0}};
    Mat a0q = a0;
    for (auto& x : a0q.a) x *= 0.25;
    Atom a2{1.0 - q, a0q, {1.0, 1.0}};
    spec.atoms = {a1, a2};
    spec.cycle.return_radius = 6.0;
    spec.cycle.escape_threshold = 6.0e4;
    spec.target = TargetSet::norm_ball_complement(1.0);
    return spec;
}

// Critical mixing weight: E[c] phi = 1, so alpha = 1 for scaled_fib(q).
inline double scaled_fib_critical_q() {
    double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    return (1.0 / phi - 0.25) / 0.75;
}

// d = 2 model with spread angular mass but exact radial oracles: the atoms
// are scaled column-stochastic matrices, so under L1 every gain is exactly
// the scale factor and lambda(theta) = 0.4 2^theta + 0.6 3^-theta (the
// SCALAR2 curve) with r == 1, while the direction chain genuinely mixes.
inline ModelSpec planar() {
    ModelSpec spec;
    spec.dim = 2;
    Mat b1(2);
    b1(0, 0) = 0.3; b1(0, 1) = 0.8; b1(1, 0) = 0.7; b1(1, 1) = 0.2;
    Mat b2(2);
    b2(0, 0) = 0.9; b2(0, 1) = 0.4; b2(1, 0) = 0.1; b2(1, 1) = 0.6;
    for (auto& x : b1.a) x *= 2.0;
    for (auto& x : b2.a) x /= 3.0;
    Atom a1{0.4, b1, {1.0, 0.5}};
    Atom a2{0.6, b2, {1.0, 0.5}};
    spec.atoms = {a1, a2};
    spec.cycle.return_radius = 4.0;
    spec.cycle.escape_threshold = 4.0e4;
    spec.target = TargetSet::norm_ball_complement(1.0);
    return spec;
}

// planar() with one row rescaled: no closed forms, r and r* both
// nontrivial; used for duality/convexity/refinement checks.
inline ModelSpec planar_rough() {
    ModelSpec spec = planar();
    spec.atoms[0].M(0, 0) *= 1.25;
    spec.atoms[0].M(0, 1) *= 0.85;
    spec.atoms[1].M(1, 0) *= 1.3;
    return spec;
}

}  // namespace kesten::test
