#pragma once

#include <optional>
#include <vector>

#include "kesten/grid.hpp"
#include "kesten/model.hpp"

namespace kesten {

/// Eigendata of the transfer operator P_theta f(x) = E[|Mx|^theta f((Mx)~)]
/// and its transpose-matrix counterpart P*_theta on a sphere grid.
struct SpectralSolution {
    double theta = 0.0;
    double lambda = 1.0;
    double log_lambda = 0.0;

    std::vector<double> r;       // right eigenfunction values on nodes, int r dl = 1
    std::vector<double> l;       // eigenmeasure weights, sum to 1
    std::vector<double> r_star;  // dual pair (transpose matrices)
    std::vector<double> l_star;

    double residual = 0.0;       // max of primal/adjoint sup-norm residuals
    std::size_t iterations = 0;
    std::size_t grid_size = 0;

    std::optional<double> alpha;
    std::optional<double> lambda_prime;  // Lambda'(alpha)

    /// eta_theta weights: eta_i = r_i * l_i (a probability by normalization).
    std::vector<double> eta() const {
        std::vector<double> e(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) e[i] = r[i] * l[i];
        return e;
    }
};

/// One application of the discretized transfer operator to node values f.
/// With transpose=true the atom matrices are transposed (P*_theta).
std::vector<double> apply_transfer(const ModelSpec& spec, const SphereGrid& grid, double theta,
                                   const std::vector<double>& f, bool transpose = false);

/// Power iteration for (lambda, r, l, r*, l*); throws NoConvergence when the
/// eigenvalue Cauchy increments have not dropped below tol by max_iter.
SpectralSolution solve_eigen(const ModelSpec& spec, const SphereGrid& grid, double theta,
                             double tol = 1e-11, std::size_t max_iter = 20000);

/// Root of lambda(theta) = 1 on a bracket with lambda(lo) < 1 < lambda(hi).
double find_alpha(const ModelSpec& spec, const SphereGrid& grid, double bracket_lo,
                  double bracket_hi, double tol = 1e-9);

/// Central finite difference of Lambda = log lambda at alpha.
double lambda_prime(const ModelSpec& spec, const SphereGrid& grid, double alpha, double h = 0.0);

/// Convenience: find alpha, solve eigendata there, attach Lambda'(alpha).
SpectralSolution solve_at_alpha(const ModelSpec& spec, const SphereGrid& grid, double bracket_lo,
                                double bracket_hi, double tol = 1e-9);

}  // namespace kesten
