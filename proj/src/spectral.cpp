#include "kesten/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "kesten/errors.hpp"

namespace kesten {

namespace {

// Dense matrix of the discretized operator: row i holds the action on node i.
std::vector<double> operator_matrix(const ModelSpec& spec, const SphereGrid& grid, double theta,
                                    bool transpose) {
    const std::size_t n = grid.size();
    std::vector<double> K(n * n, 0.0);
    for (const auto& atom : spec.atoms) {
        Mat m = transpose ? atom.M.transpose() : atom.M;
        for (std::size_t i = 0; i < n; ++i) {
            Vec y = matvec(m, grid.nodes[i]);
            double gain = spec.vnorm(y);
            if (!(gain > 0))
                throw KestenError(ErrorCode::InterpolationOutOfRange,
                                  "atom maps a sphere node to zero; matrix not allowable?");
            double w = atom.p * std::pow(gain, theta);
            for (auto& c : y) c /= gain;
            SphereGrid::InterpCoef ic = grid.interp_at(y);
            for (int k = 0; k < ic.count; ++k) K[i * n + ic.idx[k]] += w * ic.w[k];
        }
    }
    return K;
}

std::vector<double> mat_apply(const std::vector<double>& K, const std::vector<double>& f,
                              std::size_t n, bool adjoint) {
    std::vector<double> out(n, 0.0);
    if (!adjoint) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            const double* row = &K[i * n];
            for (std::size_t j = 0; j < n; ++j) s += row[j] * f[j];
            out[i] = s;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = &K[i * n];
            double fi = f[i];
            if (fi == 0) continue;
            for (std::size_t j = 0; j < n; ++j) out[j] += row[j] * fi;
        }
    }
    return out;
}

struct EigenPair {
    double lambda;
    std::vector<double> right;  // sup-normalized
    std::vector<double> left;   // sum-normalized
    double residual;
    std::size_t iterations;
};

EigenPair power_iterate(const std::vector<double>& K, std::size_t n, double tol,
                        std::size_t max_iter) {
    std::vector<double> r(n, 1.0), l(n, 1.0 / static_cast<double>(n));
    double lam_r = 1.0, lam_l = 1.0;
    std::size_t it = 0;
    double last_gap = 1.0;
    for (; it < max_iter; ++it) {
        std::vector<double> r2 = mat_apply(K, r, n, false);
        double nr = *std::max_element(r2.begin(), r2.end());
        for (auto& x : r2) x /= nr;
        std::vector<double> l2 = mat_apply(K, l, n, true);
        double nl = 0;
        for (double x : l2) nl += x;
        for (auto& x : l2) x /= nl;
        last_gap = std::max(std::abs(nr - lam_r), std::abs(nl - lam_l));
        lam_r = nr;
        lam_l = nl;
        r = std::move(r2);
        l = std::move(l2);
        if (it > 2 && last_gap < tol * std::max(1.0, lam_r)) break;
    }
    double lambda = 0.5 * (lam_r + lam_l);
    // residual of the right eigenvector in sup norm
    std::vector<double> kr = mat_apply(K, r, n, false);
    double res = 0, rmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        res = std::max(res, std::abs(kr[i] - lambda * r[i]));
        rmax = std::max(rmax, std::abs(r[i]));
    }
    std::vector<double> kl = mat_apply(K, l, n, true);
    double res_l = 0, lmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        res_l = std::max(res_l, std::abs(kl[i] - lambda * l[i]));
        lmax = std::max(lmax, std::abs(l[i]));
    }
    EigenPair out;
    out.lambda = lambda;
    out.right = std::move(r);
    out.left = std::move(l);
    out.residual = std::max(res / rmax, res_l / lmax);
    out.iterations = it;
    if (it >= max_iter && last_gap > tol * std::max(1.0, lambda))
        throw KestenError(ErrorCode::NoConvergence,
                          "power iteration hit max_iter; last residual " + std::to_string(out.residual));
    return out;
}

}  // namespace

std::vector<double> apply_transfer(const ModelSpec& spec, const SphereGrid& grid, double theta,
                                   const std::vector<double>& f, bool transpose) {
    const std::size_t n = grid.size();
    std::vector<double> out(n, 0.0);
    for (const auto& atom : spec.atoms) {
        Mat m = transpose ? atom.M.transpose() : atom.M;
        for (std::size_t i = 0; i < n; ++i) {
            Vec y = matvec(m, grid.nodes[i]);
            double gain = spec.vnorm(y);
            for (auto& c : y) c /= gain;
            out[i] += atom.p * std::pow(gain, theta) * grid.interpolate(f, y);
        }
    }
    return out;
}

SpectralSolution solve_eigen(const ModelSpec& spec, const SphereGrid& grid, double theta,
                             double tol, std::size_t max_iter) {
    const std::size_t n = grid.size();
    SpectralSolution sol;
    sol.theta = theta;
    sol.grid_size = n;

    std::vector<double> K = operator_matrix(spec, grid, theta, false);
    EigenPair primal = power_iterate(K, n, tol, max_iter);
    std::vector<double> Ks = operator_matrix(spec, grid, theta, true);
    EigenPair dual = power_iterate(Ks, n, tol, max_iter);

    sol.lambda = primal.lambda;
    sol.log_lambda = std::log(primal.lambda);
    sol.residual = std::max(primal.residual, dual.residual);
    sol.iterations = std::max(primal.iterations, dual.iterations);

    sol.l = primal.left;   // already sums to 1
    sol.r = primal.right;
    double c = 0;
    for (std::size_t i = 0; i < n; ++i) c += sol.r[i] * sol.l[i];
    for (auto& x : sol.r) x /= c;

    sol.l_star = dual.left;
    sol.r_star = dual.right;
    double cs = 0;
    for (std::size_t i = 0; i < n; ++i) cs += sol.r_star[i] * sol.l_star[i];
    for (auto& x : sol.r_star) x /= cs;
    return sol;
}

double find_alpha(const ModelSpec& spec, const SphereGrid& grid, double bracket_lo,
                  double bracket_hi, double tol) {
    auto lam = [&](double th) { return solve_eigen(spec, grid, th).lambda; };
    double lo = bracket_lo, hi = bracket_hi;
    double flo = lam(lo) - 1.0, fhi = lam(hi) - 1.0;
    if (!(flo < 0.0) || !(fhi > 0.0))
        throw KestenError(ErrorCode::NoRoot,
                          "bracket does not straddle lambda = 1 (moment condition failure?)");
    double mid = lo, fmid = flo;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        fmid = lam(mid) - 1.0;
        if (std::abs(fmid) < tol || (hi - lo) < 1e-13 * std::max(1.0, mid)) break;
        if (fmid < 0) { lo = mid; flo = fmid; } else { hi = mid; fhi = fmid; }
        // secant polish once the bracket is tight
        if (hi - lo < 1e-4 * std::max(1.0, mid)) {
            double sec = lo - flo * (hi - lo) / (fhi - flo);
            if (sec > lo && sec < hi) {
                double fsec = lam(sec) - 1.0;
                if (std::abs(fsec) < tol) return sec;
                if (fsec < 0) { lo = sec; flo = fsec; } else { hi = sec; fhi = fsec; }
            }
        }
    }
    return mid;
}

double lambda_prime(const ModelSpec& spec, const SphereGrid& grid, double alpha, double h) {
    if (h <= 0) h = 1e-4 * std::max(1.0, alpha);
    double up = solve_eigen(spec, grid, alpha + h).log_lambda;
    double dn = solve_eigen(spec, grid, alpha - h).log_lambda;
    return (up - dn) / (2 * h);
}

SpectralSolution solve_at_alpha(const ModelSpec& spec, const SphereGrid& grid, double bracket_lo,
                                double bracket_hi, double tol) {
    double a = find_alpha(spec, grid, bracket_lo, bracket_hi, tol);
    SpectralSolution sol = solve_eigen(spec, grid, a);
    sol.alpha = a;
    sol.lambda_prime = lambda_prime(spec, grid, a);
    return sol;
}

}  // namespace kesten
