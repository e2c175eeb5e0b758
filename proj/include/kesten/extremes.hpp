#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kesten/simulate.hpp"

namespace kesten {

struct AngularSet {
    Vec center;     // sphere direction
    double radius;  // chart radius
    std::string label;
};

struct TailReport {
    std::vector<double> u_grid;
    std::uint64_t n_samples = 0;
    std::vector<std::uint64_t> exceed_counts;
    std::vector<double> scaled_tail;      // u^alpha * P(|V| > u)
    std::vector<double> wilson_lo, wilson_hi;  // scaled Wilson bounds
    double predicted_plateau = 0.0;       // C / (alpha lambda'(alpha))
    double flatness = 0.0;                // max/min - 1 across the grid
    // angular law of V~ given |V| > u_ref, per grid node, against l_alpha
    double u_ref = 0.0;
    std::vector<double> angular_hist;
    std::vector<double> l_alpha_ref;
    double angular_tv = 0.0;
    // optional user sets E: u^alpha * P(|V| > u, V~ in E) on the largest u
    std::vector<std::pair<std::string, double>> set_estimates;
};

TailReport tail_experiment(const ModelSpec& spec, const SphereGrid& grid,
                           const SpectralSolution& at_alpha, const Estimate& c_estimate,
                           const std::vector<double>& u_grid, std::uint64_t n_samples,
                           const std::vector<AngularSet>& sets, std::uint64_t seed);

struct PassageLawReport {
    double u = 0.0;
    double rate_ref = 0.0;   // K_A used in the test
    double fitted_rate = 0.0;  // 1 / mean(T/u^alpha)
    double ks_statistic = 0.0;
    double ks_p_value = 0.0;
    std::size_t n_replicates = 0;
    std::size_t n_truncated = 0;
    std::vector<double> scaled_times;  // T / u^alpha
};

PassageLawReport passage_law_experiment(const ModelSpec& spec, const TargetSet& set, double u,
                                        std::size_t n_replicates, double K_A, const Vec& v0,
                                        double alpha, std::uint64_t seed, unsigned workers = 1);

struct ExtremalIndexReport {
    Estimate theta_formula;
    Estimate theta_empirical;
    double threshold = 0.0;   // u* = n_block^{1/alpha} w
    double block_max_fraction = 0.0;  // P(block max <= u*)
    double marginal_tail = 0.0;       // P(|V| > u*)
    std::size_t n_block = 0, n_blocks = 0;
};

ExtremalIndexReport extremal_index(const ModelSpec& spec, double alpha, double lambda_prime,
                                   const Estimate& d_unit_ball, double K_A, std::size_t n_block,
                                   std::size_t n_blocks, std::uint64_t seed);

struct ConditioningWindow {
    double u = 0.0;
    double epsilon_u = 0.0;  // default schedule sqrt(u)
    std::size_t m = 1;
};

/// Bounded Hoelder test function evaluated on m+1 points (LEFT: V_{I_u+j} /
/// |V_{I_u}|; RIGHT: e^{S_j} X_j).
using PathTestFn = std::function<double(const std::vector<Vec>&, NormKind)>;

struct PathTest {
    std::string name;
    PathTestFn fn;
};
std::vector<PathTest> builtin_path_tests();

struct TwoSidedRecord {
    std::string name;
    Estimate left, right;
    double gap = 0.0;
    double combined_stderr = 0.0;
};

struct ConditionedPathReport {
    ConditioningWindow window;
    std::size_t n_accepted = 0;
    std::uint64_t n_attempted = 0;
    double acceptance = 0.0;
    std::vector<TwoSidedRecord> records;
};

/// Theorem-style comparison: LEFT from unshifted cycles conditioned on
/// {T_u^A < tau} by rejection, RIGHT from the shifted walk started at the
/// simulated overjump law rho.
ConditionedPathReport conditioned_path_experiment(const ModelSpec& spec,
                                                  const ShiftedKernel& kernel,
                                                  const TargetSet& set,
                                                  const ConditioningWindow& window,
                                                  const std::vector<PathTest>& tests,
                                                  std::size_t n_accepted, const Vec& v0,
                                                  std::uint64_t seed);

struct EmpiricalLawReport {
    double u = 0.0;
    std::size_t n_accepted = 0;
    double acceptance = 0.0;
    Estimate left;   // conditioned mean of (1/T) sum g(log increments)
    Estimate right;  // E^alpha_stationary[g(S_1)]
    double gap = 0.0;
    double combined_stderr = 0.0;
};

EmpiricalLawReport empirical_law_experiment(const ModelSpec& spec, const ShiftedKernel& kernel,
                                            const TargetSet& set, double u,
                                            const std::function<double(double)>& g,
                                            std::size_t n_accepted, const Vec& v0,
                                            std::uint64_t seed);

struct RenewalCheckReport {
    Estimate lhs;   // Monte Carlo sum along the walk started from rho
    double rhs = 0.0;  // quadrature from eigendata
    double gap = 0.0;
    std::size_t n_paths = 0;
};

/// Markov renewal identity for g(x,s) = e^{-s} 1{s >= 0} phi(x):
/// LHS simulates sum_i g(X_i, S_i + s) from (x, s) ~ rho; RHS equals
/// (1/Lambda'(alpha)) int phi d eta_alpha.
RenewalCheckReport renewal_identity_check(const ModelSpec& spec, const ShiftedKernel& kernel,
                                          const std::function<double(const Vec&)>& phi,
                                          double lambda_prime, std::size_t n_paths,
                                          std::uint64_t seed);

}  // namespace kesten
