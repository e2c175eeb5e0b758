#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kesten/shifted.hpp"

namespace kesten {

struct TrajectoryPoint {
    Vec v_dir;
    double log_v = 0.0;
    Vec x;       // direction of the matrix-product action started at (v0)~
    double s = 0.0;
    double log_z = 0.0;  // log|V_n| - S_n
    std::size_t atom = static_cast<std::size_t>(-1);  // atom applied to reach this point
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;  // points[0] is the initial state
    std::optional<std::uint64_t> return_step;   // first entry into D
    std::optional<std::uint64_t> passage_step;  // first entry into uA
    std::optional<std::uint64_t> escape_step;   // first exit above escape_threshold
    bool truncated = false;
};

enum class CycleOutcome { Returned, Escaped, Truncated };

/// n unshifted steps of V_n = M_n V_{n-1} + Q_n with (X_n, S_n, log Z_n)
/// bookkeeping started from X_0 = (v0)~.
Trajectory simulate_path(const ModelSpec& spec, const Vec& v0, std::uint64_t n, CounterRng& rng);

/// Same recursion along a forced atom sequence (test hook and CSV tracing).
Trajectory simulate_path_forced(const ModelSpec& spec, const Vec& v0,
                                std::span<const std::size_t> atoms);

struct ReturnTimeResult {
    CycleOutcome outcome;
    std::uint64_t tau = 0;  // valid when outcome == Returned
    Trajectory trajectory;
};
/// First entry time of the unshifted chain into D = {0 < |v| < r}.
ReturnTimeResult return_time(const ModelSpec& spec, const Vec& v0, const CycleConfig& cycle,
                             CounterRng& rng, bool record_trajectory = false);

struct FirstPassageResult {
    bool passed = false;
    std::uint64_t time = 0;
    Trajectory trajectory;
};
/// First n with V_n in uA, i.e. |V_n| > u * d_A((V_n)~), under the unshifted
/// chain, truncated at cap.
FirstPassageResult first_passage(const ModelSpec& spec, const Vec& v0, double u,
                                 const TargetSet& set, CounterRng& rng, std::uint64_t cap,
                                 bool record_trajectory = false);

/// Limit direction of backward transposed products over a forward-ordered
/// atom window (the weighting directions Y_i of the |Z| series).
struct BackwardDirection {
    Vec y;
    std::size_t truncation_depth = 0;
    double contraction_estimate = 0.0;  // sup-change over the last doubling
};
BackwardDirection backward_direction(const ModelSpec& spec, std::span<const std::size_t> atoms);

enum class ZMethod { Ratio, Series };

struct AbsZSample {
    double abs_z = 0.0;
    bool survived = false;
    CycleOutcome outcome = CycleOutcome::Truncated;
    std::uint64_t stop_step = 0;
};
/// Runs the shifted joint chain from ((v0)~, v0) until it either enters D
/// (survived = false) or exceeds escape_threshold (proxy for tau = infinity).
/// Ratio evaluates |Z_n| = |V_n| e^{-S_n} at the stopping step; Series sums
/// the backward-direction series over the realized atoms.  With kstep > 1 the
/// return to D is only tested on the k-skeleton.
AbsZSample estimate_absZ(const ShiftedKernel& kernel, const Vec& v0, const CycleConfig& cycle,
                         ZMethod method, CounterRng& rng, int kstep = 1,
                         std::size_t series_window = 50);

struct StationarySample {
    std::vector<Vec> draws;  // hitting-chain states in D
    double visit_frequency = 0.0;  // estimate of pi(D) (on the k-skeleton)
    double visit_frequency_stderr = 0.0;
};
StationarySample sample_pi_D(const ModelSpec& spec, std::size_t n_draws, std::uint64_t seed,
                             int kstep = 1, std::uint64_t burn_in = 10000);

struct CEstimate {
    Estimate C;
    std::vector<Vec> outer_states;
    std::vector<Estimate> c_of_v;  // aligned with outer_states
    double pi_D = 0.0;
    double pi_D_stderr = 0.0;
    double inner_truncated_fraction = 0.0;
    int kstep = 1;
};
/// Cycle estimator of the Kesten constant: outer draws from pi_D, inner
/// shifted runs of r_alpha((v)~) |Z|^alpha 1{survived}; C = pi(D) times the
/// mean over outer draws of the inner means.
CEstimate estimate_C(const ShiftedKernel& kernel, std::size_t n_outer, std::size_t n_inner,
                     std::uint64_t seed, unsigned workers = 1, ZMethod method = ZMethod::Ratio);

/// C(v) for a fixed start: r_alpha((v)~) E[|Z|^alpha 1{survived}].
Estimate estimate_C_of_v(const ShiftedKernel& kernel, const Vec& v0, std::size_t n_inner,
                         std::uint64_t seed, unsigned workers = 1, int kstep = 1,
                         ZMethod method = ZMethod::Ratio);

struct DAEstimate {
    Estimate D_A;
    std::vector<Estimate> per_start;
    bool starts_agree = true;
    bool used_truncation_schedule = false;
    std::vector<std::pair<double, Estimate>> truncation_schedule;  // (L, D_{A_L})
};
/// Ruin-constant estimator: shifted Markov walk (no V) until
/// S_n - log d_A(X_n) > log_u; average of e^{-alpha excess} / r^A_alpha(X_T).
/// Unreachable rays (d_A = infinity) trigger the A_L = A u {|x| >= L}
/// truncation schedule with a monotone-limit stopping rule.
DAEstimate estimate_D_A(const ShiftedKernel& kernel, const TargetSet& set, double log_u,
                        std::size_t n_paths, const std::vector<Vec>& starts, std::uint64_t seed,
                        unsigned workers = 1);

struct OverjumpSample {
    Vec x;
    double excess = 0.0;  // S^A at passage minus log u
};
struct OverjumpData {
    std::vector<double> log_levels;
    std::vector<std::vector<OverjumpSample>> per_level;
    double ks_last_two = 0.0;  // stabilization diagnostic across the two largest levels
};
/// Empirical approximation of the overjump law rho (or rho^A): records
/// (X_T, S^A_T - log u) at first passage of the shifted walk for each level.
OverjumpData overjump_samples(const ShiftedKernel& kernel, const TargetSet& set,
                              const std::vector<double>& log_levels, std::size_t n_per_level,
                              std::uint64_t seed, unsigned workers = 1);

struct ConstantsReport {
    double alpha = 0.0;
    double lambda_prime = 0.0;
    CEstimate c_estimate;
    DAEstimate d_estimate;
    Estimate K_A;     // C * D_A with delta-method stderr
    Estimate Theta;   // alpha * Lambda'(alpha) * D_A
    std::uint64_t seed = 0;
    std::size_t n_outer = 0, n_inner = 0, n_ruin_paths = 0;
};
ConstantsReport estimate_constants(const ModelSpec& spec, const SphereGrid& grid,
                                   const SpectralSolution& at_alpha, std::size_t n_outer,
                                   std::size_t n_inner, std::size_t n_ruin_paths,
                                   std::uint64_t seed, unsigned workers = 1);

/// Streams (v_dir, log|V|) of a long unshifted run to `fn` after burn-in;
/// low-overhead loop used by the tail and extremal-index experiments.
template <typename F>
void stationary_stream(const ModelSpec& spec, std::uint64_t n_steps, std::uint64_t burn_in,
                       std::uint64_t seed, F&& fn) {
    CounterRng rng(seed, 0x57a7);
    const auto cdf = spec.atom_cdf();
    const std::size_t d = spec.dim;
    Vec v(d, 1.0), t(d, 0.0);
    double log_v = 0.0;
    for (std::uint64_t step = 0; step < burn_in + n_steps; ++step) {
        const Atom& a = spec.atoms[rng.categorical_cdf(cdf)];
        if (d == 1) {
            // scalar fast path in log domain
            double m = a.M.a[0], q = a.Q[0];
            double val = (log_v >= 0.0) ? m * v[0] + q * std::exp(-log_v)
                                        : m * v[0] * std::exp(log_v) + q;
            log_v = (log_v >= 0.0 ? log_v : 0.0) + std::log(val);
            v[0] = 1.0;
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                double s = 0;
                for (std::size_t j = 0; j < d; ++j) s += a.M.a[i * d + j] * v[j];
                t[i] = s;
            }
            if (log_v >= 0.0) {
                double sc = std::exp(-log_v);
                for (std::size_t i = 0; i < d; ++i) t[i] += a.Q[i] * sc;
            } else {
                double sc = std::exp(log_v);
                for (std::size_t i = 0; i < d; ++i) t[i] = t[i] * sc + a.Q[i];
            }
            double nv = spec.vnorm(t);
            for (std::size_t i = 0; i < d; ++i) v[i] = t[i] / nv;
            log_v = (log_v >= 0.0 ? log_v : 0.0) + std::log(nv);
        }
        if (step >= burn_in) fn(v, log_v);
    }
}

}  // namespace kesten
