#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "kesten/grid.hpp"
#include "kesten/model.hpp"
#include "kesten/rng.hpp"
#include "kesten/spectral.hpp"
#include "kesten/stats.hpp"

namespace kesten {

/// State of the Markov random walk (X_n, S_n).  log_aux accumulates the
/// per-step bookkeeping (log lambda and the renormalization of discretized
/// weights) folded into unshift_weight so the estimator stays unbiased with
/// respect to the interpolated eigenfunction.
struct WalkState {
    Vec x;
    double s = 0.0;
    std::uint64_t n = 0;
    double log_aux = 0.0;
};

/// Joint chain (V_n, X_n, S_n) driven by a single atom sequence.  V is kept
/// in scaled form (unit direction + log norm); no path stores e^{S_n}.
struct JointState {
    Vec v_dir;
    double log_v = 0.0;
    WalkState walk;
};

/// Initial joint state with X_0 = (v0)~, S_0 = 0.
JointState joint_start(const ModelSpec& spec, const Vec& v0);

/// Applies atom k to both V and (X, S); measure-agnostic.
void joint_apply(const ModelSpec& spec, JointState& state, std::size_t k);

/// Applies atom k to a bare walk state.
void walk_apply(const ModelSpec& spec, WalkState& state, std::size_t k);

/// One-step sampler of the theta-shifted measure: atom k is drawn with
/// probability p_k |M_k x|^theta r((M_k x)~) / (lambda r(x)), renormalized to
/// sum exactly to one at each state.
class ShiftedKernel {
public:
    ShiftedKernel(const ModelSpec& spec, const SphereGrid& grid, SpectralSolution solution);

    const ModelSpec& spec() const { return *spec_; }
    const SphereGrid& grid() const { return *grid_; }
    const SpectralSolution& solution() const { return sol_; }
    double theta() const { return sol_.theta; }

    double r_at(const Vec& x) const { return grid_->interpolate(sol_.r, x); }

    struct StepWeights {
        std::vector<double> cdf;   // cumulative, last entry 1
        double log_renorm;         // log of the raw weight sum (pre-normalization)
    };
    StepWeights weights_at(const Vec& x) const;

    WalkState start(const Vec& x) const;

    /// Draw x from eta_theta (weights r_i l_i over nodes); s = 0.
    WalkState stationary_start(CounterRng& rng) const;

    /// One shifted step; returns the sampled atom index and the new state.
    std::pair<std::size_t, WalkState> step(const WalkState& state, CounterRng& rng) const;

    /// In-place variants used by the simulation loops.
    std::size_t advance(WalkState& state, CounterRng& rng) const;
    std::size_t advance_joint(JointState& state, CounterRng& rng) const;
    void apply_atom(WalkState& state, std::size_t k) const;
    void apply_atom_joint(JointState& state, std::size_t k) const;

    /// Likelihood weight converting shifted-path expectations to unshifted
    /// ones: r(x0) e^{-theta s} / r(X_n), times the folded renormalization.
    double unshift_weight(const Vec& x0, const WalkState& state) const;
    double log_unshift_weight(const Vec& x0, const WalkState& state) const;

    JointState make_joint(const Vec& v0) const;

private:
    const ModelSpec* spec_;
    const SphereGrid* grid_;
    SpectralSolution sol_;
    std::vector<StepWeights> node_weights_;  // cache for node starts
};

struct DualEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    double truncated_fraction = 0.0;
};

/// Unbiased estimator of E[h(path) ; stopped] for a stopping time of the
/// path filtration: simulate under the shifted kernel until `stop` fires,
/// then weight h by unshift_weight.  Paths that exceed max_cycle_steps are
/// counted as truncation mass; more than 1% of them raises
/// TruncationDominates.
DualEstimate dual_expectation(const ShiftedKernel& kernel, const Vec& v0,
                              const std::function<bool(const JointState&)>& stop,
                              const std::function<double(const JointState&)>& payoff,
                              std::size_t n_paths, std::uint64_t seed, unsigned workers = 1);

}  // namespace kesten
