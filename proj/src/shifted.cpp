#include "kesten/shifted.hpp"

#include <cmath>

#include "kesten/errors.hpp"
#include "kesten/parallel.hpp"

namespace kesten {

ShiftedKernel::ShiftedKernel(const ModelSpec& spec, const SphereGrid& grid,
                             SpectralSolution solution)
    : spec_(&spec), grid_(&grid), sol_(std::move(solution)) {
    node_weights_.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        StepWeights w = weights_at(grid.nodes[i]);
        // Lemma-forced normalization: the raw weights must already sum to 1
        // up to discretization error.
        if (std::abs(std::expm1(w.log_renorm)) > 1e-8 && grid.dim == 1)
            throw KestenError(ErrorCode::NoConvergence,
                              "shifted weights do not sum to 1 at a node (bad eigendata)");
        node_weights_.push_back(std::move(w));
    }
}

ShiftedKernel::StepWeights ShiftedKernel::weights_at(const Vec& x) const {
    const auto& atoms = spec_->atoms;
    std::vector<double> w(atoms.size());
    double rx = grid_->interpolate(sol_.r, x);
    double sum = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        Vec y = matvec(atoms[k].M, x);
        double gain = spec_->vnorm(y);
        for (auto& c : y) c /= gain;
        double ry = grid_->interpolate(sol_.r, y);
        double wk = atoms[k].p * std::pow(gain, sol_.theta) * ry / (sol_.lambda * rx);
        if (!(wk > 0))
            throw KestenError(ErrorCode::NoConvergence, "nonpositive shifted weight (eigendata invalid)");
        w[k] = wk;
        sum += wk;
    }
    StepWeights out;
    out.log_renorm = std::log(sum);
    out.cdf.resize(w.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k] / sum;
        out.cdf[k] = acc;
    }
    out.cdf.back() = 1.0;
    return out;
}

WalkState ShiftedKernel::start(const Vec& x) const {
    WalkState st;
    st.x = spec_->unit(x);
    st.s = 0.0;
    st.n = 0;
    st.log_aux = 0.0;
    return st;
}

WalkState ShiftedKernel::stationary_start(CounterRng& rng) const {
    std::vector<double> cdf(grid_->size());
    double acc = 0;
    for (std::size_t i = 0; i < grid_->size(); ++i) {
        acc += sol_.r[i] * sol_.l[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;
    return start(grid_->nodes[rng.categorical_cdf(cdf)]);
}

void walk_apply(const ModelSpec& spec, WalkState& state, std::size_t k) {
    const Atom& a = spec.atoms[k];
    Vec y = matvec(a.M, state.x);
    double gain = spec.vnorm(y);
    for (auto& c : y) c /= gain;
    state.x = std::move(y);
    state.s += std::log(gain);
    state.n += 1;
}

JointState joint_start(const ModelSpec& spec, const Vec& v0) {
    double n0 = spec.vnorm(v0);
    if (!(n0 > 0)) throw KestenError(ErrorCode::BadModelFile, "initial vector must be nonzero");
    JointState js;
    js.v_dir = v0;
    for (auto& c : js.v_dir) c /= n0;
    js.log_v = std::log(n0);
    js.walk.x = js.v_dir;
    return js;
}

void joint_apply(const ModelSpec& spec, JointState& state, std::size_t k) {
    const Atom& a = spec.atoms[k];
    // V' = M V + Q, tracked as (direction, log norm)
    Vec t = matvec(a.M, state.v_dir);
    if (state.log_v >= 0.0) {
        double scale = std::exp(-state.log_v);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += a.Q[i] * scale;
    } else {
        double scale = std::exp(state.log_v);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = t[i] * scale + a.Q[i];
    }
    double tn = spec.vnorm(t);
    for (auto& c : t) c /= tn;
    state.v_dir = std::move(t);
    state.log_v = (state.log_v >= 0.0 ? state.log_v : 0.0) + std::log(tn);
    walk_apply(spec, state.walk, k);
}

void ShiftedKernel::apply_atom(WalkState& state, std::size_t k) const {
    walk_apply(*spec_, state, k);
}

std::size_t ShiftedKernel::advance(WalkState& state, CounterRng& rng) const {
    // d = 1 has a single node, so the cached weights always apply
    if (grid_->dim == 1) {
        const StepWeights& w = node_weights_[0];
        std::size_t k = rng.categorical_cdf(w.cdf);
        state.log_aux += w.log_renorm + sol_.log_lambda;
        state.s += std::log(spec_->atoms[k].M(0, 0));
        state.n += 1;
        return k;
    }
    StepWeights w = weights_at(state.x);
    std::size_t k = rng.categorical_cdf(w.cdf);
    state.log_aux += w.log_renorm + sol_.log_lambda;
    apply_atom(state, k);
    return k;
}

std::pair<std::size_t, WalkState> ShiftedKernel::step(const WalkState& state,
                                                      CounterRng& rng) const {
    WalkState next = state;
    std::size_t k = advance(next, rng);
    return {k, next};
}

JointState ShiftedKernel::make_joint(const Vec& v0) const { return joint_start(*spec_, v0); }

void ShiftedKernel::apply_atom_joint(JointState& state, std::size_t k) const {
    joint_apply(*spec_, state, k);
}

std::size_t ShiftedKernel::advance_joint(JointState& state, CounterRng& rng) const {
    if (grid_->dim == 1) {
        const StepWeights& w = node_weights_[0];
        std::size_t k = rng.categorical_cdf(w.cdf);
        state.walk.log_aux += w.log_renorm + sol_.log_lambda;
        const Atom& a = spec_->atoms[k];
        double m = a.M(0, 0), q = a.Q[0];
        double val = (state.log_v >= 0.0) ? m + q * std::exp(-state.log_v)
                                          : m * std::exp(state.log_v) + q;
        state.log_v = (state.log_v >= 0.0 ? state.log_v : 0.0) + std::log(val);
        state.walk.s += std::log(m);
        state.walk.n += 1;
        return k;
    }
    StepWeights w = weights_at(state.walk.x);
    std::size_t k = rng.categorical_cdf(w.cdf);
    state.walk.log_aux += w.log_renorm + sol_.log_lambda;
    apply_atom_joint(state, k);
    return k;
}

double ShiftedKernel::log_unshift_weight(const Vec& x0, const WalkState& state) const {
    if (state.n == 0) return 0.0;
    double r0 = grid_->interpolate(sol_.r, x0);
    double rn = grid_->interpolate(sol_.r, state.x);
    return std::log(r0) - std::log(rn) - sol_.theta * state.s + state.log_aux;
}

double ShiftedKernel::unshift_weight(const Vec& x0, const WalkState& state) const {
    return std::exp(log_unshift_weight(x0, state));
}

DualEstimate dual_expectation(const ShiftedKernel& kernel, const Vec& v0,
                              const std::function<bool(const JointState&)>& stop,
                              const std::function<double(const JointState&)>& payoff,
                              std::size_t n_paths, std::uint64_t seed, unsigned workers) {
    const std::uint64_t cap = kernel.spec().cycle.max_cycle_steps;
    std::vector<double> values(n_paths, 0.0);
    std::vector<unsigned char> truncated(n_paths, 0);
    parallel_replicates(n_paths, workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        JointState js = kernel.make_joint(v0);
        Vec x0 = js.walk.x;
        bool stopped = false;
        while (js.walk.n < cap) {
            kernel.advance_joint(js, rng);
            if (stop(js)) { stopped = true; break; }
        }
        if (!stopped) {
            truncated[i] = 1;
            return;
        }
        values[i] = payoff(js) * kernel.unshift_weight(x0, js.walk);
    });
    RunningStat rs;
    std::size_t n_trunc = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (truncated[i]) { ++n_trunc; continue; }
        rs.add(values[i]);
    }
    DualEstimate out;
    out.n_paths = n_paths;
    out.truncated_fraction = static_cast<double>(n_trunc) / static_cast<double>(n_paths);
    if (out.truncated_fraction > 0.01)
        throw KestenError(ErrorCode::TruncationDominates,
                          "more than 1% of paths hit max_cycle_steps before stopping");
    // Truncated paths contribute zero mass; keep the divisor at n_paths so the
    // estimator stays a (slightly biased-down) sub-probability estimate and
    // report the truncation mass alongside.
    double scale = static_cast<double>(rs.n) / static_cast<double>(n_paths);
    out.value = rs.mean * scale;
    out.stderr_ = rs.stderror() * scale;
    return out;
}

}  // namespace kesten
