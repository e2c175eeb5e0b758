#include "kesten/extremes.hpp"

#include <algorithm>
#include <cmath>

#include "kesten/errors.hpp"
#include "kesten/parallel.hpp"

namespace kesten {

TailReport tail_experiment(const ModelSpec& spec, const SphereGrid& grid,
                           const SpectralSolution& at_alpha, const Estimate& c_estimate,
                           const std::vector<double>& u_grid, std::uint64_t n_samples,
                           const std::vector<AngularSet>& sets, std::uint64_t seed) {
    if (!at_alpha.alpha || !at_alpha.lambda_prime)
        throw KestenError(ErrorCode::NoRoot, "tail experiment needs alpha eigendata");
    const double alpha = *at_alpha.alpha;

    TailReport rep;
    rep.u_grid = u_grid;
    rep.n_samples = n_samples;
    rep.exceed_counts.assign(u_grid.size(), 0);
    std::vector<double> log_u(u_grid.size());
    for (std::size_t i = 0; i < u_grid.size(); ++i) log_u[i] = std::log(u_grid[i]);
    double log_u_ref = log_u[u_grid.size() / 2];
    rep.u_ref = u_grid[u_grid.size() / 2];

    rep.angular_hist.assign(grid.size(), 0.0);
    std::vector<std::uint64_t> set_counts(sets.size(), 0);
    double hist_total = 0;

    stationary_stream(spec, n_samples, 20000, seed, [&](const Vec& dir, double log_v) {
        for (std::size_t i = 0; i < log_u.size(); ++i)
            if (log_v > log_u[i]) ++rep.exceed_counts[i];
        if (log_v > log_u_ref) {
            rep.angular_hist[grid.nearest_node(dir)] += 1.0;
            hist_total += 1.0;
            for (std::size_t j = 0; j < sets.size(); ++j)
                if (grid.angular_distance(dir, sets[j].center) <= sets[j].radius) ++set_counts[j];
        }
    });

    if (rep.exceed_counts.back() < 100)
        throw KestenError(ErrorCode::InsufficientTailSamples,
                          "fewer than 100 exceedances at the largest u");

    double mn = 1e300, mx = 0;
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        double ua = std::pow(u_grid[i], alpha);
        double p = static_cast<double>(rep.exceed_counts[i]) / static_cast<double>(n_samples);
        WilsonInterval w = wilson_interval(rep.exceed_counts[i], n_samples);
        rep.scaled_tail.push_back(ua * p);
        rep.wilson_lo.push_back(ua * w.lo);
        rep.wilson_hi.push_back(ua * w.hi);
        mn = std::min(mn, ua * p);
        mx = std::max(mx, ua * p);
    }
    rep.flatness = mx / mn - 1.0;
    rep.predicted_plateau = c_estimate.value / (alpha * *at_alpha.lambda_prime);

    if (hist_total > 0)
        for (auto& h : rep.angular_hist) h /= hist_total;
    rep.l_alpha_ref = at_alpha.l;
    double tv = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        tv += std::abs(rep.angular_hist[i] - rep.l_alpha_ref[i]);
    rep.angular_tv = 0.5 * tv;

    for (std::size_t j = 0; j < sets.size(); ++j) {
        double p = static_cast<double>(set_counts[j]) / static_cast<double>(n_samples);
        rep.set_estimates.emplace_back(sets[j].label, std::pow(rep.u_ref, alpha) * p);
    }
    return rep;
}

PassageLawReport passage_law_experiment(const ModelSpec& spec, const TargetSet& set, double u,
                                        std::size_t n_replicates, double K_A, const Vec& v0,
                                        double alpha, std::uint64_t seed, unsigned workers) {
    PassageLawReport rep;
    rep.u = u;
    rep.rate_ref = K_A;
    rep.n_replicates = n_replicates;
    const double u_alpha = std::pow(u, alpha);
    const auto cap = static_cast<std::uint64_t>(std::ceil(30.0 * u_alpha / std::max(1e-6, K_A)));

    std::vector<double> times(n_replicates, -1.0);
    parallel_replicates(n_replicates, workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        FirstPassageResult fp = first_passage(spec, v0, u, set, rng, cap);
        if (fp.passed) times[i] = static_cast<double>(fp.time) / u_alpha;
    });
    for (double t : times) {
        if (t < 0) { ++rep.n_truncated; continue; }
        rep.scaled_times.push_back(t);
    }
    double mean = 0;
    for (double t : rep.scaled_times) mean += t;
    mean /= static_cast<double>(rep.scaled_times.size());
    rep.fitted_rate = 1.0 / mean;
    KsResult ks = ks_test_exponential(rep.scaled_times, K_A);
    rep.ks_statistic = ks.statistic;
    rep.ks_p_value = ks.p_value;
    return rep;
}

ExtremalIndexReport extremal_index(const ModelSpec& spec, double alpha, double lambda_prime,
                                   const Estimate& d_unit_ball, double K_A, std::size_t n_block,
                                   std::size_t n_blocks, std::uint64_t seed) {
    ExtremalIndexReport rep;
    rep.n_block = n_block;
    rep.n_blocks = n_blocks;
    rep.theta_formula = {alpha * lambda_prime * d_unit_ball.value,
                         alpha * lambda_prime * d_unit_ball.stderr_};

    // Threshold w chosen so that K_A w^{-alpha} is order one.
    double w = std::pow(K_A / 0.7, 1.0 / alpha);
    double u_star = std::pow(static_cast<double>(n_block), 1.0 / alpha) * w;
    rep.threshold = u_star;
    const double log_u = std::log(u_star);

    std::vector<double> block_max(n_blocks, -1e300);
    std::vector<double> block_exceed(n_blocks, 0.0);
    std::size_t block = 0, in_block = 0;
    stationary_stream(spec, static_cast<std::uint64_t>(n_block) * n_blocks, 20000, seed,
                      [&](const Vec&, double log_v) {
                          if (block >= n_blocks) return;
                          block_max[block] = std::max(block_max[block], log_v);
                          if (log_v > log_u) block_exceed[block] += 1.0;
                          if (++in_block == n_block) { ++block; in_block = 0; }
                      });

    auto theta_of = [&](const std::vector<std::size_t>& idx) {
        double below = 0, exceed = 0;
        for (std::size_t j : idx) {
            if (block_max[j] <= log_u) below += 1.0;
            exceed += block_exceed[j];
        }
        double f = below / static_cast<double>(idx.size());
        double tail = exceed / (static_cast<double>(idx.size()) * static_cast<double>(n_block));
        if (f <= 0 || tail <= 0) return 0.0;
        return -std::log(f) / (static_cast<double>(n_block) * tail);
    };
    std::vector<std::size_t> all(n_blocks);
    for (std::size_t j = 0; j < n_blocks; ++j) all[j] = j;
    double theta_hat = theta_of(all);
    if (theta_hat == 0.0)
        throw KestenError(ErrorCode::InsufficientTailSamples,
                          "extremal-index blocks gave degenerate counts");
    CounterRng brng(seed, 0xB157);
    double se = bootstrap_stderr(n_blocks, 200, brng, theta_of);
    rep.theta_empirical = {theta_hat, se};

    double below = 0, exceed = 0;
    for (std::size_t j = 0; j < n_blocks; ++j) {
        if (block_max[j] <= log_u) below += 1.0;
        exceed += block_exceed[j];
    }
    rep.block_max_fraction = below / static_cast<double>(n_blocks);
    rep.marginal_tail = exceed / (static_cast<double>(n_blocks) * static_cast<double>(n_block));
    return rep;
}

std::vector<PathTest> builtin_path_tests() {
    auto last_norm = [](const std::vector<Vec>& pts, NormKind norm) {
        return norm_of(pts.back(), norm);
    };
    std::vector<PathTest> tests;
    tests.push_back({"clipped_norm", [last_norm](const std::vector<Vec>& p, NormKind n) {
                         return std::min(last_norm(p, n), 10.0) / 10.0;
                     }});
    tests.push_back({"exp_neg_norm", [last_norm](const std::vector<Vec>& p, NormKind n) {
                         return std::exp(-last_norm(p, n));
                     }});
    tests.push_back({"inv_one_plus_norm", [last_norm](const std::vector<Vec>& p, NormKind n) {
                         return 1.0 / (1.0 + last_norm(p, n));
                     }});
    return tests;
}

namespace {

/// Rejection sampler over unshifted cycles conditioned on {T_u^A < tau}.
/// On acceptance hands the caller the window points V_{I_u}..V_{I_u+m}
/// (scaled by |V_{I_u}|) plus the per-step log increments up to T_u^A.
struct AcceptedCycle {
    std::vector<Vec> window;            // m+1 points, first has norm 1
    std::vector<double> log_increments; // log|V_k| - log|V_{k-1}|, k = 1..T
};

class CycleRejector {
public:
    CycleRejector(const ModelSpec& spec, const TargetSet& set, double u, double eps_u,
                  std::size_t m, Vec v0)
        : spec_(spec), set_(set), log_u_(std::log(u)), log_eps_(std::log(eps_u)), m_(m),
          v0_(std::move(v0)), cdf_(spec.atom_cdf()) {}

    bool try_cycle(CounterRng& rng, AcceptedCycle& out, bool want_increments) {
        JointState js = joint_start(spec_, v0_);
        const double log_r = std::log(spec_.cycle.return_radius);
        std::vector<std::pair<Vec, double>> window_raw;  // (dir, log_v) from I_u
        std::vector<double> incs;
        double log_i = 0.0;
        bool have_iu = false;
        bool accepted = false;
        std::uint64_t accept_step = 0;
        double prev_log_v = js.log_v;
        for (std::uint64_t n = 1; n <= spec_.cycle.max_cycle_steps; ++n) {
            joint_apply(spec_, js, rng.categorical_cdf(cdf_));
            if (want_increments && !accepted) incs.push_back(js.log_v - prev_log_v);
            prev_log_v = js.log_v;
            if (!have_iu && js.log_v > log_eps_) {
                have_iu = true;
                log_i = js.log_v;
            }
            if (have_iu && window_raw.size() < m_ + 1)
                window_raw.emplace_back(js.v_dir, js.log_v);
            if (!accepted) {
                double g = set_.gauge(js.v_dir);
                if (std::isfinite(g) && js.log_v > log_u_ + std::log(g)) {
                    accepted = true;
                    accept_step = n;
                } else if (js.log_v < log_r) {
                    return false;  // tau fired first
                }
            }
            if (accepted && window_raw.size() >= m_ + 1) break;
        }
        if (!accepted) return false;
        (void)accept_step;
        out.window.clear();
        for (auto& [dir, lv] : window_raw) {
            Vec p = dir;
            double scale = std::exp(lv - log_i);
            for (auto& c : p) c *= scale;
            out.window.push_back(std::move(p));
        }
        out.log_increments = std::move(incs);
        return true;
    }

private:
    const ModelSpec& spec_;
    const TargetSet& set_;
    double log_u_, log_eps_;
    std::size_t m_;
    Vec v0_;
    std::vector<double> cdf_;
};

}  // namespace

ConditionedPathReport conditioned_path_experiment(const ModelSpec& spec,
                                                  const ShiftedKernel& kernel,
                                                  const TargetSet& set,
                                                  const ConditioningWindow& window,
                                                  const std::vector<PathTest>& tests,
                                                  std::size_t n_accepted, const Vec& v0,
                                                  std::uint64_t seed) {
    ConditionedPathReport rep;
    rep.window = window;

    // LEFT: rejection over unshifted cycles.
    CycleRejector rej(spec, set, window.u, window.epsilon_u, window.m, v0);
    std::vector<std::vector<Vec>> left_windows;
    CounterRng rng(seed, 0x1EF7);
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = 50000000;
    AcceptedCycle cyc;
    while (left_windows.size() < n_accepted && attempts < max_attempts) {
        ++attempts;
        if (rej.try_cycle(rng, cyc, false)) left_windows.push_back(cyc.window);
        if (attempts % 1000000 == 0 &&
            static_cast<double>(left_windows.size()) / static_cast<double>(attempts) < 1e-5)
            throw KestenError(ErrorCode::RejectionTooCostly,
                              "conditioned-path acceptance fell below 1e-5");
    }
    if (left_windows.size() < n_accepted)
        throw KestenError(ErrorCode::RejectionTooCostly,
                          "conditioned-path sampler exhausted its attempt budget");
    rep.n_accepted = left_windows.size();
    rep.n_attempted = attempts;
    rep.acceptance = static_cast<double>(rep.n_accepted) / static_cast<double>(attempts);

    // RIGHT: shifted walk started from the rho angular marginal.
    TargetSet unit_ball = TargetSet::norm_ball_complement(1.0);
    double log_level = std::log(window.epsilon_u) + 3.0;
    OverjumpData rho = overjump_samples(kernel, unit_ball, {log_level * 0.7, log_level},
                                        std::max<std::size_t>(2000, n_accepted), seed + 1);
    const auto& rho_samples = rho.per_level.back();
    std::size_t n_right = std::max<std::size_t>(4000, 2 * n_accepted);
    std::vector<std::vector<Vec>> right_windows(n_right);
    CounterRng rrng(seed, 0x417);
    for (std::size_t i = 0; i < n_right; ++i) {
        const auto& start = rho_samples[i % rho_samples.size()];
        WalkState st = kernel.start(start.x);
        std::vector<Vec> pts;
        pts.push_back(st.x);
        for (std::size_t k = 1; k <= window.m; ++k) {
            kernel.advance(st, rrng);
            Vec p = st.x;
            double scale = std::exp(st.s);
            for (auto& c : p) c *= scale;
            pts.push_back(std::move(p));
        }
        right_windows[i] = std::move(pts);
    }

    for (const auto& t : tests) {
        RunningStat ls, rs;
        for (const auto& w : left_windows) ls.add(t.fn(w, spec.norm));
        for (const auto& w : right_windows) rs.add(t.fn(w, spec.norm));
        TwoSidedRecord rec;
        rec.name = t.name;
        rec.left = {ls.mean, ls.stderror()};
        rec.right = {rs.mean, rs.stderror()};
        rec.gap = ls.mean - rs.mean;
        rec.combined_stderr = std::hypot(ls.stderror(), rs.stderror());
        rep.records.push_back(std::move(rec));
    }
    return rep;
}

EmpiricalLawReport empirical_law_experiment(const ModelSpec& spec, const ShiftedKernel& kernel,
                                            const TargetSet& set, double u,
                                            const std::function<double(double)>& g,
                                            std::size_t n_accepted, const Vec& v0,
                                            std::uint64_t seed) {
    EmpiricalLawReport rep;
    rep.u = u;

    CycleRejector rej(spec, set, u, std::sqrt(u), 0, v0);
    CounterRng rng(seed, 0xE3);
    RunningStat left;
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = 50000000;
    AcceptedCycle cyc;
    std::size_t accepted = 0;
    while (accepted < n_accepted && attempts < max_attempts) {
        ++attempts;
        if (!rej.try_cycle(rng, cyc, true)) continue;
        ++accepted;
        double sum = 0;
        for (double inc : cyc.log_increments) sum += g(inc);
        left.add(sum / static_cast<double>(cyc.log_increments.size()));
        if (attempts % 1000000 == 0 &&
            static_cast<double>(accepted) / static_cast<double>(attempts) < 1e-5)
            throw KestenError(ErrorCode::RejectionTooCostly,
                              "empirical-law acceptance fell below 1e-5");
    }
    if (accepted < n_accepted)
        throw KestenError(ErrorCode::RejectionTooCostly,
                          "empirical-law sampler exhausted its attempt budget");
    rep.n_accepted = accepted;
    rep.acceptance = static_cast<double>(accepted) / static_cast<double>(attempts);
    rep.left = {left.mean, left.stderror()};

    CounterRng rrng(seed, 0xE4);
    RunningStat right;
    const std::size_t n_right = std::max<std::size_t>(200000, 10 * n_accepted);
    for (std::size_t i = 0; i < n_right; ++i) {
        WalkState st = kernel.stationary_start(rrng);
        double s0 = st.s;
        kernel.advance(st, rrng);
        right.add(g(st.s - s0));
    }
    rep.right = {right.mean, right.stderror()};
    rep.gap = rep.left.value - rep.right.value;
    rep.combined_stderr = std::hypot(rep.left.stderr_, rep.right.stderr_);
    return rep;
}

RenewalCheckReport renewal_identity_check(const ModelSpec& spec, const ShiftedKernel& kernel,
                                          const std::function<double(const Vec&)>& phi,
                                          double lambda_prime, std::size_t n_paths,
                                          std::uint64_t seed) {
    (void)spec;
    RenewalCheckReport rep;
    rep.n_paths = n_paths;

    TargetSet unit_ball = TargetSet::norm_ball_complement(1.0);
    OverjumpData rho = overjump_samples(kernel, unit_ball, {7.0, 10.0},
                                        std::max<std::size_t>(4000, n_paths), seed + 3);
    const auto& rho_samples = rho.per_level.back();

    CounterRng rng(seed, 0x4E);
    RunningStat lhs;
    const double s_cutoff = 40.0;  // e^{-40} is negligible against MC noise
    for (std::size_t i = 0; i < n_paths; ++i) {
        const auto& start = rho_samples[i % rho_samples.size()];
        WalkState st = kernel.start(start.x);
        double shift = start.excess;
        double acc = std::exp(-shift) * phi(st.x);  // i = 0 term, S_0 = 0
        for (std::uint64_t n = 0; n < 100000; ++n) {
            kernel.advance(st, rng);
            double arg = st.s + shift;
            if (arg >= 0) acc += std::exp(-arg) * phi(st.x);
            if (arg > s_cutoff) break;
        }
        lhs.add(acc);
    }
    rep.lhs = {lhs.mean, lhs.stderror()};

    const auto& sol = kernel.solution();
    double integral = 0;
    for (std::size_t i = 0; i < kernel.grid().size(); ++i)
        integral += sol.r[i] * sol.l[i] * phi(kernel.grid().nodes[i]);
    rep.rhs = integral / lambda_prime;  // int_0^inf e^{-s} ds = 1
    rep.gap = rep.lhs.value - rep.rhs;
    return rep;
}

}  // namespace kesten
