#include "kesten/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "kesten/errors.hpp"
#include "kesten/parallel.hpp"

namespace kesten {

namespace {

TrajectoryPoint point_of(const JointState& js, std::size_t atom) {
    TrajectoryPoint p;
    p.v_dir = js.v_dir;
    p.log_v = js.log_v;
    p.x = js.walk.x;
    p.s = js.walk.s;
    p.log_z = js.log_v - js.walk.s;
    p.atom = atom;
    return p;
}

bool in_D(const JointState& js, const CycleConfig& cycle) {
    return js.log_v < std::log(cycle.return_radius);
}

bool in_scaled_target(const ModelSpec& spec, const JointState& js, const TargetSet& set,
                      double log_u) {
    (void)spec;
    double g = set.gauge(js.v_dir);
    if (!std::isfinite(g)) return false;
    return js.log_v > log_u + std::log(g);
}

}  // namespace

Trajectory simulate_path(const ModelSpec& spec, const Vec& v0, std::uint64_t n, CounterRng& rng) {
    const auto cdf = spec.atom_cdf();
    JointState js = joint_start(spec, v0);
    Trajectory tr;
    tr.points.reserve(n + 1);
    tr.points.push_back(point_of(js, static_cast<std::size_t>(-1)));
    for (std::uint64_t i = 0; i < n; ++i) {
        std::size_t k = rng.categorical_cdf(cdf);
        joint_apply(spec, js, k);
        tr.points.push_back(point_of(js, k));
    }
    return tr;
}

Trajectory simulate_path_forced(const ModelSpec& spec, const Vec& v0,
                                std::span<const std::size_t> atoms) {
    JointState js = joint_start(spec, v0);
    Trajectory tr;
    tr.points.reserve(atoms.size() + 1);
    tr.points.push_back(point_of(js, static_cast<std::size_t>(-1)));
    for (std::size_t k : atoms) {
        joint_apply(spec, js, k);
        tr.points.push_back(point_of(js, k));
    }
    return tr;
}

ReturnTimeResult return_time(const ModelSpec& spec, const Vec& v0, const CycleConfig& cycle,
                             CounterRng& rng, bool record_trajectory) {
    const auto cdf = spec.atom_cdf();
    JointState js = joint_start(spec, v0);
    ReturnTimeResult out;
    if (record_trajectory) out.trajectory.points.push_back(point_of(js, static_cast<std::size_t>(-1)));
    for (std::uint64_t n = 1; n <= cycle.max_cycle_steps; ++n) {
        std::size_t k = rng.categorical_cdf(cdf);
        joint_apply(spec, js, k);
        if (record_trajectory) out.trajectory.points.push_back(point_of(js, k));
        if (in_D(js, cycle)) {
            out.outcome = CycleOutcome::Returned;
            out.tau = n;
            out.trajectory.return_step = n;
            return out;
        }
    }
    out.outcome = CycleOutcome::Truncated;
    out.trajectory.truncated = true;
    return out;
}

FirstPassageResult first_passage(const ModelSpec& spec, const Vec& v0, double u,
                                 const TargetSet& set, CounterRng& rng, std::uint64_t cap,
                                 bool record_trajectory) {
    const auto cdf = spec.atom_cdf();
    const double log_u = std::log(u);
    JointState js = joint_start(spec, v0);
    FirstPassageResult out;
    if (record_trajectory) out.trajectory.points.push_back(point_of(js, static_cast<std::size_t>(-1)));
    for (std::uint64_t n = 1; n <= cap; ++n) {
        std::size_t k = rng.categorical_cdf(cdf);
        joint_apply(spec, js, k);
        if (record_trajectory) out.trajectory.points.push_back(point_of(js, k));
        if (in_scaled_target(spec, js, set, log_u)) {
            out.passed = true;
            out.time = n;
            out.trajectory.passage_step = n;
            return out;
        }
    }
    out.trajectory.truncated = true;
    return out;
}

BackwardDirection backward_direction(const ModelSpec& spec, std::span<const std::size_t> atoms) {
    const std::size_t d = spec.dim;
    auto run = [&](std::size_t window) {
        Vec w(d, 1.0);
        // innermost factor is the farthest atom: apply transposes in reverse
        std::size_t take = std::min(window, atoms.size());
        for (std::size_t j = take; j-- > 0;) {
            const Mat& m = spec.atoms[atoms[j]].M;
            Vec next(d, 0.0);
            for (std::size_t c = 0; c < d; ++c)
                for (std::size_t r = 0; r < d; ++r) next[c] += m(r, c) * w[r];
            double n1 = norm_of(next, NormKind::L1);
            for (auto& x : next) x /= n1;
            w = std::move(next);
        }
        return w;
    };
    BackwardDirection out;
    out.truncation_depth = atoms.size();
    out.y = run(atoms.size());
    if (atoms.size() >= 2) {
        Vec half = run(atoms.size() / 2);
        double diff = 0;
        for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::abs(half[i] - out.y[i]));
        out.contraction_estimate = diff;
    }
    return out;
}

AbsZSample estimate_absZ(const ShiftedKernel& kernel, const Vec& v0, const CycleConfig& cycle,
                         ZMethod method, CounterRng& rng, int kstep, std::size_t series_window) {
    const ModelSpec& spec = kernel.spec();
    JointState js = kernel.make_joint(v0);
    const double log_escape = std::log(cycle.escape_threshold);

    std::vector<std::size_t> atoms;
    std::vector<double> s_hist;
    std::vector<Vec> x_hist;
    if (method == ZMethod::Series) {
        atoms.reserve(256);
        s_hist.reserve(256);
        x_hist.reserve(256);
    }

    AbsZSample out;
    for (std::uint64_t n = 1; n <= cycle.max_cycle_steps; ++n) {
        std::size_t k = kernel.advance_joint(js, rng);
        if (method == ZMethod::Series) {
            atoms.push_back(k);
            s_hist.push_back(js.walk.s);
            x_hist.push_back(js.walk.x);
        }
        bool check_return = (kstep <= 1) || (n % static_cast<std::uint64_t>(kstep) == 0);
        if (check_return && in_D(js, cycle)) {
            out.outcome = CycleOutcome::Returned;
            out.survived = false;
            out.stop_step = n;
            break;
        }
        if (js.log_v > log_escape) {
            out.outcome = CycleOutcome::Escaped;
            out.survived = true;
            out.stop_step = n;
            break;
        }
    }
    if (out.stop_step == 0) {
        out.outcome = CycleOutcome::Truncated;
        return out;
    }

    if (method == ZMethod::Ratio) {
        out.abs_z = std::exp(js.log_v - js.walk.s);
        return out;
    }

    // Series of Lemma-3.6 type: |v| + sum_i <Y_i, Q_i> / (<Y_i, X_i> e^{S_i})
    // with Y_i the backward transposed-product direction over the window of
    // atoms following step i.
    double total = spec.vnorm(v0);
    const std::size_t n_steps = atoms.size();
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const Vec& q = spec.atoms[atoms[i - 1]].Q;
        double qn = spec.vnorm(q);
        if (qn == 0.0) continue;
        std::size_t w_end = std::min(n_steps, i + series_window);
        std::span<const std::size_t> window(atoms.data() + i, w_end - i);
        BackwardDirection bd = backward_direction(spec, window);
        double denom = dot(bd.y, x_hist[i - 1]);
        if (!(denom > 0))
            throw KestenError(ErrorCode::RegularityNotReached,
                              "<Y_i, X_i> vanished before the regularity horizon");
        total += dot(bd.y, q) / denom * std::exp(-s_hist[i - 1]);
    }
    out.abs_z = total;
    return out;
}

StationarySample sample_pi_D(const ModelSpec& spec, std::size_t n_draws, std::uint64_t seed,
                             int kstep, std::uint64_t burn_in) {
    const auto cdf = spec.atom_cdf();
    const double log_r = std::log(spec.cycle.return_radius);
    const std::uint64_t k = kstep <= 1 ? 1 : static_cast<std::uint64_t>(kstep);
    CounterRng rng(seed, 0xD0);
    JointState js = joint_start(spec, Vec(spec.dim, 1.0));

    StationarySample out;
    out.draws.reserve(n_draws);
    std::uint64_t skeleton_steps = 0, visits = 0;
    // batch means over the skeleton visits for the pi(D) stderr
    const std::size_t n_batches = 20;
    std::vector<double> batch_hits;
    std::uint64_t batch_len = 0, batch_count = 0;

    std::uint64_t step = 0;
    const std::uint64_t hard_cap = 500000000ull;
    while (out.draws.size() < n_draws && step < hard_cap) {
        for (std::uint64_t j = 0; j < k; ++j) {
            joint_apply(spec, js, rng.categorical_cdf(cdf));
            ++step;
        }
        if (step <= burn_in) continue;
        ++skeleton_steps;
        bool hit = js.log_v < log_r;
        if (hit) {
            ++visits;
            ++batch_count;
            Vec v = js.v_dir;
            double scale = std::exp(js.log_v);
            for (auto& c : v) c *= scale;
            out.draws.push_back(std::move(v));
        }
        ++batch_len;
        if (batch_len >= 2000) {
            batch_hits.push_back(static_cast<double>(batch_count) / static_cast<double>(batch_len));
            batch_len = batch_count = 0;
        }
    }
    if (out.draws.size() < n_draws)
        throw KestenError(ErrorCode::TruncationDominates,
                          "stationary sampler could not collect enough D visits");
    out.visit_frequency = static_cast<double>(visits) / static_cast<double>(skeleton_steps);
    if (batch_hits.size() >= 4) {
        RunningStat rs;
        for (double b : batch_hits) rs.add(b);
        out.visit_frequency_stderr = rs.stderror();
    } else {
        out.visit_frequency_stderr =
            std::sqrt(out.visit_frequency * (1 - out.visit_frequency) /
                      static_cast<double>(std::max<std::uint64_t>(1, skeleton_steps)));
    }
    (void)n_batches;
    return out;
}

Estimate estimate_C_of_v(const ShiftedKernel& kernel, const Vec& v0, std::size_t n_inner,
                         std::uint64_t seed, unsigned workers, int kstep, ZMethod method) {
    const ModelSpec& spec = kernel.spec();
    double r_v = kernel.r_at(spec.unit(v0));
    std::vector<double> vals(n_inner, 0.0);
    std::vector<unsigned char> trunc(n_inner, 0);
    const double alpha = kernel.theta();
    parallel_replicates(n_inner, workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        AbsZSample z = estimate_absZ(kernel, v0, spec.cycle, method, rng, kstep);
        if (z.outcome == CycleOutcome::Truncated) { trunc[i] = 1; return; }
        vals[i] = z.survived ? r_v * std::pow(z.abs_z, alpha) : 0.0;
    });
    RunningStat rs;
    std::size_t n_trunc = 0;
    for (std::size_t i = 0; i < n_inner; ++i) {
        if (trunc[i]) { ++n_trunc; continue; }
        rs.add(vals[i]);
    }
    if (static_cast<double>(n_trunc) > 0.01 * static_cast<double>(n_inner))
        throw KestenError(ErrorCode::TruncationDominates,
                          "escape vs return undecided on more than 1% of inner paths");
    return {rs.mean, rs.stderror()};
}

CEstimate estimate_C(const ShiftedKernel& kernel, std::size_t n_outer, std::size_t n_inner,
                     std::uint64_t seed, unsigned workers, ZMethod method) {
    const ModelSpec& spec = kernel.spec();
    CEstimate out;
    out.kstep = kstep_order(spec);
    if (out.kstep == 0)
        throw KestenError(ErrorCode::DegenerateQ,
                          "no k-step composite with strictly positive Q found (condition K)");

    StationarySample pi = sample_pi_D(spec, n_outer, seed + 1, out.kstep);
    out.pi_D = pi.visit_frequency;
    out.pi_D_stderr = pi.visit_frequency_stderr;
    out.outer_states = pi.draws;

    const double alpha = kernel.theta();
    std::vector<double> means(n_outer, 0.0);
    std::vector<double> trunc_frac(n_outer, 0.0);
    std::vector<Estimate> per_outer(n_outer);
    parallel_replicates(n_outer, workers, [&](std::size_t j) {
        const Vec& v = pi.draws[j];
        double r_v = kernel.r_at(spec.unit(v));
        RunningStat rs;
        std::size_t n_trunc = 0;
        for (std::size_t i = 0; i < n_inner; ++i) {
            CounterRng rng(seed, (j + 2) * 1000003ull + i);
            AbsZSample z = estimate_absZ(kernel, v, spec.cycle, method, rng, out.kstep);
            if (z.outcome == CycleOutcome::Truncated) { ++n_trunc; continue; }
            rs.add(z.survived ? r_v * std::pow(z.abs_z, alpha) : 0.0);
        }
        means[j] = rs.mean;
        per_outer[j] = {rs.mean, rs.stderror()};
        trunc_frac[j] =
            static_cast<double>(n_trunc) / static_cast<double>(std::max<std::size_t>(1, n_inner));
    });
    out.c_of_v = std::move(per_outer);
    double trunc_total = 0;
    for (double t : trunc_frac) trunc_total += t;
    out.inner_truncated_fraction = trunc_total / static_cast<double>(n_outer);
    if (out.inner_truncated_fraction > 0.01)
        throw KestenError(ErrorCode::TruncationDominates,
                          "escape vs return undecided on more than 1% of inner paths");

    RunningStat outer;
    for (double m : means) outer.add(m);
    double mean_of_means = outer.mean;

    CounterRng brng(seed, 0xB007);
    double se_boot = bootstrap_stderr(n_outer, 200, brng, [&](const std::vector<std::size_t>& idx) {
        double s = 0;
        for (std::size_t j : idx) s += means[j];
        return s / static_cast<double>(idx.size());
    });

    out.C.value = out.pi_D * mean_of_means;
    out.C.stderr_ = std::sqrt(out.pi_D * out.pi_D * se_boot * se_boot +
                              mean_of_means * mean_of_means * out.pi_D_stderr * out.pi_D_stderr);
    return out;
}

namespace {

Estimate run_ruin_paths(const ShiftedKernel& kernel, const TargetSet& set, double log_u,
                        std::size_t n_paths, const Vec& start, std::uint64_t seed, unsigned workers,
                        double* stall_fraction) {
    const double alpha = kernel.theta();
    const std::uint64_t cap = std::max<std::uint64_t>(20000, static_cast<std::uint64_t>(200 * log_u));
    std::vector<double> vals(n_paths, 0.0);
    std::vector<unsigned char> stalled(n_paths, 0);
    parallel_replicates(n_paths, workers, [&](std::size_t i) {
        CounterRng rng(seed, i);
        WalkState st = kernel.start(start);
        for (std::uint64_t n = 0; n < cap; ++n) {
            kernel.advance(st, rng);
            double g = set.gauge(st.x);
            if (!std::isfinite(g)) continue;
            double sa = st.s - std::log(g);
            if (sa > log_u) {
                double excess = sa - log_u;
                double r_a = kernel.r_at(st.x) * std::pow(g, alpha);
                vals[i] = std::exp(-alpha * excess) / r_a;
                return;
            }
        }
        stalled[i] = 1;
    });
    RunningStat rs;
    std::size_t n_stall = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (stalled[i]) { ++n_stall; continue; }
        rs.add(vals[i]);
    }
    if (stall_fraction)
        *stall_fraction = static_cast<double>(n_stall) / static_cast<double>(n_paths);
    return {rs.mean, rs.stderror()};
}

}  // namespace

DAEstimate estimate_D_A(const ShiftedKernel& kernel, const TargetSet& set, double log_u,
                        std::size_t n_paths, const std::vector<Vec>& starts, std::uint64_t seed,
                        unsigned workers) {
    if (starts.empty())
        throw KestenError(ErrorCode::BadModelFile, "estimate_D_A needs at least one start");
    const SphereGrid& grid = kernel.grid();

    bool node_unreachable = false;
    for (const auto& node : grid.nodes)
        if (!std::isfinite(set.gauge(node))) node_unreachable = true;
    bool use_schedule = node_unreachable || !set.bounded_gauge();

    DAEstimate out;
    auto pooled_over_starts = [&](const TargetSet& s, std::uint64_t sd,
                                  std::vector<Estimate>* per_start) -> Estimate {
        RunningStat agg;
        double wsum = 0, wmean = 0, wvar = 0;
        for (std::size_t j = 0; j < starts.size(); ++j) {
            double stall = 0;
            Estimate e = run_ruin_paths(kernel, s, log_u, n_paths, kernel.spec().unit(starts[j]),
                                        sd + 17 * j, workers, &stall);
            if (stall > 0.01)
                throw KestenError(ErrorCode::UnreachableSet,
                                  "ruin walk stalled on more than 1% of paths");
            if (per_start) per_start->push_back(e);
            double w = 1.0 / std::max(1e-300, e.stderr_ * e.stderr_);
            wsum += w;
            wmean += w * e.value;
            wvar += 1.0;
        }
        (void)agg; (void)wvar;
        return {wmean / wsum, std::sqrt(1.0 / wsum)};
    };

    if (!use_schedule) {
        out.D_A = pooled_over_starts(set, seed, &out.per_start);
    } else {
        out.used_truncation_schedule = true;
        double L = 4.0;
        Estimate prev{0, 0};
        for (int j = 0; j < 8; ++j, L *= 2) {
            TargetSet capped = set.truncated(L);
            Estimate e = pooled_over_starts(capped, seed + 1000 * j, nullptr);
            out.truncation_schedule.emplace_back(L, e);
            if (j > 0) {
                double gap = std::abs(prev.value - e.value);
                double tol = std::max(0.5 * std::hypot(prev.stderr_, e.stderr_), 0.01 * e.value);
                if (gap <= tol) { prev = e; break; }
            }
            prev = e;
        }
        out.D_A = prev;
        out.per_start.push_back(prev);
    }

    if (out.per_start.size() > 1) {
        for (std::size_t a = 0; a < out.per_start.size(); ++a)
            for (std::size_t b = a + 1; b < out.per_start.size(); ++b) {
                double gap = std::abs(out.per_start[a].value - out.per_start[b].value);
                double se = std::hypot(out.per_start[a].stderr_, out.per_start[b].stderr_);
                if (gap > 3 * se) out.starts_agree = false;
            }
    }
    return out;
}

OverjumpData overjump_samples(const ShiftedKernel& kernel, const TargetSet& set,
                              const std::vector<double>& log_levels, std::size_t n_per_level,
                              std::uint64_t seed, unsigned workers) {
    OverjumpData out;
    out.log_levels = log_levels;
    out.per_level.resize(log_levels.size());
    const std::uint64_t cap = 1000000;
    for (std::size_t li = 0; li < log_levels.size(); ++li) {
        double log_u = log_levels[li];
        auto& bucket = out.per_level[li];
        bucket.resize(n_per_level);
        parallel_replicates(n_per_level, workers, [&](std::size_t i) {
            CounterRng rng(seed, li * 1000003ull + i);
            WalkState st = kernel.stationary_start(rng);
            for (std::uint64_t n = 0; n < cap; ++n) {
                kernel.advance(st, rng);
                double g = set.gauge(st.x);
                if (!std::isfinite(g)) continue;
                double sa = st.s - std::log(g);
                if (sa > log_u) {
                    bucket[i] = {st.x, sa - log_u};
                    return;
                }
            }
            throw KestenError(ErrorCode::UnreachableSet, "overjump walk failed to cross the level");
        });
    }
    if (out.per_level.size() >= 2) {
        std::vector<double> a, b;
        for (const auto& s : out.per_level[out.per_level.size() - 2]) a.push_back(s.excess);
        for (const auto& s : out.per_level.back()) b.push_back(s.excess);
        out.ks_last_two = empirical_ks_distance(std::move(a), std::move(b));
    }
    return out;
}

ConstantsReport estimate_constants(const ModelSpec& spec, const SphereGrid& grid,
                                   const SpectralSolution& at_alpha, std::size_t n_outer,
                                   std::size_t n_inner, std::size_t n_ruin_paths,
                                   std::uint64_t seed, unsigned workers) {
    if (!at_alpha.alpha || !at_alpha.lambda_prime)
        throw KestenError(ErrorCode::NoRoot, "spectral solution must carry alpha and Lambda'(alpha)");
    ShiftedKernel kernel(spec, grid, at_alpha);

    ConstantsReport rep;
    rep.alpha = *at_alpha.alpha;
    rep.lambda_prime = *at_alpha.lambda_prime;
    rep.seed = seed;
    rep.n_outer = n_outer;
    rep.n_inner = n_inner;
    rep.n_ruin_paths = n_ruin_paths;

    rep.c_estimate = estimate_C(kernel, n_outer, n_inner, seed, workers);
    double drift = rep.lambda_prime * (rep.c_estimate.kstep > 1 ? rep.c_estimate.kstep : 1);

    std::vector<Vec> starts;
    if (spec.dim == 1) {
        starts = {Vec{1.0}};
    } else {
        starts.push_back(grid.nodes[grid.size() / 2]);
        starts.push_back(grid.nodes[grid.size() / 4]);
    }
    double log_u = 30.0 * std::max(0.05, drift);
    rep.d_estimate = estimate_D_A(kernel, spec.target, log_u, n_ruin_paths, starts, seed + 7, workers);

    double c = rep.c_estimate.C.value, sc = rep.c_estimate.C.stderr_;
    double d = rep.d_estimate.D_A.value, sd = rep.d_estimate.D_A.stderr_;
    rep.K_A = {c * d, std::sqrt(d * d * sc * sc + c * c * sd * sd)};
    rep.Theta = {rep.alpha * drift * d, rep.alpha * drift * sd};
    return rep;
}

}  // namespace kesten
