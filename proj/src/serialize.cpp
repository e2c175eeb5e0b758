#include "kesten/serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace kesten::io {

namespace {

using nlohmann::json;

// 17 significant digits keeps doubles bit-exact through a parse round-trip.
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json jnum(double v) {
    if (std::isfinite(v)) return json::parse(num(v));
    return json(nullptr);
}

json jvec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

json jest(const Estimate& e) { return json{{"value", jnum(e.value)}, {"stderr", jnum(e.stderr_)}}; }

}  // namespace

std::string diagnostics_json(const ModelDiagnostics& d) {
    json j;
    j["regularity_horizon"] = d.regularity_horizon;
    j["arithmetic_flag"] = arithmetic_flag_name(d.arithmetic_flag);
    json rows = json::array();
    for (const auto& r : d.moment_table)
        rows.push_back({{"theta", jnum(r.theta)}, {"E_norm_M", jnum(r.e_norm_m)}, {"E_abs_Q", jnum(r.e_abs_q)}});
    j["moment_table"] = rows;
    j["atom_norms"] = jvec(d.atom_norms);
    j["atom_min_gains"] = jvec(d.atom_min_gains);
    j["lyapunov_estimate"] = jnum(d.lyapunov_estimate);
    j["lyapunov_stderr"] = jnum(d.lyapunov_stderr);
    j["lyapunov_sign"] = d.lyapunov_sign;
    return j.dump();
}

std::string spectral_json(const SpectralSolution& s) {
    json j;
    j["theta"] = jnum(s.theta);
    j["lambda"] = jnum(s.lambda);
    j["log_lambda"] = jnum(s.log_lambda);
    j["residual"] = jnum(s.residual);
    j["grid_size"] = s.grid_size;
    j["iterations"] = s.iterations;
    if (s.alpha) j["alpha"] = jnum(*s.alpha);
    if (s.lambda_prime) j["lambda_prime"] = jnum(*s.lambda_prime);
    return j.dump();
}

std::string constants_json(const ConstantsReport& r) {
    json j;
    j["alpha"] = jnum(r.alpha);
    j["lambda_prime"] = jnum(r.lambda_prime);
    j["C"] = jest(r.c_estimate.C);
    j["pi_D"] = jnum(r.c_estimate.pi_D);
    j["pi_D_stderr"] = jnum(r.c_estimate.pi_D_stderr);
    j["kstep"] = r.c_estimate.kstep;
    j["inner_truncated_fraction"] = jnum(r.c_estimate.inner_truncated_fraction);
    json table = json::array();
    std::size_t keep = std::min<std::size_t>(r.c_estimate.outer_states.size(), 20);
    for (std::size_t i = 0; i < keep; ++i)
        table.push_back({{"v", jvec(r.c_estimate.outer_states[i])},
                         {"C_of_v", jest(r.c_estimate.c_of_v[i])}});
    j["C_of_v"] = table;
    j["D_A"] = jest(r.d_estimate.D_A);
    j["D_A_starts_agree"] = r.d_estimate.starts_agree;
    j["D_A_truncation_schedule_used"] = r.d_estimate.used_truncation_schedule;
    if (r.d_estimate.used_truncation_schedule) {
        json sched = json::array();
        for (const auto& [L, e] : r.d_estimate.truncation_schedule)
            sched.push_back({{"L", jnum(L)}, {"D", jest(e)}});
        j["D_A_truncation_schedule"] = sched;
    }
    j["K_A"] = jest(r.K_A);
    j["Theta"] = jest(r.Theta);
    j["seed"] = r.seed;
    j["n_outer"] = r.n_outer;
    j["n_inner"] = r.n_inner;
    j["n_ruin_paths"] = r.n_ruin_paths;
    return j.dump();
}

std::string tail_json(const TailReport& r) {
    json j;
    j["u_grid"] = jvec(r.u_grid);
    j["n_samples"] = r.n_samples;
    j["exceed_counts"] = r.exceed_counts;
    j["scaled_tail"] = jvec(r.scaled_tail);
    j["wilson_lo"] = jvec(r.wilson_lo);
    j["wilson_hi"] = jvec(r.wilson_hi);
    j["predicted_plateau"] = jnum(r.predicted_plateau);
    j["flatness"] = jnum(r.flatness);
    j["u_ref"] = jnum(r.u_ref);
    j["angular_tv"] = jnum(r.angular_tv);
    json sets = json::array();
    for (const auto& [label, v] : r.set_estimates)
        sets.push_back({{"label", label}, {"scaled_probability", jnum(v)}});
    j["set_estimates"] = sets;
    return j.dump();
}

std::string passage_json(const PassageLawReport& r) {
    json j;
    j["u"] = jnum(r.u);
    j["rate_ref"] = jnum(r.rate_ref);
    j["fitted_rate"] = jnum(r.fitted_rate);
    j["ks_statistic"] = jnum(r.ks_statistic);
    j["ks_p_value"] = jnum(r.ks_p_value);
    j["n_replicates"] = r.n_replicates;
    j["n_truncated"] = r.n_truncated;
    return j.dump();
}

std::string extremal_json(const ExtremalIndexReport& r) {
    json j;
    j["theta_formula"] = jest(r.theta_formula);
    j["theta_empirical"] = jest(r.theta_empirical);
    j["threshold"] = jnum(r.threshold);
    j["block_max_fraction"] = jnum(r.block_max_fraction);
    j["marginal_tail"] = jnum(r.marginal_tail);
    j["n_block"] = r.n_block;
    j["n_blocks"] = r.n_blocks;
    return j.dump();
}

std::string conditioned_json(const ConditionedPathReport& r) {
    json j;
    j["u"] = jnum(r.window.u);
    j["epsilon_u"] = jnum(r.window.epsilon_u);
    j["m"] = r.window.m;
    j["n_accepted"] = r.n_accepted;
    j["n_attempted"] = r.n_attempted;
    j["acceptance"] = jnum(r.acceptance);
    json recs = json::array();
    for (const auto& rec : r.records)
        recs.push_back({{"name", rec.name},
                        {"left", jest(rec.left)},
                        {"right", jest(rec.right)},
                        {"gap", jnum(rec.gap)},
                        {"combined_stderr", jnum(rec.combined_stderr)}});
    j["records"] = recs;
    return j.dump();
}

std::string empirical_json(const EmpiricalLawReport& r) {
    json j;
    j["u"] = jnum(r.u);
    j["n_accepted"] = r.n_accepted;
    j["acceptance"] = jnum(r.acceptance);
    j["left"] = jest(r.left);
    j["right"] = jest(r.right);
    j["gap"] = jnum(r.gap);
    j["combined_stderr"] = jnum(r.combined_stderr);
    return j.dump();
}

std::string renewal_json(const RenewalCheckReport& r) {
    json j;
    j["lhs"] = jest(r.lhs);
    j["rhs"] = jnum(r.rhs);
    j["gap"] = jnum(r.gap);
    j["n_paths"] = r.n_paths;
    return j.dump();
}

std::string overjump_json(const OverjumpData& d) {
    json j;
    j["log_levels"] = jvec(d.log_levels);
    j["ks_last_two"] = jnum(d.ks_last_two);
    json counts = json::array();
    for (const auto& lvl : d.per_level) counts.push_back(lvl.size());
    j["samples_per_level"] = counts;
    return j.dump();
}

std::uint64_t config_hash(const std::string& canonical) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string envelope(const std::string& command, std::uint64_t cfg_hash, std::uint64_t seed,
                     double wall_time_s, const std::string& payload_json) {
    json j;
    j["command"] = command;
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof hash_buf, "%016" PRIx64, cfg_hash);
    j["config_hash"] = hash_buf;
    j["seed"] = seed;
    j["wall_time_s"] = jnum(wall_time_s);
    j["version"] = "0.1.0";
    j["payload"] = json::parse(payload_json);
    return j.dump(2);
}

std::string trajectory_csv(const Trajectory& t, const ModelSpec& spec) {
    std::ostringstream out;
    out << "step";
    for (std::size_t i = 1; i <= spec.dim; ++i) out << ",V_" << i;
    out << ",S,logZ,event\n";
    for (std::size_t n = 0; n < t.points.size(); ++n) {
        const auto& p = t.points[n];
        out << n;
        double scale = std::exp(p.log_v);
        for (std::size_t i = 0; i < spec.dim; ++i) out << "," << num(p.v_dir[i] * scale);
        out << "," << num(p.s) << "," << num(p.log_z) << ",";
        if (t.return_step && *t.return_step == n) out << "return";
        else if (t.passage_step && *t.passage_step == n) out << "passage";
        else if (t.escape_step && *t.escape_step == n) out << "escape";
        out << "\n";
    }
    return out.str();
}

std::string scaled_times_csv(const PassageLawReport& r) {
    std::ostringstream out;
    out << "replicate,scaled_time\n";
    for (std::size_t i = 0; i < r.scaled_times.size(); ++i)
        out << i << "," << num(r.scaled_times[i]) << "\n";
    return out.str();
}

std::string overjump_csv(const OverjumpData& d) {
    std::ostringstream out;
    out << "log_level,excess";
    std::size_t dim = d.per_level.empty() || d.per_level[0].empty() ? 0 : d.per_level[0][0].x.size();
    for (std::size_t i = 1; i <= dim; ++i) out << ",x_" << i;
    out << "\n";
    for (std::size_t li = 0; li < d.per_level.size(); ++li)
        for (const auto& s : d.per_level[li]) {
            out << num(d.log_levels[li]) << "," << num(s.excess);
            for (double c : s.x) out << "," << num(c);
            out << "\n";
        }
    return out.str();
}

std::string tail_csv(const TailReport& r) {
    std::ostringstream out;
    out << "u,exceed_count,scaled_tail,wilson_lo,wilson_hi\n";
    for (std::size_t i = 0; i < r.u_grid.size(); ++i)
        out << num(r.u_grid[i]) << "," << r.exceed_counts[i] << "," << num(r.scaled_tail[i]) << ","
            << num(r.wilson_lo[i]) << "," << num(r.wilson_hi[i]) << "\n";
    return out.str();
}

}  // namespace kesten::io
