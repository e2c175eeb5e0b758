#include "kesten/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kesten/errors.hpp"
#include "kesten/rng.hpp"
#include "kesten/stats.hpp"

namespace kesten {

double operator_norm(const Mat& m, NormKind k) {
    switch (k) {
        case NormKind::L1: {  // max column sum
            double best = 0;
            for (std::size_t j = 0; j < m.d; ++j) {
                double s = 0;
                for (std::size_t i = 0; i < m.d; ++i) s += m(i, j);
                best = std::max(best, s);
            }
            return best;
        }
        case NormKind::Linf: {  // max row sum
            double best = 0;
            for (std::size_t i = 0; i < m.d; ++i) {
                double s = 0;
                for (std::size_t j = 0; j < m.d; ++j) s += m(i, j);
                best = std::max(best, s);
            }
            return best;
        }
        case NormKind::L2: {  // spectral norm via power iteration on m^T m
            if (m.d == 1) return m(0, 0);
            Mat g = matmul(m.transpose(), m);
            Vec v(m.d, 1.0);
            double lam = 0;
            for (int it = 0; it < 200; ++it) {
                Vec w = matvec(g, v);
                double n = norm_of(w, NormKind::L2);
                if (n == 0) return 0;
                for (auto& x : w) x /= n;
                if (it > 3 && std::abs(n - lam) < 1e-14 * std::max(1.0, n)) { lam = n; break; }
                lam = n;
                v = std::move(w);
            }
            return std::sqrt(lam);
        }
    }
    return 0;
}

double min_gain(const Mat& m, NormKind k) {
    switch (k) {
        case NormKind::L1: {  // min column sum (linear over the simplex)
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m.d; ++j) {
                double s = 0;
                for (std::size_t i = 0; i < m.d; ++i) s += m(i, j);
                best = std::min(best, s);
            }
            return best;
        }
        case NormKind::Linf: {  // attained at a vertex of the unit cube face
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < m.d; ++j) {
                double s = 0;
                for (std::size_t i = 0; i < m.d; ++i) s = std::max(s, m(i, j));
                best = std::min(best, s);
            }
            return best;
        }
        case NormKind::L2: {
            if (m.d == 1) return m(0, 0);
            // scan the nonnegative L2 sphere; diagnostic accuracy is enough
            double best = std::numeric_limits<double>::infinity();
            const int n = 512;
            if (m.d == 2) {
                for (int i = 0; i <= n; ++i) {
                    double a = (M_PI / 2) * i / n;
                    Vec x{std::cos(a), std::sin(a)};
                    best = std::min(best, norm_of(matvec(m, x), NormKind::L2));
                }
            } else {
                const int n3 = 64;
                for (int i = 0; i <= n3; ++i)
                    for (int j = 0; j <= n3; ++j) {
                        double a = (M_PI / 2) * i / n3, b = (M_PI / 2) * j / n3;
                        Vec x{std::sin(a) * std::cos(b), std::sin(a) * std::sin(b), std::cos(a)};
                        best = std::min(best, norm_of(matvec(m, x), NormKind::L2));
                    }
            }
            return best;
        }
    }
    return 0;
}

TargetSet TargetSet::norm_ball_complement(double t) {
    if (!(t >= 1.0)) throw KestenError(ErrorCode::BadModelFile, "norm ball complement level must be >= 1");
    TargetSet s;
    s.kind = Kind::NormBallComplement;
    s.level = t;
    return s;
}

TargetSet TargetSet::half_space(Vec w) {
    for (double x : w)
        if (!(x >= 0) || !std::isfinite(x))
            throw KestenError(ErrorCode::BadModelFile, "half-space weights must be finite and nonnegative");
    if (norm_of(w, NormKind::L1) == 0.0)
        throw KestenError(ErrorCode::BadModelFile, "half-space weight vector must be nonzero");
    TargetSet s;
    s.kind = Kind::HalfSpace;
    s.weight = std::move(w);
    return s;
}

TargetSet TargetSet::intersection(std::vector<TargetSet> sets) {
    if (sets.empty()) throw KestenError(ErrorCode::BadModelFile, "empty intersection target");
    TargetSet s;
    s.kind = Kind::Intersection;
    s.members = std::move(sets);
    return s;
}

double TargetSet::gauge(const Vec& x) const {
    double g = std::numeric_limits<double>::infinity();
    switch (kind) {
        case Kind::NormBallComplement:
            g = level;
            break;
        case Kind::HalfSpace: {
            double d = dot(weight, x);
            g = d <= 0.0 ? std::numeric_limits<double>::infinity() : std::max(1.0, 1.0 / d);
            break;
        }
        case Kind::Intersection: {
            g = 1.0;
            for (const auto& m : members) g = std::max(g, m.gauge(x));
            break;
        }
    }
    return std::min(g, cap);
}

bool TargetSet::bounded_gauge() const {
    if (std::isfinite(cap)) return true;
    switch (kind) {
        case Kind::NormBallComplement:
            return true;
        case Kind::HalfSpace:
            // d_A is unbounded whenever <w, x> can approach 0 on the cone,
            // i.e. whenever some coordinate weight vanishes (dim > 1).
            return weight.size() == 1 ||
                   std::count_if(weight.begin(), weight.end(), [](double v) { return v > 0; }) ==
                       static_cast<long>(weight.size());
        case Kind::Intersection:
            for (const auto& m : members)
                if (!m.bounded_gauge()) return false;
            return true;
    }
    return false;
}

TargetSet TargetSet::truncated(double L) const {
    TargetSet s = *this;
    s.cap = std::min(s.cap, std::max(1.0, L));
    return s;
}

std::vector<double> ModelSpec::atom_cdf() const {
    std::vector<double> cdf(atoms.size());
    double acc = 0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        acc += atoms[i].p;
        cdf[i] = acc;
    }
    if (!cdf.empty()) cdf.back() = 1.0;
    return cdf;
}

void ModelSpec::check_structure() const {
    if (dim == 0) throw KestenError(ErrorCode::BadModelFile, "dim must be positive");
    if (atoms.empty()) throw KestenError(ErrorCode::BadModelFile, "model needs at least one atom");
    double psum = 0;
    for (const auto& a : atoms) {
        if (!(a.p > 0)) throw KestenError(ErrorCode::BadModelFile, "atom probabilities must be > 0");
        psum += a.p;
        if (a.M.d != dim || a.Q.size() != dim)
            throw KestenError(ErrorCode::BadModelFile, "atom dimensions do not match dim");
        for (double x : a.M.a)
            if (!(x >= 0) || !std::isfinite(x))
                throw KestenError(ErrorCode::BadModelFile, "M entries must be finite and >= 0");
        for (double x : a.Q)
            if (!(x >= 0) || !std::isfinite(x))
                throw KestenError(ErrorCode::BadModelFile, "Q entries must be finite and >= 0");
        if (!is_allowable(a.M))
            throw KestenError(ErrorCode::NotAllowable, "an M atom has a zero row or column");
    }
    if (std::abs(psum - 1.0) > 1e-12)
        throw KestenError(ErrorCode::BadModelFile, "atom probabilities must sum to 1 (within 1e-12)");
}

const char* arithmetic_flag_name(ArithmeticFlag f) {
    switch (f) {
        case ArithmeticFlag::NonarithmeticLikely: return "nonarithmetic-likely";
        case ArithmeticFlag::ArithmeticDetected: return "arithmetic-detected";
        case ArithmeticFlag::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

using BoolPattern = std::vector<bool>;  // d*d positivity pattern

BoolPattern pattern_of(const Mat& m) {
    BoolPattern p(m.d * m.d);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = m.a[i] > 0;
    return p;
}

BoolPattern pattern_mul(const BoolPattern& a, const BoolPattern& b, std::size_t d) {
    BoolPattern c(d * d, false);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < d; ++k)
            if (a[i * d + k])
                for (std::size_t j = 0; j < d; ++j)
                    if (b[k * d + j]) c[i * d + j] = true;
    return c;
}

bool all_true(const BoolPattern& p) {
    return std::all_of(p.begin(), p.end(), [](bool b) { return b; });
}

double spectral_radius(const Mat& m) {
    if (m.d == 1) return m(0, 0);
    Vec v(m.d, 1.0);
    double lam = 0;
    for (int it = 0; it < 500; ++it) {
        Vec w = matvec(m, v);
        double n = norm_of(w, NormKind::L1);
        if (n == 0) return 0;
        for (auto& x : w) x /= n;
        if (it > 3 && std::abs(n - lam) < 1e-13 * std::max(1.0, n)) return n;
        lam = n;
        v = std::move(w);
    }
    return lam;
}

int regularity_horizon(const ModelSpec& spec, int n_max) {
    std::set<BoolPattern> frontier;
    for (const auto& a : spec.atoms) frontier.insert(pattern_of(a.M));
    std::vector<BoolPattern> atom_pats;
    for (const auto& a : spec.atoms) atom_pats.push_back(pattern_of(a.M));
    for (int n = 1; n <= n_max; ++n) {
        for (const auto& p : frontier)
            if (all_true(p)) return n;
        std::set<BoolPattern> next;
        for (const auto& ap : atom_pats)
            for (const auto& p : frontier) next.insert(pattern_mul(ap, p, spec.dim));
        frontier = std::move(next);
    }
    return -1;
}

ArithmeticFlag detect_arithmetic(const ModelSpec& spec, int horizon) {
    // Heuristic for Definition-style non-arithmeticity: gather log spectral
    // radii of strictly positive short products from the atom semigroup and
    // test for a common lattice generator.
    std::vector<double> logs;
    const int depth = std::min(horizon + 3, 8);
    std::vector<Mat> frontier;
    for (const auto& a : spec.atoms) frontier.push_back(a.M);
    for (int n = 1; n <= depth && logs.size() < 400; ++n) {
        for (const auto& m : frontier)
            if (strictly_positive(m)) {
                double r = spectral_radius(m);
                if (r > 0) logs.push_back(std::log(r));
            }
        if (n == depth) break;
        std::vector<Mat> next;
        if (frontier.size() * spec.atoms.size() > 4096) break;
        for (const auto& a : spec.atoms)
            for (const auto& m : frontier) next.push_back(matmul(a.M, m));
        frontier = std::move(next);
    }
    if (logs.size() < 2) return ArithmeticFlag::Unknown;
    std::vector<double> nonzero;
    for (double v : logs)
        if (std::abs(v) > 1e-12) nonzero.push_back(v);
    if (nonzero.empty()) return ArithmeticFlag::ArithmeticDetected;  // all radii equal 1
    double g = detect_lattice(nonzero, 1e-9);
    return g > 0 ? ArithmeticFlag::ArithmeticDetected : ArithmeticFlag::NonarithmeticLikely;
}

}  // namespace

ModelDiagnostics validate_model(const ModelSpec& spec, int n_max) {
    spec.check_structure();

    bool some_q = false;
    for (const auto& a : spec.atoms)
        if (norm_of(a.Q, NormKind::L1) > 0) some_q = true;
    if (!some_q) throw KestenError(ErrorCode::DegenerateQ, "all Q atoms are zero");

    ModelDiagnostics diag;
    diag.regularity_horizon = regularity_horizon(spec, n_max);
    if (diag.regularity_horizon < 0)
        throw KestenError(ErrorCode::NotPositivelyRegular,
                          "no strictly positive product within " + std::to_string(n_max) + " factors");

    diag.arithmetic_flag = detect_arithmetic(spec, diag.regularity_horizon);

    for (double theta : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0}) {
        MomentRow row{theta, 0.0, 0.0};
        for (const auto& a : spec.atoms) {
            row.e_norm_m += a.p * std::pow(operator_norm(a.M, spec.norm), theta);
            row.e_abs_q += a.p * std::pow(spec.vnorm(a.Q), theta);
        }
        diag.moment_table.push_back(row);
    }
    for (const auto& a : spec.atoms) {
        diag.atom_norms.push_back(operator_norm(a.M, spec.norm));
        diag.atom_min_gains.push_back(min_gain(a.M, spec.norm));
    }

    // Lambda'(0): exact for d = 1, pilot run of the direction chain otherwise.
    if (spec.dim == 1) {
        double lyap = 0;
        for (const auto& a : spec.atoms) lyap += a.p * std::log(a.M(0, 0));
        diag.lyapunov_estimate = lyap;
        diag.lyapunov_stderr = 0.0;
    } else {
        CounterRng rng(0x6b657374656e6cULL, 7);
        auto cdf = spec.atom_cdf();
        Vec x(spec.dim, 1.0);
        x = spec.unit(x);
        RunningStat rs;
        const int burn = 500, steps = 20000;
        for (int i = 0; i < burn + steps; ++i) {
            const Atom& a = spec.atoms[rng.categorical_cdf(cdf)];
            Vec y = matvec(a.M, x);
            double gain = spec.vnorm(y);
            if (i >= burn) rs.add(std::log(gain));
            for (auto& c : y) c /= gain;
            x = std::move(y);
        }
        diag.lyapunov_estimate = rs.mean;
        diag.lyapunov_stderr = rs.stderror();
    }
    diag.lyapunov_sign = diag.lyapunov_estimate < 0 ? -1 : (diag.lyapunov_estimate > 0 ? 1 : 0);
    if (diag.lyapunov_sign >= 0)
        throw KestenError(ErrorCode::NonContractive, "pilot estimate of Lambda'(0) is nonnegative");
    return diag;
}

double gauge(const TargetSet& set, const Vec& x, NormKind norm) {
    if (std::abs(norm_of(x, norm) - 1.0) > 1e-9)
        throw KestenError(ErrorCode::BadModelFile, "gauge argument must be a unit sphere point");
    for (double c : x)
        if (c < 0) throw KestenError(ErrorCode::BadModelFile, "gauge argument must lie in the nonnegative cone");
    return set.gauge(x);
}

int kstep_order(const ModelSpec& spec, int k_max) {
    for (int k = 1; k <= k_max; ++k) {
        ModelSpec m = (k == 1) ? spec : kstep_model(spec, k);
        for (const auto& a : m.atoms) {
            bool pos = true;
            for (double q : a.Q)
                if (!(q > 0)) pos = false;
            if (pos) return k;
        }
    }
    return 0;
}

ModelSpec kstep_model(const ModelSpec& spec, int k) {
    if (k <= 1) return spec;
    ModelSpec prev = kstep_model(spec, k - 1);
    ModelSpec out = spec;
    out.atoms.clear();
    // compose: (M2, Q2) after (M1, Q1) gives (M2 M1, M2 Q1 + Q2)
    for (const auto& a1 : prev.atoms)
        for (const auto& a2 : spec.atoms) {
            Atom c;
            c.p = a1.p * a2.p;
            c.M = matmul(a2.M, a1.M);
            Vec mq = matvec(a2.M, a1.Q);
            c.Q = axpy(1.0, mq, a2.Q);
            out.atoms.push_back(c);
        }
    return out;
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace {

NormKind parse_norm(const std::string& s) {
    if (s == "l1" || s == "L1") return NormKind::L1;
    if (s == "l2" || s == "L2") return NormKind::L2;
    if (s == "linf" || s == "Linf" || s == "LINF") return NormKind::Linf;
    throw KestenError(ErrorCode::BadModelFile, "unknown norm: " + s);
}

const char* norm_name(NormKind k) {
    switch (k) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::Linf: return "linf";
    }
    return "l1";
}

TargetSet parse_target(const nlohmann::json& j, std::size_t dim) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "norm_ball_complement") return TargetSet::norm_ball_complement(j.at("t").get<double>());
    if (kind == "half_space") {
        Vec w = j.at("w").get<std::vector<double>>();
        if (w.size() != dim) throw KestenError(ErrorCode::BadModelFile, "half-space weight dimension mismatch");
        return TargetSet::half_space(std::move(w));
    }
    if (kind == "intersection") {
        std::vector<TargetSet> members;
        for (const auto& m : j.at("members")) members.push_back(parse_target(m, dim));
        return TargetSet::intersection(std::move(members));
    }
    throw KestenError(ErrorCode::BadModelFile, "unknown target kind: " + kind);
}

nlohmann::json target_to_json(const TargetSet& t) {
    nlohmann::json j;
    switch (t.kind) {
        case TargetSet::Kind::NormBallComplement:
            j["kind"] = "norm_ball_complement";
            j["t"] = t.level;
            break;
        case TargetSet::Kind::HalfSpace:
            j["kind"] = "half_space";
            j["w"] = t.weight;
            break;
        case TargetSet::Kind::Intersection:
            j["kind"] = "intersection";
            for (const auto& m : t.members) j["members"].push_back(target_to_json(m));
            break;
    }
    return j;
}

}  // namespace

ModelSpec parse_model_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw KestenError(ErrorCode::BadModelFile, std::string("json parse failure: ") + e.what());
    }
    try {
        ModelSpec spec;
        spec.dim = j.at("dim").get<std::size_t>();
        spec.norm = parse_norm(j.value("norm", "l1"));
        for (const auto& aj : j.at("atoms")) {
            Atom a;
            a.p = aj.at("p").get<double>();
            auto mrows = aj.at("M").get<std::vector<double>>();
            if (mrows.size() != spec.dim * spec.dim)
                throw KestenError(ErrorCode::BadModelFile, "M must have dim*dim row-major entries");
            a.M = Mat(spec.dim);
            a.M.a = std::move(mrows);
            a.Q = aj.at("Q").get<std::vector<double>>();
            spec.atoms.push_back(std::move(a));
        }
        if (j.contains("target")) spec.target = parse_target(j.at("target"), spec.dim);
        if (j.contains("cycle")) {
            const auto& c = j.at("cycle");
            spec.cycle.return_radius = c.at("r").get<double>();
            spec.cycle.escape_threshold = c.value("escape", 1e4 * spec.cycle.return_radius);
            spec.cycle.max_cycle_steps = c.value("max_steps", std::uint64_t{100000});
            if (!(spec.cycle.escape_threshold > spec.cycle.return_radius))
                throw KestenError(ErrorCode::BadModelFile, "cycle.escape must exceed cycle.r");
        }
        spec.check_structure();
        return spec;
    } catch (const KestenError&) {
        throw;
    } catch (const std::exception& e) {
        throw KestenError(ErrorCode::BadModelFile, std::string("bad model document: ") + e.what());
    }
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw KestenError(ErrorCode::BadModelFile, "cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_json(ss.str());
}

std::string model_to_json(const ModelSpec& spec) {
    nlohmann::json j;
    j["dim"] = spec.dim;
    j["norm"] = norm_name(spec.norm);
    for (const auto& a : spec.atoms) {
        nlohmann::json aj;
        aj["p"] = a.p;
        aj["M"] = a.M.a;
        aj["Q"] = a.Q;
        j["atoms"].push_back(aj);
    }
    j["target"] = target_to_json(spec.target);
    j["cycle"] = {{"r", spec.cycle.return_radius},
                  {"escape", spec.cycle.escape_threshold},
                  {"max_steps", spec.cycle.max_cycle_steps}};
    return j.dump(2);
}

}  // namespace kesten
