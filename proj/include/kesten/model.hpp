#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kesten/linalg.hpp"

namespace kesten {

/// One support point of the law of (M, Q).
struct Atom {
    double p = 0.0;
    Mat M;
    Vec Q;
};

/// Semi-cone target set A contained in {|x| > 1}, represented through its
/// gauge d_A on the sphere: d_A(x) = inf{t > 1 : t x in A}.
struct TargetSet {
    enum class Kind { NormBallComplement, HalfSpace, Intersection };

    Kind kind = Kind::NormBallComplement;
    double level = 1.0;              // NormBallComplement: A = {|x| > level}
    Vec weight;                      // HalfSpace: A = {<w,x> > 1, |x| > 1}
    std::vector<TargetSet> members;  // Intersection: gauge = max of member gauges
    // Gauge cap from A union {|x| >= cap}; +inf means no truncation.
    double cap = std::numeric_limits<double>::infinity();

    static TargetSet norm_ball_complement(double t);
    static TargetSet half_space(Vec w);
    static TargetSet intersection(std::vector<TargetSet> sets);

    /// d_A(x) for a sphere point x; +infinity exactly when the ray through x
    /// misses A.
    double gauge(const Vec& x) const;

    bool bounded_gauge() const;
    /// Same set with the gauge capped at L, i.e. A union {|x| >= L}.
    TargetSet truncated(double L) const;
};

struct CycleConfig {
    double return_radius = 3.0;       // D = B_r(0) on the nonnegative cone, minus 0
    double escape_threshold = 3.0e4;  // shifted-measure proxy radius for tau = infinity
    std::uint64_t max_cycle_steps = 100000;
};

struct ModelSpec {
    std::size_t dim = 1;
    std::vector<Atom> atoms;
    NormKind norm = NormKind::L1;

    TargetSet target;  // defaults to the unit-ball complement
    CycleConfig cycle;

    double vnorm(const Vec& v) const { return norm_of(v, norm); }
    Vec unit(const Vec& v) const { return normalized(v, norm); }

    /// Cumulative atom probabilities, for sampling.
    std::vector<double> atom_cdf() const;

    /// Throws KestenError on structural violations (probability mass,
    /// negative entries, non-allowable atoms).
    void check_structure() const;
};

enum class ArithmeticFlag { NonarithmeticLikely, ArithmeticDetected, Unknown };

const char* arithmetic_flag_name(ArithmeticFlag f);

struct MomentRow {
    double theta;
    double e_norm_m;  // E ||M||^theta
    double e_abs_q;   // E |Q|^theta
};

struct ModelDiagnostics {
    int regularity_horizon = -1;  // smallest n with some strictly positive n-fold product
    ArithmeticFlag arithmetic_flag = ArithmeticFlag::Unknown;
    std::vector<MomentRow> moment_table;
    std::vector<double> atom_norms;      // ||M_k||
    std::vector<double> atom_min_gains;  // i(M_k)
    double lyapunov_estimate = 0.0;      // pilot estimate of Lambda'(0)
    double lyapunov_stderr = 0.0;
    int lyapunov_sign = 0;
};

/// Structural validation plus the standing-hypothesis diagnostics: positive
/// regularity within n_max, a nonzero Q atom, contraction of the unshifted
/// chain, and the (heuristic) arithmetic check on the atom-generated
/// semigroup.  Throws KestenError when the model must be rejected;
/// ArithmeticDetected is reported in the returned diagnostics, not thrown.
ModelDiagnostics validate_model(const ModelSpec& spec, int n_max = 12);

/// d_A evaluated with precondition checks (|x| = 1 on the nonnegative cone).
double gauge(const TargetSet& set, const Vec& x, NormKind norm);

ModelSpec load_model(const std::string& path);
ModelSpec parse_model_json(const std::string& text);
std::string model_to_json(const ModelSpec& spec);

/// k for condition (K): smallest k such that some k-step composite atom has
/// strictly positive additive part (k = 1 iff some Q atom is strictly
/// positive).  Returns 0 if none found with k <= k_max.
int kstep_order(const ModelSpec& spec, int k_max = 6);

/// The k-step model: atoms are all k-sequences with
/// M^ = M_{ik}...M_{i1} and Q^ = sum_j M_{ik}...M_{i(j+1)} Q_{ij}.
ModelSpec kstep_model(const ModelSpec& spec, int k);

}  // namespace kesten
