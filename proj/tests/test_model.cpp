#include <doctest.h>

#include <cmath>
#include <limits>

#include "kesten/errors.hpp"
#include "kesten/model.hpp"
#include "kesten/rng.hpp"
#include "support.hpp"

using namespace kesten;

TEST_CASE("scalar2 diagnostics: horizon, contraction, arithmetic flag") {
    ModelSpec spec = test::scalar2();
    ModelDiagnostics d = validate_model(spec, 12);
    CHECK(d.regularity_horizon == 1);
    CHECK(d.lyapunov_sign == -1);
    // closed form: 0.4 ln 2 - 0.6 ln 3
    CHECK(d.lyapunov_estimate == doctest::Approx(0.4 * std::log(2.0) - 0.6 * std::log(3.0)).epsilon(1e-12));
    CHECK(d.arithmetic_flag == ArithmeticFlag::NonarithmeticLikely);
}

TEST_CASE("scalar1 flags arithmetic support") {
    ModelDiagnostics d = validate_model(test::scalar1(), 12);
    CHECK(d.arithmetic_flag == ArithmeticFlag::ArithmeticDetected);
    CHECK(d.regularity_horizon == 1);
}

TEST_CASE("regularity horizon of the fibonacci pattern is 2") {
    // single atom c*A0 with c small enough to keep Lambda'(0) < 0
    ModelSpec spec;
    spec.dim = 2;
    Mat m(2);
    m(0, 0) = 0.4; m(0, 1) = 0.4; m(1, 0) = 0.4; m(1, 1) = 0.0;
    spec.atoms = {Atom{1.0, m, {1.0, 1.0}}};
    ModelDiagnostics d = validate_model(spec, 12);
    CHECK(d.regularity_horizon == 2);
}

TEST_CASE("validation error paths") {
    SUBCASE("zero column is not allowable") {
        ModelSpec spec;
        spec.dim = 2;
        Mat m(2);
        m(0, 0) = 1.0; m(0, 1) = 1.0;  // second row zero => zero row
        spec.atoms = {Atom{1.0, m, {1.0, 1.0}}};
        CHECK_THROWS_WITH_AS(validate_model(spec), doctest::Contains("NotAllowable"), KestenError);
    }
    SUBCASE("degenerate Q") {
        ModelSpec spec = test::scalar2();
        for (auto& a : spec.atoms) a.Q = {0.0};
        CHECK_THROWS_WITH_AS(validate_model(spec), doctest::Contains("DegenerateQ"), KestenError);
    }
    SUBCASE("noncontractive model") {
        ModelSpec spec = test::scalar2();
        spec.atoms[0].M(0, 0) = 4.0;
        spec.atoms[1].M(0, 0) = 1.1;  // E log M > 0
        CHECK_THROWS_WITH_AS(validate_model(spec), doctest::Contains("NonContractive"), KestenError);
    }
    SUBCASE("probabilities must sum to one") {
        ModelSpec spec = test::scalar2();
        spec.atoms[0].p = 0.5;
        CHECK_THROWS_AS(validate_model(spec), KestenError);
    }
}

TEST_CASE("gauge closed forms") {
    TargetSet ball = TargetSet::norm_ball_complement(1.0);
    CHECK(gauge(ball, Vec{1.0}, NormKind::L1) == 1.0);

    TargetSet hs = TargetSet::half_space(Vec{2.0, 0.0});
    CHECK(gauge(hs, Vec{0.25, 0.75}, NormKind::L1) == doctest::Approx(2.0));
    CHECK(std::isinf(gauge(hs, Vec{0.0, 1.0}, NormKind::L1)));

    TargetSet both = TargetSet::intersection({ball, hs});
    CHECK(both.gauge(Vec{0.25, 0.75}) == doctest::Approx(2.0));

    // half-space in d=1 reduces to a scaled ball complement
    TargetSet hs1 = TargetSet::half_space(Vec{0.5});
    CHECK(gauge(hs1, Vec{1.0}, NormKind::L1) == doctest::Approx(2.0));
}

namespace {

// membership oracle independent of the gauge representation
bool member(const TargetSet& s, const Vec& v, NormKind norm) {
    switch (s.kind) {
        case TargetSet::Kind::NormBallComplement:
            return norm_of(v, norm) > s.level;
        case TargetSet::Kind::HalfSpace:
            return dot(s.weight, v) > 1.0 && norm_of(v, norm) > 1.0;
        case TargetSet::Kind::Intersection:
            for (const auto& m : s.members)
                if (!member(m, v, norm)) return false;
            return true;
    }
    return false;
}

Vec random_direction(CounterRng& rng, std::size_t d, NormKind norm) {
    Vec x(d);
    for (auto& c : x) c = rng.uniform01();
    return normalized(x, norm);
}

}  // namespace

TEST_CASE("gauge agrees with bisection on random rays") {
    CounterRng rng(20240908, 1);
    TargetSet hs = TargetSet::half_space(Vec{1.5, 0.25});
    TargetSet sets[] = {TargetSet::norm_ball_complement(2.0), hs,
                        TargetSet::intersection({TargetSet::norm_ball_complement(1.5), hs})};
    for (const auto& set : sets) {
        for (int trial = 0; trial < 1000; ++trial) {
            Vec x = random_direction(rng, 2, NormKind::L1);
            double g = set.gauge(x);
            if (!std::isfinite(g)) continue;
            // bisection of the first entry point along the ray
            double lo = 1.0, hi = g + 10.0;
            REQUIRE(member(set, axpy(hi, x, Vec(2, 0.0)), NormKind::L1));
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                if (member(set, axpy(mid, x, Vec(2, 0.0)), NormKind::L1)) hi = mid;
                else lo = mid;
            }
            CHECK(hi == doctest::Approx(g).epsilon(1e-7));
            // semi-cone property: beyond the gauge the ray stays inside
            for (double t : {g * 1.01 + 1e-9, g * 2.0, g * 31.0})
                CHECK(member(set, axpy(t, x, Vec(2, 0.0)), NormKind::L1));
        }
    }
}

TEST_CASE("monotone norms on the nonnegative cone") {
    CounterRng rng(7, 2);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t d = 1 + trial % 3;
        Vec x(d), y(d);
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = rng.uniform01();
            y[i] = x[i] + rng.uniform01();
        }
        for (NormKind k : {NormKind::L1, NormKind::L2, NormKind::Linf})
            CHECK(norm_of(x, k) <= norm_of(y, k));
    }
}

TEST_CASE("model json round trip and rejection rules") {
    ModelSpec spec = test::scalar2();
    std::string text = model_to_json(spec);
    ModelSpec back = parse_model_json(text);
    CHECK(back.dim == 1);
    CHECK(back.atoms.size() == 2);
    CHECK(back.atoms[0].M(0, 0) == 2.0);
    CHECK(back.cycle.return_radius == 3.0);

    CHECK_THROWS_AS(parse_model_json(R"({"dim":1,"atoms":[{"p":1.0,"M":[-2],"Q":[1]}]})"),
                    KestenError);
    CHECK_THROWS_AS(parse_model_json(R"({"dim":1,"atoms":[{"p":1.0,"M":[NaN],"Q":[1]}]})"),
                    KestenError);
    CHECK_THROWS_AS(parse_model_json("not json"), KestenError);
}

TEST_CASE("k-step order and composite atoms") {
    CHECK(kstep_order(test::scalar2()) == 1);

    // Q atoms vanish on complementary coordinates: k = 1 fails, k = 2 works.
    ModelSpec spec;
    spec.dim = 2;
    Mat m(2);
    m(0, 0) = 0.4; m(0, 1) = 0.3; m(1, 0) = 0.3; m(1, 1) = 0.4;
    spec.atoms = {Atom{0.5, m, {1.0, 0.0}}, Atom{0.5, m, {0.0, 1.0}}};
    CHECK(kstep_order(spec) == 2);

    ModelSpec two = kstep_model(spec, 2);
    CHECK(two.atoms.size() == 4);
    double psum = 0;
    for (const auto& a : two.atoms) psum += a.p;
    CHECK(psum == doctest::Approx(1.0));
    // composite additive part: M2 Q1 + Q2
    const Atom& c = two.atoms[0];  // (atom 0 then atom 0)
    CHECK(c.Q[0] == doctest::Approx(0.4 * 1.0 + 1.0));
    CHECK(c.Q[1] == doctest::Approx(0.3 * 1.0 + 0.0));
}

TEST_CASE("truncated target caps the gauge") {
    TargetSet hs = TargetSet::half_space(Vec{2.0, 0.0});
    TargetSet capped = hs.truncated(16.0);
    CHECK(capped.gauge(Vec{0.0, 1.0}) == doctest::Approx(16.0));
    CHECK(capped.gauge(Vec{0.25, 0.75}) == doctest::Approx(2.0));
    CHECK(capped.bounded_gauge());
}
