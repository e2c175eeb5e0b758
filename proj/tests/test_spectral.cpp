#include <doctest.h>

#include <cmath>

#include "kesten/errors.hpp"
#include "kesten/spectral.hpp"
#include "support.hpp"

using namespace kesten;

TEST_CASE("apply_transfer closed forms") {
    ModelSpec spec = test::scalar2();
    SphereGrid grid = SphereGrid::make(1, spec.norm);

    std::vector<double> ones{1.0};
    auto out = apply_transfer(spec, grid, 2.0, ones);
    CHECK(out[0] == doctest::Approx(0.4 * 4.0 + 0.6 / 9.0).epsilon(1e-14));

    out = apply_transfer(spec, grid, 0.0, ones);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-14));

    // d=2 scalar multiple of the identity: |Mx| = c, direction unchanged
    ModelSpec iso;
    iso.dim = 2;
    Mat m(2);
    m(0, 0) = 0.5; m(1, 1) = 0.5;
    iso.atoms = {Atom{1.0, m, {1.0, 1.0}}};
    SphereGrid g2 = SphereGrid::make(2, iso.norm, 65);
    std::vector<double> f(g2.size());
    for (std::size_t i = 0; i < g2.size(); ++i) f[i] = 1.0 + g2.nodes[i][0];
    auto got = apply_transfer(iso, g2, 1.7, f);
    for (std::size_t i = 0; i < g2.size(); ++i)
        CHECK(got[i] == doctest::Approx(std::pow(0.5, 1.7) * f[i]).epsilon(1e-10));
}

TEST_CASE("scalar eigendata is exact") {
    ModelSpec spec = test::scalar2();
    SphereGrid grid = SphereGrid::make(1, spec.norm);
    SpectralSolution sol = solve_eigen(spec, grid, 1.0);
    CHECK(sol.lambda == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.r[0] == doctest::Approx(1.0));
    CHECK(sol.l[0] == doctest::Approx(1.0));
    CHECK(sol.residual < 1e-11);

    SpectralSolution at0 = solve_eigen(spec, grid, 0.0);
    CHECK(at0.lambda == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("find_alpha on the scalar models") {
    SphereGrid grid = SphereGrid::make(1, NormKind::L1);
    CHECK(find_alpha(test::scalar2(), grid, 0.5, 2.0, 1e-10) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(find_alpha(test::scalar1(), grid, 0.5, 2.0, 1e-10) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_WITH_AS(find_alpha(test::scalar2(), grid, 1.5, 3.0, 1e-10),
                         doctest::Contains("NoRoot"), KestenError);
}

TEST_CASE("lambda_prime central difference matches the closed form") {
    SphereGrid grid = SphereGrid::make(1, NormKind::L1);
    double lp = lambda_prime(test::scalar2(), grid, 1.0);
    CHECK(lp == doctest::Approx(0.8 * std::log(2.0) - 0.2 * std::log(3.0)).epsilon(1e-6));
    double lp1 = lambda_prime(test::scalar1(), grid, 1.0);
    CHECK(lp1 == doctest::Approx(std::log(2.0) / 3.0).epsilon(1e-6));
}

TEST_CASE("scaled fibonacci model: lambda and the angular mass") {
    double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    ModelSpec spec = test::scaled_fib();
    SphereGrid grid = SphereGrid::make(2, spec.norm, 257);
    SpectralSolution sol = solve_eigen(spec, grid, 1.0);
    CHECK(sol.lambda == doctest::Approx(0.625 * phi).epsilon(2e-3));

    // l_1 concentrates at the Perron direction of A0
    Vec perron = normalized(Vec{phi, 1.0}, spec.norm);
    double near_mass = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.angular_distance(grid.nodes[i], perron) <= 0.05) near_mass += sol.l[i];
    CHECK(near_mass >= 0.9);

    // critical mixing puts the root at 1
    ModelSpec crit = test::scaled_fib(test::scaled_fib_critical_q());
    double a = find_alpha(crit, grid, 0.5, 2.0, 1e-9);
    CHECK(a == doctest::Approx(1.0).epsilon(5e-3));
}

TEST_CASE("planar column-stochastic model reproduces the scalar curve") {
    ModelSpec spec = test::planar();
    SphereGrid grid = SphereGrid::make(2, spec.norm, 257);
    for (double th : {0.5, 1.0, 1.7}) {
        SpectralSolution sol = solve_eigen(spec, grid, th);
        double expected = 0.4 * std::pow(2.0, th) + 0.6 * std::pow(3.0, -th);
        CHECK(sol.lambda == doctest::Approx(expected).epsilon(1e-9));
        for (double r : sol.r) CHECK(r == doctest::Approx(1.0).epsilon(1e-7));
    }
    CHECK(find_alpha(spec, grid, 0.5, 2.0, 1e-10) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("spectral invariants on a spread planar model") {
    ModelSpec spec = test::planar_rough();
    SphereGrid grid = SphereGrid::make(2, spec.norm, 257);

    SUBCASE("lambda(0) = 1 with flat eigenfunction") {
        SpectralSolution sol = solve_eigen(spec, grid, 0.0);
        CHECK(sol.lambda == doctest::Approx(1.0).epsilon(1e-10));
        for (double r : sol.r) CHECK(r == doctest::Approx(1.0).epsilon(1e-8));
    }

    SUBCASE("Lambda is convex on a theta grid") {
        std::vector<double> logs;
        for (double th : {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0})
            logs.push_back(solve_eigen(spec, grid, th).log_lambda);
        for (std::size_t i = 1; i + 1 < logs.size(); ++i)
            CHECK(logs[i + 1] - 2 * logs[i] + logs[i - 1] >= -1e-8);
    }

    SUBCASE("solution invariants: positivity, normalization, residual") {
        SpectralSolution sol = solve_eigen(spec, grid, 1.2);
        double lr = 0, sum_l = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(sol.r[i] > 0);
            CHECK(sol.l[i] >= 0);
            lr += sol.r[i] * sol.l[i];
            sum_l += sol.l[i];
        }
        CHECK(lr == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(sum_l == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sol.residual < 1e-8);
    }

    SUBCASE("duality between r* and the l-moment of the inner product") {
        SpectralSolution sol = solve_eigen(spec, grid, 1.0);
        double denom = 0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t j = 0; j < grid.size(); ++j)
                denom += std::pow(dot(grid.nodes[i], grid.nodes[j]), sol.theta) * sol.l_star[i] * sol.l[j];
        double c = 1.0 / denom;
        double worst = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double rhs = 0;
            for (std::size_t j = 0; j < grid.size(); ++j)
                rhs += std::pow(dot(grid.nodes[i], grid.nodes[j]), sol.theta) * sol.l[j];
            worst = std::max(worst, std::abs(sol.r_star[i] - c * rhs) / sol.r_star[i]);
        }
        CHECK(worst < 5e-3);

        // swapped roles: r from the l* moment
        double denom2 = 0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t j = 0; j < grid.size(); ++j)
                denom2 += std::pow(dot(grid.nodes[i], grid.nodes[j]), sol.theta) * sol.l[i] * sol.l_star[j];
        double c2 = 1.0 / denom2;
        double worst2 = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double rhs = 0;
            for (std::size_t j = 0; j < grid.size(); ++j)
                rhs += std::pow(dot(grid.nodes[i], grid.nodes[j]), sol.theta) * sol.l_star[j];
            worst2 = std::max(worst2, std::abs(sol.r[i] - c2 * rhs) / sol.r[i]);
        }
        CHECK(worst2 < 5e-3);
    }

    SUBCASE("grid refinement stability at the root") {
        double a = find_alpha(spec, grid, 0.5, 3.0, 1e-9);
        SphereGrid fine = SphereGrid::make(2, spec.norm, 513);
        double l_coarse = solve_eigen(spec, grid, a).lambda;
        double l_fine = solve_eigen(spec, fine, a).lambda;
        CHECK(std::abs(l_coarse - l_fine) < 1e-3);
    }
}

TEST_CASE("d=3 grid sanity: lambda(0)=1 and isotropic scaling") {
    ModelSpec iso;
    iso.dim = 3;
    Mat m(3);
    m(0, 0) = m(1, 1) = m(2, 2) = 0.5;
    // mix with a rotation-flavored positive atom to keep it allowable/regular
    Mat r(3, 0.1);
    r(0, 1) = 0.6; r(1, 2) = 0.6; r(2, 0) = 0.6;
    iso.atoms = {Atom{0.5, m, {1, 1, 1}}, Atom{0.5, r, {1, 1, 1}}};
    SphereGrid grid = SphereGrid::make(3, iso.norm, 17);
    SpectralSolution sol = solve_eigen(iso, grid, 0.0);
    CHECK(sol.lambda == doctest::Approx(1.0).epsilon(1e-9));
}
