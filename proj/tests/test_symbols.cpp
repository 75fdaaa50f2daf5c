#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "caustica/scenario_io.hpp"
#include "caustica/symbols.hpp"
#include "caustica/validate.hpp"

using namespace caustica;

namespace {

HamiltonianSymbol make(const std::string& name) {
    SymbolParams p;
    p.dim = 1;
    if (name == "schrodinger_potential")
        p.potential = potential_from_expr(Expr::parse("cos(x)"), 1);
    if (name == "bethe_salpeter")
        p.potential = potential_from_expr(Expr::parse("1/(1+x^2)"), 1);
    if (name == "eikonal")
        p.coefficient = potential_from_expr(Expr::parse("1+exp(-x^2)/2"), 1);
    return builtin_symbol(name, p);
}

}  // namespace

TEST_CASE("catalog values from the closed forms") {
    auto ho = builtin_symbol("harmonic_oscillator");
    CHECK(ho.h(Vec{1}, Vec{2}) == 2.5);
    CHECK(ho.grad_xi(Vec{1}, Vec{2})[0] == 2.0);
    CHECK(ho.grad_x(Vec{1}, Vec{2})[0] == 1.0);

    auto free = builtin_symbol("free_quadratic");
    CHECK(free.h(Vec{0}, Vec{0}) == 0.0);
    CHECK(free.grad_x(Vec{0}, Vec{0})[0] == 0.0);
    CHECK(free.grad_xi(Vec{0}, Vec{0})[0] == 0.0);

    auto airy = builtin_symbol("airy_variable");
    CHECK(airy.h(Vec{2}, Vec{1}) == -2.0);
    CHECK(airy.grad_xi(Vec{2}, Vec{1})[0] == -6.0);
    CHECK(airy.grad_x(Vec{2}, Vec{1})[0] == -1.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> box(-10.0, 10.0);
    for (const char* name : {"free_quadratic", "schrodinger_potential", "airy_cubic",
                             "bethe_salpeter", "eikonal", "harmonic_oscillator", "airy_variable"}) {
        HamiltonianSymbol s = make(name);
        for (int k = 0; k < 100; ++k) {
            double x = box(rng), xi = box(rng);
            if (std::string(name) == "eikonal" && std::abs(xi) < 0.5) xi += xi >= 0 ? 0.5 : -0.5;
            const double h = 1e-5;
            const double fdx = (s.h(Vec{x + h}, Vec{xi}) - s.h(Vec{x - h}, Vec{xi})) / (2 * h);
            const double fdxi = (s.h(Vec{x}, Vec{xi + h}) - s.h(Vec{x}, Vec{xi - h})) / (2 * h);
            const double gx = s.grad_x(Vec{x}, Vec{xi})[0];
            const double gxi = s.grad_xi(Vec{x}, Vec{xi})[0];
            CHECK(std::abs(fdx - gx) <= 1e-6 * (1.0 + std::abs(gx)) + 1e-6);
            CHECK(std::abs(fdxi - gxi) <= 1e-6 * (1.0 + std::abs(gxi)) + 1e-6);
        }
    }
}

TEST_CASE("analytic second derivatives match finite differences of gradients") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> box(-3.0, 3.0);
    for (const char* name : {"schrodinger_potential", "bethe_salpeter", "harmonic_oscillator",
                             "airy_variable", "eikonal"}) {
        HamiltonianSymbol s = make(name);
        for (int k = 0; k < 20; ++k) {
            double x = box(rng), xi = box(rng);
            if (std::string(name) == "eikonal" && std::abs(xi) < 0.5) xi += xi >= 0 ? 0.5 : -0.5;
            const double h = 1e-5 * (1.0 + std::abs(xi));
            const double fd_xixi =
                (s.grad_xi(Vec{x}, Vec{xi + h})[0] - s.grad_xi(Vec{x}, Vec{xi - h})[0]) / (2 * h);
            CHECK(s.d2h_xixi(Vec{x}, Vec{xi})(0, 0) == Catch::Approx(fd_xixi).margin(1e-5));
            const double hx = 1e-5 * (1.0 + std::abs(x));
            const double fd_mix =
                (s.grad_xi(Vec{x + hx}, Vec{xi})[0] - s.grad_xi(Vec{x - hx}, Vec{xi})[0]) / (2 * hx);
            CHECK(s.d2h_x_xi(Vec{x}, Vec{xi})(0, 0) == Catch::Approx(fd_mix).margin(1e-5));
            const double fd_xx =
                (s.grad_x(Vec{x + hx}, Vec{xi})[0] - s.grad_x(Vec{x - hx}, Vec{xi})[0]) / (2 * hx);
            CHECK(s.d2h_xx(Vec{x}, Vec{xi})(0, 0) == Catch::Approx(fd_xx).margin(1e-5));
        }
    }
}

TEST_CASE("harmonic oscillator symbol is symmetric in (x, xi)") {
    auto ho = builtin_symbol("harmonic_oscillator");
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> box(-5.0, 5.0);
    for (int k = 0; k < 50; ++k) {
        const double x = box(rng), xi = box(rng);
        CHECK(ho.h(Vec{x}, Vec{xi}) == ho.h(Vec{xi}, Vec{x}));
    }
}

TEST_CASE("hessian symmetry for d=2 symbols") {
    SymbolParams p;
    p.dim = 2;
    for (const char* name : {"free_quadratic", "bethe_salpeter", "harmonic_oscillator"}) {
        HamiltonianSymbol s = builtin_symbol(name, p);
        Mat m = s.hess_xi(Vec{0.3, -1.2}, Vec{0.7, 2.0});
        CHECK(max_abs_offdiag_asym(m) <= 1e-12);
    }
}

TEST_CASE("catalog errors") {
    CHECK_THROWS_AS(builtin_symbol("nope"), std::invalid_argument);
    CHECK_THROWS_AS(builtin_symbol("schrodinger_potential"), std::invalid_argument);
    SymbolParams p2;
    p2.dim = 2;
    CHECK_THROWS_AS(builtin_symbol("airy_cubic", p2), std::invalid_argument);
    CHECK_THROWS_AS(builtin_symbol("airy_variable", p2), std::invalid_argument);

    auto eik = make("eikonal");
    CHECK_THROWS_AS(eik.grad_xi(Vec{1.0}, Vec{0.0}), std::domain_error);
    CHECK_THROWS_AS(eik.grad_xi(Vec{1.0}, Vec{1e-9}), std::domain_error);
    CHECK_NOTHROW(eik.grad_xi(Vec{1.0}, Vec{1e-3}));
}

TEST_CASE("validate_scenario: rarefaction passes, airy counterexample flags blow-up") {
    ValidationReport ok = validate_scenario(preset_scenario("ex_1_1_rarefaction"));
    CHECK(ok.all_passed);

    ValidationReport bad = validate_scenario(preset_scenario("appendix1_airy_k"));
    CHECK_FALSE(bad.all_passed);
    bool probe_failed = false;
    for (const auto& c : bad.checks)
        if (c.name == "global-flow-probe") probe_failed = !c.passed;
    CHECK(probe_failed);
}

TEST_CASE("zero tolerances are rejected") {
    json doc = preset_json("ex_1_1_rarefaction");
    doc["tolerances"]["root"] = 0.0;
    CHECK_THROWS_AS(scenario_from_json(doc), std::invalid_argument);
    doc = preset_json("ex_1_1_rarefaction");
    doc["tolerances"]["ode_rel"] = -1e-10;
    CHECK_THROWS_AS(scenario_from_json(doc), std::invalid_argument);
}

TEST_CASE("lipschitz preset has one-sided derivatives at the kinks") {
    Scenario sc = preset_scenario("ex_1_3_cusp_lipschitz");
    CHECK(sc.initial.grad_S(Vec{-0.5})[0] == 1.0);
    CHECK(sc.initial.grad_S(Vec{0.5})[0] == 0.5);
    CHECK(sc.initial.grad_S(Vec{2.0})[0] == 0.0);
    CHECK(sc.initial.d2S(Vec{0.5})(0, 0) == -1.0);
    CHECK(sc.initial.d2S(Vec{-0.5})(0, 0) == 0.0);
}

TEST_CASE("scenario caches the initial mass over the region") {
    Scenario sc = preset_scenario("ex_1_1_rarefaction");
    // normalized Gaussian, region [-8,8]: essentially unit mass
    CHECK(sc.initial.mass == Catch::Approx(1.0).margin(1e-9));
}
