#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "caustica/flow.hpp"
#include "caustica/scenario_io.hpp"

using namespace caustica;

TEST_CASE("free flow is straight-line motion") {
    auto H = builtin_symbol("free_quadratic");
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> box(-3.0, 3.0);
    for (int k = 0; k < 25; ++k) {
        const double x = box(rng), xi = box(rng), t = box(rng);
        FlowState st = flow(H, PhasePoint{Vec{x}, Vec{xi}}, t);
        REQUIRE(st.ok());
        CHECK(st.point.x[0] == Catch::Approx(x + t * xi).margin(1e-9));
        CHECK(st.point.xi[0] == Catch::Approx(xi).margin(1e-12));
    }
}

TEST_CASE("harmonic flow is a rotation") {
    auto H = builtin_symbol("harmonic_oscillator");
    for (double t : {0.3, 1.0, -2.4, 5.0}) {
        for (double x : {-1.5, 0.2}) {
            for (double xi : {0.8, -2.0}) {
                FlowState st = flow(H, PhasePoint{Vec{x}, Vec{xi}}, t);
                REQUIRE(st.ok());
                CHECK(st.point.x[0] ==
                      Catch::Approx(x * std::cos(t) + xi * std::sin(t)).margin(1e-8));
                CHECK(st.point.xi[0] ==
                      Catch::Approx(-x * std::sin(t) + xi * std::cos(t)).margin(1e-8));
            }
        }
    }
}

TEST_CASE("variable airy flow: closed form below the critical time, blow-up above") {
    auto H = builtin_symbol("airy_variable");
    const double x = 1.3, xi = 1.2;
    const double tc = 1.0 / (2.0 * xi * xi);
    for (double t : {0.2 * tc, 0.8 * tc}) {
        FlowState st = flow(H, PhasePoint{Vec{x}, Vec{xi}}, t);
        REQUIRE(st.ok());
        const double c = 1.0 - 2.0 * xi * xi * t;
        CHECK(st.point.x[0] == Catch::Approx(x * std::pow(c, 1.5)).margin(1e-8));
        CHECK(st.point.xi[0] == Catch::Approx(xi / std::sqrt(c)).margin(1e-8));
    }
    FlowState st = flow(H, PhasePoint{Vec{x}, Vec{xi}}, 2.0 * tc);
    REQUIRE(st.status == FlowStatus::blown_up);
    CHECK(std::abs(st.t_event - tc) <= 1e-6);
}

TEST_CASE("zero-time flow is the identity") {
    auto H = builtin_symbol("harmonic_oscillator");
    FlowState st = flow(H, PhasePoint{Vec{0.7}, Vec{-0.4}}, 0.0);
    CHECK(st.point.x[0] == 0.7);
    CHECK(st.point.xi[0] == -0.4);
    CHECK(st.action == 0.0);
    CHECK(st.jac(0, 0) == 1.0);
    CHECK(st.jac(0, 1) == 0.0);
    CHECK(st.jac(1, 0) == 0.0);
    CHECK(st.jac(1, 1) == 1.0);
}

TEST_CASE("conservation, group property and reversibility on random draws") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> box(-3.0, 3.0);
    std::vector<HamiltonianSymbol> syms;
    syms.push_back(builtin_symbol("free_quadratic"));
    syms.push_back(builtin_symbol("harmonic_oscillator"));
    syms.push_back(builtin_symbol("airy_cubic"));
    {
        SymbolParams p;
        p.potential = potential_from_expr(Expr::parse("1/(1+x^2)"), 1);
        syms.push_back(builtin_symbol("bethe_salpeter", p));
    }
    for (const auto& H : syms) {
        for (int k = 0; k < 50; ++k) {
            const double x = box(rng), xi = box(rng);
            const double t1 = box(rng), t2 = box(rng);
            PhasePoint p0{Vec{x}, Vec{xi}};
            FlowState a = flow(H, p0, t1);
            REQUIRE(a.ok());
            const double h0 = H.h(p0.x, p0.xi);
            CHECK(std::abs(H.h(a.point.x, a.point.xi) - h0) <= 1e-8 * (1.0 + std::abs(h0)));
            CHECK(std::abs(det(a.jac) - 1.0) <= 1e-6);

            FlowState b = flow(H, a.point, t2);
            FlowState c = flow(H, p0, t1 + t2);
            REQUIRE(b.ok());
            REQUIRE(c.ok());
            CHECK(std::abs(b.point.x[0] - c.point.x[0]) <= 1e-7);
            CHECK(std::abs(b.point.xi[0] - c.point.xi[0]) <= 1e-7);

            FlowState r = flow(H, a.point, -t1);
            REQUIRE(r.ok());
            CHECK(std::abs(r.point.x[0] - x) <= 1e-7);
            CHECK(std::abs(r.point.xi[0] - xi) <= 1e-7);
        }
    }
}

TEST_CASE("rays carry phase values from the initial data") {
    // free motion, S_I = x^2/2: S(x,t) = x^2/(2(t+1))
    Scenario sc = preset_scenario("ex_1_1_rarefaction");
    RayState r = ray(sc.hamiltonian, sc.initial, Vec{1.0}, 1.0, sc.tol);
    REQUIRE(r.ok());
    CHECK(r.x[0] == Catch::Approx(2.0).margin(1e-9));
    CHECK(r.xi[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(r.S == Catch::Approx(1.0).margin(1e-9));  // x^2/(2(t+1)) at (2,1)

    // harmonic oscillator, S_I = kx with k=1, x0 = 0, t = pi/4
    Scenario ho = preset_scenario("harmonic_k");
    const double t = M_PI / 4.0;
    RayState rh = ray(ho.hamiltonian, ho.initial, Vec{0.0}, t, ho.tol);
    REQUIRE(rh.ok());
    CHECK(rh.x[0] == Catch::Approx(std::sqrt(0.5)).margin(1e-8));
    CHECK(rh.xi[0] == Catch::Approx(std::sqrt(0.5)).margin(1e-8));
    const double S_closed =
        -0.5 * (rh.x[0] * rh.x[0] + 1.0) * std::tan(t) + rh.x[0] / std::cos(t);
    CHECK(rh.S == Catch::Approx(S_closed).margin(1e-8));

    // t = 0 returns the seed
    RayState r0 = ray(sc.hamiltonian, sc.initial, Vec{0.3}, 0.0, sc.tol);
    CHECK(r0.x[0] == 0.3);
    CHECK(r0.xi[0] == Catch::Approx(0.3).margin(1e-14));
    CHECK(r0.S == Catch::Approx(0.045).margin(1e-14));
}

TEST_CASE("ray jacobian closed forms") {
    Scenario sc = preset_scenario("ex_1_1_rarefaction");
    for (double t : {0.5, 1.0, 2.0})
        for (double x0 : {-1.0, 0.4, 2.0})
            CHECK(ray_jacobian(sc.hamiltonian, sc.initial, Vec{x0}, t, sc.tol) ==
                  Catch::Approx(1.0 + t).margin(1e-8));

    Scenario foc = preset_scenario("ex_1_2_focus");
    CHECK(ray_jacobian(foc.hamiltonian, foc.initial, Vec{0.7}, 1.0, foc.tol) ==
          Catch::Approx(0.0).margin(1e-8));
    CHECK(ray_jacobian(foc.hamiltonian, foc.initial, Vec{0.7}, 0.0, foc.tol) == 1.0);
}

TEST_CASE("ray jacobian agrees with finite differences of the ray map") {
    for (const char* preset : {"harmonic_k", "ex_1_3_cusp_smooth"}) {
        Scenario sc = preset_scenario(preset);
        for (double t : {0.4, 0.9})
            for (double x0 : {-0.8, 0.3, 1.1}) {
                const double J = ray_jacobian(sc.hamiltonian, sc.initial, Vec{x0}, t, sc.tol);
                const double h = 1e-5;
                const double xp = ray(sc.hamiltonian, sc.initial, Vec{x0 + h}, t, sc.tol).x[0];
                const double xm = ray(sc.hamiltonian, sc.initial, Vec{x0 - h}, t, sc.tol).x[0];
                const double Jfd = std::abs((xp - xm) / (2 * h));
                CHECK(J == Catch::Approx(Jfd).epsilon(1e-4));
            }
    }
}

TEST_CASE("stoermer-verlet cross-check on the harmonic oscillator") {
    auto H = builtin_symbol("harmonic_oscillator");
    PhasePoint p0{Vec{1.0}, Vec{0.5}};
    PhasePoint pv = verlet_flow(H, p0, 1.0, 4000);
    FlowState st = flow(H, p0, 1.0);
    CHECK(std::abs(pv.x[0] - st.point.x[0]) <= 1e-6);
    CHECK(std::abs(pv.xi[0] - st.point.xi[0]) <= 1e-6);
    const double h0 = H.h(p0.x, p0.xi);
    CHECK(std::abs(H.h(pv.x, pv.xi) - h0) <= 1e-7);

    CHECK_THROWS_AS(verlet_flow(builtin_symbol("airy_variable"), p0, 1.0, 10),
                    std::invalid_argument);
}

TEST_CASE("ray blow-up propagates from the flow") {
    Scenario ap = preset_scenario("appendix1_airy_k");
    RayState r = ray(ap.hamiltonian, ap.initial, Vec{0.4}, 0.6, ap.tol);
    CHECK(r.status == FlowStatus::blown_up);
    CHECK(std::abs(r.t_event - 0.5) <= 1e-6);
}
