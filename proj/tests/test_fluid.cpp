#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "caustica/fluid.hpp"
#include "caustica/scenario_io.hpp"

using namespace caustica;

namespace {

double n_gauss(double x) { return std::exp(-x * x) / std::sqrt(M_PI); }

// Example 1.1 closed forms: v = x/(t+1), n = n_I(x/(t+1))/(t+1)
FluidField rarefaction_field(int nx, int nt) {
    return FluidField::on_grid(
        -2.0, 2.0, nx, 0.2, 1.0, nt,
        [](double x, double t) { return n_gauss(x / (t + 1)) / (t + 1); },
        [](double x, double t) { return x / (t + 1); });
}

// harmonic oscillator closed forms for k=1 (pre-caustic window)
FluidField harmonic_field(int nx, int nt) {
    return FluidField::on_grid(
        -2.0, 2.0, nx, 0.1, 0.9, nt,
        [](double x, double t) { return n_gauss((x - std::sin(t)) / std::cos(t)) / std::cos(t); },
        [](double x, double t) { return (1.0 - x * std::sin(t)) / std::cos(t); });
}

}  // namespace

TEST_CASE("constant fields satisfy the free system to machine precision") {
    auto H = builtin_symbol("free_quadratic");
    FluidField f = FluidField::on_grid(
        -1.0, 1.0, 17, 0.0, 1.0, 9, [](double, double) { return 1.0; },
        [](double, double) { return 0.7; });
    FluidResiduals r = euler_residual(H, f);
    CHECK(r.max_continuity <= 1e-15);
    CHECK(r.max_momentum <= 1e-15);
}

TEST_CASE("sigma == 1 reduces exactly to the continuity residual") {
    auto H = builtin_symbol("harmonic_oscillator");
    FluidField f = harmonic_field(33, 17);
    WeightFunction one{[](double) { return 1.0; }, [](double) { return 0.0; }, ""};
    FluidResiduals er = euler_residual(H, f);
    FluidResiduals gr = generalized_moment_residual(H, f, one);
    REQUIRE(er.continuity.size() == gr.continuity.size());
    for (std::size_t i = 0; i < er.continuity.size(); ++i)
        CHECK(er.continuity[i] == gr.continuity[i]);
}

TEST_CASE("sigma == v reproduces the momentum residual") {
    auto H = builtin_symbol("harmonic_oscillator");
    FluidField f = harmonic_field(33, 17);
    WeightFunction vv{[](double v) { return v; }, [](double) { return 1.0; }, ""};
    FluidResiduals er = euler_residual(H, f);
    FluidResiduals gr = generalized_moment_residual(H, f, vv);
    for (std::size_t i = 0; i < er.momentum.size(); ++i)
        CHECK(gr.continuity[i] == Catch::Approx(er.momentum[i]).margin(1e-12));
}

TEST_CASE("euler residuals of exact fields decay at second order") {
    auto Hfree = builtin_symbol("free_quadratic");
    FluidResiduals c1 = euler_residual(Hfree, rarefaction_field(65, 33));
    FluidResiduals c2 = euler_residual(Hfree, rarefaction_field(129, 65));
    CHECK(c1.max_continuity / c2.max_continuity == Catch::Approx(4.0).margin(0.5));
    CHECK(c1.max_momentum / c2.max_momentum == Catch::Approx(4.0).margin(0.5));

    auto Hho = builtin_symbol("harmonic_oscillator");
    FluidResiduals h1 = euler_residual(Hho, harmonic_field(65, 33));
    FluidResiduals h2 = euler_residual(Hho, harmonic_field(129, 65));
    CHECK(h1.max_continuity / h2.max_continuity == Catch::Approx(4.0).margin(0.5));
    CHECK(h1.max_momentum / h2.max_momentum == Catch::Approx(4.0).margin(0.5));
}

TEST_CASE("kinetic-energy moment residual decays at second order") {
    auto H = builtin_symbol("free_quadratic");
    WeightFunction ke{[](double v) { return 0.5 * v * v; }, [](double v) { return v; }, ""};
    FluidResiduals g1 = generalized_moment_residual(H, rarefaction_field(65, 33), ke);
    FluidResiduals g2 = generalized_moment_residual(H, rarefaction_field(129, 65), ke);
    CHECK(g1.max_continuity / g2.max_continuity == Catch::Approx(4.0).margin(0.5));
}

TEST_CASE("conservative transform is the identity for quadratic symbols") {
    SymbolParams p;
    p.potential = potential_from_expr(Expr::parse("cos(x)"), 1);
    auto H = builtin_symbol("schrodinger_potential", p);
    FluidField f = rarefaction_field(17, 9);
    ConservativeFields cf = to_conservative(H, f);
    for (int k = 0; k < f.nt(); ++k)
        for (int i = 0; i < f.nx(); ++i) {
            CHECK(cf.u[std::size_t(k) * std::size_t(f.nx()) + std::size_t(i)] == f.V(i, k));
            CHECK(cf.f[std::size_t(k) * std::size_t(f.nx()) + std::size_t(i)] ==
                  Catch::Approx(-std::sin(f.xs[std::size_t(i)])).margin(1e-14));
        }
}

TEST_CASE("conservative transform for a dispersive symbol") {
    // H = omega(xi) + V(x) with omega = sqrt(xi^2/2+1): u = omega'(v),
    // f = omega''(v) V'(x)
    SymbolParams p;
    p.potential = potential_from_expr(Expr::parse("sin(x)"), 1);
    auto H = builtin_symbol("bethe_salpeter", p);
    FluidField fld = FluidField::on_grid(
        -1.0, 1.0, 9, 0.0, 0.5, 5, [](double, double) { return 1.0; },
        [](double x, double t) { return 0.3 * x + t; });
    ConservativeFields cf = to_conservative(H, fld);
    for (int k = 0; k < fld.nt(); ++k)
        for (int i = 0; i < fld.nx(); ++i) {
            const double v = fld.V(i, k), x = fld.xs[std::size_t(i)];
            const double r = std::sqrt(0.5 * v * v + 1.0);
            const double du = 0.5 / r - 0.25 * v * v / (r * r * r);
            CHECK(cf.u[std::size_t(k) * std::size_t(fld.nx()) + std::size_t(i)] ==
                  Catch::Approx(0.5 * v / r).margin(1e-12));
            CHECK(cf.f[std::size_t(k) * std::size_t(fld.nx()) + std::size_t(i)] ==
                  Catch::Approx(du * std::cos(x)).margin(1e-12));
        }
}

TEST_CASE("transformed euler residuals decay at second order") {
    auto H = builtin_symbol("harmonic_oscillator");
    ConservativeFields c1 = to_conservative(H, harmonic_field(65, 33));
    ConservativeFields c2 = to_conservative(H, harmonic_field(129, 65));
    CHECK(c1.residuals.max_continuity / c2.residuals.max_continuity ==
          Catch::Approx(4.0).margin(0.5));
    CHECK(c1.residuals.max_momentum / c2.residuals.max_momentum == Catch::Approx(4.0).margin(0.5));
}

TEST_CASE("branch-reconstructed fields satisfy the fluid system") {
    // Corollary-style consistency: v = grad S from the ray reconstruction
    // makes both residuals vanish at the stencil order.
    Scenario sc = preset_scenario("ex_1_1_rarefaction");
    auto field_from_branches = [&](int nx, int nt) {
        return FluidField::on_grid(
            -1.0, 1.0, nx, 0.3, 0.7, nt,
            [&](double x, double t) {
                return density(sc.hamiltonian, sc.initial, Vec{x}, t, sc.xi_box, sc.tol).value;
            },
            [&](double x, double t) {
                BranchSet bs =
                    find_branches(sc.hamiltonian, sc.initial, Vec{x}, t, sc.xi_box, sc.tol);
                REQUIRE(bs.count() == 1);
                return bs.branches[0].v[0];
            });
    };
    FluidResiduals r1 = euler_residual(sc.hamiltonian, field_from_branches(25, 13));
    FluidResiduals r2 = euler_residual(sc.hamiltonian, field_from_branches(49, 25));
    CHECK(r1.max_continuity / r2.max_continuity == Catch::Approx(4.0).margin(1.0));
    CHECK(r1.max_momentum / r2.max_momentum == Catch::Approx(4.0).margin(1.0));
}

TEST_CASE("undersized grids are rejected") {
    auto H = builtin_symbol("free_quadratic");
    FluidField f = FluidField::on_grid(
        0.0, 1.0, 2, 0.0, 1.0, 5, [](double, double) { return 1.0; },
        [](double, double) { return 0.0; });
    CHECK_THROWS_AS(euler_residual(H, f), std::invalid_argument);
}
