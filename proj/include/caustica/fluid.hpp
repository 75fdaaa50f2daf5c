#ifndef CAUSTICA_FLUID_HPP
#define CAUSTICA_FLUID_HPP

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "caustica/symbols.hpp"

namespace caustica {

/// (n, v) sampled on a uniform (x,t) grid, d=1. Index layout: [it*nx + ix].
struct FluidField {
    std::vector<double> xs, ts;
    std::vector<double> n, v;

    int nx() const { return int(xs.size()); }
    int nt() const { return int(ts.size()); }
    double dx() const { return xs[1] - xs[0]; }
    double dt() const { return ts[1] - ts[0]; }
    double& N(int ix, int it) { return n[std::size_t(it) * xs.size() + std::size_t(ix)]; }
    double N(int ix, int it) const { return n[std::size_t(it) * xs.size() + std::size_t(ix)]; }
    double& V(int ix, int it) { return v[std::size_t(it) * xs.size() + std::size_t(ix)]; }
    double V(int ix, int it) const { return v[std::size_t(it) * xs.size() + std::size_t(ix)]; }

    static FluidField on_grid(double x0, double x1, int nx, double t0, double t1, int nt,
                              const std::function<double(double, double)>& nfun,
                              const std::function<double(double, double)>& vfun) {
        FluidField f;
        f.xs.resize(std::size_t(nx));
        f.ts.resize(std::size_t(nt));
        for (int i = 0; i < nx; ++i) f.xs[std::size_t(i)] = x0 + (x1 - x0) * i / (nx - 1);
        for (int k = 0; k < nt; ++k) f.ts[std::size_t(k)] = t0 + (t1 - t0) * k / (nt - 1);
        f.n.resize(std::size_t(nx) * std::size_t(nt));
        f.v.resize(std::size_t(nx) * std::size_t(nt));
        for (int k = 0; k < nt; ++k)
            for (int i = 0; i < nx; ++i) {
                f.N(i, k) = nfun(f.xs[std::size_t(i)], f.ts[std::size_t(k)]);
                f.V(i, k) = vfun(f.xs[std::size_t(i)], f.ts[std::size_t(k)]);
            }
        return f;
    }

    void check() const {
        if (nx() < 3 || nt() < 3)
            throw std::invalid_argument("fluid: grid too small (need >=3 nodes per axis)");
        for (double ni : n)
            if (ni < 0) throw std::invalid_argument("fluid: negative density node");
    }
};

/// Moment weight sigma(v) with gradient; the admissibility condition of the
/// generalized formulation is recorded, not enforced (bounded grids see only
/// bounded velocities).
struct WeightFunction {
    std::function<double(double)> sigma;
    std::function<double(double)> dsigma;
    std::string admissibility_note =
        "|sigma|/(1+lambda(H)) bounds not checked: grid evaluation is confined to a bounded "
        "velocity range";
};

/// Interior-node residuals, laid out [(nt-2) x (nx-2)].
struct FluidResiduals {
    int nx_int = 0, nt_int = 0;
    std::vector<double> continuity;
    std::vector<double> momentum;  // empty for single-equation checks
    double max_continuity = 0.0;
    double max_momentum = 0.0;
};

namespace detail {

template <class FluxX, class Source>
void residual_sweep(const FluidField& f, const std::function<double(int, int)>& conserved,
                    const FluxX& flux, const Source& source, std::vector<double>& out,
                    double& maxabs) {
    const int nx = f.nx(), nt = f.nt();
    out.assign(std::size_t(nx - 2) * std::size_t(nt - 2), 0.0);
    maxabs = 0.0;
    const double idx2 = 1.0 / (2.0 * f.dx()), idt2 = 1.0 / (2.0 * f.dt());
    for (int k = 1; k + 1 < nt; ++k)
        for (int i = 1; i + 1 < nx; ++i) {
            const double r = (conserved(i, k + 1) - conserved(i, k - 1)) * idt2 +
                             (flux(i + 1, k) - flux(i - 1, k)) * idx2 + source(i, k);
            out[std::size_t(k - 1) * std::size_t(nx - 2) + std::size_t(i - 1)] = r;
            maxabs = std::max(maxabs, std::abs(r));
        }
}

}  // namespace detail

/// Residuals of the pressureless system
///   d_t n + div(n grad_xi H(x,v)) = 0
///   d_t(nv) + div(grad_xi H(x,v) (x) n v) + n grad_y H(x,v) = 0
/// under second-order central differences at interior nodes.
inline FluidResiduals euler_residual(const HamiltonianSymbol& H, const FluidField& f) {
    if (H.dim != 1) throw std::invalid_argument("euler_residual: d=1 fields only");
    f.check();
    FluidResiduals res;
    res.nx_int = f.nx() - 2;
    res.nt_int = f.nt() - 2;
    auto hxi = [&](int i, int k) {
        return H.grad_xi(Vec{f.xs[std::size_t(i)]}, Vec{f.V(i, k)})[0];
    };
    auto hx = [&](int i, int k) { return H.grad_x(Vec{f.xs[std::size_t(i)]}, Vec{f.V(i, k)})[0]; };
    detail::residual_sweep(
        f, [&](int i, int k) { return f.N(i, k); },
        [&](int i, int k) { return f.N(i, k) * hxi(i, k); }, [&](int, int) { return 0.0; },
        res.continuity, res.max_continuity);
    detail::residual_sweep(
        f, [&](int i, int k) { return f.N(i, k) * f.V(i, k); },
        [&](int i, int k) { return hxi(i, k) * f.N(i, k) * f.V(i, k); },
        [&](int i, int k) { return f.N(i, k) * hx(i, k); }, res.momentum, res.max_momentum);
    return res;
}

/// Residual of the generalized moment formulation
///   d_t(n sigma(v)) + div(n sigma(v) grad_xi H) + n sigma'(v) grad_y H = 0.
/// With sigma == 1 this is, stencil for stencil, the continuity residual.
inline FluidResiduals generalized_moment_residual(const HamiltonianSymbol& H, const FluidField& f,
                                                  const WeightFunction& w) {
    if (H.dim != 1) throw std::invalid_argument("generalized_moment_residual: d=1 fields only");
    f.check();
    FluidResiduals res;
    res.nx_int = f.nx() - 2;
    res.nt_int = f.nt() - 2;
    auto hxi = [&](int i, int k) {
        return H.grad_xi(Vec{f.xs[std::size_t(i)]}, Vec{f.V(i, k)})[0];
    };
    auto hx = [&](int i, int k) { return H.grad_x(Vec{f.xs[std::size_t(i)]}, Vec{f.V(i, k)})[0]; };
    detail::residual_sweep(
        f, [&](int i, int k) { return f.N(i, k) * w.sigma(f.V(i, k)); },
        [&](int i, int k) { return f.N(i, k) * w.sigma(f.V(i, k)) * hxi(i, k); },
        [&](int i, int k) { return f.N(i, k) * w.dsigma(f.V(i, k)) * hx(i, k); }, res.continuity,
        res.max_continuity);
    return res;
}

/// Conservative transformation: generalized velocity u = grad_xi H(x,v) and
/// modified force f_i = sum_k H_{xi_k xi_i} H_{y_k} - sum_l H_{xi_l} H_{y_l xi_i},
/// which for H = omega(xi) + V(x) reduces to u = grad omega(v),
/// f = D^2 omega(v) grad V(x). Returns the transformed fields and the
/// residuals of the Euler-form system they satisfy.
struct ConservativeFields {
    std::vector<double> u;  // [it*nx+ix]
    std::vector<double> f;
    FluidResiduals residuals;
    bool used_fd_hessians = false;
};

inline ConservativeFields to_conservative(const HamiltonianSymbol& H, const FluidField& fld) {
    if (H.dim != 1) throw std::invalid_argument("to_conservative: d=1 fields only");
    fld.check();
    ConservativeFields out;
    const int nx = fld.nx(), nt = fld.nt();
    out.u.resize(std::size_t(nx) * std::size_t(nt));
    out.f.resize(std::size_t(nx) * std::size_t(nt));
    out.used_fd_hessians = !H.hess_xi || !H.hess_mixed;
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nx; ++i) {
            const Vec x{fld.xs[std::size_t(i)]};
            const Vec v{fld.V(i, k)};
            const double hxixi = H.d2h_xixi(x, v)(0, 0);
            const double hx = H.grad_x(x, v)[0];
            const double hxi = H.grad_xi(x, v)[0];
            const double hmix = H.d2h_x_xi(x, v)(0, 0);
            out.u[std::size_t(k) * std::size_t(nx) + std::size_t(i)] = hxi;
            out.f[std::size_t(k) * std::size_t(nx) + std::size_t(i)] = hxixi * hx - hxi * hmix;
        }
    auto u_at = [&](int i, int k) { return out.u[std::size_t(k) * std::size_t(nx) + std::size_t(i)]; };
    auto f_at = [&](int i, int k) { return out.f[std::size_t(k) * std::size_t(nx) + std::size_t(i)]; };
    out.residuals.nx_int = nx - 2;
    out.residuals.nt_int = nt - 2;
    detail::residual_sweep(
        fld, [&](int i, int k) { return fld.N(i, k); },
        [&](int i, int k) { return fld.N(i, k) * u_at(i, k); }, [&](int, int) { return 0.0; },
        out.residuals.continuity, out.residuals.max_continuity);
    detail::residual_sweep(
        fld, [&](int i, int k) { return fld.N(i, k) * u_at(i, k); },
        [&](int i, int k) { return fld.N(i, k) * u_at(i, k) * u_at(i, k); },
        [&](int i, int k) { return fld.N(i, k) * f_at(i, k); }, out.residuals.momentum,
        out.residuals.max_momentum);
    return out;
}

}  // namespace caustica

#endif
