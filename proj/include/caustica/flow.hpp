#ifndef CAUSTICA_FLOW_HPP
#define CAUSTICA_FLOW_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "caustica/linalg.hpp"
#include "caustica/ode.hpp"
#include "caustica/symbols.hpp"

namespace caustica {

struct PhasePoint {
    Vec x, xi;
    int dim() const { return int(x.size()); }
};

enum class FlowStatus { ok, blown_up };

/// State of the bicharacteristic flow: phase point, accumulated action
/// (dS/dt = grad_xi H . xi - H), elapsed time, and the 2d x 2d variational
/// matrix d(x~,xi~)/d(x,xi) propagated by J' = A(t) J.
struct FlowState {
    PhasePoint point;
    double action = 0.0;
    Mat jac;
    double t = 0.0;
    FlowStatus status = FlowStatus::ok;
    double t_event = std::numeric_limits<double>::quiet_NaN();
    std::string diagnostic;

    bool ok() const { return status == FlowStatus::ok; }
};

struct BlowupEvent {
    double t_event;
    PhasePoint last_point;
    std::string diagnostic;
};

namespace detail {

// State layout: [x(0..d), xi(d..2d), S, J row-major (2d x 2d)] or without J.
struct FlowRhs {
    const HamiltonianSymbol* H;
    int d;
    bool with_variational;
    bool with_action;
    // scratch, reused across the many RHS calls of one integration
    mutable Vec x, xi;

    int state_size() const { return 2 * d + (with_action ? 1 : 0) + (with_variational ? 4 * d * d : 0); }

    void operator()(double, const Vec& y, Vec& dy) const {
        dy.assign(y.size(), 0.0);
        x.assign(y.begin(), y.begin() + d);
        xi.assign(y.begin() + d, y.begin() + 2 * d);
        Vec hx = H->grad_x(x, xi);
        Vec hxi = H->grad_xi(x, xi);
        for (int i = 0; i < d; ++i) {
            dy[std::size_t(i)] = hxi[std::size_t(i)];
            dy[std::size_t(d + i)] = -hx[std::size_t(i)];
        }
        int off = 2 * d;
        if (with_action) {
            dy[std::size_t(off)] = dot(hxi, xi) - H->h(x, xi);
            ++off;
        }
        if (with_variational) {
            // A = [[ Mx^T, Hxixi ], [ -Hxx, -Mx ]],  Mx(i,j) = d2H/dx_i dxi_j.
            const Mat hxixi = H->d2h_xixi(x, xi);
            const Mat hxx = H->d2h_xx(x, xi);
            const Mat mx = H->d2h_x_xi(x, xi);
            const int n2 = 2 * d;
            auto J = [&](int i, int j) { return y[std::size_t(off + i * n2 + j)]; };
            for (int i = 0; i < n2; ++i)
                for (int j = 0; j < n2; ++j) {
                    double s = 0.0;
                    for (int k = 0; k < d; ++k) {
                        const double a_ik = i < d ? mx(k, i) : -hxx(i - d, k);
                        const double a_ikd = i < d ? hxixi(i, k) : -mx(i - d, k);
                        s += a_ik * J(k, j) + a_ikd * J(d + k, j);
                    }
                    dy[std::size_t(off + i * n2 + j)] = s;
                }
        }
    }
};

inline Vec pack_state(const PhasePoint& p, bool with_action, bool with_variational) {
    const int d = p.dim();
    Vec y;
    y.reserve(std::size_t(2 * d + (with_action ? 1 : 0) + (with_variational ? 4 * d * d : 0)));
    y.insert(y.end(), p.x.begin(), p.x.end());
    y.insert(y.end(), p.xi.begin(), p.xi.end());
    if (with_action) y.push_back(0.0);
    if (with_variational) {
        const int n2 = 2 * d;
        for (int i = 0; i < n2; ++i)
            for (int j = 0; j < n2; ++j) y.push_back(i == j ? 1.0 : 0.0);
    }
    return y;
}

}  // namespace detail

struct FlowOptions {
    bool with_variational = true;
    bool with_action = true;
    double blowup_norm = 1e8;
    double event_tol = 1e-7;
};

/// Integrate Hamilton's equations from p0 over time t (negative t = backward
/// flow). On finite-time blow-up the returned state carries status blown_up,
/// the bracketed event time and the last reachable point.
inline FlowState flow(const HamiltonianSymbol& H, const PhasePoint& p0, double t,
                      const Tolerances& tol = {}, const FlowOptions& opts = {}) {
    const int d = p0.dim();
    detail::FlowRhs rhs{&H, d, opts.with_variational, opts.with_action};
    Vec y0 = detail::pack_state(p0, opts.with_action, opts.with_variational);

    OdeOptions oo;
    oo.rtol = tol.ode_rel;
    oo.atol = tol.ode_abs;
    oo.blowup_norm = opts.blowup_norm;
    oo.event_tol = opts.event_tol;
    oo.monitor_components = 2 * d;  // |x| + |xi| drives the divergence guard

    OdeResult r = integrate_ode(rhs, std::move(y0), 0.0, t, oo);

    FlowState st;
    st.point.x.assign(r.y.begin(), r.y.begin() + d);
    st.point.xi.assign(r.y.begin() + d, r.y.begin() + 2 * d);
    st.t = r.t;
    if (opts.with_action) st.action = r.y[std::size_t(2 * d)];
    if (opts.with_variational) {
        const int n2 = 2 * d;
        const int off = 2 * d + (opts.with_action ? 1 : 0);
        st.jac = Mat(n2, n2);
        for (int i = 0; i < n2; ++i)
            for (int j = 0; j < n2; ++j) st.jac(i, j) = r.y[std::size_t(off + i * n2 + j)];
    }
    if (r.blown_up) {
        st.status = FlowStatus::blown_up;
        st.t_event = r.t_event;
        st.diagnostic = r.diagnostic;
    }
    return st;
}

struct RayState {
    Vec x;       // x^(t, x0)
    Vec xi;      // xi^(t, x0) = grad S along the ray
    double S;    // phase value transported from S_I(x0)
    FlowStatus status = FlowStatus::ok;
    double t_event = std::numeric_limits<double>::quiet_NaN();

    bool ok() const { return status == FlowStatus::ok; }
};

/// Ray of the Hamilton-Jacobi problem: bicharacteristic seeded with
/// xi(0) = grad S_I(x0), carrying S(0) = S_I(x0).
inline RayState ray(const HamiltonianSymbol& H, const InitialData& init, const Vec& x0, double t,
                    const Tolerances& tol = {}) {
    PhasePoint p0{x0, init.grad_S(x0)};
    FlowOptions fo;
    fo.with_variational = false;
    FlowState st = flow(H, p0, t, tol, fo);
    RayState r;
    r.x = st.point.x;
    r.xi = st.point.xi;
    r.S = init.S(x0) + st.action;
    r.status = st.status;
    r.t_event = st.t_event;
    return r;
}

struct RayJacobian {
    RayState state;
    Mat dxhat_dx0;      // d x^(t,x0) / d x0 through xi(0) = grad S_I(x0)
    double det_signed;  // signed determinant of the block above
    double J() const { return std::abs(det_signed); }
};

/// Ray map Jacobian J(x0,t) = |det(d x^ / d x0)| via the variational flow
/// chained through the initial momentum field.
inline RayJacobian ray_with_jacobian(const HamiltonianSymbol& H, const InitialData& init,
                                     const Vec& x0, double t, const Tolerances& tol = {}) {
    const int d = int(x0.size());
    PhasePoint p0{x0, init.grad_S(x0)};
    FlowState st = flow(H, p0, t, tol);
    RayJacobian rj;
    rj.state.x = st.point.x;
    rj.state.xi = st.point.xi;
    rj.state.S = init.S(x0) + st.action;
    rj.state.status = st.status;
    rj.state.t_event = st.t_event;
    rj.dxhat_dx0 = Mat(d, d);
    if (st.ok()) {
        const Mat d2s = init.d2S(x0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = st.jac(i, j);
                for (int k = 0; k < d; ++k) s += st.jac(i, d + k) * d2s(k, j);
                rj.dxhat_dx0(i, j) = s;
            }
        rj.det_signed = det(rj.dxhat_dx0);
    } else {
        rj.det_signed = std::numeric_limits<double>::quiet_NaN();
    }
    return rj;
}

inline double ray_jacobian(const HamiltonianSymbol& H, const InitialData& init, const Vec& x0,
                           double t, const Tolerances& tol = {}) {
    return ray_with_jacobian(H, init, x0, t, tol).J();
}

/// Fixed-step Stoermer-Verlet for separable H = omega(xi) + V(x); symplectic
/// cross-check for the conservation tests, not the production integrator.
inline PhasePoint verlet_flow(const HamiltonianSymbol& H, const PhasePoint& p0, double t,
                              int nsteps) {
    if (!H.separable || !H.omega_grad || !H.potential.valid())
        throw std::invalid_argument("verlet_flow: symbol is not separable");
    Vec x = p0.x, xi = p0.xi;
    const double h = t / nsteps;
    for (int s = 0; s < nsteps; ++s) {
        Vec gv = H.potential.grad(x);
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= 0.5 * h * gv[i];
        Vec go = H.omega_grad(xi);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * go[i];
        gv = H.potential.grad(x);
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= 0.5 * h * gv[i];
    }
    return PhasePoint{x, xi};
}

}  // namespace caustica

#endif
