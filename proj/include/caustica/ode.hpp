#ifndef CAUSTICA_ODE_HPP
#define CAUSTICA_ODE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "caustica/linalg.hpp"

namespace caustica {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    /// Divergence guard: integration stops once the monitored norm exceeds this.
    double blowup_norm = 1e8;
    /// Step-collapse guard, scaled by (1+|t|).
    double min_step = 1e-14;
    /// Event-time bracketing width for blow-up detection.
    double event_tol = 1e-7;
    long max_steps = 2000000;
    /// How many leading components enter the blow-up norm (0 = all).
    int monitor_components = 0;
};

struct OdeResult {
    Vec y;
    double t = 0.0;
    bool blown_up = false;
    double t_event = std::numeric_limits<double>::quiet_NaN();
    long steps = 0;
    std::string diagnostic;
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5Tableau {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // 4th-order embedded weights.
    static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                            e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;
};

inline bool any_nan(const Vec& y) {
    for (double v : y)
        if (!std::isfinite(v)) return true;
    return false;
}

inline double monitored_norm(const Vec& y, int ncomp) {
    const int n = ncomp > 0 ? std::min<int>(ncomp, int(y.size())) : int(y.size());
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(y[i]);
    return s;
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integrator. RHS signature:
///   void rhs(double t, const Vec& y, Vec& dydt)
/// Integrates from (t0, y0) to t1 (either direction). Detects finite-time
/// blow-up through the monitored-norm limit or step collapse and brackets
/// the event time to opts.event_tol by bisecting single trial steps.
template <class RHS>
OdeResult integrate_ode(RHS&& rhs, Vec y, double t0, double t1, const OdeOptions& opts = {}) {
    using T = detail::Dopri5Tableau;
    OdeResult res;
    res.y = std::move(y);
    res.t = t0;
    if (t0 == t1) return res;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const int n = int(res.y.size());
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n), yerr(n);

    auto stage = [&](double t, const Vec& yy, Vec& out) { rhs(t, yy, out); };

    // One trial step from (t,y) with size h; fills y5 (5th order) and error estimate.
    // Returns false if the result is non-finite.
    auto try_step = [&](double t, const Vec& yy, double h) -> bool {
        stage(t, yy, k1);
        for (int i = 0; i < n; ++i) ytmp[i] = yy[i] + h * T::a21 * k1[i];
        stage(t + T::c2 * h, ytmp, k2);
        for (int i = 0; i < n; ++i) ytmp[i] = yy[i] + h * (T::a31 * k1[i] + T::a32 * k2[i]);
        stage(t + T::c3 * h, ytmp, k3);
        for (int i = 0; i < n; ++i)
            ytmp[i] = yy[i] + h * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
        stage(t + T::c4 * h, ytmp, k4);
        for (int i = 0; i < n; ++i)
            ytmp[i] = yy[i] + h * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] + T::a54 * k4[i]);
        stage(t + T::c5 * h, ytmp, k5);
        for (int i = 0; i < n; ++i)
            ytmp[i] = yy[i] + h * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] +
                                   T::a64 * k4[i] + T::a65 * k5[i]);
        stage(t + h, ytmp, k6);
        for (int i = 0; i < n; ++i)
            y5[i] = yy[i] + h * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] + T::b5 * k5[i] +
                                 T::b6 * k6[i]);
        stage(t + h, y5, k7);
        for (int i = 0; i < n; ++i) {
            const double y4 = yy[i] + h * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] +
                                           T::e5 * k5[i] + T::e6 * k6[i] + T::e7 * k7[i]);
            yerr[i] = y5[i] - y4;
        }
        return !detail::any_nan(y5);
    };

    auto err_norm = [&](const Vec& y0v, const Vec& y1v) {
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = opts.atol + opts.rtol * std::max(std::abs(y0v[i]), std::abs(y1v[i]));
            e = std::max(e, std::abs(yerr[i]) / sc);
        }
        return e;
    };

    auto exceeded = [&](const Vec& yy) {
        return detail::any_nan(yy) ||
               detail::monitored_norm(yy, opts.monitor_components) > opts.blowup_norm;
    };

    // Blow-up: from the last good state, bisect on the single-step horizon to
    // bracket the time at which the divergence guard trips.
    auto bracket_event = [&](double t, const Vec& yy, double h_bad) {
        double lo = 0.0, hi = std::abs(h_bad);
        for (int it = 0; it < 200 && (hi - lo) > opts.event_tol; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            const bool ok = try_step(t, yy, dir * mid) && !exceeded(y5);
            (ok ? lo : hi) = mid;
        }
        res.blown_up = true;
        res.t_event = t + dir * hi;
        res.t = t;
        res.diagnostic = "flow blow-up: divergence guard tripped";
    };

    if (exceeded(res.y)) {
        res.blown_up = true;
        res.t_event = t0;
        res.diagnostic = "initial state beyond divergence guard";
        return res;
    }

    double t = t0;
    double h = std::min(std::abs(t1 - t0), 1e-2 * (1.0 + std::abs(t0)));
    bool have_nan_retry = false;
    while (dir * (t1 - t) > 0.0) {
        const double remaining = std::abs(t1 - t);
        if (remaining <= opts.min_step * (1.0 + std::abs(t))) {
            // landed within roundoff of the endpoint
            res.t = t = t1;
            break;
        }
        h = std::min(h, remaining);
        if (h < opts.min_step * (1.0 + std::abs(t))) {
            bracket_event(t, res.y, h);
            res.diagnostic = "flow blow-up: step collapse";
            return res;
        }
        const bool finite = try_step(t, res.y, dir * h);
        if (!finite) {
            // Non-finite values on the trial step: either genuine blow-up or a
            // bad symbol. Shrink; step collapse will classify it.
            h *= 0.25;
            if (++res.steps > opts.max_steps) break;
            have_nan_retry = true;
            continue;
        }
        const double err = err_norm(res.y, y5);
        if (err <= 1.0) {
            if (exceeded(y5)) {
                bracket_event(t, res.y, h);
                return res;
            }
            t += dir * h;
            res.y = y5;
            res.t = t;
            have_nan_retry = false;
        }
        const double fac = 0.9 * std::pow(std::max(err, 1e-16), -0.2);
        h *= std::clamp(fac, 0.2, 5.0);
        if (++res.steps > opts.max_steps)
            throw std::runtime_error("ode: max step count exceeded" +
                                     std::string(have_nan_retry ? " (NaN from symbol?)" : ""));
    }
    return res;
}

}  // namespace caustica

#endif
