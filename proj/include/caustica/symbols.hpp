#ifndef CAUSTICA_SYMBOLS_HPP
#define CAUSTICA_SYMBOLS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "caustica/expr.hpp"
#include "caustica/jet.hpp"
#include "caustica/linalg.hpp"
#include "caustica/quadrature.hpp"

namespace caustica {

/// Scalar coefficient field (potential V or speed a) with derivatives.
struct Potential {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;  // may be null -> finite differences
    std::string source;                   // expression text when expression-backed

    bool valid() const { return bool(value); }
};

inline Potential zero_potential(int dim) {
    Potential p;
    p.value = [](const Vec&) { return 0.0; };
    p.grad = [dim](const Vec&) { return Vec(dim, 0.0); };
    p.hess = [dim](const Vec&) { return Mat(dim, dim); };
    p.source = "0";
    return p;
}

/// Build a coefficient field from an expression in x (or x1..xd).
inline Potential potential_from_expr(const Expr& e, int dim) {
    Potential p;
    p.source = e.text();
    p.value = [e](const Vec& x) {
        std::vector<double> vars(16, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) vars[i] = x[i];
        return e.eval(vars);
    };
    p.grad = [e, dim](const Vec& x) {
        std::vector<Jet> vars(16, Jet(0.0, dim));
        for (int i = 0; i < dim; ++i) vars[std::size_t(i)] = Jet::variable(x[std::size_t(i)], i, dim);
        for (int i = dim; i < 16; ++i) vars[std::size_t(i)] = Jet(0.0, dim);
        Jet r = e.eval(vars);
        return r.grad();
    };
    p.hess = [e, dim](const Vec& x) {
        std::vector<Jet> vars(16, Jet(0.0, dim));
        for (int i = 0; i < dim; ++i) vars[std::size_t(i)] = Jet::variable(x[std::size_t(i)], i, dim);
        for (int i = dim; i < 16; ++i) vars[std::size_t(i)] = Jet(0.0, dim);
        Jet r = e.eval(vars);
        return r.hess();
    };
    return p;
}

/// Hamiltonian symbol H(x,xi) with first derivatives and (optionally)
/// analytic second derivatives. Missing second derivatives are replaced by
/// central finite differences of the gradients with step 1e-5 scaled by the
/// magnitude of the differentiation variable.
///
/// Convention for the mixed block: hess_mixed(i,j) = d2H / dx_i dxi_j.
struct HamiltonianSymbol {
    int dim = 1;
    std::string label;
    std::function<double(const Vec&, const Vec&)> h;
    std::function<Vec(const Vec&, const Vec&)> grad_x;
    std::function<Vec(const Vec&, const Vec&)> grad_xi;
    std::function<Mat(const Vec&, const Vec&)> hess_xi;     // optional
    std::function<Mat(const Vec&, const Vec&)> hess_mixed;  // optional
    std::function<Mat(const Vec&, const Vec&)> hess_x;      // optional

    // Separable structure H = omega(xi) + V(x), when known. Enables the
    // symplectic cross-check integrator and pure Fourier-multiplier evolution.
    bool separable = false;
    std::function<double(const Vec&)> omega;
    std::function<Vec(const Vec&)> omega_grad;
    Potential potential;  // V for separable symbols (may be invalid <=> V==0)

    Mat d2h_xixi(const Vec& x, const Vec& xi) const {
        if (hess_xi) return hess_xi(x, xi);
        return fd_jacobian([&](const Vec& q) { return grad_xi(x, q); }, xi);
    }
    Mat d2h_xx(const Vec& x, const Vec& xi) const {
        if (hess_x) return hess_x(x, xi);
        return fd_jacobian([&](const Vec& q) { return grad_x(q, xi); }, x);
    }
    /// (i,j) = d2H/dx_i dxi_j
    Mat d2h_x_xi(const Vec& x, const Vec& xi) const {
        if (hess_mixed) return hess_mixed(x, xi);
        return transpose(fd_jacobian([&](const Vec& q) { return grad_xi(q, xi); }, x));
    }

  private:
    template <class F>
    static Mat fd_jacobian(const F& g, const Vec& p) {
        const int n = int(p.size());
        Vec g0 = g(p);
        const int m = int(g0.size());
        Mat J(m, n);
        Vec q = p;
        for (int j = 0; j < n; ++j) {
            const double h = 1e-5 * (1.0 + std::abs(p[std::size_t(j)]));
            q[std::size_t(j)] = p[std::size_t(j)] + h;
            Vec gp = g(q);
            q[std::size_t(j)] = p[std::size_t(j)] - h;
            Vec gm = g(q);
            q[std::size_t(j)] = p[std::size_t(j)];
            for (int i = 0; i < m; ++i) J(i, j) = (gp[std::size_t(i)] - gm[std::size_t(i)]) / (2.0 * h);
        }
        // FD of gradients gives an approximately symmetric block only for
        // the pure blocks; symmetrize those to kill roundoff skew.
        return J;
    }
};

struct SymbolParams {
    int dim = 1;
    std::optional<Potential> potential;    // V(x)
    std::optional<Potential> coefficient;  // a(x) for the eikonal symbol
};

namespace detail {

inline void need_dim1(const std::string& name, int dim) {
    if (dim != 1)
        throw std::invalid_argument("builtin_symbol(" + name + "): only available for d=1");
}

inline Potential require_potential(const std::string& name, const SymbolParams& p) {
    if (!p.potential || !p.potential->valid())
        throw std::invalid_argument("builtin_symbol(" + name + "): missing potential parameter");
    return *p.potential;
}

inline Mat potential_hess(const Potential& v, const Vec& x) {
    if (v.hess) return v.hess(x);
    const int n = int(x.size());
    Mat J(n, n);
    Vec q = x;
    for (int j = 0; j < n; ++j) {
        const double h = 1e-5 * (1.0 + std::abs(x[std::size_t(j)]));
        q[std::size_t(j)] = x[std::size_t(j)] + h;
        Vec gp = v.grad(q);
        q[std::size_t(j)] = x[std::size_t(j)] - h;
        Vec gm = v.grad(q);
        q[std::size_t(j)] = x[std::size_t(j)];
        for (int i = 0; i < n; ++i) J(i, j) = (gp[std::size_t(i)] - gm[std::size_t(i)]) / (2.0 * h);
    }
    return J;
}

}  // namespace detail

/// Symbols from the catalog:
///   free_quadratic        H = |xi|^2/2 + V(x)   (V optional, default 0)
///   schrodinger_potential H = |xi|^2/2 + V(x)   (V required)
///   airy_cubic            H = xi^3/3            (d=1)
///   bethe_salpeter        H = sqrt(|xi|^2/2+1) + V(x)
///   eikonal               H = a(x)|xi|          (singular at xi=0)
///   harmonic_oscillator   H = (|x|^2+|xi|^2)/2
///   airy_variable         H = -x xi^3           (d=1, non-global flow)
inline HamiltonianSymbol builtin_symbol(const std::string& name, const SymbolParams& params = {}) {
    const int d = params.dim;
    if (d < 1 || d > 4) throw std::invalid_argument("builtin_symbol: dimension must be 1..4");
    HamiltonianSymbol s;
    s.dim = d;
    s.label = name;

    auto quadratic_with = [&](Potential V) {
        s.separable = true;
        s.potential = V;
        s.omega = [](const Vec& xi) { return 0.5 * dot(xi, xi); };
        s.omega_grad = [](const Vec& xi) { return xi; };
        s.h = [V](const Vec& x, const Vec& xi) { return 0.5 * dot(xi, xi) + V.value(x); };
        s.grad_x = [V](const Vec& x, const Vec&) { return V.grad(x); };
        s.grad_xi = [](const Vec&, const Vec& xi) { return xi; };
        s.hess_xi = [d](const Vec&, const Vec&) { return Mat::identity(d); };
        s.hess_mixed = [d](const Vec&, const Vec&) { return Mat(d, d); };
        s.hess_x = [V](const Vec& x, const Vec&) { return detail::potential_hess(V, x); };
    };

    if (name == "free_quadratic") {
        quadratic_with(params.potential && params.potential->valid() ? *params.potential
                                                                     : zero_potential(d));
    } else if (name == "schrodinger_potential") {
        quadratic_with(detail::require_potential(name, params));
    } else if (name == "airy_cubic") {
        detail::need_dim1(name, d);
        s.separable = true;
        s.potential = zero_potential(1);
        s.omega = [](const Vec& xi) { return xi[0] * xi[0] * xi[0] / 3.0; };
        s.omega_grad = [](const Vec& xi) { return Vec{xi[0] * xi[0]}; };
        s.h = [](const Vec&, const Vec& xi) { return xi[0] * xi[0] * xi[0] / 3.0; };
        s.grad_x = [](const Vec&, const Vec&) { return Vec{0.0}; };
        s.grad_xi = [](const Vec&, const Vec& xi) { return Vec{xi[0] * xi[0]}; };
        s.hess_xi = [](const Vec&, const Vec& xi) {
            Mat m(1, 1);
            m(0, 0) = 2.0 * xi[0];
            return m;
        };
        s.hess_mixed = [](const Vec&, const Vec&) { return Mat(1, 1); };
        s.hess_x = [](const Vec&, const Vec&) { return Mat(1, 1); };
    } else if (name == "bethe_salpeter") {
        Potential V = params.potential && params.potential->valid() ? *params.potential
                                                                    : zero_potential(d);
        s.separable = true;
        s.potential = V;
        auto root = [](const Vec& xi) { return std::sqrt(0.5 * dot(xi, xi) + 1.0); };
        s.omega = root;
        s.omega_grad = [root](const Vec& xi) {
            const double r = root(xi);
            Vec g(xi.size());
            for (std::size_t i = 0; i < xi.size(); ++i) g[i] = 0.5 * xi[i] / r;
            return g;
        };
        s.h = [root, V](const Vec& x, const Vec& xi) { return root(xi) + V.value(x); };
        s.grad_x = [V](const Vec& x, const Vec&) { return V.grad(x); };
        s.grad_xi = [root](const Vec&, const Vec& xi) {
            const double r = root(xi);
            Vec g(xi.size());
            for (std::size_t i = 0; i < xi.size(); ++i) g[i] = 0.5 * xi[i] / r;
            return g;
        };
        s.hess_xi = [root, d](const Vec&, const Vec& xi) {
            const double r = root(xi);
            Mat m(d, d);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j)
                    m(i, j) = -0.25 * xi[std::size_t(i)] * xi[std::size_t(j)] / (r * r * r);
                m(i, i) += 0.5 / r;
            }
            return m;
        };
        s.hess_mixed = [d](const Vec&, const Vec&) { return Mat(d, d); };
        s.hess_x = [V](const Vec& x, const Vec&) { return detail::potential_hess(V, x); };
    } else if (name == "eikonal") {
        Potential a = params.coefficient && params.coefficient->valid() ? *params.coefficient
                                                                        : Potential{};
        if (!a.valid()) {
            a.value = [](const Vec&) { return 1.0; };
            a.grad = [d](const Vec&) { return Vec(d, 0.0); };
            a.hess = [d](const Vec&) { return Mat(d, d); };
            a.source = "1";
        }
        auto guard = [](const Vec& xi) {
            const double r = norm2(xi);
            if (r <= 1e-8)
                throw std::domain_error("eikonal symbol: |xi| <= 1e-8, gradient singular");
            return r;
        };
        s.h = [a](const Vec& x, const Vec& xi) { return a.value(x) * norm2(xi); };
        s.grad_x = [a](const Vec& x, const Vec& xi) {
            Vec g = a.grad(x);
            const double r = norm2(xi);
            for (double& v : g) v *= r;
            return g;
        };
        s.grad_xi = [a, guard](const Vec& x, const Vec& xi) {
            const double r = guard(xi);
            Vec g(xi.size());
            const double av = a.value(x);
            for (std::size_t i = 0; i < xi.size(); ++i) g[i] = av * xi[i] / r;
            return g;
        };
        s.hess_xi = [a, guard, d](const Vec& x, const Vec& xi) {
            const double r = guard(xi);
            const double av = a.value(x);
            Mat m(d, d);
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j)
                    m(i, j) = -av * xi[std::size_t(i)] * xi[std::size_t(j)] / (r * r * r);
                m(i, i) += av / r;
            }
            return m;
        };
        s.hess_mixed = [a, guard, d](const Vec& x, const Vec& xi) {
            const double r = guard(xi);
            Vec ga = a.grad(x);
            Mat m(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) m(i, j) = ga[std::size_t(i)] * xi[std::size_t(j)] / r;
            return m;
        };
        s.hess_x = [a](const Vec& x, const Vec& xi) {
            Mat m = detail::potential_hess(a, x);
            const double r = norm2(xi);
            for (double& v : m.a) v *= r;
            return m;
        };
    } else if (name == "harmonic_oscillator") {
        s.separable = true;
        s.potential.value = [](const Vec& x) { return 0.5 * dot(x, x); };
        s.potential.grad = [](const Vec& x) { return x; };
        s.potential.hess = [d](const Vec&) { return Mat::identity(d); };
        s.potential.source = "x^2/2";
        s.omega = [](const Vec& xi) { return 0.5 * dot(xi, xi); };
        s.omega_grad = [](const Vec& xi) { return xi; };
        s.h = [](const Vec& x, const Vec& xi) { return 0.5 * (dot(x, x) + dot(xi, xi)); };
        s.grad_x = [](const Vec& x, const Vec&) { return x; };
        s.grad_xi = [](const Vec&, const Vec& xi) { return xi; };
        s.hess_xi = [d](const Vec&, const Vec&) { return Mat::identity(d); };
        s.hess_mixed = [d](const Vec&, const Vec&) { return Mat(d, d); };
        s.hess_x = [d](const Vec&, const Vec&) { return Mat::identity(d); };
    } else if (name == "airy_variable") {
        detail::need_dim1(name, d);
        s.h = [](const Vec& x, const Vec& xi) { return -x[0] * xi[0] * xi[0] * xi[0]; };
        s.grad_x = [](const Vec&, const Vec& xi) { return Vec{-xi[0] * xi[0] * xi[0]}; };
        s.grad_xi = [](const Vec& x, const Vec& xi) { return Vec{-3.0 * x[0] * xi[0] * xi[0]}; };
        s.hess_xi = [](const Vec& x, const Vec& xi) {
            Mat m(1, 1);
            m(0, 0) = -6.0 * x[0] * xi[0];
            return m;
        };
        s.hess_mixed = [](const Vec&, const Vec& xi) {
            Mat m(1, 1);
            m(0, 0) = -3.0 * xi[0] * xi[0];
            return m;
        };
        s.hess_x = [](const Vec&, const Vec&) { return Mat(1, 1); };
    } else {
        throw std::invalid_argument("builtin_symbol: unknown name '" + name + "'");
    }
    return s;
}

/// Custom symbol from an expression in x1..xd (alias x) and xi1..xid (alias xi).
inline HamiltonianSymbol symbol_from_expr(const Expr& e, int dim) {
    if (dim < 1 || dim > 4) throw std::invalid_argument("symbol_from_expr: dimension must be 1..4");
    HamiltonianSymbol s;
    s.dim = dim;
    s.label = "custom:" + e.text();
    const int n = 2 * dim;
    auto jets_at = [dim, n](const Vec& x, const Vec& xi) {
        std::vector<Jet> vars(16, Jet(0.0, n));
        for (int i = 0; i < dim; ++i) vars[std::size_t(i)] = Jet::variable(x[std::size_t(i)], i, n);
        for (int i = 0; i < dim; ++i)
            vars[std::size_t(8 + i)] = Jet::variable(xi[std::size_t(i)], dim + i, n);
        return vars;
    };
    s.h = [e](const Vec& x, const Vec& xi) {
        std::vector<double> vars(16, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) vars[i] = x[i];
        for (std::size_t i = 0; i < xi.size(); ++i) vars[8 + i] = xi[i];
        return e.eval(vars);
    };
    s.grad_x = [e, jets_at, dim](const Vec& x, const Vec& xi) {
        Jet r = e.eval(jets_at(x, xi));
        Vec g(dim);
        for (int i = 0; i < dim; ++i) g[std::size_t(i)] = r.d(i);
        return g;
    };
    s.grad_xi = [e, jets_at, dim](const Vec& x, const Vec& xi) {
        Jet r = e.eval(jets_at(x, xi));
        Vec g(dim);
        for (int i = 0; i < dim; ++i) g[std::size_t(i)] = r.d(dim + i);
        return g;
    };
    s.hess_xi = [e, jets_at, dim](const Vec& x, const Vec& xi) {
        Jet r = e.eval(jets_at(x, xi));
        Mat m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = r.dd(dim + i, dim + j);
        return m;
    };
    s.hess_mixed = [e, jets_at, dim](const Vec& x, const Vec& xi) {
        Jet r = e.eval(jets_at(x, xi));
        Mat m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = r.dd(i, dim + j);
        return m;
    };
    s.hess_x = [e, jets_at, dim](const Vec& x, const Vec& xi) {
        Jet r = e.eval(jets_at(x, xi));
        Mat m(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) m(i, j) = r.dd(i, j);
        return m;
    };
    return s;
}

/// WKB initial data: energy density n_I >= 0 and phase S_I.
struct InitialData {
    int dim = 1;
    std::function<double(const Vec&)> n;
    std::function<double(const Vec&)> S;
    std::function<Vec(const Vec&)> grad_S;
    std::function<Mat(const Vec&)> hess_S;  // optional -> finite differences
    double mass = std::numeric_limits<double>::quiet_NaN();
    std::string n_source, s_source;

    Mat d2S(const Vec& x) const {
        if (hess_S) return hess_S(x);
        const int n_ = int(x.size());
        Mat J(n_, n_);
        Vec q = x;
        for (int j = 0; j < n_; ++j) {
            const double h = 1e-5 * (1.0 + std::abs(x[std::size_t(j)]));
            q[std::size_t(j)] = x[std::size_t(j)] + h;
            Vec gp = grad_S(q);
            q[std::size_t(j)] = x[std::size_t(j)] - h;
            Vec gm = grad_S(q);
            q[std::size_t(j)] = x[std::size_t(j)];
            for (int i = 0; i < n_; ++i)
                J(i, j) = (gp[std::size_t(i)] - gm[std::size_t(i)]) / (2.0 * h);
        }
        return J;
    }
};

inline InitialData initial_from_expr(const Expr& n_expr, const Expr& s_expr, int dim) {
    InitialData id;
    id.dim = dim;
    id.n_source = n_expr.text();
    id.s_source = s_expr.text();
    Potential np = potential_from_expr(n_expr, dim);
    Potential sp = potential_from_expr(s_expr, dim);
    id.n = np.value;
    id.S = sp.value;
    id.grad_S = sp.grad;
    id.hess_S = sp.hess;
    return id;
}

struct Box {
    Vec lo, hi;
    int dim() const { return int(lo.size()); }
    bool contains(const Vec& p, double margin = 0.0) const {
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (p[i] < lo[i] - margin || p[i] > hi[i] + margin) return false;
        return true;
    }
    bool nonempty() const {
        if (lo.empty() || lo.size() != hi.size()) return false;
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) return false;
        return true;
    }
};

struct Region {
    Box x;
    std::vector<double> times;
    double t0 = 0.0, t1 = 0.0;  // scan span; defaults to [0, max(times)] on load
};

struct Tolerances {
    double ode_rel = 1e-10;
    double ode_abs = 1e-12;
    double root = 1e-10;
    double dedupe = 1e-6;
    double caustic = 1e-6;
    double mass = 1e-10;  // hot/cool classification threshold on mu

    void validate() const {
        if (!(ode_rel > 0) || !(ode_abs > 0) || !(root > 0) || !(dedupe > 0) || !(caustic > 0) ||
            !(mass > 0))
            throw std::invalid_argument("tolerances must be strictly positive");
    }
};

/// The unit of reproducible experiment: symbol + WKB data + query region +
/// tolerances + momentum search box.
struct Scenario {
    HamiltonianSymbol hamiltonian;
    InitialData initial;
    Region region;
    Tolerances tol;
    Box xi_box;
    std::string name;

    void validate_shape() const {
        tol.validate();
        if (!region.x.nonempty()) throw std::invalid_argument("scenario: region box is empty");
        if (!xi_box.nonempty()) throw std::invalid_argument("scenario: xi search box is empty");
        if (region.x.dim() != hamiltonian.dim || xi_box.dim() != hamiltonian.dim)
            throw std::invalid_argument("scenario: box dimension mismatch");
    }

    /// Cache the initial mass over the region box (d=1 adaptive, d>1 tensor Simpson).
    void cache_mass() {
        initial.mass = integrate_nd(initial.n, region.x, 1e-11);
    }

    static double integrate_nd(const std::function<double(const Vec&)>& f, const Box& b,
                               double tol) {
        const int d = b.dim();
        if (d == 1) return integrate([&](double x) { return f(Vec{x}); }, b.lo[0], b.hi[0], tol);
        if (d == 2)
            return integrate(
                [&](double x1) {
                    return integrate([&](double x2) { return f(Vec{x1, x2}); }, b.lo[1], b.hi[1],
                                     tol);
                },
                b.lo[0], b.hi[0], tol);
        throw std::invalid_argument("mass quadrature implemented for d<=2");
    }
};

}  // namespace caustica

#endif
