#ifndef CAUSTICA_JET_HPP
#define CAUSTICA_JET_HPP

#include <array>
#include <cassert>
#include <cmath>

#include "caustica/linalg.hpp"

namespace caustica {

/// Second-order forward-mode scalar: carries value, gradient and Hessian
/// w.r.t. up to kMaxVars seed variables. Used to get exact derivatives of
/// expression-defined data (n_I, S_I, V, a, custom symbols) without
/// symbolic differentiation.
class Jet {
  public:
    static constexpr int kMaxVars = 8;

    Jet() = default;
    explicit Jet(double v, int nvars = 0) : v_(v), n_(nvars) {
        g_.fill(0.0);
        h_.fill(0.0);
    }

    static Jet variable(double v, int index, int nvars) {
        assert(index >= 0 && index < nvars && nvars <= kMaxVars);
        Jet j(v, nvars);
        j.g_[index] = 1.0;
        return j;
    }

    double value() const { return v_; }
    int nvars() const { return n_; }
    double d(int i) const { return g_[i]; }
    double dd(int i, int j) const { return h_[std::size_t(i) * kMaxVars + j]; }

    Vec grad() const {
        Vec g(n_);
        for (int i = 0; i < n_; ++i) g[i] = g_[i];
        return g;
    }
    Mat hess() const {
        Mat h(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) h(i, j) = dd(i, j);
        return h;
    }

    friend Jet operator+(const Jet& a, const Jet& b) {
        Jet r = a.merged(b);
        r.v_ = a.v_ + b.v_;
        for (int i = 0; i < r.n_; ++i) r.g_[i] = a.g_[i] + b.g_[i];
        for (int i = 0; i < r.n_; ++i)
            for (int j = 0; j < r.n_; ++j) r.hset(i, j, a.dd(i, j) + b.dd(i, j));
        return r;
    }
    friend Jet operator-(const Jet& a, const Jet& b) {
        Jet r = a.merged(b);
        r.v_ = a.v_ - b.v_;
        for (int i = 0; i < r.n_; ++i) r.g_[i] = a.g_[i] - b.g_[i];
        for (int i = 0; i < r.n_; ++i)
            for (int j = 0; j < r.n_; ++j) r.hset(i, j, a.dd(i, j) - b.dd(i, j));
        return r;
    }
    friend Jet operator-(const Jet& a) {
        Jet r = a;
        r.v_ = -r.v_;
        for (double& x : r.g_) x = -x;
        for (double& x : r.h_) x = -x;
        return r;
    }
    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r = a.merged(b);
        r.v_ = a.v_ * b.v_;
        for (int i = 0; i < r.n_; ++i) r.g_[i] = a.g_[i] * b.v_ + a.v_ * b.g_[i];
        for (int i = 0; i < r.n_; ++i)
            for (int j = 0; j < r.n_; ++j)
                r.hset(i, j, a.dd(i, j) * b.v_ + a.g_[i] * b.g_[j] + a.g_[j] * b.g_[i] +
                                 a.v_ * b.dd(i, j));
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * b.reciprocal(); }

    friend Jet operator+(const Jet& a, double c) { return a + Jet(c, a.n_); }
    friend Jet operator+(double c, const Jet& a) { return Jet(c, a.n_) + a; }
    friend Jet operator-(const Jet& a, double c) { return a - Jet(c, a.n_); }
    friend Jet operator-(double c, const Jet& a) { return Jet(c, a.n_) - a; }
    friend Jet operator*(const Jet& a, double c) { return a * Jet(c, a.n_); }
    friend Jet operator*(double c, const Jet& a) { return Jet(c, a.n_) * a; }
    friend Jet operator/(const Jet& a, double c) { return a / Jet(c, a.n_); }
    friend Jet operator/(double c, const Jet& a) { return Jet(c, a.n_) / a; }

    /// Chain rule through a scalar function with given f(v), f'(v), f''(v).
    Jet compose(double f, double df, double ddf) const {
        Jet r(f, n_);
        for (int i = 0; i < n_; ++i) r.g_[i] = df * g_[i];
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r.hset(i, j, df * dd(i, j) + ddf * g_[i] * g_[j]);
        return r;
    }

    Jet reciprocal() const {
        const double iv = 1.0 / v_;
        return compose(iv, -iv * iv, 2.0 * iv * iv * iv);
    }

  private:
    Jet merged(const Jet& b) const {
        Jet r(0.0, std::max(n_, b.n_));
        return r;
    }
    void hset(int i, int j, double x) { h_[std::size_t(i) * kMaxVars + j] = x; }

    double v_ = 0.0;
    int n_ = 0;
    std::array<double, kMaxVars> g_{};
    std::array<double, std::size_t(kMaxVars) * kMaxVars> h_{};
};

inline Jet exp(const Jet& a) {
    const double e = std::exp(a.value());
    return a.compose(e, e, e);
}
inline Jet log(const Jet& a) {
    const double iv = 1.0 / a.value();
    return a.compose(std::log(a.value()), iv, -iv * iv);
}
inline Jet sin(const Jet& a) { return a.compose(std::sin(a.value()), std::cos(a.value()), -std::sin(a.value())); }
inline Jet cos(const Jet& a) { return a.compose(std::cos(a.value()), -std::sin(a.value()), -std::cos(a.value())); }
inline Jet cosh(const Jet& a) { return a.compose(std::cosh(a.value()), std::sinh(a.value()), std::cosh(a.value())); }
inline Jet sinh(const Jet& a) { return a.compose(std::sinh(a.value()), std::cosh(a.value()), std::sinh(a.value())); }
inline Jet tanh(const Jet& a) {
    const double t = std::tanh(a.value());
    const double s = 1.0 - t * t;
    return a.compose(t, s, -2.0 * t * s);
}
inline Jet sqrt(const Jet& a) {
    const double s = std::sqrt(a.value());
    return a.compose(s, 0.5 / s, -0.25 / (s * a.value()));
}
/// abs: one-sided derivative at 0 (treated as the right limit, slope +1).
inline Jet abs(const Jet& a) {
    const double sgn = a.value() >= 0.0 ? 1.0 : -1.0;
    return a.compose(std::abs(a.value()), sgn, 0.0);
}
/// Heaviside step, right-continuous: step(0) = 1, derivative 0 everywhere.
inline Jet step(const Jet& a) { return Jet(a.value() >= 0.0 ? 1.0 : 0.0, a.nvars()); }

inline Jet pow(const Jet& a, int k) {
    if (k == 0) return Jet(1.0, a.nvars());
    if (k < 0) return pow(a, -k).reciprocal();
    Jet r = a;
    for (int i = 1; i < k; ++i) r = r * a;
    return r;
}
inline Jet pow(const Jet& a, const Jet& b) { return exp(b * log(a)); }
inline Jet pow(const Jet& a, double p) {
    const double v = a.value();
    return a.compose(std::pow(v, p), p * std::pow(v, p - 1.0), p * (p - 1.0) * std::pow(v, p - 2.0));
}

}  // namespace caustica

#endif
