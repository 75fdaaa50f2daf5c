#ifndef CAUSTICA_WIGNER_HPP
#define CAUSTICA_WIGNER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "caustica/fft.hpp"
#include "caustica/flow.hpp"
#include "caustica/symbols.hpp"

namespace caustica {

/// Uniform periodic x-grid (d=1), size a power of two.
struct WaveGrid {
    double lo = 0.0;
    double dx = 0.0;
    int n = 0;

    double length() const { return dx * n; }
    double x(int j) const { return lo + dx * j; }
    static WaveGrid over(double lo, double hi, int n) {
        if (n <= 0 || (n & (n - 1)) != 0)
            throw std::invalid_argument("wave grid size must be a power of two");
        WaveGrid g;
        g.lo = lo;
        g.n = n;
        g.dx = (hi - lo) / n;
        return g;
    }
};

struct WaveField {
    WaveGrid grid;
    std::vector<cdouble> psi;
    double eps = 0.0;
    double t = 0.0;
};

inline double l2_norm2(const WaveField& f) {
    double s = 0.0;
    for (const cdouble& v : f.psi) s += std::norm(v);
    return s * f.grid.dx;
}

/// Fraction of the field's mass inside the outermost `frac` strips of the
/// periodic domain; the spectral evolution is trustworthy only while this
/// stays tiny.
inline double boundary_mass_fraction(const WaveField& f, double frac = 0.03) {
    const int n = f.grid.n;
    const int m = std::max(1, int(frac * n));
    double edge = 0.0, total = 0.0;
    for (int j = 0; j < n; ++j) {
        const double a = std::norm(f.psi[std::size_t(j)]);
        total += a;
        if (j < m || j >= n - m) edge += a;
    }
    return total > 0 ? edge / total : 0.0;
}

/// Sample the WKB datum sqrt(n_I) exp(i S_I / eps). The grid must resolve
/// the local oscillation: dx <= eps / (4 max |grad S_I|) over the grid.
inline WaveField wkb_initial(const InitialData& init, double eps, const WaveGrid& grid) {
    if (init.dim != 1) throw std::invalid_argument("wkb_initial: d=1 oracle only");
    if (!(eps > 0)) throw std::invalid_argument("wkb_initial: eps must be positive");
    double maxgrad = 0.0;
    for (int j = 0; j < grid.n; ++j)
        maxgrad = std::max(maxgrad, std::abs(init.grad_S(Vec{grid.x(j)})[0]));
    if (maxgrad > 0 && grid.dx > eps / (4.0 * maxgrad))
        throw std::invalid_argument("wkb_initial: grid under-resolves the phase oscillation "
                                    "(need dx <= eps/(4 max|grad S_I|))");
    WaveField f;
    f.grid = grid;
    f.eps = eps;
    f.t = 0.0;
    f.psi.resize(std::size_t(grid.n));
    for (int j = 0; j < grid.n; ++j) {
        double nv = init.n(Vec{grid.x(j)});
        if (nv < 0) {
            if (nv < -1e-12) throw std::invalid_argument("wkb_initial: n_I negative");
            nv = 0.0;
        }
        const double sv = init.S(Vec{grid.x(j)});
        f.psi[std::size_t(j)] = std::sqrt(nv) * std::exp(cdouble(0.0, sv / eps));
    }
    return f;
}

struct EvolveOptions {
    double max_strang_step_over_eps = 0.05;  // dt <= eps/20, within the eps/10 contract
};

/// Split-step spectral propagator for eps psi_t + i H^W(x, eps D) psi = 0
/// with H = omega(xi) + V(x): kinetic factor exact in Fourier space
/// (multiplier exp(-i t omega(eps q)/eps)), potential factor pointwise
/// exp(-i t V(x)/eps), Strang composition. For V == 0 the evolution is a
/// single exact spectral step.
inline WaveField evolve(const WaveField& field, const HamiltonianSymbol& H, double t,
                        const EvolveOptions& opts = {}) {
    if (!H.separable || !H.omega)
        throw std::invalid_argument("evolve: spectral oracle needs a separable symbol "
                                    "H = omega(xi) + V(x)");
    if (H.dim != 1) throw std::invalid_argument("evolve: d=1 oracle only");
    WaveField out = field;
    if (t == 0.0) return out;
    const int n = field.grid.n;
    const double eps = field.eps;

    bool zero_potential = true;
    if (H.potential.valid()) {
        for (int j = 0; j < 17; ++j) {
            const double x = field.grid.x(j * (n / 17 + 1) % n);
            if (std::abs(H.potential.value(Vec{x})) > 0.0) {
                zero_potential = false;
                break;
            }
        }
    }

    std::vector<double> omega_q(std::size_t(n), 0.0);
    for (int k = 0; k < n; ++k)
        omega_q[std::size_t(k)] = H.omega(Vec{eps * fft_freq(std::size_t(k), std::size_t(n), field.grid.dx)});

    auto kinetic = [&](double dt) {
        fft(out.psi);
        for (int k = 0; k < n; ++k)
            out.psi[std::size_t(k)] *= std::exp(cdouble(0.0, -dt * omega_q[std::size_t(k)] / eps));
        ifft(out.psi);
    };

    if (zero_potential) {
        kinetic(t);
        out.t = field.t + t;
        return out;
    }

    std::vector<double> vx(std::size_t(n), 0.0);
    for (int j = 0; j < n; ++j) vx[std::size_t(j)] = H.potential.value(Vec{field.grid.x(j)});

    const long nsteps = std::max<long>(1, (long)std::ceil(std::abs(t) / (opts.max_strang_step_over_eps * eps)));
    const double dt = t / double(nsteps);
    auto halfpot = [&]() {
        for (int j = 0; j < n; ++j)
            out.psi[std::size_t(j)] *= std::exp(cdouble(0.0, -0.5 * dt * vx[std::size_t(j)] / eps));
    };
    for (long s = 0; s < nsteps; ++s) {
        halfpot();
        kinetic(dt);
        halfpot();
    }
    out.t = field.t + t;
    return out;
}

/// Discrete Wigner function w(x, xi) on the scale eps, real-valued.
/// Rows may be subsampled in x (stride); the xi-grid is the full conjugate
/// grid xi_k = pi eps k / L, k = -N/2 .. N/2-1, which makes the zeroth
/// moment identity sum_k w dxi = |psi(x)|^2 exact.
struct PhaseSpaceGrid {
    std::vector<double> xs;
    std::vector<double> xis;
    std::vector<double> w;  // [ix * nxi + ik]
    double eps = 0.0;
    double x_spacing = 0.0;
    double xi_spacing = 0.0;
    double max_imag_residue = 0.0;

    int nx() const { return int(xs.size()); }
    int nxi() const { return int(xis.size()); }
    double at(int ix, int ik) const { return w[std::size_t(ix) * xis.size() + std::size_t(ik)]; }
    double& at(int ix, int ik) { return w[std::size_t(ix) * xis.size() + std::size_t(ik)]; }
};

inline PhaseSpaceGrid wigner_transform(const WaveField& f, int x_stride = 0) {
    const int n = f.grid.n;
    if (x_stride <= 0) x_stride = std::max(1, n / 2048);
    const double L = f.grid.length();
    // Half-window z-sum: |m| < N/4, so the two sample points x -/+ m dx never
    // straddle the periodic seam for fields kept away from the boundary.
    // A full-window sum would alias an O(1) interference ghost between a
    // field and its periodic image at the domain edges. The unpaired Nyquist
    // term is dropped, which keeps the transform exactly real. The zeroth
    // moment identity sum_k w dxi = |psi|^2 stays exact (only m = 0 survives
    // the k-sum).
    const int m2 = n / 2;  // z-window size (power of two)
    const double dz = 2.0 * f.grid.dx / f.eps;
    const double dxi = 2.0 * M_PI * f.eps / L;
    const double scale = dz / (2.0 * M_PI);

    PhaseSpaceGrid ps;
    ps.eps = f.eps;
    ps.x_spacing = f.grid.dx * x_stride;
    ps.xi_spacing = dxi;
    for (int j = 0; j < n; j += x_stride) ps.xs.push_back(f.grid.x(j));
    ps.xis.resize(std::size_t(m2));
    for (int k = 0; k < m2; ++k) ps.xis[std::size_t(k)] = dxi * (k - m2 / 2);
    ps.w.resize(ps.xs.size() * std::size_t(m2));

    std::vector<cdouble> row(std::size_t(m2), cdouble(0.0));
    int out_ix = 0;
    for (int j = 0; j < n; j += x_stride, ++out_ix) {
        for (int p = 0; p < m2; ++p) {
            const int m = p < m2 / 2 ? p : p - m2;
            if (m == -m2 / 2) {
                row[std::size_t(p)] = cdouble(0.0);
                continue;
            }
            const int jm = ((j - m) % n + n) % n;
            const int jp = ((j + m) % n + n) % n;
            row[std::size_t(p)] = f.psi[std::size_t(jm)] * std::conj(f.psi[std::size_t(jp)]);
        }
        fft_radix2(row, +1);  // sum_p row[p] e^{+2 pi i pk/M}
        for (int k = -m2 / 2; k < m2 / 2; ++k) {
            const cdouble wv = scale * row[std::size_t((k + m2) % m2)];
            ps.max_imag_residue = std::max(ps.max_imag_residue, std::abs(wv.imag()));
            ps.at(out_ix, k + m2 / 2) = wv.real();
        }
    }
    const double nrm = l2_norm2(f);
    if (ps.max_imag_residue > 1e-6 * (1.0 + nrm))
        throw std::runtime_error("wigner_transform: imaginary residue beyond tolerance");
    return ps;
}

/// Husimi smoothing: convolution in x and xi with the Gaussian
/// G^eps(z) = (pi eps)^{-1/2} exp(-z^2/eps) (discrete kernels normalized to
/// unit mass). x-direction wraps periodically; xi-direction zero-pads.
inline PhaseSpaceGrid husimi(const PhaseSpaceGrid& ps) {
    PhaseSpaceGrid out = ps;
    const double sigma2 = 0.5 * ps.eps;  // variance of G^eps

    auto kernel = [&](double spacing) {
        const int r = std::max(1, int(std::ceil(7.0 * std::sqrt(sigma2) / spacing)));
        std::vector<double> k(std::size_t(2 * r) + 1);
        double sum = 0.0;
        for (int i = -r; i <= r; ++i) {
            const double z = i * spacing;
            k[std::size_t(i + r)] = std::exp(-z * z / ps.eps);
            sum += k[std::size_t(i + r)];
        }
        for (double& v : k) v /= sum;
        return k;
    };

    const int nx = ps.nx(), nxi = ps.nxi();
    {  // x pass, periodic
        const std::vector<double> kx = kernel(ps.x_spacing);
        const int r = int(kx.size() / 2);
        std::vector<double> tmp(out.w.size(), 0.0);
        for (int ix = 0; ix < nx; ++ix)
            for (int s = -r; s <= r; ++s) {
                const int src = ((ix + s) % nx + nx) % nx;
                const double kv = kx[std::size_t(s + r)];
                for (int ik = 0; ik < nxi; ++ik)
                    tmp[std::size_t(ix) * std::size_t(nxi) + std::size_t(ik)] +=
                        kv * out.at(src, ik);
            }
        out.w = std::move(tmp);
    }
    {  // xi pass, zero-padded
        const std::vector<double> kxi = kernel(ps.xi_spacing);
        const int r = int(kxi.size() / 2);
        std::vector<double> tmp(out.w.size(), 0.0);
        for (int ix = 0; ix < nx; ++ix)
            for (int ik = 0; ik < nxi; ++ik) {
                double acc = 0.0;
                const int s0 = std::max(-r, -ik), s1 = std::min(r, nxi - 1 - ik);
                for (int s = s0; s <= s1; ++s) acc += kxi[std::size_t(s + r)] * out.at(ix, ik + s);
                tmp[std::size_t(ix) * std::size_t(nxi) + std::size_t(ik)] = acc;
            }
        out.w = std::move(tmp);
    }
    return out;
}

/// Zeroth xi-moment: the energy density on the (possibly strided) x-grid.
inline std::vector<double> moment0(const PhaseSpaceGrid& ps) {
    std::vector<double> dens(std::size_t(ps.nx()), 0.0);
    for (int ix = 0; ix < ps.nx(); ++ix) {
        double s = 0.0;
        for (int ik = 0; ik < ps.nxi(); ++ik) s += ps.at(ix, ik);
        dens[std::size_t(ix)] = s * ps.xi_spacing;
    }
    return dens;
}

/// Phase-space expectation of the observable A(x, xi).
inline double expectation(const std::function<double(double, double)>& A,
                          const PhaseSpaceGrid& ps) {
    double s = 0.0;
    for (int ix = 0; ix < ps.nx(); ++ix)
        for (int ik = 0; ik < ps.nxi(); ++ik)
            s += A(ps.xs[std::size_t(ix)], ps.xis[std::size_t(ik)]) * ps.at(ix, ik);
    return s * ps.x_spacing * ps.xi_spacing;
}

inline double expectation(const HamiltonianSymbol& H, const PhaseSpaceGrid& ps) {
    return expectation([&](double x, double xi) { return H.h(Vec{x}, Vec{xi}); }, ps);
}

/// Spectral-route expectation <psi, H^W psi> for separable H; independent of
/// the Wigner grid and used as its oracle.
inline double spectral_energy(const WaveField& f, const HamiltonianSymbol& H) {
    if (!H.separable || !H.omega) throw std::invalid_argument("spectral_energy: separable H only");
    const int n = f.grid.n;
    std::vector<cdouble> spec = f.psi;
    fft(spec);
    // c_q = dx * DFT; Parseval: sum |c_q|^2 dq / (2 pi) = sum |psi|^2 dx
    const double dq = 2.0 * M_PI / f.grid.length();
    double kin = 0.0;
    for (int k = 0; k < n; ++k) {
        const double q = fft_freq(std::size_t(k), std::size_t(n), f.grid.dx);
        kin += H.omega(Vec{f.eps * q}) * std::norm(spec[std::size_t(k)] * f.grid.dx);
    }
    kin *= dq / (2.0 * M_PI);
    double pot = 0.0;
    if (H.potential.valid())
        for (int j = 0; j < n; ++j)
            pot += H.potential.value(Vec{f.grid.x(j)}) * std::norm(f.psi[std::size_t(j)]);
    pot *= f.grid.dx;
    return kin + pot;
}

// ---------------------------------------------------------------------------
// eps -> 0 comparison against the limiting objects from the ray modules
// ---------------------------------------------------------------------------

struct CompareEntry {
    double eps = 0.0;
    int grid_n = 0;
    double l1_density = 0.0;
    double l2_wkb = 0.0;
    double boundary_mass = 0.0;
};

struct CompareReport {
    double t = 0.0;
    std::vector<CompareEntry> entries;
    std::vector<double> l1_ratios, l2_ratios;
    bool restricted = false;  // multivalued/caustic region excluded from comparison
    bool maslov_flag_applies = false;
    std::vector<std::pair<double, double>> excluded_x;
    std::string note;
};

struct CompareOptions {
    double pad = 3.0;
    int sweep_nodes = 8193;
    int max_log2n = 21;
    double fold_j_floor = 1e-2;
};

namespace detail {

/// Limiting single-branch fields along a ray sweep, interpolated in the
/// footpoint variable (4-point Lagrange, the sweep is uniform in z).
struct RaySweep {
    std::vector<double> z, xhat, S, Jsigned;
    bool monotone = true;

    double interp(const std::vector<double>& f, double zq) const {
        const double z0 = z.front(), dzs = z[1] - z[0];
        int i = int(std::floor((zq - z0) / dzs));
        i = std::clamp(i, 1, int(z.size()) - 3);
        const double u = (zq - z[std::size_t(i)]) / dzs;  // in [-1,2] nearby
        const double um1 = u + 1.0, up1 = u - 1.0, up2 = u - 2.0;
        const double c0 = -u * up1 * up2 / 6.0;
        const double c1 = um1 * up1 * up2 / 2.0;
        const double c2 = -um1 * u * up2 / 2.0;
        const double c3 = um1 * u * up1 / 6.0;
        return c0 * f[std::size_t(i) - 1] + c1 * f[std::size_t(i)] + c2 * f[std::size_t(i) + 1] +
               c3 * f[std::size_t(i) + 2];
    }

    /// Inverse of the (monotone) ray map by bisection on the sampled xhat.
    double z_of_x(double xq) const {
        const bool inc = xhat.back() > xhat.front();
        int lo = 0, hi = int(xhat.size()) - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if ((xhat[std::size_t(mid)] <= xq) == inc)
                lo = mid;
            else
                hi = mid;
        }
        // refine with local Lagrange inversion: solve xhat(z)=xq on [z_lo, z_hi]
        double a = z[std::size_t(lo)], b = z[std::size_t(hi)];
        for (int it = 0; it < 70; ++it) {
            const double m = 0.5 * (a + b);
            if ((interp(xhat, m) <= xq) == inc)
                a = m;
            else
                b = m;
        }
        return 0.5 * (a + b);
    }
};

}  // namespace detail

/// Finite-eps oracle comparison (Lemma 3.3 / Prop 2.1 shape): evolve the WKB
/// datum at each eps, compare n^eps = |psi|^2 against the limiting density in
/// L1(x) and psi^eps against the WKB superposition in L2(x) over the scenario
/// region. If the ray map folds at time t, the multivalued part is excluded
/// from the comparison and the report says so.
inline CompareReport compare(const Scenario& sc, const std::vector<double>& eps_list, double t,
                             const CompareOptions& opts = {}) {
    if (sc.hamiltonian.dim != 1) throw std::invalid_argument("compare: d=1 oracle only");
    CompareReport rep;
    rep.t = t;

    const double rlo = sc.region.x.lo[0], rhi = sc.region.x.hi[0];

    // --- limiting fields along rays (eps-independent) -----------------------
    detail::RaySweep sweep;
    {
        const int m = opts.sweep_nodes;
        sweep.z.resize(std::size_t(m));
        sweep.xhat.resize(std::size_t(m));
        sweep.S.resize(std::size_t(m));
        sweep.Jsigned.resize(std::size_t(m));
        for (int i = 0; i < m; ++i) {
            const double z = rlo + (rhi - rlo) * i / (m - 1);
            RayJacobian rj = ray_with_jacobian(sc.hamiltonian, sc.initial, Vec{z}, t, sc.tol);
            if (!rj.state.ok())
                throw std::runtime_error("compare: ray blow-up inside the region sweep");
            sweep.z[std::size_t(i)] = z;
            sweep.xhat[std::size_t(i)] = rj.state.x[0];
            sweep.S[std::size_t(i)] = rj.state.S;
            sweep.Jsigned[std::size_t(i)] = rj.det_signed;
        }
        for (int i = 0; i + 1 < m; ++i)
            if ((sweep.xhat[std::size_t(i) + 1] - sweep.xhat[std::size_t(i)]) *
                    (sweep.xhat[1] - sweep.xhat[0]) <=
                0.0)
                sweep.monotone = false;
    }

    // multivalued x-intervals (ray map folded): excluded from both distances
    std::vector<std::pair<double, double>> excl;
    if (!sweep.monotone) {
        rep.restricted = true;
        rep.maslov_flag_applies = true;
        for (std::size_t i = 0; i + 1 < sweep.xhat.size(); ++i) {
            const bool inc0 = sweep.xhat[1] > sweep.xhat[0];
            const bool inc = sweep.xhat[i + 1] > sweep.xhat[i];
            if (inc != inc0) {
                // local fold: exclude the x-range swept while folded back
                double a = std::min(sweep.xhat[i], sweep.xhat[i + 1]);
                double b = std::max(sweep.xhat[i], sweep.xhat[i + 1]);
                // grow to neighbors with small |J|
                std::size_t l = i, r = i + 1;
                while (l > 0 && std::abs(sweep.Jsigned[l]) < opts.fold_j_floor) --l;
                while (r + 1 < sweep.xhat.size() && std::abs(sweep.Jsigned[r]) < opts.fold_j_floor)
                    ++r;
                a = std::min({a, sweep.xhat[l], sweep.xhat[r]});
                b = std::max({b, sweep.xhat[l], sweep.xhat[r]});
                bool merged = false;
                for (auto& ab : excl)
                    if (a <= ab.second && b >= ab.first) {
                        ab.first = std::min(ab.first, a);
                        ab.second = std::max(ab.second, b);
                        merged = true;
                        break;
                    }
                if (!merged) excl.push_back({a, b});
            }
        }
        std::sort(excl.begin(), excl.end());
        std::vector<std::pair<double, double>> coalesced;
        for (const auto& ab : excl) {
            if (!coalesced.empty() && ab.first <= coalesced.back().second)
                coalesced.back().second = std::max(coalesced.back().second, ab.second);
            else
                coalesced.push_back(ab);
        }
        excl = coalesced;
        rep.excluded_x = excl;
        rep.note = "ray map folds at this time; multivalued intervals excluded from comparison";
    }
    auto excluded = [&](double x) {
        for (const auto& ab : excl)
            if (x >= ab.first && x <= ab.second) return true;
        return false;
    };

    const double sweep_xlo = *std::min_element(sweep.xhat.begin(), sweep.xhat.end());
    const double sweep_xhi = *std::max_element(sweep.xhat.begin(), sweep.xhat.end());

    // --- per-eps wave runs ---------------------------------------------------
    for (double eps : eps_list) {
        const double dom_lo = std::min(rlo, sweep_xlo) - opts.pad;
        const double dom_hi = std::max(rhi, sweep_xhi) + opts.pad;

        double maxgrad = 0.0;
        for (int i = 0; i < 4097; ++i) {
            const double x = dom_lo + (dom_hi - dom_lo) * i / 4096
;
            maxgrad = std::max(maxgrad, std::abs(sc.initial.grad_S(Vec{x})[0]));
        }
        // 5% headroom so the stricter grid-wide check in wkb_initial passes
        const double dx_req =
            maxgrad > 0 ? eps / (4.2 * maxgrad) : (dom_hi - dom_lo) / 1024;
        int log2n = 8;
        while ((dom_hi - dom_lo) / double(1 << log2n) > dx_req && log2n < opts.max_log2n) ++log2n;
        if ((dom_hi - dom_lo) / double(1 << log2n) > dx_req)
            throw std::runtime_error("compare: required wave grid exceeds the size cap");

        WaveGrid grid = WaveGrid::over(dom_lo, dom_hi, 1 << log2n);
        WaveField f0 = wkb_initial(sc.initial, eps, grid);
        WaveField ft = evolve(f0, sc.hamiltonian, t);

        CompareEntry entry;
        entry.eps = eps;
        entry.grid_n = grid.n;
        entry.boundary_mass = boundary_mass_fraction(ft);

        double l1 = 0.0, l2 = 0.0;
        for (int j = 0; j < grid.n; ++j) {
            const double x = grid.x(j);
            if (x < rlo || x > rhi || excluded(x)) continue;
            double nlim = 0.0;
            cdouble wkb(0.0, 0.0);
            if (x >= sweep_xlo && x <= sweep_xhi) {
                const double z = sweep.z_of_x(x);
                const double J = sweep.interp(sweep.Jsigned, z);
                const double S = sweep.interp(sweep.S, z);
                const double nI = sc.initial.n(Vec{z});
                if (std::abs(J) > 1e-300) {
                    nlim = nI / std::abs(J);
                    wkb = std::sqrt(nlim) * std::exp(cdouble(0.0, S / eps));
                }
            }
            const double neps = std::norm(ft.psi[std::size_t(j)]);
            l1 += std::abs(neps - nlim) * grid.dx;
            l2 += std::norm(ft.psi[std::size_t(j)] - wkb) * grid.dx;
        }
        entry.l1_density = l1;
        entry.l2_wkb = std::sqrt(l2);
        rep.entries.push_back(entry);
    }
    for (std::size_t i = 0; i + 1 < rep.entries.size(); ++i) {
        const auto &a = rep.entries[i], &b = rep.entries[i + 1];
        rep.l1_ratios.push_back(a.l1_density > 0 ? b.l1_density / a.l1_density : 0.0);
        rep.l2_ratios.push_back(a.l2_wkb > 0 ? b.l2_wkb / a.l2_wkb : 0.0);
    }
    return rep;
}

}  // namespace caustica

#endif
