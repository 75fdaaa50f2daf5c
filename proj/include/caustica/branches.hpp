#ifndef CAUSTICA_BRANCHES_HPP
#define CAUSTICA_BRANCHES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "caustica/flow.hpp"
#include "caustica/quadrature.hpp"
#include "caustica/symbols.hpp"

namespace caustica {

/// One branch of the multivalued solution at (x,t): velocity v = grad S_i,
/// transported phase S_i, branch density n_i = n_I(z)/|Df|, the functional
/// determinant Df, and the backward footpoint z.
struct BranchPoint {
    Vec v;
    double S = 0.0;
    double n = 0.0;
    double df = 0.0;  // det of the xi-Jacobian of f_{x,t} at the root
    Vec z;
    bool at_caustic = false;
    double f_residual = 0.0;
};

struct BranchSet {
    Vec x;
    double t = 0.0;
    std::vector<BranchPoint> branches;
    bool complete = true;
    std::vector<std::string> diagnostics;
    int count() const { return int(branches.size()); }
};

struct AtCausticError : std::runtime_error {
    BranchPoint branch;
    AtCausticError(const BranchPoint& b, const std::string& msg)
        : std::runtime_error(msg), branch(b) {}
};

/// Defect map f_{x,t}(xi) = xi~(-t,x,xi) - grad S_I(x~(-t,x,xi)) and its
/// xi-Jacobian through the variational matrix of the backward flow.
struct FxtResult {
    Vec f;
    Mat df_dxi;       // filled when requested
    double det = 0.0; // det of df_dxi
    Vec z;            // backward footpoint x~(-t,x,xi)
    Vec xi_back;      // xi~(-t,x,xi)
    bool reachable = true;
    double t_event = std::numeric_limits<double>::quiet_NaN();
};

inline FxtResult f_xt(const HamiltonianSymbol& H, const InitialData& init, const Vec& x, double t,
                      const Vec& xi, const Tolerances& tol = {}, bool want_jacobian = true) {
    const int d = int(x.size());
    FlowOptions fo;
    fo.with_action = false;
    fo.with_variational = want_jacobian;
    FlowState st = flow(H, PhasePoint{x, xi}, -t, tol, fo);
    FxtResult r;
    if (!st.ok()) {
        r.reachable = false;
        r.t_event = st.t_event;
        return r;
    }
    r.z = st.point.x;
    r.xi_back = st.point.xi;
    Vec gs = init.grad_S(r.z);
    r.f.resize(d);
    for (int i = 0; i < d; ++i) r.f[std::size_t(i)] = r.xi_back[std::size_t(i)] - gs[std::size_t(i)];
    if (want_jacobian) {
        const Mat d2s = init.d2S(r.z);
        r.df_dxi = Mat(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = st.jac(d + i, d + j);
                for (int k = 0; k < d; ++k) s -= d2s(i, k) * st.jac(k, d + j);
                r.df_dxi(i, j) = s;
            }
        r.det = det(r.df_dxi);
    }
    return r;
}

namespace detail {

struct Seed {
    double a, b;     // bracket (a<b) when bracketed, else a==b==seed point
    bool bracketed;
};

/// 1-d scan refinement on (f, f') samples. A cell is subdivided when f' (the
/// analytic xi-derivative from the variational flow) changes sign across it,
/// when the secant slope contradicts an endpoint slope (kinks of
/// piecewise-smooth data), or when midpoint tests show a hidden dip. This is
/// what keeps close root pairs near folds from slipping through a coarse
/// same-sign cell.
template <class F>
void refine_cell_1d(const F& fev, double a, double fa, double fpa, double b, double fb, double fpb,
                    int depth, double floor, std::vector<Seed>& seeds) {
    const bool sign_change = (fa < 0) != (fb < 0);
    if (sign_change) seeds.push_back({a, b, true});
    if (depth <= 0) {
        if (!sign_change && std::min(std::abs(fa), std::abs(fb)) < floor)
            seeds.push_back({std::abs(fa) < std::abs(fb) ? a : b,
                             std::abs(fa) < std::abs(fb) ? a : b, false});
        return;
    }
    const double s = (fb - fa) / (b - a);
    const bool slope_flip = (fpa < 0) != (fpb < 0);
    const bool secant_kink = (s < 0) != (fpa < 0) || (s < 0) != (fpb < 0);
    bool probe = slope_flip || secant_kink;
    double m = 0.5 * (a + b), fm = 0.0, fpm = 0.0;
    bool have_mid = false;
    if (!probe && !sign_change) {
        // cheap midpoint screen for smooth dips
        const double span = std::min(std::abs(fa), std::abs(fb));
        const double reach = std::max(std::abs(fpa), std::abs(fpb)) * (b - a);
        if (span < reach + floor) {
            if (!fev(m, fm, fpm)) return;
            have_mid = true;
            probe = (fm < 0) != (fa < 0) ||
                    std::abs(fm) < 0.5 * span ||
                    std::abs(fm - 0.5 * (fa + fb)) > 0.25 * (std::abs(fa) + std::abs(fb)) + floor;
        }
    }
    if (sign_change && slope_flip) probe = true;  // possible triple crossing
    if (!probe) return;
    if (!have_mid && !fev(m, fm, fpm)) return;
    refine_cell_1d(fev, a, fa, fpa, m, fm, fpm, depth - 1, floor, seeds);
    refine_cell_1d(fev, m, fm, fpm, b, fb, fpb, depth - 1, floor, seeds);
}

}  // namespace detail

struct BranchSearchOptions {
    int scan_cells = 64;     // coarse cells per dimension
    int refine_depth = 7;    // adaptive subdivision depth on suspicious cells
    int newton_max_iter = 60;
};

/// Enumerate the nullset K(x,t) = { xi in xi_box : f_{x,t}(xi) = 0 } and
/// complete each root into a BranchPoint. Roots are found by a coarse scan
/// (sign changes and |f| minima) followed by damped Newton with the analytic
/// xi-Jacobian, then deduplicated at radius dedupe*(1+|xi|) keeping the root
/// with the smaller residual. Phases are pinned by forward ray integration
/// from the footpoint, which fixes the per-branch constant to the initial data.
inline BranchSet find_branches(const HamiltonianSymbol& H, const InitialData& init, const Vec& x,
                               double t, const Box& xi_box, const Tolerances& tol = {},
                               const BranchSearchOptions& opts = {}) {
    const int d = int(x.size());
    BranchSet out;
    out.x = x;
    out.t = t;

    auto feval = [&](const Vec& xi, bool jac) { return f_xt(H, init, x, t, xi, tol, jac); };

    // ---- collect Newton seeds ----------------------------------------------
    std::vector<Vec> seed_points;
    std::vector<std::pair<Vec, Vec>> seed_brackets;  // d=1 only
    bool boundary_suspicious = false;
    // d=1 scan samples, kept for the parity-repair pass below
    std::vector<double> nodes, fs, fps;
    std::vector<bool> valid;

    if (d == 1) {
        const double lo = xi_box.lo[0], hi = xi_box.hi[0];
        const int M = opts.scan_cells;
        nodes.resize(std::size_t(M) + 1);
        fs.resize(std::size_t(M) + 1);
        fps.resize(std::size_t(M) + 1);
        valid.assign(std::size_t(M) + 1, false);
        for (int i = 0; i <= M; ++i) {
            nodes[std::size_t(i)] = lo + (hi - lo) * i / M;
            FxtResult r = feval(Vec{nodes[std::size_t(i)]}, true);
            if (r.reachable) {
                fs[std::size_t(i)] = r.f[0];
                fps[std::size_t(i)] = r.det;
                valid[std::size_t(i)] = true;
            } else {
                out.diagnostics.push_back("unreachable scan sample at xi=" +
                                          std::to_string(nodes[std::size_t(i)]));
            }
        }
        auto fev1 = [&](double xi, double& fv, double& fpv) {
            FxtResult r = feval(Vec{xi}, true);
            if (!r.reachable) return false;
            fv = r.f[0];
            fpv = r.det;
            return true;
        };
        const double floor = 1e3 * tol.root;
        std::vector<detail::Seed> seeds1;
        for (int i = 0; i < M; ++i) {
            if (!valid[std::size_t(i)] || !valid[std::size_t(i) + 1]) continue;
            detail::refine_cell_1d(fev1, nodes[std::size_t(i)], fs[std::size_t(i)],
                                   fps[std::size_t(i)], nodes[std::size_t(i) + 1],
                                   fs[std::size_t(i) + 1], fps[std::size_t(i) + 1],
                                   opts.refine_depth, floor, seeds1);
        }
        // sampled local minima of |f| (tangential roots produce no sign change)
        for (int i = 1; i < M; ++i) {
            if (!valid[std::size_t(i) - 1] || !valid[std::size_t(i)] || !valid[std::size_t(i) + 1])
                continue;
            const double am = std::abs(fs[std::size_t(i) - 1]), a0 = std::abs(fs[std::size_t(i)]),
                         ap = std::abs(fs[std::size_t(i) + 1]);
            if (a0 <= am && a0 <= ap && (fs[std::size_t(i) - 1] < 0) == (fs[std::size_t(i) + 1] < 0))
                seeds1.push_back({nodes[std::size_t(i)], nodes[std::size_t(i)], false});
        }
        for (const auto& s : seeds1) {
            if (s.bracketed)
                seed_brackets.push_back({Vec{s.a}, Vec{s.b}});
            else
                seed_points.push_back(Vec{s.a});
        }
        // boundary |f| minima below 10x root tolerance suggest roots just
        // outside the search box
        for (int side = 0; side < 2; ++side) {
            const int ib = side == 0 ? 0 : M;
            const int in = side == 0 ? 1 : M - 1;
            if (!valid[std::size_t(ib)] || !valid[std::size_t(in)]) continue;
            if (std::abs(fs[std::size_t(ib)]) < 10.0 * tol.root * (1.0 + std::abs(nodes[std::size_t(ib)])) &&
                std::abs(fs[std::size_t(ib)]) <= std::abs(fs[std::size_t(in)]))
                boundary_suspicious = true;
        }
    } else {
        // multi-d: |f| minima over the tensor grid
        const int M = std::max(8, opts.scan_cells / (d > 2 ? 4 : 1));
        std::vector<int> shape(std::size_t(d), M + 1);
        std::size_t total = 1;
        for (int i = 0; i < d; ++i) total *= std::size_t(M + 1);
        std::vector<double> fn(total, std::numeric_limits<double>::infinity());
        auto node_of = [&](std::size_t idx) {
            Vec p(std::size_t(d), 0.0);
            for (int k = d - 1; k >= 0; --k) {
                const int ik = int(idx % std::size_t(M + 1));
                idx /= std::size_t(M + 1);
                p[std::size_t(k)] = xi_box.lo[std::size_t(k)] +
                                    (xi_box.hi[std::size_t(k)] - xi_box.lo[std::size_t(k)]) * ik / M;
            }
            return p;
        };
        for (std::size_t idx = 0; idx < total; ++idx) {
            FxtResult r = feval(node_of(idx), false);
            if (r.reachable) fn[idx] = norm2(r.f);
        }
        for (std::size_t idx = 0; idx < total; ++idx) {
            if (!std::isfinite(fn[idx])) continue;
            bool is_min = true;
            std::size_t stride = 1;
            for (int k = d - 1; k >= 0 && is_min; --k) {
                const int ik = int(idx / stride % std::size_t(M + 1));
                if (ik > 0 && fn[idx - stride] < fn[idx]) is_min = false;
                if (ik < M && fn[idx + stride] < fn[idx]) is_min = false;
                stride *= std::size_t(M + 1);
            }
            if (is_min) seed_points.push_back(node_of(idx));
        }
    }

    // ---- Newton polish -----------------------------------------------------
    struct Root {
        Vec v;
        double residual;
    };
    std::vector<Root> roots;

    auto newton = [&](Vec xi, double blo, double bhi, bool have_bracket, double flo) -> bool {
        for (int it = 0; it < opts.newton_max_iter; ++it) {
            FxtResult r = feval(xi, true);
            if (!r.reachable) return false;
            const double res = norm2(r.f);
            if (res <= tol.root * (1.0 + norm2(xi))) {
                roots.push_back({xi, res});
                return true;
            }
            Vec step;
            bool newton_ok = true;
            try {
                step = solve(r.df_dxi, r.f);
            } catch (const std::exception&) {
                newton_ok = false;
            }
            if (newton_ok && d == 1 && have_bracket) {
                // keep the iterate inside the bracket; fall back to bisection
                const double cand = xi[0] - step[0];
                if (cand <= blo || cand >= bhi) newton_ok = false;
            }
            if (!newton_ok) {
                if (d == 1 && have_bracket) {
                    const double mid = 0.5 * (blo + bhi);
                    double fm;
                    FxtResult rm = feval(Vec{mid}, false);
                    if (!rm.reachable) return false;
                    fm = rm.f[0];
                    if ((fm < 0) == (flo < 0)) {
                        blo = mid;
                        flo = fm;
                    } else {
                        bhi = mid;
                    }
                    xi[0] = 0.5 * (blo + bhi);
                    continue;
                }
                return false;
            }
            // damping on the residual
            double lambda = 1.0;
            Vec trial(xi.size());
            for (int half = 0; half < 8; ++half) {
                for (std::size_t i = 0; i < xi.size(); ++i) trial[i] = xi[i] - lambda * step[i];
                FxtResult rt = feval(trial, false);
                if (rt.reachable && norm2(rt.f) < res) break;
                lambda *= 0.5;
            }
            for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= lambda * step[i];
            if (d == 1 && have_bracket) {
                // refresh bracket side
                FxtResult rb = feval(xi, false);
                if (rb.reachable) {
                    if ((rb.f[0] < 0) == (flo < 0)) {
                        blo = xi[0];
                        flo = rb.f[0];
                    } else {
                        bhi = xi[0];
                    }
                }
            }
        }
        out.diagnostics.push_back("newton did not converge from a seed; seed discarded");
        return false;
    };

    for (const auto& br : seed_brackets) {
        FxtResult rl = feval(br.first, false);
        if (!rl.reachable) continue;
        Vec mid(std::size_t(d), 0.0);
        for (int i = 0; i < d; ++i) mid[std::size_t(i)] = 0.5 * (br.first[std::size_t(i)] + br.second[std::size_t(i)]);
        newton(mid, br.first[0], br.second[0], true, rl.f[0]);
    }
    for (const auto& sp : seed_points) newton(sp, 0, 0, false, 0);

    // ---- dedupe: keep smaller residual within radius dedupe*(1+|xi|) -------
    std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) {
        return a.residual < b.residual;
    });
    std::vector<Root> kept;
    for (const auto& r : roots) {
        if (!xi_box.contains(r.v, tol.dedupe)) continue;
        bool dup = false;
        for (const auto& k : kept) {
            Vec diff = r.v;
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= k.v[i];
            if (norm2(diff) <= tol.dedupe * (1.0 + norm2(r.v))) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(r);
    }

    // ---- parity repair (d=1) ------------------------------------------------
    // Between consecutive checkpoints (scan nodes and accepted roots) the
    // sign of f just right of one and just left of the next must agree, with
    // sign(f') orienting the crossing at each transversal root. A mismatch
    // means an odd number of crossings slipped through a same-sign cell
    // (twin roots straddling a shallow dip near folds); bracket and recover.
    if (d == 1 && !nodes.empty()) {
        auto f_of = [&](double xi, double& fv) {
            FxtResult r = feval(Vec{xi}, false);
            if (!r.reachable) return false;
            fv = r.f[0];
            return true;
        };
        struct Cp {
            double xi;
            bool is_root;
            double val;  // f value at a node, f' at a root
        };
        for (int pass = 0; pass < 3; ++pass) {
            std::vector<Cp> cps;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                if (valid[i] && std::abs(fs[i]) > 100.0 * tol.root * (1.0 + std::abs(nodes[i])))
                    cps.push_back({nodes[i], false, fs[i]});
            for (const auto& r : kept) {
                FxtResult fr = feval(r.v, true);
                if (fr.reachable) cps.push_back({r.v[0], true, fr.det});
            }
            std::sort(cps.begin(), cps.end(), [](const Cp& a, const Cp& b) { return a.xi < b.xi; });
            bool found_new = false;
            for (std::size_t i = 0; i + 1 < cps.size(); ++i) {
                const Cp &a = cps[i], &b = cps[i + 1];
                if (b.xi - a.xi < 4.0 * tol.dedupe * (1.0 + std::abs(a.xi))) continue;
                // orientation is unreliable across near-tangential roots
                if ((a.is_root && std::abs(a.val) < 1e3 * tol.root) ||
                    (b.is_root && std::abs(b.val) < 1e3 * tol.root))
                    continue;
                const bool right_of_a_neg = a.val < 0;
                const bool left_of_b_neg = b.is_root ? !(b.val < 0) : b.val < 0;
                if (right_of_a_neg == left_of_b_neg) continue;
                // establish a genuine numeric bracket just inside the gap
                double pa = a.is_root ? a.xi + 1e-7 * (1.0 + std::abs(a.xi)) : a.xi;
                double pb = b.is_root ? b.xi - 1e-7 * (1.0 + std::abs(b.xi)) : b.xi;
                double fa, fb;
                if (pa >= pb || !f_of(pa, fa) || !f_of(pb, fb)) continue;
                if ((fa < 0) == (fb < 0)) continue;
                for (int it = 0; it < 80 && pb - pa > 1e-14 * (1.0 + std::abs(pa)); ++it) {
                    const double mid = 0.5 * (pa + pb);
                    double fm;
                    if (!f_of(mid, fm)) break;
                    if ((fm < 0) == (fa < 0)) {
                        pa = mid;
                        fa = fm;
                    } else {
                        pb = mid;
                        fb = fm;
                    }
                }
                const double cand = 0.5 * (pa + pb);
                bool dup = false;
                for (const auto& k : kept)
                    if (std::abs(k.v[0] - cand) <= tol.dedupe * (1.0 + std::abs(cand))) dup = true;
                if (dup) continue;
                FxtResult rc = feval(Vec{cand}, false);
                if (rc.reachable && norm2(rc.f) <= 1e3 * tol.root * (1.0 + std::abs(cand))) {
                    kept.push_back({Vec{cand}, norm2(rc.f)});
                    found_new = true;
                }
            }
            if (!found_new) break;
        }
    }

    // suppress the boundary-incompleteness flag when a kept root explains it
    if (boundary_suspicious && d == 1) {
        const double cell = (xi_box.hi[0] - xi_box.lo[0]) / opts.scan_cells;
        for (const auto& k : kept)
            if (k.v[0] < xi_box.lo[0] + 2 * cell || k.v[0] > xi_box.hi[0] - 2 * cell)
                boundary_suspicious = false;
    }
    out.complete = !boundary_suspicious;

    // ---- complete roots into branches --------------------------------------
    for (const auto& r : kept) {
        FxtResult fr = f_xt(H, init, x, t, r.v, tol, true);
        if (!fr.reachable) continue;
        BranchPoint bp;
        bp.v = r.v;
        bp.z = fr.z;
        bp.df = fr.det;
        bp.f_residual = norm2(fr.f);
        const double caustic_threshold = tol.caustic;
        if (std::abs(fr.det) < caustic_threshold) {
            bp.at_caustic = true;
            bp.n = std::numeric_limits<double>::quiet_NaN();
        } else {
            bp.n = init.n(fr.z) / std::abs(fr.det);
        }
        RayState rs = ray(H, init, fr.z, t, tol);
        bp.S = rs.S;
        if (rs.ok()) {
            Vec dx = rs.x;
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] -= x[i];
            if (norm2(dx) > 1e-5 * (1.0 + norm2(x)))
                out.diagnostics.push_back("forward ray from footpoint missed x by " +
                                          std::to_string(norm2(dx)));
        }
        out.branches.push_back(std::move(bp));
    }
    std::sort(out.branches.begin(), out.branches.end(),
              [](const BranchPoint& a, const BranchPoint& b) { return a.v < b.v; });
    return out;
}

struct DensityResult {
    double value = 0.0;
    BranchSet branches;
};

/// Multivalued energy density n(x,t) = sum_i n_I(z_i)/|Df_i| away from
/// caustics. Throws AtCausticError (carrying the offending branch) when any
/// branch sits below the caustic threshold.
inline DensityResult density(const HamiltonianSymbol& H, const InitialData& init, const Vec& x,
                             double t, const Box& xi_box, const Tolerances& tol = {},
                             const BranchSearchOptions& opts = {}) {
    DensityResult res;
    res.branches = find_branches(H, init, x, t, xi_box, tol, opts);
    for (const auto& b : res.branches.branches) {
        if (b.at_caustic)
            throw AtCausticError(b, "density: branch at caustic (|Df| below threshold), "
                                    "use concentration analysis instead");
        res.value += b.n;
    }
    return res;
}

struct CausticPoint {
    Vec x;
    double t = 0.0;
    Vec v;      // velocity of the vanishing branch
    Vec z;      // its footpoint
    double df = 0.0;
    int hits = 1;  // number of sweep detections merged into this point
};

struct CausticScanOptions {
    int nz = 129;
    int nt = 65;
    double refine_tol = 1e-8;
    double cluster_radius = 1e-4;
    double z_pad_factor = 0.25;  // widen the footpoint sweep beyond the region box
};

/// Caustic set sweep. The caustic condition Df_{x,t}(v) = 0 is equivalent,
/// along the ray through footpoint z, to the vanishing of the signed ray-map
/// determinant det(d x^(t,z)/dz) (the two agree where branches exist), so the
/// sweep walks a (z,t) grid of that determinant and bisects its sign changes
/// in both directions. Sweeping in z also localizes branch-merge folds of
/// piecewise-smooth data, where the determinant flips through a jump.
/// Detections are clustered and restricted to the query region.
inline std::vector<CausticPoint> caustic_scan(const HamiltonianSymbol& H, const InitialData& init,
                                              const Region& region, const Tolerances& tol = {},
                                              const CausticScanOptions& opts = {}) {
    const int d = region.x.dim();
    if (d != 1)
        throw std::invalid_argument("caustic_scan: implemented for d=1 (all shipped scenarios)");

    const double pad = opts.z_pad_factor * (region.x.hi[0] - region.x.lo[0]);
    const double zlo = region.x.lo[0] - pad, zhi = region.x.hi[0] + pad;
    const double t0 = region.t0, t1 = region.t1;
    if (!(t1 > t0)) throw std::invalid_argument("caustic_scan: empty time span");

    struct Sample {
        double detm = std::numeric_limits<double>::quiet_NaN();
        double xhat = 0.0;
        bool ok = false;
    };
    const int nz = opts.nz, nt = opts.nt;
    std::vector<double> zs(std::size_t(nz), 0.0), ts(std::size_t(nt), 0.0);
    for (int i = 0; i < nz; ++i) zs[std::size_t(i)] = zlo + (zhi - zlo) * i / (nz - 1);
    for (int k = 0; k < nt; ++k) ts[std::size_t(k)] = t0 + (t1 - t0) * k / (nt - 1);

    auto eval = [&](double z, double t) {
        Sample s;
        RayJacobian rj = ray_with_jacobian(H, init, Vec{z}, t, tol);
        if (!rj.state.ok()) return s;
        s.ok = true;
        s.detm = rj.det_signed;
        s.xhat = rj.state.x[0];
        return s;
    };

    std::vector<Sample> table(std::size_t(nz) * std::size_t(nt));
    for (int i = 0; i < nz; ++i)
        for (int k = 0; k < nt; ++k)
            table[std::size_t(i) * std::size_t(nt) + std::size_t(k)] = eval(zs[std::size_t(i)], ts[std::size_t(k)]);
    auto at = [&](int i, int k) -> const Sample& {
        return table[std::size_t(i) * std::size_t(nt) + std::size_t(k)];
    };

    std::vector<CausticPoint> raw;
    auto emit = [&](double z, double t) {
        RayJacobian rj = ray_with_jacobian(H, init, Vec{z}, t, tol);
        if (!rj.state.ok()) return;
        CausticPoint cp;
        cp.x = rj.state.x;
        cp.t = t;
        cp.v = rj.state.xi;
        cp.z = Vec{z};
        cp.df = rj.det_signed;
        raw.push_back(std::move(cp));
    };

    // sign changes along t at fixed z
    for (int i = 0; i < nz; ++i) {
        for (int k = 0; k + 1 < nt; ++k) {
            const Sample &a = at(i, k), &b = at(i, k + 1);
            if (!a.ok || !b.ok) continue;
            if ((a.detm < 0) == (b.detm < 0)) continue;
            double lo = ts[std::size_t(k)], hi = ts[std::size_t(k) + 1];
            double flo = a.detm;
            while (hi - lo > opts.refine_tol) {
                const double mid = 0.5 * (lo + hi);
                Sample sm = eval(zs[std::size_t(i)], mid);
                if (!sm.ok) break;
                if ((sm.detm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = sm.detm;
                } else {
                    hi = mid;
                }
            }
            emit(zs[std::size_t(i)], 0.5 * (lo + hi));
        }
    }
    // sign changes along z at fixed t (catches folds crossed transversally in z,
    // including determinant jumps of piecewise-smooth initial phases)
    for (int k = 0; k < nt; ++k) {
        for (int i = 0; i + 1 < nz; ++i) {
            const Sample &a = at(i, k), &b = at(i + 1, k);
            if (!a.ok || !b.ok) continue;
            if ((a.detm < 0) == (b.detm < 0)) continue;
            double lo = zs[std::size_t(i)], hi = zs[std::size_t(i) + 1];
            double flo = a.detm;
            while (hi - lo > opts.refine_tol) {
                const double mid = 0.5 * (lo + hi);
                Sample sm = eval(mid, ts[std::size_t(k)]);
                if (!sm.ok) break;
                if ((sm.detm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = sm.detm;
                } else {
                    hi = mid;
                }
            }
            emit(0.5 * (lo + hi), ts[std::size_t(k)]);
        }
    }

    // cluster nearby detections (perfect foci are hit once per sweep line)
    std::vector<CausticPoint> clustered;
    for (const auto& p : raw) {
        bool merged = false;
        for (auto& c : clustered) {
            if (std::abs(c.x[0] - p.x[0]) <= opts.cluster_radius &&
                std::abs(c.t - p.t) <= opts.cluster_radius) {
                const double w = double(c.hits);
                c.x[0] = (c.x[0] * w + p.x[0]) / (w + 1);
                c.t = (c.t * w + p.t) / (w + 1);
                if (std::abs(p.df) < std::abs(c.df)) {
                    c.v = p.v;
                    c.z = p.z;
                    c.df = p.df;
                }
                c.hits += 1;
                merged = true;
                break;
            }
        }
        if (!merged) clustered.push_back(p);
    }

    std::vector<CausticPoint> out;
    for (auto& c : clustered)
        if (region.x.contains(c.x, 1e-9) && c.t >= t0 - 1e-9 && c.t <= t1 + 1e-9)
            out.push_back(std::move(c));
    std::sort(out.begin(), out.end(), [](const CausticPoint& a, const CausticPoint& b) {
        return a.t != b.t ? a.t < b.t : a.x[0] < b.x[0];
    });
    return out;
}

struct ConcentrationReport {
    Vec y;
    double t = 0.0;
    double mu = 0.0;
    bool hot = false;
    std::vector<std::pair<double, double>> intervals;  // preimage intervals carrying mass
    std::vector<double> isolated_points;               // measure-zero preimage points
    std::string note;
};

struct ConcentrationOptions {
    int nodes = 4097;
    double tol_hi = 1e-4;   // coarse |g| level used to bound candidate intervals
    double tol_lo = 1e-8;   // fine |g| level; a genuine interval keeps its width here
    double shrink_cut = 0.5;
    double quad_tol = 1e-12;
};

/// Concentrated mass mu = integral of n_I over the preimage x^{-1}(y,t),
/// exact interval detection in d=1. The preimage of a hot focus is a set of
/// positive measure: candidate intervals where |x^(t,z)-y| stays tiny keep
/// their width as the detection level drops; tangential isolated zeros
/// collapse and contribute nothing.
inline ConcentrationReport concentration(const HamiltonianSymbol& H, const InitialData& init,
                                         const Vec& y, double t, const Box& x0_box,
                                         const Tolerances& tol = {},
                                         const ConcentrationOptions& opts = {}) {
    if (int(y.size()) != 1 || x0_box.dim() != 1)
        throw std::invalid_argument("concentration: exact preimage measurement requires d=1");

    ConcentrationReport rep;
    rep.y = y;
    rep.t = t;

    const double lo = x0_box.lo[0], hi = x0_box.hi[0];
    const int n = opts.nodes;
    std::vector<double> zs(std::size_t(n), 0.0), gs(std::size_t(n), 0.0);
    for (int i = 0; i < n; ++i) {
        zs[std::size_t(i)] = lo + (hi - lo) * i / (n - 1);
        RayState rs = ray(H, init, Vec{zs[std::size_t(i)]}, t, tol);
        if (!rs.ok())
            throw std::runtime_error("concentration: flow blow-up inside x0 box at z=" +
                                     std::to_string(zs[std::size_t(i)]));
        gs[std::size_t(i)] = rs.x[0] - y[0];
    }
    auto g = [&](double z) {
        RayState rs = ray(H, init, Vec{z}, t, tol);
        if (!rs.ok()) throw std::runtime_error("concentration: flow blow-up during refinement");
        return rs.x[0] - y[0];
    };
    // refine the z where |g| crosses `level`, between inside (|g|<level) and outside nodes
    auto cross = [&](double z_in, double z_out, double level) {
        for (int it = 0; it < 80 && std::abs(z_out - z_in) > 1e-13 * (1.0 + std::abs(z_in)); ++it) {
            const double mid = 0.5 * (z_in + z_out);
            if (std::abs(g(mid)) < level)
                z_in = mid;
            else
                z_out = mid;
        }
        return 0.5 * (z_in + z_out);
    };

    int i = 0;
    while (i < n) {
        if (std::abs(gs[std::size_t(i)]) >= opts.tol_hi) {
            // isolated transversal zero between nodes?
            if (i + 1 < n && (gs[std::size_t(i)] < 0) != (gs[std::size_t(i) + 1] < 0) &&
                std::abs(gs[std::size_t(i) + 1]) >= opts.tol_hi) {
                double a = zs[std::size_t(i)], b = zs[std::size_t(i) + 1];
                double fa = gs[std::size_t(i)];
                for (int it = 0; it < 80 && b - a > 1e-12 * (1.0 + std::abs(a)); ++it) {
                    const double mid = 0.5 * (a + b);
                    const double fm = g(mid);
                    if ((fm < 0) == (fa < 0)) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                rep.isolated_points.push_back(0.5 * (a + b));
            }
            ++i;
            continue;
        }
        // cluster of nodes with |g| < tol_hi
        int j = i;
        while (j + 1 < n && std::abs(gs[std::size_t(j) + 1]) < opts.tol_hi) ++j;
        double a_hi = (i == 0) ? lo : cross(zs[std::size_t(i)], zs[std::size_t(i) - 1], opts.tol_hi);
        double b_hi = (j == n - 1) ? hi : cross(zs[std::size_t(j)], zs[std::size_t(j) + 1], opts.tol_hi);
        // nodes inside the cluster that also pass the fine level
        int ilo = -1, jhi = -1;
        for (int k = i; k <= j; ++k)
            if (std::abs(gs[std::size_t(k)]) < opts.tol_lo) {
                if (ilo < 0) ilo = k;
                jhi = k;
            }
        double width_lo = 0.0, a_lo = 0.0, b_lo = 0.0;
        if (ilo >= 0) {
            a_lo = (ilo == 0) ? lo : cross(zs[std::size_t(ilo)], zs[std::size_t(ilo) - 1], opts.tol_lo);
            b_lo = (jhi == n - 1) ? hi : cross(zs[std::size_t(jhi)], zs[std::size_t(jhi) + 1], opts.tol_lo);
            width_lo = b_lo - a_lo;
        }
        const double width_hi = b_hi - a_hi;
        if (width_lo > 0.0 && width_hi > 0.0 && width_lo / width_hi >= opts.shrink_cut) {
            rep.intervals.push_back({a_lo, b_lo});
            rep.mu += integrate([&](double z) { return init.n(Vec{z}); }, a_lo, b_lo, opts.quad_tol);
        } else {
            // shrinking candidate: tangential isolated zero
            int kmin = i;
            for (int k = i; k <= j; ++k)
                if (std::abs(gs[std::size_t(k)]) < std::abs(gs[std::size_t(kmin)])) kmin = k;
            rep.isolated_points.push_back(zs[std::size_t(kmin)]);
        }
        i = j + 1;
    }

    rep.hot = rep.mu > tol.mass;
    return rep;
}

struct WkbValue {
    std::complex<double> value;
    bool maslov_shifts_omitted = true;
    int branch_count = 0;
};

/// Multivalued WKB superposition sum_i sqrt(n_i) exp(i S_i / eps). The branch
/// phases are pinned to the initial data by ray transport; the O(1) constant
/// phase shifts a caustic crossing would add are not included, and the result
/// is flagged accordingly.
inline WkbValue wkb_superposition(const HamiltonianSymbol& H, const InitialData& init, const Vec& x,
                                  double t, double eps, const Box& xi_box,
                                  const Tolerances& tol = {}, const BranchSearchOptions& opts = {}) {
    if (!(eps > 0)) throw std::invalid_argument("wkb_superposition: eps must be positive");
    BranchSet set = find_branches(H, init, x, t, xi_box, tol, opts);
    WkbValue out;
    out.branch_count = set.count();
    for (const auto& b : set.branches) {
        if (b.at_caustic)
            throw AtCausticError(b, "wkb_superposition: branch at caustic, amplitude undefined");
        out.value += std::sqrt(b.n) * std::exp(std::complex<double>(0.0, b.S / eps));
    }
    return out;
}

}  // namespace caustica

#endif
