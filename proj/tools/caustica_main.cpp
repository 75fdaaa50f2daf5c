// caustica: multivalued geometrical-optics solver driven by scenario files.
//
// Subcommands: rays, branches, density, caustics, focus, fluid, wigner,
// compare, validate. Exit codes: 0 success, 2 validation/usage failure,
// 3 numerical failure (blow-up where not expected).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "caustica/caustica.hpp"
#include "caustica/io_format.hpp"
#include "caustica/parallel.hpp"
#include "caustica/scenario_io.hpp"

namespace {

using namespace caustica;
using nlohmann::ordered_json;

struct GlobalArgs {
    std::string scenario_path;
    std::string preset;
    std::string out;
    std::string dump_scenario;
    int threads = 4;
    double tol_ode = 0.0;   // 0 = keep scenario value
    double tol_root = 0.0;
};

Scenario resolve_scenario(const GlobalArgs& g) {
    if (g.scenario_path.empty() == g.preset.empty())
        throw CLI::ValidationError("exactly one of --scenario or --preset is required");
    Scenario sc = g.preset.empty() ? load_scenario(g.scenario_path) : preset_scenario(g.preset);
    if (g.tol_ode > 0) {
        sc.tol.ode_rel = g.tol_ode;
        sc.tol.ode_abs = 1e-2 * g.tol_ode;
    }
    if (g.tol_root > 0) sc.tol.root = g.tol_root;
    sc.tol.validate();
    if (!g.dump_scenario.empty()) {
        std::ofstream f(g.dump_scenario);
        f << scenario_to_json(sc).dump(2) << "\n";
    }
    return sc;
}

struct Output {
    std::unique_ptr<std::ofstream> file;
    std::ostream& stream() { return file ? *file : std::cout; }
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file = std::make_unique<std::ofstream>(path);
            if (!*file) throw std::runtime_error("cannot open output file: " + path);
        }
    }
};

std::string status_token(FlowStatus st, double t_event) {
    if (st == FlowStatus::ok) return "ok";
    return "blown_up@" + g17(t_event);
}

double parse_eps(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return std::stod(s);
    return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

ordered_json branch_set_json(const BranchSet& bs) {
    ordered_json j;
    j["x"] = bs.x;
    j["t"] = bs.t;
    j["complete"] = bs.complete;
    j["count"] = bs.count();
    j["branches"] = ordered_json::array();
    for (const auto& b : bs.branches) {
        ordered_json bj;
        bj["v"] = b.v;
        bj["S"] = b.S;
        bj["n"] = b.at_caustic ? ordered_json() : ordered_json(b.n);
        bj["Df"] = b.df;
        bj["z"] = b.z;
        bj["at_caustic"] = b.at_caustic;
        j["branches"].push_back(bj);
    }
    if (!bs.diagnostics.empty()) j["diagnostics"] = bs.diagnostics;
    return j;
}

int cmd_validate(const GlobalArgs& g) {
    Scenario sc = resolve_scenario(g);
    ValidationReport rep = validate_scenario(sc);
    ordered_json j;
    j["scenario"] = sc.name.empty() ? "(file)" : sc.name;
    j["all_passed"] = rep.all_passed;
    j["checks"] = ordered_json::array();
    for (const auto& c : rep.checks)
        j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    Output out(g.out);
    out.stream() << j.dump(2) << "\n";
    return rep.all_passed ? 0 : 2;
}

int cmd_rays(const GlobalArgs& g, double t0, double t1, int nt, int nx) {
    Scenario sc = resolve_scenario(g);
    if (sc.hamiltonian.dim != 1) throw CLI::ValidationError("rays CSV sweep requires d=1");
    if (t1 == 0.0 && sc.region.t1 != 0.0) t1 = sc.region.t1;
    if (!(nt >= 1) || !(nx >= 2)) throw CLI::ValidationError("rays: need --nt >= 1, --nx >= 2");

    struct Row {
        double x0, t, xh, xih, S, J;
        std::string status;
    };
    std::vector<Row> rows(std::size_t(nx) * std::size_t(nt));
    parallel_for(
        std::size_t(nx),
        [&](std::size_t ix) {
            const double x0 = sc.region.x.lo[0] +
                              (sc.region.x.hi[0] - sc.region.x.lo[0]) * double(ix) / (nx - 1);
            for (int k = 0; k < nt; ++k) {
                const double t = nt == 1 ? t1 : t0 + (t1 - t0) * k / (nt - 1);
                RayJacobian rj = ray_with_jacobian(sc.hamiltonian, sc.initial, Vec{x0}, t, sc.tol);
                Row r;
                r.x0 = x0;
                r.t = t;
                r.xh = rj.state.x[0];
                r.xih = rj.state.xi[0];
                r.S = rj.state.S;
                r.J = rj.state.ok() ? rj.J() : std::numeric_limits<double>::quiet_NaN();
                r.status = status_token(rj.state.status, rj.state.t_event);
                rows[ix * std::size_t(nt) + std::size_t(k)] = r;
            }
        },
        g.threads);

    Output out(g.out);
    out.stream() << "x0,t,x_hat,xi_hat,S,J,status\n";
    for (const auto& r : rows)
        out.stream() << g17(r.x0) << "," << g17(r.t) << "," << g17(r.xh) << "," << g17(r.xih)
                     << "," << g17(r.S) << "," << g17(r.J) << "," << r.status << "\n";
    return 0;
}

int cmd_branches(const GlobalArgs& g, std::vector<double> x, double t) {
    Scenario sc = resolve_scenario(g);
    if (int(x.size()) != sc.hamiltonian.dim)
        throw CLI::ValidationError("--x must supply one value per dimension");
    BranchSet bs = find_branches(sc.hamiltonian, sc.initial, x, t, sc.xi_box, sc.tol);
    Output out(g.out);
    out.stream() << branch_set_json(bs).dump(2) << "\n";
    return 0;
}

int cmd_density(const GlobalArgs& g, std::vector<double> times, double t0, double t1, int nt,
                int nx) {
    Scenario sc = resolve_scenario(g);
    if (sc.hamiltonian.dim != 1) throw CLI::ValidationError("density CSV sweep requires d=1");
    if (times.empty()) {
        if (nt >= 2)
            for (int k = 0; k < nt; ++k) times.push_back(t0 + (t1 - t0) * k / (nt - 1));
        else
            times = sc.region.times;
    }
    if (times.empty()) throw CLI::ValidationError("density: no times given (--t or --t0/--t1/--nt)");

    struct Row {
        double x, t, n;
        int count;
    };
    std::vector<Row> rows(std::size_t(nx) * times.size());
    parallel_for(
        std::size_t(nx),
        [&](std::size_t ix) {
            const double x = sc.region.x.lo[0] +
                             (sc.region.x.hi[0] - sc.region.x.lo[0]) * double(ix) / (nx - 1);
            for (std::size_t k = 0; k < times.size(); ++k) {
                Row r;
                r.x = x;
                r.t = times[k];
                try {
                    DensityResult dr =
                        density(sc.hamiltonian, sc.initial, Vec{x}, times[k], sc.xi_box, sc.tol);
                    r.n = dr.value;
                    r.count = dr.branches.count();
                } catch (const AtCausticError&) {
                    r.n = std::numeric_limits<double>::quiet_NaN();
                    r.count = -1;
                }
                rows[ix * times.size() + k] = r;
            }
        },
        g.threads);

    Output out(g.out);
    out.stream() << "x,t,n,N\n";
    for (const auto& r : rows)
        out.stream() << g17(r.x) << "," << g17(r.t) << "," << g17(r.n) << "," << r.count << "\n";
    return 0;
}

int cmd_caustics(const GlobalArgs& g, int nz, int nt) {
    Scenario sc = resolve_scenario(g);
    CausticScanOptions opts;
    opts.nz = nz;
    opts.nt = nt;
    std::vector<CausticPoint> pts =
        caustic_scan(sc.hamiltonian, sc.initial, sc.region, sc.tol, opts);
    Output out(g.out);
    out.stream() << "x,t,v,z,df,hits\n";
    for (const auto& p : pts)
        out.stream() << g17(p.x[0]) << "," << g17(p.t) << "," << g17(p.v[0]) << "," << g17(p.z[0])
                     << "," << g17(p.df) << "," << p.hits << "\n";
    return 0;
}

int cmd_focus(const GlobalArgs& g, double y, double t, std::vector<double> x0_box) {
    Scenario sc = resolve_scenario(g);
    Box box = sc.region.x;
    if (!x0_box.empty()) {
        if (x0_box.size() != 2) throw CLI::ValidationError("--x0-box needs two values lo hi");
        box.lo = {x0_box[0]};
        box.hi = {x0_box[1]};
    }
    ConcentrationReport rep = concentration(sc.hamiltonian, sc.initial, Vec{y}, t, box, sc.tol);
    ordered_json j;
    j["y"] = rep.y;
    j["t"] = rep.t;
    j["mu"] = rep.mu;
    j["classification"] = rep.hot ? "hot" : "cool";
    j["preimage_intervals"] = ordered_json::array();
    for (const auto& ab : rep.intervals) j["preimage_intervals"].push_back({ab.first, ab.second});
    j["isolated_preimage_points"] = rep.isolated_points;
    if (!rep.note.empty()) j["note"] = rep.note;
    Output out(g.out);
    out.stream() << j.dump(2) << "\n";
    return 0;
}

int cmd_fluid(const GlobalArgs& g, double t0, double t1, int nt, int nx,
              const std::string& sigma_expr) {
    Scenario sc = resolve_scenario(g);
    if (sc.hamiltonian.dim != 1) throw CLI::ValidationError("fluid requires d=1");
    if (!(nt >= 3 && nx >= 3)) throw CLI::ValidationError("fluid: need --nx,--nt >= 3");

    // (n, v) from the branch reconstruction; multivalued or at-caustic nodes
    // poison their stencil neighborhoods with NaN.
    FluidField fld;
    fld.xs.resize(std::size_t(nx));
    fld.ts.resize(std::size_t(nt));
    for (int i = 0; i < nx; ++i)
        fld.xs[std::size_t(i)] =
            sc.region.x.lo[0] + (sc.region.x.hi[0] - sc.region.x.lo[0]) * i / (nx - 1);
    for (int k = 0; k < nt; ++k) fld.ts[std::size_t(k)] = t0 + (t1 - t0) * k / (nt - 1);
    fld.n.assign(std::size_t(nx) * std::size_t(nt), 0.0);
    fld.v.assign(std::size_t(nx) * std::size_t(nt), 0.0);
    parallel_for(
        std::size_t(nx),
        [&](std::size_t ix) {
            for (int k = 0; k < nt; ++k) {
                BranchSet bs = find_branches(sc.hamiltonian, sc.initial,
                                             Vec{fld.xs[ix]}, fld.ts[std::size_t(k)], sc.xi_box,
                                             sc.tol);
                if (bs.count() == 1 && !bs.branches[0].at_caustic) {
                    fld.N(int(ix), k) = bs.branches[0].n;
                    fld.V(int(ix), k) = bs.branches[0].v[0];
                } else {
                    fld.N(int(ix), k) = std::numeric_limits<double>::quiet_NaN();
                    fld.V(int(ix), k) = std::numeric_limits<double>::quiet_NaN();
                }
            }
        },
        g.threads);

    FluidResiduals er = euler_residual(sc.hamiltonian, fld);
    ConservativeFields cf = to_conservative(sc.hamiltonian, fld);
    std::optional<FluidResiduals> sr;
    if (!sigma_expr.empty()) {
        Expr se = Expr::parse(sigma_expr);  // sigma as a function of x (slot 0) = v
        WeightFunction w;
        w.sigma = [se](double v) { return se(Vec{v}); };
        w.dsigma = [se](double v) {
            std::vector<Jet> vars(16, Jet(0.0, 1));
            vars[0] = Jet::variable(v, 0, 1);
            return se.eval(vars).d(0);
        };
        sr = generalized_moment_residual(sc.hamiltonian, fld, w);
    }

    Output out(g.out);
    out.stream() << "x,t,n,v,res_continuity,res_momentum"
                 << (sr ? ",res_sigma" : "") << ",u,force,res_cons_continuity,res_cons_momentum\n";
    const double qnan = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < nt; ++k)
        for (int i = 0; i < nx; ++i) {
            const bool interior = i > 0 && i + 1 < nx && k > 0 && k + 1 < nt;
            const std::size_t ridx =
                interior ? std::size_t(k - 1) * std::size_t(nx - 2) + std::size_t(i - 1) : 0;
            out.stream() << g17(fld.xs[std::size_t(i)]) << "," << g17(fld.ts[std::size_t(k)]) << ","
                         << g17(fld.N(i, k)) << "," << g17(fld.V(i, k)) << ","
                         << g17(interior ? er.continuity[ridx] : qnan) << ","
                         << g17(interior ? er.momentum[ridx] : qnan);
            if (sr) out.stream() << "," << g17(interior ? sr->continuity[ridx] : qnan);
            out.stream() << "," << g17(cf.u[std::size_t(k) * std::size_t(nx) + std::size_t(i)])
                         << "," << g17(cf.f[std::size_t(k) * std::size_t(nx) + std::size_t(i)])
                         << "," << g17(interior ? cf.residuals.continuity[ridx] : qnan) << ","
                         << g17(interior ? cf.residuals.momentum[ridx] : qnan) << "\n";
        }
    return 0;
}

int cmd_wigner(const GlobalArgs& g, const std::string& eps_str, double t, int n, int stride,
               std::vector<double> domain) {
    Scenario sc = resolve_scenario(g);
    const double eps = parse_eps(eps_str);
    double lo = sc.region.x.lo[0], hi = sc.region.x.hi[0];
    if (!domain.empty()) {
        if (domain.size() != 2) throw CLI::ValidationError("--domain needs two values lo hi");
        lo = domain[0];
        hi = domain[1];
    }
    WaveGrid grid = WaveGrid::over(lo, hi, n);
    WaveField f0 = wkb_initial(sc.initial, eps, grid);
    WaveField ft = evolve(f0, sc.hamiltonian, t);
    const double bmass = boundary_mass_fraction(ft);
    if (bmass > 1e-6) {
        std::cerr << "caustica wigner: boundary mass fraction " << bmass
                  << " exceeds 1e-6; enlarge --domain or reduce --t\n";
        return 3;
    }
    PhaseSpaceGrid ps = wigner_transform(ft, stride);
    Output out(g.out);
    out.stream() << "x,xi,w\n";
    for (int ix = 0; ix < ps.nx(); ++ix)
        for (int ik = 0; ik < ps.nxi(); ++ik)
            out.stream() << g17(ps.xs[std::size_t(ix)]) << "," << g17(ps.xis[std::size_t(ik)])
                         << "," << g17(ps.at(ix, ik)) << "\n";
    return 0;
}

int cmd_compare(const GlobalArgs& g, const std::string& eps_list_str, double t, double l1_max,
                double l2_lo, double l2_hi) {
    Scenario sc = resolve_scenario(g);
    std::vector<double> eps_list;
    std::stringstream ss(eps_list_str);
    std::string item;
    while (std::getline(ss, item, ',')) eps_list.push_back(parse_eps(item));
    if (eps_list.size() < 2) throw CLI::ValidationError("--eps-list needs at least two values");

    CompareReport rep = compare(sc, eps_list, t);

    ordered_json j;
    j["t"] = rep.t;
    j["restricted"] = rep.restricted;
    j["maslov_shifts_omitted_applies"] = rep.maslov_flag_applies;
    if (!rep.note.empty()) j["note"] = rep.note;
    j["entries"] = ordered_json::array();
    for (const auto& e : rep.entries)
        j["entries"].push_back({{"eps", e.eps},
                                {"grid_n", e.grid_n},
                                {"l1_density", e.l1_density},
                                {"l2_wkb", e.l2_wkb},
                                {"boundary_mass", e.boundary_mass}});
    j["l1_ratios"] = rep.l1_ratios;
    j["l2_ratios"] = rep.l2_ratios;
    bool pass = true;
    for (double r : rep.l1_ratios) pass = pass && r <= l1_max;
    for (double r : rep.l2_ratios) pass = pass && r >= l2_lo && r <= l2_hi;
    j["thresholds"] = {{"l1_ratio_max", l1_max}, {"l2_ratio_lo", l2_lo}, {"l2_ratio_hi", l2_hi}};
    j["pass"] = pass;
    Output out(g.out);
    out.stream() << j.dump(2) << "\n";
    return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"caustica: multivalued geometrical optics via rays and Wigner measures"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--scenario", g.scenario_path, "scenario JSON file");
    app.add_option("--preset", g.preset, "built-in scenario preset");
    app.add_option("--out", g.out, "output file (default stdout)");
    app.add_option("--threads", g.threads, "worker threads for grid sweeps");
    app.add_option("--tol-ode", g.tol_ode, "override ODE relative tolerance");
    app.add_option("--tol-root", g.tol_root, "override root tolerance");
    app.add_option("--dump-scenario", g.dump_scenario, "write the resolved scenario JSON here");

    auto* c_validate = app.add_subcommand("validate", "run scenario validation checks");

    auto* c_rays = app.add_subcommand("rays", "ray sweep CSV");
    double r_t0 = 0.0, r_t1 = 0.0;
    int r_nt = 17, r_nx = 33;
    c_rays->add_option("--t0", r_t0);
    c_rays->add_option("--t1", r_t1);
    c_rays->add_option("--nt", r_nt);
    c_rays->add_option("--nx", r_nx);

    auto* c_branches = app.add_subcommand("branches", "branch set at a point (JSON)");
    std::vector<double> b_x;
    double b_t = 0.0;
    c_branches->add_option("--x", b_x)->required();
    c_branches->add_option("--t", b_t)->required();

    auto* c_density = app.add_subcommand("density", "multivalued density CSV");
    std::vector<double> d_times;
    double d_t0 = 0.0, d_t1 = 0.0;
    int d_nt = 0, d_nx = 256;
    c_density->add_option("--t", d_times);
    c_density->add_option("--t0", d_t0);
    c_density->add_option("--t1", d_t1);
    c_density->add_option("--nt", d_nt);
    c_density->add_option("--nx", d_nx);

    auto* c_caustics = app.add_subcommand("caustics", "caustic point scan CSV");
    int c_nz = 129, c_nt = 65;
    c_caustics->add_option("--nz", c_nz);
    c_caustics->add_option("--nt", c_nt);

    auto* c_focus = app.add_subcommand("focus", "concentration report at (y,t) (JSON)");
    double f_y = 0.0, f_t = 0.0;
    std::vector<double> f_box;
    c_focus->add_option("--y", f_y)->required();
    c_focus->add_option("--t", f_t)->required();
    c_focus->add_option("--x0-box", f_box);

    auto* c_fluid = app.add_subcommand("fluid", "fluid-form residual CSV");
    double fl_t0 = 0.0, fl_t1 = 0.0;
    int fl_nt = 33, fl_nx = 65;
    std::string fl_sigma;
    c_fluid->add_option("--t0", fl_t0);
    c_fluid->add_option("--t1", fl_t1)->required();
    c_fluid->add_option("--nt", fl_nt);
    c_fluid->add_option("--nx", fl_nx);
    c_fluid->add_option("--sigma", fl_sigma, "moment weight sigma(v), expression in x");

    auto* c_wigner = app.add_subcommand("wigner", "finite-eps Wigner transform CSV");
    std::string w_eps = "1/64";
    double w_t = 0.0;
    int w_n = 4096, w_stride = 0;
    std::vector<double> w_domain;
    c_wigner->add_option("--eps", w_eps)->required();
    c_wigner->add_option("--t", w_t);
    c_wigner->add_option("--n", w_n);
    c_wigner->add_option("--stride", w_stride);
    c_wigner->add_option("--domain", w_domain);

    auto* c_compare = app.add_subcommand("compare", "eps-ladder comparison report (JSON)");
    std::string cp_eps;
    double cp_t = 0.0, cp_l1 = 0.75, cp_l2lo = 0.3, cp_l2hi = 0.7;
    c_compare->add_option("--eps-list", cp_eps)->required();
    c_compare->add_option("--t", cp_t)->required();
    c_compare->add_option("--l1-ratio-max", cp_l1);
    c_compare->add_option("--l2-ratio-lo", cp_l2lo);
    c_compare->add_option("--l2-ratio-hi", cp_l2hi);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(c_validate)) return cmd_validate(g);
        if (app.got_subcommand(c_rays)) return cmd_rays(g, r_t0, r_t1, r_nt, r_nx);
        if (app.got_subcommand(c_branches)) return cmd_branches(g, b_x, b_t);
        if (app.got_subcommand(c_density)) return cmd_density(g, d_times, d_t0, d_t1, d_nt, d_nx);
        if (app.got_subcommand(c_caustics)) return cmd_caustics(g, c_nz, c_nt);
        if (app.got_subcommand(c_focus)) return cmd_focus(g, f_y, f_t, f_box);
        if (app.got_subcommand(c_fluid)) return cmd_fluid(g, fl_t0, fl_t1, fl_nt, fl_nx, fl_sigma);
        if (app.got_subcommand(c_wigner)) return cmd_wigner(g, w_eps, w_t, w_n, w_stride, w_domain);
        if (app.got_subcommand(c_compare))
            return cmd_compare(g, cp_eps, cp_t, cp_l1, cp_l2lo, cp_l2hi);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "caustica: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "caustica: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "caustica: numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
