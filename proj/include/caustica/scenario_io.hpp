#ifndef CAUSTICA_SCENARIO_IO_HPP
#define CAUSTICA_SCENARIO_IO_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "caustica/branches.hpp"
#include "caustica/symbols.hpp"

namespace caustica {

using json = nlohmann::json;

/// Scenario document format (all expression fields use the grammar of
/// Expr::parse; `d` defaults to 1):
/// {
///   "hamiltonian": {"name": "...", "d": 1,
///                   "params": {"potential": "expr", "coefficient": "expr",
///                              "h": "expr in x, xi (custom only)"}},
///   "initial":     {"n": "expr", "S": "expr"},
///   "region":      {"x_min": [..], "x_max": [..], "times": [..],
///                   "t_span": [t0, t1]},
///   "tolerances":  {"ode_rel":.., "ode_abs":.., "root":.., "dedupe":..,
///                   "caustic":.., "mass":..},
///   "xi_box":      {"min": [..], "max": [..]}
/// }
inline Scenario scenario_from_json(const json& doc) {
    Scenario sc;
    if (!doc.contains("hamiltonian") || !doc.contains("initial") || !doc.contains("region") ||
        !doc.contains("xi_box"))
        throw std::invalid_argument(
            "scenario: required fields hamiltonian/initial/region/xi_box");

    const json& hj = doc.at("hamiltonian");
    const std::string name = hj.at("name").get<std::string>();
    const int d = hj.value("d", 1);
    SymbolParams params;
    params.dim = d;
    if (hj.contains("params")) {
        const json& pj = hj.at("params");
        if (pj.contains("potential"))
            params.potential =
                potential_from_expr(Expr::parse(pj.at("potential").get<std::string>()), d);
        if (pj.contains("coefficient"))
            params.coefficient =
                potential_from_expr(Expr::parse(pj.at("coefficient").get<std::string>()), d);
    }
    if (name == "custom") {
        if (!hj.contains("params") || !hj.at("params").contains("h"))
            throw std::invalid_argument("scenario: custom hamiltonian needs params.h expression");
        sc.hamiltonian = symbol_from_expr(Expr::parse(hj.at("params").at("h").get<std::string>()), d);
    } else {
        sc.hamiltonian = builtin_symbol(name, params);
    }

    const json& ij = doc.at("initial");
    sc.initial = initial_from_expr(Expr::parse(ij.at("n").get<std::string>()),
                                   Expr::parse(ij.at("S").get<std::string>()), d);

    const json& rj = doc.at("region");
    sc.region.x.lo = rj.at("x_min").get<std::vector<double>>();
    sc.region.x.hi = rj.at("x_max").get<std::vector<double>>();
    sc.region.times = rj.value("times", std::vector<double>{});
    if (rj.contains("t_span")) {
        auto span = rj.at("t_span").get<std::vector<double>>();
        if (span.size() != 2) throw std::invalid_argument("scenario: t_span must be [t0, t1]");
        sc.region.t0 = span[0];
        sc.region.t1 = span[1];
    } else {
        sc.region.t0 = 0.0;
        sc.region.t1 = sc.region.times.empty()
                           ? 1.0
                           : *std::max_element(sc.region.times.begin(), sc.region.times.end());
    }

    if (doc.contains("tolerances")) {
        const json& tj = doc.at("tolerances");
        sc.tol.ode_rel = tj.value("ode_rel", sc.tol.ode_rel);
        sc.tol.ode_abs = tj.value("ode_abs", sc.tol.ode_abs);
        sc.tol.root = tj.value("root", sc.tol.root);
        sc.tol.dedupe = tj.value("dedupe", sc.tol.dedupe);
        sc.tol.caustic = tj.value("caustic", sc.tol.caustic);
        sc.tol.mass = tj.value("mass", sc.tol.mass);
    }

    const json& xj = doc.at("xi_box");
    sc.xi_box.lo = xj.at("min").get<std::vector<double>>();
    sc.xi_box.hi = xj.at("max").get<std::vector<double>>();

    sc.name = doc.value("name", std::string{});
    sc.validate_shape();
    sc.cache_mass();
    return sc;
}

/// Serialize back to the document form. Expression fields round-trip
/// verbatim; a scenario built programmatically from C++ callables cannot be
/// serialized and reports so.
inline json scenario_to_json(const Scenario& sc) {
    json doc;
    if (!sc.name.empty()) doc["name"] = sc.name;
    json hj;
    std::string label = sc.hamiltonian.label;
    if (label.rfind("custom:", 0) == 0) {
        hj["name"] = "custom";
        hj["params"]["h"] = label.substr(7);
    } else {
        hj["name"] = label;
        if (sc.hamiltonian.potential.valid() && !sc.hamiltonian.potential.source.empty() &&
            sc.hamiltonian.potential.source != "0" && label != "harmonic_oscillator")
            hj["params"]["potential"] = sc.hamiltonian.potential.source;
    }
    hj["d"] = sc.hamiltonian.dim;
    doc["hamiltonian"] = hj;
    if (sc.initial.n_source.empty() || sc.initial.s_source.empty())
        throw std::invalid_argument("scenario_to_json: initial data is not expression-backed");
    doc["initial"]["n"] = sc.initial.n_source;
    doc["initial"]["S"] = sc.initial.s_source;
    doc["region"]["x_min"] = sc.region.x.lo;
    doc["region"]["x_max"] = sc.region.x.hi;
    doc["region"]["times"] = sc.region.times;
    doc["region"]["t_span"] = std::vector<double>{sc.region.t0, sc.region.t1};
    doc["tolerances"]["ode_rel"] = sc.tol.ode_rel;
    doc["tolerances"]["ode_abs"] = sc.tol.ode_abs;
    doc["tolerances"]["root"] = sc.tol.root;
    doc["tolerances"]["dedupe"] = sc.tol.dedupe;
    doc["tolerances"]["caustic"] = sc.tol.caustic;
    doc["tolerances"]["mass"] = sc.tol.mass;
    doc["xi_box"]["min"] = sc.xi_box.lo;
    doc["xi_box"]["max"] = sc.xi_box.hi;
    return doc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    json doc = json::parse(in);
    return scenario_from_json(doc);
}

// ---------------------------------------------------------------------------
// Shipped presets
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "ex_1_1_rarefaction", "ex_1_2_focus",  "ex_1_3_cusp_smooth",
        "ex_1_3_cusp_lipschitz", "harmonic_k", "appendix1_airy_k"};
    return names;
}

/// Free motion with a normalized Gaussian density throughout; only the
/// initial phase (and for the last two, the symbol) changes between cases.
inline json preset_json(const std::string& name) {
    json doc;
    doc["name"] = name;
    doc["initial"]["n"] = "exp(-x^2)/sqrt(pi)";
    doc["region"]["x_min"] = std::vector<double>{-8.0};
    doc["region"]["x_max"] = std::vector<double>{8.0};
    doc["tolerances"] = {{"ode_rel", 1e-10}, {"ode_abs", 1e-12}, {"root", 1e-10},
                         {"dedupe", 1e-6},   {"caustic", 1e-6},  {"mass", 1e-10}};
    doc["xi_box"]["min"] = std::vector<double>{-10.0};
    doc["xi_box"]["max"] = std::vector<double>{10.0};
    doc["hamiltonian"] = {{"name", "free_quadratic"}, {"d", 1}};

    if (name == "ex_1_1_rarefaction") {
        doc["initial"]["S"] = "x^2/2";
        doc["region"]["times"] = std::vector<double>{0.5, 1.0, 2.0};
        doc["region"]["t_span"] = std::vector<double>{0.0, 3.0};
    } else if (name == "ex_1_2_focus") {
        doc["initial"]["S"] = "-x^2/2";
        doc["region"]["times"] = std::vector<double>{0.5, 1.0, 2.0};
        doc["region"]["t_span"] = std::vector<double>{0.0, 3.0};
    } else if (name == "ex_1_3_cusp_smooth") {
        doc["initial"]["S"] = "-ln(cosh(x))";
        doc["region"]["times"] = std::vector<double>{0.5, 1.0, 2.0};
        doc["region"]["t_span"] = std::vector<double>{0.0, 3.0};
    } else if (name == "ex_1_3_cusp_lipschitz") {
        doc["initial"]["S"] = "x*(1-step(x)) + (x-x^2/2)*(step(x)-step(x-1))";
        doc["region"]["times"] = std::vector<double>{0.5, 1.0, 2.0};
        doc["region"]["t_span"] = std::vector<double>{0.0, 3.0};
    } else if (name == "harmonic_k") {
        doc["hamiltonian"] = {{"name", "harmonic_oscillator"}, {"d", 1}};
        doc["initial"]["S"] = "x";  // k = 1
        doc["region"]["times"] = std::vector<double>{0.39269908169872414, 0.78539816339744828};
        doc["region"]["t_span"] = std::vector<double>{0.0, 5.0};
    } else if (name == "appendix1_airy_k") {
        doc["hamiltonian"] = {{"name", "airy_variable"}, {"d", 1}};
        doc["initial"]["S"] = "x";  // k = 1
        doc["region"]["times"] = std::vector<double>{0.25};
        doc["region"]["t_span"] = std::vector<double>{0.0, 0.6};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return doc;
}

inline std::string preset_text(const std::string& name) { return preset_json(name).dump(2) + "\n"; }

inline Scenario preset_scenario(const std::string& name) {
    return scenario_from_json(preset_json(name));
}

}  // namespace caustica

#endif
