#pragma once

// File formats: field CSV/PGM, boundary condition records, run
// configuration, history CSV, and lattice graph exports (JSON/OBJ/SVG).

#include "latopt/common.hpp"
#include "latopt/compiler.hpp"
#include "latopt/fea.hpp"
#include "latopt/grid.hpp"
#include "latopt/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace latopt {

// --- design fields -------------------------------------------------------

inline void save_fields_csv(const GridDomain& dom, const DesignFields& f, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_fields_csv: cannot open " + path);
    out.precision(17);
    out << "ix,iy,phi,alpha_x,alpha_y,theta\n";
    for (int iy = 0; iy < dom.ny; ++iy)
        for (int ix = 0; ix < dom.nx; ++ix) {
            const int e = dom.idx(ix, iy);
            const auto& R = f.R[size_t(e)];
            // rotation angle of the local frame, in radians
            const double theta = std::atan2(R(0, 1), R(0, 0));
            out << ix << "," << iy << "," << f.phi[e] << "," << f.alpha(e, 0) << ","
                << f.alpha(e, 1) << "," << theta << "\n";
        }
}

inline DesignFields load_fields_csv(const GridDomain& dom, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_fields_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);
    require(line.rfind("ix,iy,phi,alpha_x,alpha_y,theta", 0) == 0,
            "load_fields_csv: unexpected header in " + path);
    DesignFields f = DesignFields::uniform(dom, 0.0, {1.0, 1.0});
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        int ix, iy;
        double phi, ax, ay, theta;
        require(bool(ss >> ix >> iy >> phi >> ax >> ay >> theta), "load_fields_csv: bad record");
        require(ix >= 0 && ix < dom.nx && iy >= 0 && iy < dom.ny, "load_fields_csv: index out of range");
        const int e = dom.idx(ix, iy);
        f.phi[e] = phi;
        f.alpha(e, 0) = ax;
        f.alpha(e, 1) = ay;
        const double c = std::cos(theta), s = std::sin(theta);
        f.R[size_t(e)] << c, s, -s, c;
    }
    f.phi_tilde = f.phi;
    f.alpha_tilde = f.alpha;
    f.phi_bar = f.phi;
    return f;
}

inline void save_field_pgm(const GridDomain& dom, const Vec& field, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_field_pgm: cannot open " + path);
    out << "P2\n" << dom.nx << " " << dom.ny << "\n255\n";
    for (int iy = dom.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < dom.nx; ++ix)
            out << int(std::lround(255.0 * clamp01(field[dom.idx(ix, iy)]))) << (ix + 1 < dom.nx ? " " : "");
        out << "\n";
    }
}

// --- boundary conditions -------------------------------------------------
//
// Record format, one per line on grid nodes:
//   fix <ix> <iy> [dx dy]     constrain node (components optional, default both)
//   load <ix> <iy> <fx> <fy>  nodal load

inline BoundaryConditions parse_bc(const GridDomain& dom, std::istream& in) {
    BoundaryConditions bc = BoundaryConditions::empty(dom);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string op;
        if (!(ss >> op) || op[0] == '#') continue;
        int ix, iy;
        require(bool(ss >> ix >> iy), "parse_bc: malformed record: " + line);
        require(ix >= 0 && ix <= dom.nx && iy >= 0 && iy <= dom.ny, "parse_bc: node out of range: " + line);
        if (op == "fix") {
            int dx = 1, dy = 1;
            ss >> dx >> dy;
            bc.fix_node(dom, ix, iy, dx != 0, dy != 0);
        } else if (op == "load") {
            double fx, fy;
            require(bool(ss >> fx >> fy), "parse_bc: malformed load: " + line);
            bc.add_load(dom, ix, iy, fx, fy);
        } else {
            throw Error("parse_bc: unknown record '" + op + "'");
        }
    }
    return bc;
}

inline BoundaryConditions load_bc(const GridDomain& dom, const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_bc: cannot open " + path);
    return parse_bc(dom, in);
}

// Left edge clamped, unit downward load at the middle of the right edge.
inline BoundaryConditions cantilever_bc(const GridDomain& dom) {
    BoundaryConditions bc = BoundaryConditions::empty(dom);
    for (int iy = 0; iy <= dom.ny; ++iy) bc.fix_node(dom, 0, iy);
    bc.add_load(dom, dom.nx, dom.ny / 2, 0.0, -1.0);
    return bc;
}

// --- run configuration ---------------------------------------------------

struct RunConfig {
    int nx = 80, ny = 40;
    double element_size = 1.0;
    UnitCellSpec cell;
    std::string bc_file;     // empty: built-in cantilever
    std::string bc_builtin = "cantilever";
    OptimizerConfig opt;
    int lookup_samples = 7;
    int cell_resolution = 64;
    std::string lookup_cache; // optional path of a precomputed D table
    // compile parameters
    double tau = 0.5;
    int refine = 1;
    double compile_h = 2.0;
    uint64_t seed = 1;
    std::string output_dir = "out";
    std::string mode = "full"; // optimize | compile | full | validate
    int validate_resolution = 1024;
    char preset = 0; // 0: none, otherwise 'a'..'f'
};

inline void apply_preset(RunConfig& cfg, char preset) {
    require(preset >= 'a' && preset <= 'f', "apply_preset: preset must be a..f");
    cfg.preset = preset;
    auto& o = cfg.opt.options;
    o.optimize_phi = (preset >= 'd');
    o.optimize_alpha = (preset != 'a' && preset != 'd');
    o.isotropic_alpha = (preset == 'b' || preset == 'e');
    // (a) keeps phi = 1, so its fixed scaling must meet the volume bound on
    // its own; (d) evolves the shape instead, with the unscaled cell
    if (preset == 'a') cfg.opt.fixed_alpha = feasible_isotropic_alpha(cfg.cell, cfg.opt.vbar);
    if (preset == 'd') cfg.opt.fixed_alpha = 1.0;
}

inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out.precision(17);
    out << "[domain]\nnx = " << c.nx << "\nny = " << c.ny << "\nelement_size = " << c.element_size << "\n";
    out << "[cell]\nl = " << c.cell.l << "\nt = " << c.cell.t << "\nalpha_lo = " << c.cell.alpha_lo
        << "\nalpha_hi = " << c.cell.alpha_hi << "\nE = " << c.cell.base_E << "\nnu = " << c.cell.base_nu << "\n";
    out << "[bc]\n";
    if (!c.bc_file.empty()) out << "file = " << c.bc_file << "\n";
    else out << "builtin = " << c.bc_builtin << "\n";
    out << "[optimizer]\nvbar = " << c.opt.vbar << "\np = " << c.opt.p
        << "\nfilter_radius = " << c.opt.filter_radius << "\nbeta0 = " << c.opt.beta0
        << "\nbeta_max = " << c.opt.beta_max << "\nbeta_double_every = " << c.opt.beta_double_every
        << "\neta = " << c.opt.eta << "\nmax_iters = " << c.opt.max_iters
        << "\nmove_limit = " << c.opt.move_limit << "\nconv_tol = " << c.opt.conv_tol
        << "\noptimize_phi = " << int(c.opt.options.optimize_phi)
        << "\noptimize_alpha = " << int(c.opt.options.optimize_alpha)
        << "\nisotropic_alpha = " << int(c.opt.options.isotropic_alpha)
        << "\nfixed_alpha = " << c.opt.fixed_alpha << "\n";
    out << "[homogenization]\nlookup_samples = " << c.lookup_samples
        << "\ncell_resolution = " << c.cell_resolution << "\n";
    if (!c.lookup_cache.empty()) out << "lookup_cache = " << c.lookup_cache << "\n";
    out << "[compile]\ntau = " << c.tau << "\nrefine = " << c.refine << "\nh = " << c.compile_h
        << "\nseed = " << c.seed << "\n";
    out << "[run]\nmode = " << c.mode << "\noutput_dir = " << c.output_dir
        << "\nvalidate_resolution = " << c.validate_resolution << "\n";
    if (c.preset) out << "preset = " << c.preset << "\n";
    return out.str();
}

inline RunConfig parse_config(std::istream& in) {
    RunConfig c;
    std::string line, section;
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ss(line);
        std::string key, eq, val;
        if (!(ss >> key)) continue;
        if (key.front() == '[') {
            section = key.substr(1, key.size() - 2);
            continue;
        }
        require(bool(ss >> eq >> val) && eq == "=", "parse_config: expected 'key = value': " + line);
        kv[section + "." + key] = val;
    }
    auto get = [&](const std::string& key, auto& dst) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        std::istringstream ss(it->second);
        require(bool(ss >> dst), "parse_config: bad value for " + key);
        kv.erase(it);
    };
    int b;
    get("domain.nx", c.nx);
    get("domain.ny", c.ny);
    get("domain.element_size", c.element_size);
    get("cell.l", c.cell.l);
    get("cell.t", c.cell.t);
    get("cell.alpha_lo", c.cell.alpha_lo);
    get("cell.alpha_hi", c.cell.alpha_hi);
    get("cell.E", c.cell.base_E);
    get("cell.nu", c.cell.base_nu);
    get("bc.file", c.bc_file);
    get("bc.builtin", c.bc_builtin);
    get("optimizer.vbar", c.opt.vbar);
    get("optimizer.p", c.opt.p);
    get("optimizer.filter_radius", c.opt.filter_radius);
    get("optimizer.beta0", c.opt.beta0);
    get("optimizer.beta_max", c.opt.beta_max);
    get("optimizer.beta_double_every", c.opt.beta_double_every);
    get("optimizer.eta", c.opt.eta);
    get("optimizer.max_iters", c.opt.max_iters);
    get("optimizer.move_limit", c.opt.move_limit);
    get("optimizer.conv_tol", c.opt.conv_tol);
    b = c.opt.options.optimize_phi; get("optimizer.optimize_phi", b); c.opt.options.optimize_phi = b;
    b = c.opt.options.optimize_alpha; get("optimizer.optimize_alpha", b); c.opt.options.optimize_alpha = b;
    b = c.opt.options.isotropic_alpha; get("optimizer.isotropic_alpha", b); c.opt.options.isotropic_alpha = b;
    get("optimizer.fixed_alpha", c.opt.fixed_alpha);
    get("homogenization.lookup_samples", c.lookup_samples);
    get("homogenization.cell_resolution", c.cell_resolution);
    get("homogenization.lookup_cache", c.lookup_cache);
    get("compile.tau", c.tau);
    get("compile.refine", c.refine);
    get("compile.h", c.compile_h);
    get("compile.seed", c.seed);
    get("run.mode", c.mode);
    get("run.output_dir", c.output_dir);
    get("run.validate_resolution", c.validate_resolution);
    std::string preset;
    get("run.preset", preset);
    if (!preset.empty()) apply_preset(c, preset[0]);
    require(kv.empty(), "parse_config: unknown key '" + (kv.empty() ? "" : kv.begin()->first) + "'");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_config: cannot open " + path);
    return parse_config(in);
}

// --- history -------------------------------------------------------------

inline void save_history_csv(const std::vector<HistoryEntry>& hist, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_history_csv: cannot open " + path);
    out.precision(12);
    out << "iter,J,V,max_change,beta\n";
    for (const auto& h : hist)
        out << h.iter << "," << h.J << "," << h.V << "," << h.max_change << "," << h.beta << "\n";
}

// --- lattice graph exports -----------------------------------------------

inline nlohmann::ordered_json lattice_to_json(const LatticeGraph& g) {
    nlohmann::ordered_json j;
    j["k"] = g.k;
    auto& vs = j["vertices"] = nlohmann::ordered_json::array();
    for (int i = 0; i < g.num_vertices(); ++i) {
        nlohmann::ordered_json v = nlohmann::ordered_json::array();
        for (int a = 0; a < g.k; ++a) v.push_back(g.vertices(i, a));
        vs.push_back(v);
    }
    auto& es = j["edges"] = nlohmann::ordered_json::array();
    auto& pv = j["provenance"] = nlohmann::ordered_json::array();
    for (size_t m = 0; m < g.edges.size(); ++m) {
        es.push_back({g.edges[m].first, g.edges[m].second});
        pv.push_back(g.provenance[m] == EdgeProvenance::Axis ? "axis" : "relabeled-diagonal");
    }
    j["dropped_isolated"] = g.dropped_isolated;
    j["origin_outlier_groups"] = g.origin_outlier_groups;
    return j;
}

inline void save_lattice_json(const LatticeGraph& g, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_lattice_json: cannot open " + path);
    out << lattice_to_json(g).dump(1) << "\n";
}

inline LatticeGraph load_lattice_json(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_lattice_json: cannot open " + path);
    nlohmann::json j;
    in >> j;
    LatticeGraph g;
    g.k = j.at("k").get<int>();
    const auto& vs = j.at("vertices");
    g.vertices = Mat(vs.size(), g.k);
    for (size_t i = 0; i < vs.size(); ++i)
        for (int a = 0; a < g.k; ++a) g.vertices(Eigen::Index(i), a) = vs[i][size_t(a)].get<double>();
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    for (const auto& p : j.at("provenance"))
        g.provenance.push_back(p.get<std::string>() == "axis" ? EdgeProvenance::Axis
                                                              : EdgeProvenance::RelabeledDiagonal);
    g.dropped_isolated = j.value("dropped_isolated", 0);
    g.origin_outlier_groups = j.value("origin_outlier_groups", 0);
    return g;
}

inline void save_lattice_obj(const LatticeGraph& g, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_lattice_obj: cannot open " + path);
    out.precision(12);
    for (int i = 0; i < g.num_vertices(); ++i) {
        out << "v";
        for (int a = 0; a < g.k; ++a) out << " " << g.vertices(i, a);
        if (g.k == 2) out << " 0";
        out << "\n";
    }
    for (const auto& [a, b] : g.edges) out << "l " << a + 1 << " " << b + 1 << "\n";
}

inline void save_lattice_svg(const LatticeGraph& g, double strut_thickness, const std::string& path) {
    require(g.k == 2, "save_lattice_svg: SVG export is 2D only");
    std::ofstream out(path);
    require(out.good(), "save_lattice_svg: cannot open " + path);
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
    if (g.num_vertices() > 0) {
        x0 = g.vertices.col(0).minCoeff() - strut_thickness;
        x1 = g.vertices.col(0).maxCoeff() + strut_thickness;
        y0 = g.vertices.col(1).minCoeff() - strut_thickness;
        y1 = g.vertices.col(1).maxCoeff() + strut_thickness;
    }
    const double scale = 16.0;
    out.precision(8);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (x1 - x0) * scale
        << "\" height=\"" << (y1 - y0) * scale << "\" viewBox=\"0 0 " << (x1 - x0) << " "
        << (y1 - y0) << "\">\n";
    for (size_t m = 0; m < g.edges.size(); ++m) {
        const auto& [a, b] = g.edges[m];
        const char* color = g.provenance[m] == EdgeProvenance::Axis ? "#222222" : "#cc3311";
        out << "<line x1=\"" << g.vertices(a, 0) - x0 << "\" y1=\"" << y1 - g.vertices(a, 1)
            << "\" x2=\"" << g.vertices(b, 0) - x0 << "\" y2=\"" << y1 - g.vertices(b, 1)
            << "\" stroke=\"" << color << "\" stroke-width=\"" << strut_thickness
            << "\" stroke-linecap=\"round\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace latopt
