// Command line front end for lattice optimization and compilation.

#include <latopt/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace latopt;

namespace {

RunConfig load_run_config(const std::string& config_path, const std::string& preset,
                          const std::string& output_dir) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (!preset.empty()) {
        require(preset.size() == 1, "preset must be a single letter a..f");
        apply_preset(cfg, preset[0]);
    }
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    return cfg;
}

void print_report(const RunReport& r) {
    std::printf("J = %.4f  V = %.4f  iterations = %d\n", r.J, r.V, r.iterations);
    if (r.num_struts > 0)
        std::printf("lattice: %d vertices, %d struts\n", r.num_vertices, r.num_struts);
    if (r.validated)
        std::printf("full-resolution J = %.4f  (rel. difference %.2f%%)\n", r.J_fullres,
                     100.0 * r.rel_difference);
    std::printf("time: opt %.1fs  pre %.1fs  param %.1fs  extract %.1fs  total %.1fs\n",
                r.T_opt, r.T_pre, r.T_posy, r.T_extr, r.T_total);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conforming lattice optimization and compilation"};
    app.require_subcommand(1);

    std::string config_path, preset, output_dir, mode;

    auto* run = app.add_subcommand("run", "optimize (and optionally compile) from a config file");
    run->add_option("config", config_path, "config file (INI)");
    run->add_option("--preset", preset, "built-in experiment preset (a..f)");
    run->add_option("--out", output_dir, "output directory override");
    run->add_option("--mode", mode, "optimize | compile | full | validate");

    std::string graph_path, lattice_out;
    double h_override = 0.0;
    uint64_t seed = 1;
    auto* compile = app.add_subcommand("compile", "compile a saved frame graph into a lattice");
    compile->add_option("framegraph", graph_path, "frame graph file")->required();
    compile->add_option("--h", h_override, "target edge length override");
    compile->add_option("--seed", seed, "random seed");
    compile->add_option("--out", lattice_out, "output lattice JSON")->required();

    std::string lattice_path;
    auto* validate = app.add_subcommand("validate", "full-resolution check of a compiled lattice");
    validate->add_option("lattice", lattice_path, "lattice JSON")->required();
    validate->add_option("config", config_path, "config file the lattice was produced from")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            RunConfig cfg = load_run_config(config_path, preset, output_dir);
            if (!mode.empty()) cfg.mode = mode;
            const PipelineResult pr = run_pipeline(cfg);
            print_report(pr.report);
        } else if (compile->parsed()) {
            FrameGraphData g = load_frame_graph(graph_path);
            if (h_override > 0.0) g.h = h_override;
            CompileParams params;
            params.seed = seed;
            const LatticeGraph lat = compile_lattice(g, params);
            save_lattice_json(lat, lattice_out);
            std::printf("lattice: %d vertices, %d struts (dropped %d isolated)\n",
                        lat.num_vertices(), lat.num_edges(), lat.dropped_isolated);
        } else if (validate->parsed()) {
            RunConfig cfg = load_run_config(config_path, "", "");
            const LatticeGraph lat = load_lattice_json(lattice_path);
            GridDomain dom(cfg.nx, cfg.ny, cfg.element_size);
            const BoundaryConditions bc = make_bc(dom, cfg);

            // homogenized reference for the stored design
            const ElasticityLookup lut = obtain_lookup(cfg);
            LatticeOptimizer opt(dom, cfg.cell, lut, bc, cfg.opt);
            DesignFields fields = load_fields_csv(dom, cfg.output_dir + "/fields.csv");
            opt.regulate(fields, cfg.opt.beta_max);
            const double J = opt.evaluate(fields);

            // adjacent cells share walls, so the tiled strut thickness is 2t
            const double t_phys = cfg.compile_h * 2.0 * cfg.cell.t / cfg.cell.l;
            const auto vr = rasterize_and_validate(lat, cfg.cell, dom, bc, J,
                                                   cfg.validate_resolution, t_phys);
            std::printf("homogenized J = %.4f  full-resolution J = %.4f  rel. difference %.2f%%\n",
                        vr.J_homog, vr.J_fullres, 100.0 * vr.rel_difference);
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
