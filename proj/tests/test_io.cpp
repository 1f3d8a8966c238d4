#include <latopt/io.hpp>
#include <latopt/pipeline.hpp>

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

using namespace latopt;

TEST_CASE("design fields survive a CSV round trip") {
    GridDomain dom(6, 4);
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    DesignFields f = DesignFields::uniform(dom, 0.5, {1.5, 2.0});
    for (int e = 0; e < dom.num_cells(); ++e) {
        f.phi[e] = uni(rng);
        f.alpha(e, 0) = 1.0 + 3.0 * uni(rng);
        f.alpha(e, 1) = 1.0 + 3.0 * uni(rng);
        f.R[size_t(e)] = testutil::rotation2(2.0 * M_PI * uni(rng));
    }
    const std::string path = "fields_roundtrip.csv";
    save_fields_csv(dom, f, path);
    const DesignFields back = load_fields_csv(dom, path);
    CHECK((back.phi - f.phi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.alpha - f.alpha).cwiseAbs().maxCoeff() == 0.0);
    for (int e = 0; e < dom.num_cells(); ++e)
        CHECK((back.R[size_t(e)] - f.R[size_t(e)]).cwiseAbs().maxCoeff() < 1e-12);
    std::filesystem::remove(path);
}

TEST_CASE("boundary condition files parse fixes and loads") {
    GridDomain dom(4, 2);
    std::istringstream in(
        "# left edge clamped\n"
        "fix 0 0\n"
        "fix 0 1\n"
        "fix 0 2\n"
        "fix 4 0 0 1\n"
        "load 4 1 0 -2.5\n");
    const BoundaryConditions bc = parse_bc(dom, in);
    CHECK(bc.fixed[size_t(2 * dom.node_idx(0, 0))] == 1);
    CHECK(bc.fixed[size_t(2 * dom.node_idx(0, 2) + 1)] == 1);
    CHECK(bc.fixed[size_t(2 * dom.node_idx(4, 0))] == 0);     // x left free
    CHECK(bc.fixed[size_t(2 * dom.node_idx(4, 0) + 1)] == 1); // y fixed
    CHECK(bc.F[2 * dom.node_idx(4, 1) + 1] == -2.5);
    std::istringstream bad("fix 9 9\n");
    CHECK_THROWS_AS(parse_bc(dom, bad), Error);
}

TEST_CASE("builtin cantilever matches its description") {
    GridDomain dom(8, 4);
    const BoundaryConditions bc = cantilever_bc(dom);
    for (int iy = 0; iy <= dom.ny; ++iy) {
        CHECK(bc.fixed[size_t(2 * dom.node_idx(0, iy))] == 1);
        CHECK(bc.fixed[size_t(2 * dom.node_idx(0, iy) + 1)] == 1);
    }
    CHECK(bc.F[2 * dom.node_idx(8, 2) + 1] == -1.0);
    CHECK(bc.F.cwiseAbs().sum() == 1.0);
}

TEST_CASE("run configuration round-trips through the INI form") {
    RunConfig cfg;
    cfg.nx = 40;
    cfg.ny = 20;
    cfg.opt.vbar = 0.2;
    cfg.opt.max_iters = 25;
    cfg.opt.options.isotropic_alpha = true;
    cfg.compile_h = 1.7;
    cfg.output_dir = "out_rt";
    const std::string text = serialize_config(cfg);
    std::istringstream in(text);
    const RunConfig back = parse_config(in);
    CHECK(serialize_config(back) == text);
    CHECK(back.nx == 40);
    CHECK(back.opt.vbar == 0.2);
    CHECK(back.opt.options.isotropic_alpha);
}

TEST_CASE("unknown configuration keys are rejected") {
    std::istringstream in("[domain]\nnx = 10\nmisspelled = 3\n");
    CHECK_THROWS_AS(parse_config(in), Error);
}

TEST_CASE("presets configure the documented option sets") {
    RunConfig base;
    struct Expect {
        char p;
        bool phi, alpha, iso;
    };
    const Expect table[] = {{'a', false, false, false}, {'b', false, true, true},
                            {'c', false, true, false}, {'d', true, false, false},
                            {'e', true, true, true},   {'f', true, true, false}};
    for (const auto& ex : table) {
        RunConfig cfg = base;
        apply_preset(cfg, ex.p);
        CHECK(cfg.opt.options.optimize_phi == ex.phi);
        CHECK(cfg.opt.options.optimize_alpha == ex.alpha);
        CHECK(cfg.opt.options.isotropic_alpha == ex.iso);
    }
    // fixed scalings: volume-feasible for (a), unit for (d)
    RunConfig ca = base;
    apply_preset(ca, 'a');
    CHECK(cell_volume_fraction({ca.opt.fixed_alpha, ca.opt.fixed_alpha}, ca.cell) ==
          Catch::Approx(ca.opt.vbar).margin(1e-9));
    RunConfig cd = base;
    apply_preset(cd, 'd');
    CHECK(cd.opt.fixed_alpha == 1.0);
}

TEST_CASE("frame graphs and lattices round-trip through their formats") {
    FrameGraphData g;
    g.k = 2;
    g.h = 1.5;
    g.X = Mat(3, 2);
    g.X << 0, 0, 1, 0, 0, 1;
    g.S = Mat::Ones(3, 2);
    g.S(1, 0) = 1.25;
    g.R.assign(3, Mat::Identity(2, 2));
    g.R[2] = testutil::rotation2(0.3);
    g.edges = {{0, 1}, {1, 2}};
    save_frame_graph(g, "fg_rt.txt");
    const FrameGraphData back = load_frame_graph("fg_rt.txt");
    CHECK(back.h == g.h);
    CHECK((back.X - g.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.R[2] - g.R[2]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.edges == g.edges);
    std::filesystem::remove("fg_rt.txt");

    LatticeGraph lat;
    lat.k = 2;
    lat.vertices = Mat(3, 2);
    lat.vertices << 0, 0, 2, 0, 2, 2;
    lat.edges = {{0, 1}, {1, 2}};
    lat.provenance = {EdgeProvenance::Axis, EdgeProvenance::RelabeledDiagonal};
    lat.dropped_isolated = 1;
    save_lattice_json(lat, "lat_rt.json");
    const LatticeGraph lback = load_lattice_json("lat_rt.json");
    CHECK(lback.k == 2);
    CHECK((lback.vertices - lat.vertices).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lback.edges == lat.edges);
    CHECK(lback.provenance[1] == EdgeProvenance::RelabeledDiagonal);
    CHECK(lback.dropped_isolated == 1);
    std::filesystem::remove("lat_rt.json");
}

TEST_CASE("rasterization marks exactly the elements near struts") {
    LatticeGraph lat;
    lat.k = 2;
    lat.vertices = Mat(2, 2);
    lat.vertices << 1.0, 2.0, 9.0, 2.0; // horizontal strut at y = 2
    lat.edges = {{0, 1}};
    lat.provenance = {EdgeProvenance::Axis};
    GridDomain fine(40, 16, 0.25);
    const auto solid = rasterize_lattice(lat, fine, 0.5);
    // probe: element centered at (5.125, 2.125) lies inside; (5.125, 3.125) outside
    CHECK(solid[size_t(fine.idx(20, 8))] == 1);
    CHECK(solid[size_t(fine.idx(20, 12))] == 0);
    // endpoint caps are included, beyond them nothing
    CHECK(solid[size_t(fine.idx(3, 8))] == 1);
    CHECK(solid[size_t(fine.idx(1, 8))] == 0);
}

TEST_CASE("PGM export writes a readable image") {
    GridDomain dom(3, 2);
    Vec v(6);
    v << 0.0, 0.5, 1.0, 1.0, 0.5, 0.0;
    save_field_pgm(dom, v, "field.pgm");
    std::ifstream in("field.pgm");
    std::string magic;
    int w, h, maxval;
    in >> magic >> w >> h >> maxval;
    CHECK(magic == "P2");
    CHECK(w == 3);
    CHECK(h == 2);
    CHECK(maxval == 255);
    int first;
    in >> first;
    CHECK(first == 255); // top row starts with the highest-iy element
    std::filesystem::remove("field.pgm");
}
