#include <latopt/io.hpp>
#include <latopt/optimizer.hpp>

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace latopt;

namespace {

struct SmallProblem {
    GridDomain dom;
    BoundaryConditions bc;
    OptimizerConfig cfg;
    UnitCellSpec spec;

    SmallProblem() : dom(8, 4, 1.0), bc(cantilever_bc(dom)), spec(testutil::paper_cell()) {
        cfg.vbar = 0.15;
        cfg.max_iters = 5;
    }
};

DesignFields random_fields(const GridDomain& dom, const UnitCellSpec& spec, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uphi(0.2, 0.9);
    std::uniform_real_distribution<double> ualpha(spec.alpha_lo + 0.07, spec.alpha_hi - 0.07);
    DesignFields f = DesignFields::uniform(dom, 0.5, {1.5, 1.5});
    for (int e = 0; e < dom.num_cells(); ++e) {
        f.phi[e] = uphi(rng);
        f.alpha(e, 0) = ualpha(rng);
        f.alpha(e, 1) = ualpha(rng);
        f.R[size_t(e)] = testutil::random_rotation2(rng);
    }
    return f;
}

} // namespace

TEST_CASE("volume-feasible isotropic scaling solves v(a) = vbar") {
    const UnitCellSpec spec = testutil::paper_cell();
    const double a = feasible_isotropic_alpha(spec, 0.15);
    CHECK(cell_volume_fraction({a, a}, spec) == Catch::Approx(0.15).margin(1e-10));
    // budget too generous: clamp at the lower bound
    CHECK(feasible_isotropic_alpha(spec, 0.5) == spec.alpha_lo);
    // budget leaner than any admissible cell: clamp at the upper bound
    CHECK(feasible_isotropic_alpha(spec, 0.01) == spec.alpha_hi);
}

TEST_CASE("initialization is volume feasible for every option set") {
    const SmallProblem P;
    for (int mask = 0; mask < 4; ++mask) {
        OptimizerConfig cfg = P.cfg;
        cfg.options.optimize_phi = mask & 1;
        cfg.options.optimize_alpha = mask & 2;
        cfg.fixed_alpha = feasible_isotropic_alpha(P.spec, cfg.vbar);
        const DesignFields f = initialize_fields(P.dom, P.spec, cfg);
        double V = 0.0;
        for (int e = 0; e < P.dom.num_cells(); ++e)
            V += f.phi_bar[e] * cell_volume_fraction({f.alpha(e, 0), f.alpha(e, 1)}, P.spec);
        V /= P.dom.num_cells();
        CHECK(V <= cfg.vbar + 1e-9);
    }
}

TEST_CASE("beta continuation doubles on schedule and saturates") {
    const SmallProblem P;
    LatticeOptimizer opt(P.dom, P.spec, testutil::small_lookup(), P.bc, P.cfg);
    CHECK(opt.beta_at(1) == 1.0);
    CHECK(opt.beta_at(10) == 1.0);
    CHECK(opt.beta_at(11) == 2.0);
    CHECK(opt.beta_at(21) == 4.0);
    CHECK(opt.beta_at(60) == 32.0);
    CHECK(opt.beta_at(500) == 32.0);
}

TEST_CASE("compliance gradients match central finite differences") {
    const SmallProblem P;
    OptimizerConfig cfg = P.cfg;
    cfg.options = {true, true, false};
    LatticeOptimizer opt(P.dom, P.spec, testutil::small_lookup(), P.bc, cfg);

    DesignFields f = random_fields(P.dom, P.spec, 42);
    const double beta = 4.0;
    opt.regulate(f, beta);
    const Vec U = opt.analyze(f);
    const SensitivityBundle s = opt.sensitivities(f, U, beta);

    auto J_of = [&](DesignFields fields) {
        opt.regulate(fields, beta);
        return compliance(P.bc.F, opt.analyze(fields));
    };
    auto V_of = [&](DesignFields fields) {
        opt.regulate(fields, beta);
        return opt.volume_fraction(fields);
    };

    const double h = 1e-5;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> pick(0, P.dom.num_cells() - 1);
    for (int trial = 0; trial < 12; ++trial) {
        const int e = pick(rng);
        {
            DesignFields fp = f, fm = f;
            fp.phi[e] += h;
            fm.phi[e] -= h;
            const double fdJ = (J_of(fp) - J_of(fm)) / (2 * h);
            const double fdV = (V_of(fp) - V_of(fm)) / (2 * h);
            CHECK(s.dJ_dphi[e] == Catch::Approx(fdJ).epsilon(1e-3).margin(1e-10));
            CHECK(s.dV_dphi[e] == Catch::Approx(fdV).epsilon(1e-3).margin(1e-12));
        }
        for (int k = 0; k < 2; ++k) {
            DesignFields fp = f, fm = f;
            fp.alpha(e, k) += h;
            fm.alpha(e, k) -= h;
            const double fdJ = (J_of(fp) - J_of(fm)) / (2 * h);
            const double fdV = (V_of(fp) - V_of(fm)) / (2 * h);
            CHECK(s.dJ_dalpha(e, k) == Catch::Approx(fdJ).epsilon(1e-3).margin(1e-10));
            CHECK(s.dV_dalpha(e, k) == Catch::Approx(fdV).epsilon(1e-3).margin(1e-12));
        }
    }
}

TEST_CASE("orientation update lowers compliance on an anisotropic design") {
    const SmallProblem P;
    OptimizerConfig cfg = P.cfg;
    cfg.options = {false, false, false};
    cfg.fixed_alpha = 1.0;
    LatticeOptimizer opt(P.dom, P.spec, testutil::small_lookup(), P.bc, cfg);
    DesignFields f = DesignFields::uniform(P.dom, 1.0, {2.5, 1.0});
    opt.regulate(f, 1.0);
    Vec U = opt.analyze(f);
    const double J0 = compliance(P.bc.F, U);
    double J = J0;
    for (int it = 0; it < 10; ++it) {
        opt.update_orientations(f, U);
        U = opt.analyze(f);
        J = compliance(P.bc.F, U);
    }
    CHECK(J < J0);
}

TEST_CASE("a short run is monotone in feasibility and returns coherent history") {
    const SmallProblem P;
    OptimizerConfig cfg = P.cfg;
    cfg.max_iters = 8;
    cfg.options = {true, true, false};
    LatticeOptimizer opt(P.dom, P.spec, testutil::small_lookup(), P.bc, cfg);
    const OptimizeResult res = opt.run();
    REQUIRE(!res.history.empty());
    CHECK(res.iterations == int(res.history.size()));
    CHECK(res.J > 0.0);
    CHECK(res.V <= cfg.vbar * 1.02);
    for (const auto& hrec : res.history) {
        CHECK(hrec.J > 0.0);
        CHECK(hrec.beta >= 1.0);
    }
    // optimizing should beat the untouched initialization
    const double J_init = opt.evaluate(initialize_fields(P.dom, P.spec, cfg));
    CHECK(res.J < J_init);
}

TEST_CASE("inactive elements stay void through a run") {
    GridDomain dom(8, 4, 1.0);
    for (int ey = 0; ey < 2; ++ey)
        for (int ex = 4; ex < 6; ++ex) dom.active_mask[size_t(dom.idx(ex, ey))] = 0;
    BoundaryConditions bc = BoundaryConditions::empty(dom);
    for (int iy = 0; iy <= dom.ny; ++iy) bc.fix_node(dom, 0, iy);
    bc.add_load(dom, dom.nx, dom.ny, 0.0, -1.0);
    OptimizerConfig cfg;
    cfg.max_iters = 4;
    LatticeOptimizer opt(dom, testutil::paper_cell(), testutil::small_lookup(), bc, cfg);
    const OptimizeResult res = opt.run();
    for (int e = 0; e < dom.num_cells(); ++e)
        if (!dom.active_mask[size_t(e)]) CHECK(res.fields.phi_bar[e] == 0.0);
}
