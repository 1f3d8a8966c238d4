#pragma once

// Concurrent optimization of shape occupancy, cell scaling, and cell
// orientation for minimum compliance under a solid-material budget.

#include "latopt/common.hpp"
#include "latopt/fea.hpp"
#include "latopt/filter.hpp"
#include "latopt/grid.hpp"
#include "latopt/homogenization.hpp"
#include "latopt/mma.hpp"
#include "latopt/voigt.hpp"

#include <memory>

namespace latopt {

struct DesignOptions {
    bool optimize_phi = true;
    bool optimize_alpha = true;
    bool isotropic_alpha = false;
    bool optimize_orientation = true;
};

struct OptimizerConfig {
    double vbar = 0.15;
    double p = 3.0;
    double filter_radius = 1.5;
    double beta0 = 1.0;
    double beta_max = 32.0;
    int beta_double_every = 10;
    double eta = 0.5;
    int max_iters = 60;
    double move_limit = 0.2;
    double conv_tol = 1e-4;
    double eps_iso = 1e-6;
    DesignOptions options;
    double fixed_alpha = 1.0; // used when optimize_alpha is off
    SolverBackend backend = SolverBackend::Direct;

    void validate() const {
        require(vbar > 0.0 && vbar < 1.0, "OptimizerConfig: vbar must be in (0,1)");
        require(p >= 1.0, "OptimizerConfig: p must be >= 1");
        require(filter_radius >= 1.0, "OptimizerConfig: filter_radius must be >= 1");
        require(beta0 >= 1.0 && eta > 0.0 && eta < 1.0, "OptimizerConfig: invalid projection parameters");
        require(max_iters >= 1, "OptimizerConfig: max_iters must be >= 1");
    }
};

struct HistoryEntry {
    int iter;
    double J;
    double V;
    double max_change;
    double beta;
};

struct SensitivityBundle {
    Vec dJ_dphi;
    Mat dJ_dalpha;
    Vec dV_dphi;
    Mat dV_dalpha;
    double J = 0.0;
    double V = 0.0;
};

struct OptimizeResult {
    DesignFields fields;
    std::vector<HistoryEntry> history;
    double J = 0.0;
    double V = 0.0;
    Vec U;
    int iterations = 0;
};

// Isotropic scaling whose cell solid fraction matches the budget, clamped
// to the admissible range.
inline double feasible_isotropic_alpha(const UnitCellSpec& spec, double vbar) {
    auto v = [&](double a) { return cell_volume_fraction({a, a}, spec); };
    if (v(spec.alpha_hi) >= vbar) return spec.alpha_hi;
    if (v(spec.alpha_lo) <= vbar) return spec.alpha_lo;
    double lo = spec.alpha_lo, hi = spec.alpha_hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (v(mid) > vbar ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline DesignFields initialize_fields(const GridDomain& dom, const UnitCellSpec& spec,
                                      const OptimizerConfig& cfg) {
    double a0;
    if (cfg.options.optimize_alpha) a0 = feasible_isotropic_alpha(spec, cfg.vbar);
    else a0 = cfg.fixed_alpha;
    double phi0 = 1.0;
    if (cfg.options.optimize_phi)
        phi0 = clamp01(cfg.vbar / cell_volume_fraction({a0, a0}, spec));
    DesignFields f = DesignFields::uniform(dom, phi0, {a0, a0});
    for (int e = 0; e < dom.num_cells(); ++e)
        if (!dom.active_mask[size_t(e)]) {
            f.phi[e] = 0.0;
            f.phi_tilde[e] = 0.0;
            f.phi_bar[e] = 0.0;
        }
    return f;
}

class LatticeOptimizer {
public:
    LatticeOptimizer(const GridDomain& dom, const UnitCellSpec& spec,
                     const ElasticityLookup& lookup, const BoundaryConditions& bc,
                     const OptimizerConfig& cfg)
        : dom_(dom), spec_(spec), lut_(lookup), bc_(bc), cfg_(cfg),
          elem_(dom.element_size), filter_(dom, cfg.filter_radius) {
        cfg_.validate();
        spec_.validate();
    }

    // Regulated (physical) fields from the raw design variables.
    void regulate(DesignFields& f, double beta) const {
        f.phi_tilde = filter_.apply(f.phi);
        f.phi_bar = heaviside_project(f.phi_tilde, beta, cfg_.eta);
        if (cfg_.options.optimize_alpha) {
            f.alpha_tilde.col(0) = filter_.apply(f.alpha.col(0));
            f.alpha_tilde.col(1) = filter_.apply(f.alpha.col(1));
        } else {
            f.alpha_tilde = f.alpha;
        }
        for (int e = 0; e < dom_.num_cells(); ++e)
            if (!dom_.active_mask[size_t(e)]) f.phi_bar[e] = 0.0;
    }

    // Solve equilibrium for the regulated fields; fills per-element physical
    // tensors as a side effect.
    Vec analyze(const DesignFields& f) {
        const int n = dom_.num_cells();
        D_phys_.resize(size_t(n));
        Ke_unit_.resize(size_t(n));
        for (int ey = 0; ey < dom_.ny; ++ey)
            for (int ex = 0; ex < dom_.nx; ++ex) {
                const int e = dom_.idx(ex, ey);
                if (!dom_.active_mask[size_t(e)]) continue;
                Vec a(2);
                a << f.alpha_tilde(e, 0), f.alpha_tilde(e, 1);
                D_phys_[size_t(e)] = rotate_tensor(interpolate_D(lut_, a), f.R[size_t(e)]);
                Ke_unit_[size_t(e)] = elem_.stiffness(D_phys_[size_t(e)]);
            }
        return solve_equilibrium(dom_, bc_, [&](int ex, int ey) {
            const int e = dom_.idx(ex, ey);
            return Mat(penalization_factor(f.phi_bar[e], cfg_.p) * Ke_unit_[size_t(e)]);
        }, cfg_.backend);
    }

    double volume_fraction(const DesignFields& f) const {
        double V = 0.0;
        for (int e = 0; e < dom_.num_cells(); ++e) {
            if (!dom_.active_mask[size_t(e)]) continue;
            V += f.phi_bar[e] * cell_volume_fraction({f.alpha_tilde(e, 0), f.alpha_tilde(e, 1)}, spec_);
        }
        return V / double(dom_.num_active());
    }

    SensitivityBundle sensitivities(const DesignFields& f, const Vec& U, double beta) {
        const int n = dom_.num_cells();
        SensitivityBundle s;
        s.J = compliance(bc_.F, U);
        s.V = volume_fraction(f);
        Vec dJ_dphibar = Vec::Zero(n);
        Vec dV_dphibar = Vec::Zero(n);
        Mat dJ_dat = Mat::Zero(n, 2);
        Mat dV_dat = Mat::Zero(n, 2);
        const double Na = double(dom_.num_active());
        for (int ey = 0; ey < dom_.ny; ++ey)
            for (int ex = 0; ex < dom_.nx; ++ex) {
                const int e = dom_.idx(ex, ey);
                if (!dom_.active_mask[size_t(e)]) continue;
                const auto Ue = gather_element(dom_, ex, ey, U);
                const double strain_energy2 = Ue.dot(Ke_unit_[size_t(e)] * Ue); // Ue' Ke(1) Ue
                dJ_dphibar[e] = -0.5 * penalization_factor_grad(f.phi_bar[e], cfg_.p) * strain_energy2;
                const Eigen::Vector2d at(f.alpha_tilde(e, 0), f.alpha_tilde(e, 1));
                dV_dphibar[e] = cell_volume_fraction(at, spec_) / Na;
                if (cfg_.options.optimize_alpha) {
                    const double pen = penalization_factor(f.phi_bar[e], cfg_.p);
                    const Eigen::Vector2d dv = cell_volume_fraction_grad(at, spec_);
                    Vec av(2);
                    av << at.x(), at.y();
                    for (int k = 0; k < 2; ++k) {
                        const Mat dD = rotate_tensor(interpolate_D_grad(lut_, av, k), f.R[size_t(e)]);
                        double q = 0.0;
                        for (int gp = 0; gp < 4; ++gp) {
                            const Eigen::Vector3d epsv = elem_.B_gp[size_t(gp)] * Ue;
                            q += elem_.w_gp[size_t(gp)] * epsv.dot(dD * epsv);
                        }
                        dJ_dat(e, k) = -0.5 * pen * q;
                        dV_dat(e, k) = f.phi_bar[e] * dv[k] / Na;
                    }
                }
            }
        // chain through Heaviside projection and the density filter
        Vec dJ_dphit(n), dV_dphit(n);
        for (int e = 0; e < n; ++e) {
            const double hg = heaviside_project_grad(f.phi_tilde[e], beta, cfg_.eta);
            dJ_dphit[e] = dJ_dphibar[e] * hg;
            dV_dphit[e] = dV_dphibar[e] * hg;
        }
        s.dJ_dphi = filter_.apply_transpose(dJ_dphit);
        s.dV_dphi = filter_.apply_transpose(dV_dphit);
        s.dJ_dalpha = Mat::Zero(n, 2);
        s.dV_dalpha = Mat::Zero(n, 2);
        if (cfg_.options.optimize_alpha) {
            for (int k = 0; k < 2; ++k) {
                s.dJ_dalpha.col(k) = filter_.apply_transpose(dJ_dat.col(k));
                s.dV_dalpha.col(k) = filter_.apply_transpose(dV_dat.col(k));
            }
        }
        return s;
    }

    double beta_at(int iter) const {
        const double b = cfg_.beta0 * std::pow(2.0, (iter - 1) / cfg_.beta_double_every);
        return std::min(b, cfg_.beta_max);
    }

    OptimizeResult run(DesignFields fields) {
        OptimizeResult out;
        const int n = dom_.num_cells();
        std::vector<int> act;
        for (int e = 0; e < n; ++e)
            if (dom_.active_mask[size_t(e)]) act.push_back(e);

        // design vector layout: [phi | alpha] over active elements
        const int nphi = cfg_.options.optimize_phi ? int(act.size()) : 0;
        int nalpha = 0;
        if (cfg_.options.optimize_alpha)
            nalpha = cfg_.options.isotropic_alpha ? int(act.size()) : 2 * int(act.size());
        const int nvar = nphi + nalpha;

        std::unique_ptr<MmaSolver> mma;
        Vec x(std::max(nvar, 1)), xmin(std::max(nvar, 1)), xmax(std::max(nvar, 1));
        auto pack = [&](const DesignFields& f, Vec& v) {
            for (int i = 0; i < nphi; ++i) v[i] = f.phi[act[size_t(i)]];
            if (cfg_.options.optimize_alpha) {
                for (size_t i = 0; i < act.size(); ++i) {
                    if (cfg_.options.isotropic_alpha) v[nphi + int(i)] = f.alpha(act[i], 0);
                    else {
                        v[nphi + 2 * int(i)] = f.alpha(act[i], 0);
                        v[nphi + 2 * int(i) + 1] = f.alpha(act[i], 1);
                    }
                }
            }
        };
        auto unpack = [&](const Vec& v, DesignFields& f) {
            for (int i = 0; i < nphi; ++i) f.phi[act[size_t(i)]] = v[i];
            if (cfg_.options.optimize_alpha) {
                for (size_t i = 0; i < act.size(); ++i) {
                    if (cfg_.options.isotropic_alpha) {
                        f.alpha(act[i], 0) = f.alpha(act[i], 1) = v[nphi + int(i)];
                    } else {
                        f.alpha(act[i], 0) = v[nphi + 2 * int(i)];
                        f.alpha(act[i], 1) = v[nphi + 2 * int(i) + 1];
                    }
                }
            }
        };
        if (nvar > 0) {
            for (int i = 0; i < nphi; ++i) { xmin[i] = 0.0; xmax[i] = 1.0; }
            for (int i = nphi; i < nvar; ++i) { xmin[i] = spec_.alpha_lo; xmax[i] = spec_.alpha_hi; }
            mma = std::make_unique<MmaSolver>(nvar, xmin.head(nvar), xmax.head(nvar), cfg_.move_limit);
        }

        double beta = beta_at(1);
        // the result reports the state of the last analysis in the loop: the
        // variable updates of the final iteration are proposals that were
        // never evaluated, so returning them would misstate J
        DesignFields analyzed;
        Vec analyzedU;
        double analyzedJ = 0.0, analyzedV = 0.0;

        for (int it = 1; it <= cfg_.max_iters; ++it) {
            beta = beta_at(it);
            regulate(fields, beta);
            const Vec U = analyze(fields);
            SensitivityBundle s = sensitivities(fields, U, beta);
            analyzed = fields;
            analyzedU = U;
            analyzedJ = s.J;
            analyzedV = s.V;

            double max_change = 0.0;
            if (nvar > 0) {
                pack(fields, x);
                Vec df(nvar), dg(nvar);
                for (int i = 0; i < nphi; ++i) {
                    df[i] = s.dJ_dphi[act[size_t(i)]];
                    dg[i] = s.dV_dphi[act[size_t(i)]] / cfg_.vbar;
                }
                if (cfg_.options.optimize_alpha) {
                    for (size_t i = 0; i < act.size(); ++i) {
                        if (cfg_.options.isotropic_alpha) {
                            df[nphi + int(i)] = s.dJ_dalpha(act[i], 0) + s.dJ_dalpha(act[i], 1);
                            dg[nphi + int(i)] = (s.dV_dalpha(act[i], 0) + s.dV_dalpha(act[i], 1)) / cfg_.vbar;
                        } else {
                            df[nphi + 2 * int(i)] = s.dJ_dalpha(act[i], 0);
                            df[nphi + 2 * int(i) + 1] = s.dJ_dalpha(act[i], 1);
                            dg[nphi + 2 * int(i)] = s.dV_dalpha(act[i], 0) / cfg_.vbar;
                            dg[nphi + 2 * int(i) + 1] = s.dV_dalpha(act[i], 1) / cfg_.vbar;
                        }
                    }
                }
                const double g = s.V / cfg_.vbar - 1.0;
                const Vec xn = mma->update(x.head(nvar), df, g, dg);
                for (int i = 0; i < nphi; ++i)
                    max_change = std::max(max_change, std::abs(xn[i] - x[i]));
                for (int i = nphi; i < nvar; ++i)
                    max_change = std::max(max_change, std::abs(xn[i] - x[i]) / (spec_.alpha_hi - spec_.alpha_lo));
                x.head(nvar) = xn;
                unpack(x, fields);
            }

            // closed-form orientation update from the current stress field
            if (cfg_.options.optimize_orientation)
                max_change = std::max(max_change, update_orientations(fields, U));

            out.history.push_back({it, s.J, s.V, max_change, beta});
            out.iterations = it;
            if (max_change < cfg_.conv_tol) break;
        }

        if (out.iterations == 0) {
            regulate(fields, beta);
            analyzed = fields;
            analyzedU = analyze(fields);
            analyzedJ = compliance(bc_.F, analyzedU);
            analyzedV = volume_fraction(fields);
        }
        out.U = std::move(analyzedU);
        out.J = analyzedJ;
        out.V = analyzedV;
        out.fields = std::move(analyzed);
        return out;
    }

    OptimizeResult run() { return run(initialize_fields(dom_, spec_, cfg_)); }

    // Compliance of a given design without optimization (fields taken as-is
    // after regulation).
    double evaluate(DesignFields fields) {
        regulate(fields, cfg_.beta_max);
        const Vec U = analyze(fields);
        return compliance(bc_.F, U);
    }

    double update_orientations(DesignFields& f, const Vec& U) {
        double max_change = 0.0;
        for (int ey = 0; ey < dom_.ny; ++ey)
            for (int ex = 0; ex < dom_.nx; ++ex) {
                const int e = dom_.idx(ex, ey);
                if (!dom_.active_mask[size_t(e)]) continue;
                const auto ss = element_stress_strain(dom_, ex, ey, U, D_phys_[size_t(e)], elem_);
                const Eigen::Matrix2d Rn = principal_directions(ss.stress, f.R[size_t(e)], cfg_.eps_iso);
                max_change = std::max(max_change, (Rn - f.R[size_t(e)]).cwiseAbs().maxCoeff());
                f.R[size_t(e)] = Rn;
            }
        return max_change;
    }

    const GridDomain& domain() const { return dom_; }
    const OptimizerConfig& config() const { return cfg_; }
    const std::vector<Mat>& physical_tensors() const { return D_phys_; }

private:
    GridDomain dom_;
    UnitCellSpec spec_;
    const ElasticityLookup& lut_;
    BoundaryConditions bc_;
    OptimizerConfig cfg_;
    QuadElement elem_;
    DensityFilter filter_;
    std::vector<Mat> D_phys_;
    std::vector<Mat> Ke_unit_;
};

} // namespace latopt
