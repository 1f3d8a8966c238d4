#pragma once

// Regular-grid design domain, per-element design fields, and the
// hollow-cell parameterization (solid fractions of scaled cells).

#include "latopt/common.hpp"

#include <Eigen/Dense>

namespace latopt {

struct GridDomain {
    int nx = 0;
    int ny = 0;
    double element_size = 1.0;
    std::vector<uint8_t> active_mask; // per element, row-major (ix fastest)

    GridDomain() = default;
    GridDomain(int nx_, int ny_, double h = 1.0)
        : nx(nx_), ny(ny_), element_size(h), active_mask(size_t(nx_) * ny_, 1) {
        require(nx >= 1 && ny >= 1, "GridDomain: nx,ny must be >= 1");
        require(element_size > 0.0, "GridDomain: element_size must be positive");
    }

    int num_cells() const { return nx * ny; }
    int idx(int ix, int iy) const { return iy * nx + ix; }
    bool active(int ix, int iy) const { return active_mask[size_t(idx(ix, iy))] != 0; }

    int num_active() const {
        int n = 0;
        for (uint8_t a : active_mask) n += (a != 0);
        return n;
    }

    int num_nodes() const { return (nx + 1) * (ny + 1); }
    int node_idx(int ix, int iy) const { return iy * (nx + 1) + ix; }
};

struct UnitCellSpec {
    double l = 1.0;       // cell side length
    double t = 0.1;       // strut thickness
    double alpha_lo = 1.0;
    double alpha_hi = 4.0;
    double base_E = 1.0;
    double base_nu = 0.3;

    void validate() const {
        require(l > 0.0 && t > 0.0 && 2.0 * t <= l, "UnitCellSpec: need 0 < 2t <= l");
        require(alpha_lo >= 1.0 && alpha_hi >= alpha_lo, "UnitCellSpec: need 1 <= alpha_lo <= alpha_hi");
        require(base_E > 0.0, "UnitCellSpec: base_E must be positive");
        require(base_nu > -1.0 && base_nu < 0.5, "UnitCellSpec: base_nu out of range");
    }
};

// Fraction of solid material in a cell scaled by alpha = (ax, ay); the
// thickness t stays constant while the side lengths elongate.
inline double cell_volume_fraction(const Eigen::Vector2d& alpha, const UnitCellSpec& spec) {
    spec.validate();
    const double wx = alpha.x() * spec.l - 2.0 * spec.t;
    const double wy = alpha.y() * spec.l - 2.0 * spec.t;
    require(wx >= 0.0 && wy >= 0.0, "cell_volume_fraction: alpha*l - 2t must be non-negative");
    return 1.0 - (wx * wy) / (alpha.x() * alpha.y() * spec.l * spec.l);
}

// d v / d alpha, analytic.
inline Eigen::Vector2d cell_volume_fraction_grad(const Eigen::Vector2d& alpha, const UnitCellSpec& spec) {
    const double l = spec.l, t = spec.t;
    const double wx = alpha.x() * l - 2.0 * t;
    const double wy = alpha.y() * l - 2.0 * t;
    const double f = wx * wy;
    const double g = alpha.x() * alpha.y() * l * l;
    Eigen::Vector2d grad;
    grad.x() = -(l * wy * g - f * alpha.y() * l * l) / (g * g);
    grad.y() = -(l * wx * g - f * alpha.x() * l * l) / (g * g);
    return grad;
}

inline double element_solid_fraction(double phi, const Eigen::Vector2d& alpha, const UnitCellSpec& spec) {
    require(phi >= 0.0 && phi <= 1.0, "element_solid_fraction: phi out of [0,1]");
    return phi * cell_volume_fraction(alpha, spec);
}

// Per-element design fields on a GridDomain.  phi/alpha are raw design
// variables; the tilde/bar variants are the regulated (filtered and
// projected) fields that enter the physics.
struct DesignFields {
    Vec phi;        // lattice fraction
    Mat alpha;      // N x 2, per-axis scaling
    std::vector<Eigen::Matrix2d> R; // per-element rotation
    Vec phi_tilde;
    Mat alpha_tilde;
    Vec phi_bar;

    static DesignFields uniform(const GridDomain& dom, double phi0, const Eigen::Vector2d& alpha0) {
        DesignFields f;
        const int n = dom.num_cells();
        f.phi = Vec::Constant(n, phi0);
        f.alpha = Mat(n, 2);
        f.alpha.col(0).setConstant(alpha0.x());
        f.alpha.col(1).setConstant(alpha0.y());
        f.R.assign(size_t(n), Eigen::Matrix2d::Identity());
        f.phi_tilde = f.phi;
        f.alpha_tilde = f.alpha;
        f.phi_bar = f.phi;
        return f;
    }
};

// Elements whose projected lattice fraction reaches tau form the shape
// handed to the lattice compiler.
inline std::vector<uint8_t> threshold_shape(const GridDomain& dom, const DesignFields& fields, double tau = 0.5) {
    require(tau > 0.0 && tau < 1.0, "threshold_shape: tau must be in (0,1)");
    require(fields.phi_bar.size() == dom.num_cells(), "threshold_shape: field size mismatch");
    std::vector<uint8_t> mask(size_t(dom.num_cells()), 0);
    int count = 0;
    for (int e = 0; e < dom.num_cells(); ++e) {
        if (dom.active_mask[size_t(e)] && fields.phi_bar[e] >= tau) {
            mask[size_t(e)] = 1;
            ++count;
        }
    }
    require(count > 0, "threshold_shape: thresholding produced an empty shape");
    return mask;
}

} // namespace latopt
