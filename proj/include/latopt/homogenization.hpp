#pragma once

// Numerical homogenization of the elongated hollow cell (2D), a lookup
// table of effective tensors over the admissible scaling box, and its
// multilinear interpolation.

#include "latopt/common.hpp"
#include "latopt/fea.hpp"
#include "latopt/grid.hpp"
#include "latopt/voigt.hpp"

#include <Eigen/SparseCholesky>

#include <fstream>
#include <sstream>

namespace latopt {

struct CellDiscretization {
    int resolution = 64; // elements per unit-cell edge, before elongation
    void validate(const UnitCellSpec& spec) const {
        require(resolution >= 16, "CellDiscretization: resolution must be >= 16");
        const double h = spec.l / resolution;
        require(spec.t / h >= 2.0, "CellDiscretization: strut thickness must span >= 2 cell elements");
    }
};

constexpr double kVoidStiffness = 1e-9;

namespace detail {

// Nodal displacements of the affine field u = eps_bar * x on a square
// element of size h, for a unit test strain in engineering notation.
inline Eigen::Matrix<double, 8, 1> affine_element_displacement(int strain_case, double h) {
    const double xy[4][2] = {{0, 0}, {h, 0}, {h, h}, {0, h}};
    Eigen::Matrix<double, 8, 1> u;
    for (int a = 0; a < 4; ++a) {
        const double x = xy[a][0], y = xy[a][1];
        double ux = 0, uy = 0;
        if (strain_case == 0) ux = x;            // e11 = 1
        else if (strain_case == 1) uy = y;       // e22 = 1
        else { ux = 0.5 * y; uy = 0.5 * x; }     // g12 = 1
        u[2 * a] = ux;
        u[2 * a + 1] = uy;
    }
    return u;
}

} // namespace detail

// Effective elasticity tensor of the rectangular hollow cell alpha_x*l by
// alpha_y*l with wall thickness t, by periodic unit-cell FE with unit test
// strains.  The hole is modeled as soft void material.
inline Mat homogenize_cell(const Eigen::Vector2d& alpha, const UnitCellSpec& spec,
                           const CellDiscretization& disc) {
    spec.validate();
    disc.validate(spec);
    require(alpha.x() >= 1.0 && alpha.y() >= 1.0, "homogenize_cell: alpha must be >= 1");

    const double h = spec.l / disc.resolution;
    const int nx = std::max(4, int(std::lround(alpha.x() * disc.resolution)));
    const int ny = std::max(4, int(std::lround(alpha.y() * disc.resolution)));
    const int tl = std::max(1, int(std::lround(spec.t / h))); // wall layers

    // solid map: walls of tl element layers on all four sides
    std::vector<uint8_t> solid(size_t(nx) * ny, 0);
    for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex)
            if (ex < tl || ex >= nx - tl || ey < tl || ey >= ny - tl)
                solid[size_t(ey) * nx + ex] = 1;

    const Mat D0 = isotropic_plane_stress(spec.base_E, spec.base_nu);
    const QuadElement elem(h);
    const Mat Ke = elem.stiffness(D0);

    // periodic node numbering: nx * ny unique nodes
    auto node = [&](int ix, int iy) { return ((iy % ny + ny) % ny) * nx + ((ix % nx + nx) % nx); };
    const int nnode = nx * ny;
    const int ndof = 2 * nnode;

    std::array<Eigen::Matrix<double, 8, 1>, 3> chi0;
    for (int c = 0; c < 3; ++c) chi0[size_t(c)] = detail::affine_element_displacement(c, h);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(nx) * ny * 64);
    Mat Fall = Mat::Zero(ndof, 3);
    for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex) {
            const double fac = solid[size_t(ey) * nx + ex] ? 1.0 : kVoidStiffness;
            const int nodes[4] = {node(ex, ey), node(ex + 1, ey), node(ex + 1, ey + 1), node(ex, ey + 1)};
            int ed[8];
            for (int a = 0; a < 4; ++a) {
                ed[2 * a] = 2 * nodes[a];
                ed[2 * a + 1] = 2 * nodes[a] + 1;
            }
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j)
                    trips.emplace_back(ed[i], ed[j], fac * Ke(i, j));
            for (int c = 0; c < 3; ++c) {
                const Eigen::Matrix<double, 8, 1> fe = fac * (Ke * chi0[size_t(c)]);
                for (int i = 0; i < 8; ++i) Fall(ed[i], c) += fe[i];
            }
        }

    SpMat K(ndof, ndof);
    K.setFromTriplets(trips.begin(), trips.end());

    // pin node 0 to remove the translational null space (loads are self-equilibrated)
    for (int d = 0; d < 2; ++d) {
        for (SpMat::InnerIterator it(K, d); it; ++it) it.valueRef() = (it.row() == d) ? 1.0 : 0.0;
        // zero the row as well (column-major storage: walk all columns)
    }
    K = K.transpose();
    for (int d = 0; d < 2; ++d)
        for (SpMat::InnerIterator it(K, d); it; ++it) it.valueRef() = (it.row() == d) ? 1.0 : 0.0;
    Fall.row(0).setZero();
    Fall.row(1).setZero();

    Eigen::SimplicialLDLT<SpMat> solver;
    solver.compute(K);
    require(solver.info() == Eigen::Success, "homogenize_cell: singular periodic system");
    Mat Chi = solver.solve(Fall);

    // energy form: CH_ij = 1/|Y| sum_e (chi0_i - chi_i)^T ke (chi0_j - chi_j)
    const double Y = (nx * h) * (ny * h);
    Mat CH = Mat::Zero(3, 3);
    for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex) {
            const double fac = solid[size_t(ey) * nx + ex] ? 1.0 : kVoidStiffness;
            const int nodes[4] = {node(ex, ey), node(ex + 1, ey), node(ex + 1, ey + 1), node(ex, ey + 1)};
            Mat diff(8, 3);
            for (int c = 0; c < 3; ++c)
                for (int a = 0; a < 4; ++a) {
                    diff(2 * a, c) = chi0[size_t(c)][2 * a] - Chi(2 * nodes[a], c);
                    diff(2 * a + 1, c) = chi0[size_t(c)][2 * a + 1] - Chi(2 * nodes[a] + 1, c);
                }
            CH += fac * (diff.transpose() * Ke * diff);
        }
    CH /= Y;
    return 0.5 * (CH + CH.transpose());
}

// Regularly sampled effective tensors over the admissible alpha box.
struct ElasticityLookup {
    int k = 2;                      // spatial dimension
    std::vector<double> samples_x;  // strictly increasing, includes bounds
    std::vector<double> samples_y;
    std::vector<double> samples_z;  // empty for k == 2
    std::vector<Mat> D_table;       // row-major over (ix fastest)
    std::vector<double> v_table;    // solid fractions (3D ingestion); may be empty in 2D
    mutable long clamp_warnings = 0;

    int nsx() const { return int(samples_x.size()); }
    int nsy() const { return int(samples_y.size()); }
    int nsz() const { return k == 2 ? 1 : int(samples_z.size()); }

    const Mat& at(int ix, int iy, int iz = 0) const {
        return D_table[size_t((iz * nsy() + iy) * nsx() + ix)];
    }
};

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) v[size_t(i)] = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

inline ElasticityLookup build_lookup(const UnitCellSpec& spec, int samples_per_axis,
                                     const CellDiscretization& disc) {
    require(samples_per_axis >= 2, "build_lookup: need >= 2 samples per axis");
    ElasticityLookup lut;
    lut.k = 2;
    lut.samples_x = linspace(spec.alpha_lo, spec.alpha_hi, samples_per_axis);
    lut.samples_y = lut.samples_x;
    lut.D_table.resize(size_t(samples_per_axis) * samples_per_axis);
    for (int iy = 0; iy < samples_per_axis; ++iy)
        for (int ix = 0; ix < samples_per_axis; ++ix) {
            if (ix < iy) {
                // D(ax, ay) is D(ay, ax) with the two axes exchanged
                Mat S = lut.D_table[size_t(ix) * samples_per_axis + iy];
                std::swap(S(0, 0), S(1, 1));
                std::swap(S(0, 2), S(1, 2));
                std::swap(S(2, 0), S(2, 1));
                lut.D_table[size_t(iy) * samples_per_axis + ix] = S;
            } else {
                lut.D_table[size_t(iy) * samples_per_axis + ix] =
                    homogenize_cell({lut.samples_x[size_t(ix)], lut.samples_y[size_t(iy)]}, spec, disc);
            }
        }
    return lut;
}

namespace detail {

struct AxisLocator {
    int i0;
    double w; // weight of the upper sample
};

inline AxisLocator locate(const std::vector<double>& s, double v, long& clamp_count) {
    if (v < s.front() || v > s.back()) {
        ++clamp_count;
        v = std::min(s.back(), std::max(s.front(), v));
    }
    int i0 = int(std::upper_bound(s.begin(), s.end(), v) - s.begin()) - 1;
    i0 = std::min(i0, int(s.size()) - 2);
    i0 = std::max(i0, 0);
    const double w = (v - s[size_t(i0)]) / (s[size_t(i0 + 1)] - s[size_t(i0)]);
    return {i0, w};
}

} // namespace detail

// Entrywise multilinear interpolation of the sampled tensors.
inline Mat interpolate_D(const ElasticityLookup& lut, const Vec& alpha) {
    require(alpha.size() == lut.k, "interpolate_D: alpha dimension mismatch");
    const auto lx = detail::locate(lut.samples_x, alpha[0], lut.clamp_warnings);
    const auto ly = detail::locate(lut.samples_y, alpha[1], lut.clamp_warnings);
    if (lut.k == 2) {
        return (1 - lx.w) * (1 - ly.w) * lut.at(lx.i0, ly.i0) +
               lx.w * (1 - ly.w) * lut.at(lx.i0 + 1, ly.i0) +
               (1 - lx.w) * ly.w * lut.at(lx.i0, ly.i0 + 1) +
               lx.w * ly.w * lut.at(lx.i0 + 1, ly.i0 + 1);
    }
    const auto lz = detail::locate(lut.samples_z, alpha[2], lut.clamp_warnings);
    Mat out = Mat::Zero(lut.D_table.front().rows(), lut.D_table.front().cols());
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? lx.w : 1 - lx.w) * (dy ? ly.w : 1 - ly.w) * (dz ? lz.w : 1 - lz.w);
                out += w * lut.at(lx.i0 + dx, ly.i0 + dy, lz.i0 + dz);
            }
    return out;
}

// Analytic derivative of the multilinear interpolant along one alpha axis
// (piecewise constant per table cell).
inline Mat interpolate_D_grad(const ElasticityLookup& lut, const Vec& alpha, int axis) {
    require(lut.k == 2, "interpolate_D_grad: implemented for 2D tables");
    const auto lx = detail::locate(lut.samples_x, alpha[0], lut.clamp_warnings);
    const auto ly = detail::locate(lut.samples_y, alpha[1], lut.clamp_warnings);
    if (axis == 0) {
        const double dx = lut.samples_x[size_t(lx.i0 + 1)] - lut.samples_x[size_t(lx.i0)];
        return ((1 - ly.w) * (lut.at(lx.i0 + 1, ly.i0) - lut.at(lx.i0, ly.i0)) +
                ly.w * (lut.at(lx.i0 + 1, ly.i0 + 1) - lut.at(lx.i0, ly.i0 + 1))) / dx;
    }
    const double dy = lut.samples_y[size_t(ly.i0 + 1)] - lut.samples_y[size_t(ly.i0)];
    return ((1 - lx.w) * (lut.at(lx.i0, ly.i0 + 1) - lut.at(lx.i0, ly.i0)) +
            lx.w * (lut.at(lx.i0 + 1, ly.i0 + 1) - lut.at(lx.i0 + 1, ly.i0))) / dy;
}

// --- serialization -------------------------------------------------------

inline void save_lookup(const ElasticityLookup& lut, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_lookup: cannot open " + path);
    out.precision(17);
    out << "latopt_dtable 1\n";
    out << "k " << lut.k << "\n";
    auto axis = [&](const char* name, const std::vector<double>& s) {
        out << name << " " << s.size();
        for (double v : s) out << " " << v;
        out << "\n";
    };
    axis("samples_x", lut.samples_x);
    axis("samples_y", lut.samples_y);
    if (lut.k == 3) axis("samples_z", lut.samples_z);
    const int m = int(lut.D_table.front().rows());
    out << "voigt " << m << "\n";
    for (const Mat& D : lut.D_table) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) out << D(i, j) << (i == m - 1 && j == m - 1 ? "" : " ");
        out << "\n";
    }
    if (!lut.v_table.empty()) {
        out << "v_table";
        for (double v : lut.v_table) out << " " << v;
        out << "\n";
    }
}

inline ElasticityLookup load_lookup(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_lookup: cannot open " + path);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    require(tag == "latopt_dtable" && version == 1, "load_lookup: unrecognized format in " + path);
    ElasticityLookup lut;
    auto read_axis = [&](std::vector<double>& s) {
        size_t n;
        in >> n;
        s.resize(n);
        for (double& v : s) in >> v;
    };
    int m = 0;
    while (in >> tag) {
        if (tag == "k") in >> lut.k;
        else if (tag == "samples_x") read_axis(lut.samples_x);
        else if (tag == "samples_y") read_axis(lut.samples_y);
        else if (tag == "samples_z") read_axis(lut.samples_z);
        else if (tag == "voigt") {
            in >> m;
            const size_t n = lut.samples_x.size() * lut.samples_y.size() *
                             (lut.k == 3 ? lut.samples_z.size() : 1);
            lut.D_table.assign(n, Mat::Zero(m, m));
            for (Mat& D : lut.D_table)
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) in >> D(i, j);
        } else if (tag == "v_table") {
            const size_t n = lut.D_table.size();
            lut.v_table.resize(n);
            for (double& v : lut.v_table) in >> v;
        } else {
            throw Error("load_lookup: unknown field '" + tag + "' in " + path);
        }
    }
    require(!lut.D_table.empty(), "load_lookup: table has no entries");
    require(m == voigt_dim(lut.k), "load_lookup: tensor size does not match dimension");
    return lut;
}

} // namespace latopt
