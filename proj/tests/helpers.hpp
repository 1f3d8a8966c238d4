#pragma once

// Shared fixtures for the test binaries: a small cached elasticity table
// and random rotation generators.

#include <latopt/frame_graph.hpp>
#include <latopt/homogenization.hpp>

#include <filesystem>
#include <functional>
#include <random>

namespace testutil {

// 10t hollow cell used throughout: l = 1, t = 0.1, alpha in [1, 4].
inline latopt::UnitCellSpec paper_cell() {
    latopt::UnitCellSpec spec;
    spec.l = 1.0;
    spec.t = 0.1;
    spec.alpha_lo = 1.0;
    spec.alpha_hi = 4.0;
    spec.base_E = 1.0;
    spec.base_nu = 0.3;
    return spec;
}

// Coarse table for cheap tests, built once per process and cached on disk
// so repeated test runs skip the homogenization solves entirely.
inline const latopt::ElasticityLookup& small_lookup() {
    static const latopt::ElasticityLookup lut = [] {
        const std::string cache = "dtable_test_32x5.txt";
        if (std::filesystem::exists(cache)) return latopt::load_lookup(cache);
        latopt::CellDiscretization disc{32};
        auto l = latopt::build_lookup(paper_cell(), 5, disc);
        latopt::save_lookup(l, cache);
        return l;
    }();
    return lut;
}

inline Eigen::Matrix2d rotation2(double theta) {
    Eigen::Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return R;
}

inline Eigen::Matrix2d random_rotation2(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
    return rotation2(uni(rng));
}

inline Eigen::Matrix3d random_rotation3(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return q.toRotationMatrix();
}

// Independent periodic homogenization used as an oracle.  Formulated
// differently from the library: full (n+1)x(n+1) node grid, periodicity
// imposed through a sparse master-slave mapping P, global affine field u0,
// fluctuation w solving  P^T K P w = -P^T K u0,  and the effective tensor
// from total-field energies.  With tile > 1 the periodic domain covers a
// tile x tile repetition of the cell, so the grid is tile times larger.
inline latopt::Mat brute_force_homogenize(const Eigen::Vector2d& alpha,
                                          const latopt::UnitCellSpec& spec, int resolution,
                                          int tile = 1) {
    using namespace latopt;
    const double h = spec.l / resolution;
    const int cx = int(std::lround(alpha.x() * resolution));
    const int cy = int(std::lround(alpha.y() * resolution));
    const int nx = tile * cx;
    const int ny = tile * cy;
    const int tl = int(std::lround(spec.t / h));

    auto solid = [&](int ex, int ey) {
        const int ux = ex % cx, uy = ey % cy;
        return ux < tl || ux >= cx - tl || uy < tl || uy >= cy - tl;
    };

    const Mat D0 = isotropic_plane_stress(spec.base_E, spec.base_nu);
    const Mat Ke = QuadElement(h).stiffness(D0);

    const int nnode = (nx + 1) * (ny + 1);
    const int ndof = 2 * nnode;
    auto nid = [&](int ix, int iy) { return iy * (nx + 1) + ix; };

    std::vector<Eigen::Triplet<double>> trips;
    for (int ey = 0; ey < ny; ++ey)
        for (int ex = 0; ex < nx; ++ex) {
            const double fac = solid(ex, ey) ? 1.0 : kVoidStiffness;
            const int nodes[4] = {nid(ex, ey), nid(ex + 1, ey), nid(ex + 1, ey + 1), nid(ex, ey + 1)};
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j)
                    trips.emplace_back(2 * nodes[i / 2] + i % 2, 2 * nodes[j / 2] + j % 2,
                                       fac * Ke(i, j));
        }
    SpMat K(ndof, ndof);
    K.setFromTriplets(trips.begin(), trips.end());

    // periodic fluctuation space: master node per wrap class, node (0,0) pinned
    std::vector<int> master(size_t(nnode), 0);
    for (int iy = 0; iy <= ny; ++iy)
        for (int ix = 0; ix <= nx; ++ix) master[size_t(nid(ix, iy))] = nid(ix % nx, iy % ny);
    std::vector<int> red(size_t(ndof), -1);
    int nred = 0;
    for (int n = 0; n < nnode; ++n)
        if (master[size_t(n)] == n && n != 0) {
            red[size_t(2 * n)] = nred++;
            red[size_t(2 * n + 1)] = nred++;
        }
    std::vector<Eigen::Triplet<double>> pt;
    for (int n = 0; n < nnode; ++n) {
        const int m = master[size_t(n)];
        for (int d = 0; d < 2; ++d)
            if (red[size_t(2 * m + d)] >= 0) pt.emplace_back(2 * n + d, red[size_t(2 * m + d)], 1.0);
    }
    SpMat P(ndof, nred);
    P.setFromTriplets(pt.begin(), pt.end());

    const SpMat Kr = P.transpose() * K * P;
    Eigen::SimplicialLDLT<SpMat> solver;
    solver.compute(Kr);
    require(solver.info() == Eigen::Success, "brute_force_homogenize: factorization failed");

    Mat Utot(ndof, 3);
    for (int c = 0; c < 3; ++c) {
        Eigen::Vector3d eps = Eigen::Vector3d::Zero();
        eps[c] = 1.0;
        Vec u0(ndof);
        for (int iy = 0; iy <= ny; ++iy)
            for (int ix = 0; ix <= nx; ++ix) {
                const double x = ix * h, y = iy * h;
                u0[2 * nid(ix, iy)] = eps[0] * x + 0.5 * eps[2] * y;
                u0[2 * nid(ix, iy) + 1] = eps[1] * y + 0.5 * eps[2] * x;
            }
        const Vec w = solver.solve(Vec(-P.transpose() * (K * u0)));
        Utot.col(c) = u0 + P * w;
    }

    const double Y = (nx * h) * (ny * h);
    Mat CH = Utot.transpose() * K * Utot / Y;
    return 0.5 * (CH + CH.transpose());
}

// Dense 2D sampling of a frame field over a square with 8-neighborhood
// edges, for compiler tests.
inline latopt::FrameGraphData
grid_field_2d(int n, double spacing, double h_target,
              const std::function<Eigen::Matrix2d(double, double)>& frame,
              const Eigen::Vector2d& s) {
    latopt::FrameGraphData g;
    g.k = 2;
    g.h = h_target;
    const int nv = n * n;
    g.X = latopt::Mat(nv, 2);
    g.S = latopt::Mat(nv, 2);
    g.R.resize(size_t(nv));
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const int i = iy * n + ix;
            g.X(i, 0) = ix * spacing;
            g.X(i, 1) = iy * spacing;
            g.S(i, 0) = s.x();
            g.S(i, 1) = s.y();
            g.R[size_t(i)] = frame(g.X(i, 0), g.X(i, 1));
        }
    const int offs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            for (const auto& o : offs) {
                const int jx = ix + o[0], jy = iy + o[1];
                if (jx < 0 || jx >= n || jy < 0 || jy >= n) continue;
                g.edges.emplace_back(iy * n + ix, jy * n + jx);
            }
    return g;
}

// Constant-field cube with the 26-neighborhood, for 3D compiler tests.
inline latopt::FrameGraphData cube_field_3d(int n, double spacing, double h_target) {
    latopt::FrameGraphData g;
    g.k = 3;
    g.h = h_target;
    const int nv = n * n * n;
    g.X = latopt::Mat(nv, 3);
    g.S = latopt::Mat::Ones(nv, 3);
    g.R.assign(size_t(nv), latopt::Mat::Identity(3, 3));
    auto id = [&](int i, int j, int k) { return (k * n + j) * n + i; };
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                g.X(id(i, j, k), 0) = i * spacing;
                g.X(id(i, j, k), 1) = j * spacing;
                g.X(id(i, j, k), 2) = k * spacing;
            }
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                for (int dk = -1; dk <= 1; ++dk)
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int di = -1; di <= 1; ++di) {
                            if (di == 0 && dj == 0 && dk == 0) continue;
                            const int ii = i + di, jj = j + dj, kk = k + dk;
                            if (ii < 0 || ii >= n || jj < 0 || jj >= n || kk < 0 || kk >= n)
                                continue;
                            if (id(i, j, k) < id(ii, jj, kk))
                                g.edges.emplace_back(id(i, j, k), id(ii, jj, kk));
                        }
    return g;
}

} // namespace testutil
