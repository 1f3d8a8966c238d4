#pragma once

// Finite element analysis on the regular grid: bilinear quad stiffness,
// sparse solve of the equilibrium equation, stress recovery, and
// principal stress directions.

#include "latopt/common.hpp"
#include "latopt/grid.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>

#include <array>

namespace latopt {

// Bilinear square element of edge length h.  Caches the strain-displacement
// matrices at the 2x2 Gauss points and at the element center.
struct QuadElement {
    std::array<Mat, 4> B_gp;
    std::array<double, 4> w_gp; // weight * detJ
    Mat B_center;
    double element_size = 1.0;

    explicit QuadElement(double h = 1.0) : element_size(h) {
        require(h > 0.0, "QuadElement: element size must be positive");
        const double g = 1.0 / std::sqrt(3.0);
        const double pts[4][2] = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
        for (int i = 0; i < 4; ++i) {
            B_gp[i] = strain_displacement(pts[i][0], pts[i][1], h);
            w_gp[i] = (h / 2.0) * (h / 2.0); // unit weights, constant Jacobian
        }
        B_center = strain_displacement(0.0, 0.0, h);
    }

    // B(xi,eta), 3x8, dof order (u0,v0,...,u3,v3), nodes CCW from (0,0).
    static Mat strain_displacement(double xi, double eta, double h) {
        const double dN_dxi[4] = {-(1 - eta) / 4, (1 - eta) / 4, (1 + eta) / 4, -(1 + eta) / 4};
        const double dN_deta[4] = {-(1 - xi) / 4, -(1 + xi) / 4, (1 + xi) / 4, (1 - xi) / 4};
        const double s = 2.0 / h; // d(xi)/dx
        Mat B = Mat::Zero(3, 8);
        for (int a = 0; a < 4; ++a) {
            const double dNdx = dN_dxi[a] * s;
            const double dNdy = dN_deta[a] * s;
            B(0, 2 * a) = dNdx;
            B(1, 2 * a + 1) = dNdy;
            B(2, 2 * a) = dNdy;
            B(2, 2 * a + 1) = dNdx;
        }
        return B;
    }

    Mat stiffness(const Mat& D) const {
        Mat Ke = Mat::Zero(8, 8);
        for (int i = 0; i < 4; ++i) Ke += w_gp[i] * (B_gp[i].transpose() * D * B_gp[i]);
        return 0.5 * (Ke + Ke.transpose());
    }
};

// Power-law penalization of the element stiffness by the projected
// lattice fraction; the small floor keeps the global system SPD.
constexpr double kPhiMin = 1e-9;

inline double penalization_factor(double phi_bar, double p) {
    require(phi_bar >= 0.0 && phi_bar <= 1.0 + 1e-12, "penalization_factor: phi out of [0,1]");
    require(p >= 1.0, "penalization_factor: p must be >= 1");
    return kPhiMin + (1.0 - kPhiMin) * std::pow(phi_bar, p);
}

inline double penalization_factor_grad(double phi_bar, double p) {
    return (1.0 - kPhiMin) * p * std::pow(phi_bar, p - 1.0);
}

inline Mat penalized_stiffness(double phi_bar, const Mat& Ke, double p) {
    return penalization_factor(phi_bar, p) * Ke;
}

struct BoundaryConditions {
    std::vector<uint8_t> fixed; // per dof (2 per node)
    Vec F;

    static BoundaryConditions empty(const GridDomain& dom) {
        BoundaryConditions bc;
        bc.fixed.assign(size_t(dom.num_nodes()) * 2, 0);
        bc.F = Vec::Zero(dom.num_nodes() * 2);
        return bc;
    }

    void fix_node(const GridDomain& dom, int ix, int iy, bool fx = true, bool fy = true) {
        const int n = dom.node_idx(ix, iy);
        if (fx) fixed[size_t(2 * n)] = 1;
        if (fy) fixed[size_t(2 * n + 1)] = 1;
    }

    void add_load(const GridDomain& dom, int ix, int iy, double fx, double fy) {
        const int n = dom.node_idx(ix, iy);
        F[2 * n] += fx;
        F[2 * n + 1] += fy;
    }

    void validate() const {
        int nfix = 0;
        for (size_t i = 0; i < fixed.size(); ++i) {
            if (fixed[i]) {
                require(F[Eigen::Index(i)] == 0.0, "BoundaryConditions: load on fixed dof");
                ++nfix;
            }
        }
        require(nfix >= 3, "BoundaryConditions: insufficient constraints (rigid modes remain)");
    }
};

inline std::array<int, 4> element_nodes(const GridDomain& dom, int ex, int ey) {
    return {dom.node_idx(ex, ey), dom.node_idx(ex + 1, ey),
            dom.node_idx(ex + 1, ey + 1), dom.node_idx(ex, ey + 1)};
}

inline Eigen::Matrix<double, 8, 1> gather_element(const GridDomain& dom, int ex, int ey, const Vec& U) {
    const auto nodes = element_nodes(dom, ex, ey);
    Eigen::Matrix<double, 8, 1> Ue;
    for (int a = 0; a < 4; ++a) {
        Ue[2 * a] = U[2 * nodes[size_t(a)]];
        Ue[2 * a + 1] = U[2 * nodes[size_t(a)] + 1];
    }
    return Ue;
}

enum class SolverBackend { Direct, ConjugateGradient };

// Assembles K from per-element 8x8 stiffness matrices (callback) and solves
// K U = F with fixed dofs eliminated.  Elements outside the active mask are
// skipped; nodes not touched by any active element are dropped from the
// system and report zero displacement.
template <typename ElementStiffnessFn>
Vec solve_equilibrium(const GridDomain& dom, const BoundaryConditions& bc,
                      ElementStiffnessFn&& element_Ke,
                      SolverBackend backend = SolverBackend::Direct) {
    bc.validate();
    const int ndof = dom.num_nodes() * 2;
    require(bc.F.size() == ndof, "solve_equilibrium: load vector size mismatch");

    std::vector<uint8_t> touched(size_t(ndof), 0);
    for (int ey = 0; ey < dom.ny; ++ey)
        for (int ex = 0; ex < dom.nx; ++ex) {
            if (!dom.active(ex, ey)) continue;
            for (int n : element_nodes(dom, ex, ey)) {
                touched[size_t(2 * n)] = 1;
                touched[size_t(2 * n + 1)] = 1;
            }
        }

    std::vector<int> dof_map(size_t(ndof), -1);
    int nfree = 0;
    for (int d = 0; d < ndof; ++d)
        if (touched[size_t(d)] && !bc.fixed[size_t(d)]) dof_map[size_t(d)] = nfree++;

    for (int d = 0; d < ndof; ++d)
        require(bc.F[d] == 0.0 || dof_map[size_t(d)] >= 0, "solve_equilibrium: load on inactive dof");

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(size_t(dom.num_active()) * 64);
    for (int ey = 0; ey < dom.ny; ++ey)
        for (int ex = 0; ex < dom.nx; ++ex) {
            if (!dom.active(ex, ey)) continue;
            const Mat Ke = element_Ke(ex, ey);
            const auto nodes = element_nodes(dom, ex, ey);
            int ed[8];
            for (int a = 0; a < 4; ++a) {
                ed[2 * a] = dof_map[size_t(2 * nodes[size_t(a)])];
                ed[2 * a + 1] = dof_map[size_t(2 * nodes[size_t(a)] + 1)];
            }
            for (int i = 0; i < 8; ++i) {
                if (ed[i] < 0) continue;
                for (int j = 0; j < 8; ++j)
                    if (ed[j] >= 0) trips.emplace_back(ed[i], ed[j], Ke(i, j));
            }
        }

    SpMat K(nfree, nfree);
    K.setFromTriplets(trips.begin(), trips.end());
    trips.clear();
    trips.shrink_to_fit();

    Vec Fr(nfree);
    for (int d = 0; d < ndof; ++d)
        if (dof_map[size_t(d)] >= 0) Fr[dof_map[size_t(d)]] = bc.F[d];

    Vec Ur;
    if (backend == SolverBackend::Direct) {
        Eigen::SimplicialLDLT<SpMat> solver;
        solver.compute(K);
        require(solver.info() == Eigen::Success, "solve_equilibrium: factorization failed (indefinite system?)");
        Ur = solver.solve(Fr);
        require(solver.info() == Eigen::Success, "solve_equilibrium: back-substitution failed");
        // iterative refinement: ill-conditioned systems (e.g. rasterized
        // lattices with pixel-corner joints) can leave a residual above the
        // acceptance gate after a single back-substitution
        for (int pass = 0; pass < 3; ++pass) {
            const Vec R = Fr - K * Ur;
            if (R.norm() <= 1e-9 * Fr.norm()) break;
            Ur += solver.solve(R);
        }
    } else {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        cg.setTolerance(1e-10);
        cg.setMaxIterations(20000);
        cg.compute(K);
        Ur = cg.solve(Fr);
        require(cg.info() == Eigen::Success, "solve_equilibrium: conjugate gradient did not converge");
    }
    const double fnorm = Fr.norm();
    if (fnorm > 0.0) {
        const double rel = (K * Ur - Fr).norm() / fnorm;
        require(rel <= 1e-8, "solve_equilibrium: residual too large: " + std::to_string(rel));
    }

    Vec U = Vec::Zero(ndof);
    for (int d = 0; d < ndof; ++d)
        if (dof_map[size_t(d)] >= 0) U[d] = Ur[dof_map[size_t(d)]];
    return U;
}

inline double compliance(const Vec& F, const Vec& U) { return 0.5 * F.dot(U); }

struct StressStrain {
    Eigen::Vector3d strain; // (e11, e22, g12)
    Eigen::Vector3d stress; // (s11, s22, s12)
};

inline StressStrain element_stress_strain(const GridDomain& dom, int ex, int ey,
                                          const Vec& U, const Mat& D, const QuadElement& elem) {
    StressStrain out;
    out.strain = elem.B_center * gather_element(dom, ex, ey, U);
    out.stress = D * out.strain;
    return out;
}

// Principal stress directions of a symmetric 2D stress in engineering
// notation.  Rows of the returned matrix are the eigenvectors, ordered by
// ascending eigenvalue.  Near-isotropic stress keeps the previous frame;
// otherwise the sign is chosen for continuity with prev_R.
inline Eigen::Matrix2d principal_directions(const Eigen::Vector3d& sigma,
                                            const Eigen::Matrix2d& prev_R,
                                            double eps_iso = 1e-6) {
    Eigen::Matrix2d S;
    S << sigma[0], sigma[2], sigma[2], sigma[1];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
    const double g1 = es.eigenvalues()[0], g2 = es.eigenvalues()[1];
    if (std::abs(g2 - g1) < eps_iso * std::max(1.0, std::max(std::abs(g1), std::abs(g2))))
        return prev_R;

    Eigen::Matrix2d R;
    R.row(0) = es.eigenvectors().col(0).transpose();
    R.row(1) = es.eigenvectors().col(1).transpose();
    if (R.determinant() < 0.0) R.row(1) = -R.row(1);
    // both R and -R are valid; keep the one closer to the previous frame
    if ((R - prev_R).squaredNorm() > (-R - prev_R).squaredNorm()) R = -R;
    return R;
}

} // namespace latopt
