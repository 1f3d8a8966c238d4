#pragma once

// Elasticity tensors in engineering (Voigt) notation and their rotation.
// Component ordering: 2D (11, 22, 12); 3D (11, 22, 33, 23, 13, 12).

#include "latopt/common.hpp"

namespace latopt {

// Plane-stress isotropic elasticity matrix (3x3).
inline Mat isotropic_plane_stress(double E, double nu) {
    require(E > 0.0, "isotropic_plane_stress: E must be positive");
    require(nu > -1.0 && nu < 0.5, "isotropic_plane_stress: invalid Poisson ratio");
    Mat D = Mat::Zero(3, 3);
    const double f = E / (1.0 - nu * nu);
    D(0, 0) = D(1, 1) = f;
    D(0, 1) = D(1, 0) = f * nu;
    D(2, 2) = f * (1.0 - nu) / 2.0;
    return D;
}

// Isotropic 3D elasticity matrix (6x6), engineering shear strains.
inline Mat isotropic_3d(double E, double nu) {
    require(E > 0.0, "isotropic_3d: E must be positive");
    const double lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = E / (2.0 * (1.0 + nu));
    Mat D = Mat::Zero(6, 6);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) D(i, j) = lam;
        D(i, i) = lam + 2.0 * mu;
        D(3 + i, 3 + i) = mu;
    }
    return D;
}

inline void check_rotation(const Mat& R, const char* who) {
    require(R.rows() == R.cols() && (R.rows() == 2 || R.rows() == 3),
            std::string(who) + ": rotation must be 2x2 or 3x3");
    const double err = (R.transpose() * R - Mat::Identity(R.rows(), R.cols())).norm();
    require(err <= 1e-8, std::string(who) + ": matrix is not orthonormal");
    require(R.determinant() > 0.0, std::string(who) + ": determinant must be +1");
}

// Rotation operator for elasticity tensors in engineering notation,
// D' = Rbar * D * Rbar^T.  Accepts a 2x2 or 3x3 rotation matrix.
inline Mat rotation_to_voigt(const Mat& Rin) {
    check_rotation(Rin, "rotation_to_voigt");
    Mat R;
    if (Rin.rows() == 2) {
        // embed the in-plane rotation with the z axis as third direction
        R = Mat::Identity(3, 3);
        R.block(0, 0, 2, 2) = Rin;
    } else {
        R = Rin;
    }
    auto l = [&](int i) { return R(i, 0); };
    auto m = [&](int i) { return R(i, 1); };
    auto n = [&](int i) { return R(i, 2); };

    Mat Rb = Mat::Zero(6, 6);
    for (int i = 0; i < 3; ++i) {
        // block A
        Rb(i, 0) = l(i) * l(i);
        Rb(i, 1) = m(i) * m(i);
        Rb(i, 2) = n(i) * n(i);
        // block B
        Rb(i, 3) = 2.0 * m(i) * n(i);
        Rb(i, 4) = 2.0 * n(i) * l(i);
        Rb(i, 5) = 2.0 * l(i) * m(i);
    }
    const int j0[3] = {1, 2, 0}; // index pairs (2,3),(3,1),(1,2)
    const int j1[3] = {2, 0, 1};
    for (int r = 0; r < 3; ++r) {
        const int a = j0[r], b = j1[r];
        // block C
        Rb(3 + r, 0) = l(a) * l(b);
        Rb(3 + r, 1) = m(a) * m(b);
        Rb(3 + r, 2) = n(a) * n(b);
        // block D
        Rb(3 + r, 3) = m(a) * n(b) + m(b) * n(a);
        Rb(3 + r, 4) = n(a) * l(b) + n(b) * l(a);
        Rb(3 + r, 5) = m(a) * l(b) + m(b) * l(a);
    }
    if (Rin.rows() == 2) {
        // restrict to in-plane components (11, 22, 12)
        Mat Rb2(3, 3);
        const int idx[3] = {0, 1, 5};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) Rb2(i, j) = Rb(idx[i], idx[j]);
        return Rb2;
    }
    return Rb;
}

inline Mat rotate_tensor(const Mat& D, const Mat& R) {
    require(D.rows() == D.cols(), "rotate_tensor: D must be square");
    require((D - D.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + D.cwiseAbs().maxCoeff()),
            "rotate_tensor: D must be symmetric");
    const Mat Rb = rotation_to_voigt(R);
    require(Rb.rows() == D.rows(), "rotate_tensor: dimension mismatch between D and R");
    Mat Dp = Rb * D * Rb.transpose();
    return 0.5 * (Dp + Dp.transpose());
}

// Work-conjugate strain transform: if D' = Rbar D Rbar^T then
// eps' = strain_transform(R) * eps satisfies eps'^T D' eps' = eps^T D eps.
inline Mat strain_transform(const Mat& R) {
    return rotation_to_voigt(R.transpose()).transpose();
}

} // namespace latopt
