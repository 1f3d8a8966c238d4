#include <latopt/voigt.hpp>

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace latopt;

TEST_CASE("rotation operator maps identity to identity") {
    CHECK((rotation_to_voigt(Eigen::Matrix2d::Identity()) - Mat::Identity(3, 3)).norm() < 1e-14);
    CHECK((rotation_to_voigt(Eigen::Matrix3d::Identity()) - Mat::Identity(6, 6)).norm() < 1e-14);
}

TEST_CASE("rotation operator rejects non-rotations") {
    Mat S = 2.0 * Mat::Identity(3, 3);
    CHECK_THROWS_AS(rotation_to_voigt(S), Error);
    Mat F = Mat::Identity(3, 3);
    F(0, 0) = -1.0; // reflection
    CHECK_THROWS_AS(rotation_to_voigt(F), Error);
}

TEST_CASE("rotation operator is a homomorphism (2D and 3D)") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Matrix2d A2 = testutil::random_rotation2(rng);
        const Eigen::Matrix2d B2 = testutil::random_rotation2(rng);
        CHECK((rotation_to_voigt(Eigen::Matrix2d(A2 * B2)) -
               rotation_to_voigt(A2) * rotation_to_voigt(B2)).norm() < 1e-12);

        const Eigen::Matrix3d A3 = testutil::random_rotation3(rng);
        const Eigen::Matrix3d B3 = testutil::random_rotation3(rng);
        CHECK((rotation_to_voigt(Eigen::Matrix3d(A3 * B3)) -
               rotation_to_voigt(A3) * rotation_to_voigt(B3)).norm() < 1e-12);
    }
}

TEST_CASE("transpose rotation inverts the operator") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Matrix3d R = testutil::random_rotation3(rng);
        const Mat Rb = rotation_to_voigt(R);
        const Mat Rbt = rotation_to_voigt(Eigen::Matrix3d(R.transpose()));
        CHECK((Rb * Rbt - Mat::Identity(6, 6)).norm() < 1e-12);
    }
}

TEST_CASE("isotropic tensors are rotation invariant") {
    std::mt19937_64 rng(13);
    const Mat D2 = isotropic_plane_stress(1.0, 0.3);
    const Mat D3 = isotropic_3d(1.0, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
        CHECK((rotate_tensor(D2, testutil::random_rotation2(rng)) - D2).norm() < 1e-12);
        CHECK((rotate_tensor(D3, testutil::random_rotation3(rng)) - D3).norm() < 1e-12);
    }
}

TEST_CASE("90 degree rotation exchanges the orthotropic axes") {
    Mat D = Mat::Zero(3, 3);
    D << 2.0, 0.3, 0.0, 0.3, 1.0, 0.0, 0.0, 0.0, 0.4;
    const Mat Dr = rotate_tensor(D, testutil::rotation2(M_PI / 2.0));
    CHECK(Dr(0, 0) == Catch::Approx(D(1, 1)).margin(1e-12));
    CHECK(Dr(1, 1) == Catch::Approx(D(0, 0)).margin(1e-12));
    CHECK(Dr(0, 1) == Catch::Approx(D(0, 1)).margin(1e-12));
    CHECK(Dr(2, 2) == Catch::Approx(D(2, 2)).margin(1e-12));
}

TEST_CASE("strain transform preserves strain energy") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const bool three_d = trial % 2 == 0;
        const int m = three_d ? 6 : 3;
        Mat A = Mat::NullaryExpr(m, m, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
        const Mat D = A * A.transpose(); // symmetric PSD
        Vec eps = Vec::NullaryExpr(m, [&](Eigen::Index) { return gauss(rng); });
        Mat R;
        if (three_d) R = testutil::random_rotation3(rng);
        else R = testutil::random_rotation2(rng);
        const Mat Dp = rotate_tensor(D, R);
        const Vec eps_p = strain_transform(R) * eps;
        const double e0 = eps.dot(D * eps);
        const double e1 = eps_p.dot(Dp * eps_p);
        CHECK(std::abs(e1 - e0) < 1e-8 * std::max(1.0, std::abs(e0)));
    }
}

TEST_CASE("2D operator is the in-plane restriction of the 3D operator") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Matrix2d R2 = testutil::random_rotation2(rng);
        Eigen::Matrix3d R3 = Eigen::Matrix3d::Identity();
        R3.block<2, 2>(0, 0) = R2;
        const Mat Rb2 = rotation_to_voigt(R2);
        const Mat Rb3 = rotation_to_voigt(R3);
        const int idx[3] = {0, 1, 5};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(Rb2(i, j) == Catch::Approx(Rb3(idx[i], idx[j])).margin(1e-14));
    }
}
