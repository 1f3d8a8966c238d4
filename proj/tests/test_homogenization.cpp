#include <latopt/homogenization.hpp>

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

using namespace latopt;
using testutil::brute_force_homogenize;

TEST_CASE("fully solid cell reproduces the base material") {
    UnitCellSpec spec = testutil::paper_cell();
    spec.t = 0.5; // walls meet: no hole
    const Mat CH = homogenize_cell({1.0, 1.0}, spec, {32});
    const Mat D0 = isotropic_plane_stress(spec.base_E, spec.base_nu);
    CHECK((CH - D0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("hollow cell matches the independent periodic oracle") {
    const UnitCellSpec spec = testutil::paper_cell();
    // oracle at twice the grid size: a 2x2 periodic tiling of the cell
    const Mat A = homogenize_cell({1.0, 1.0}, spec, {32});
    const Mat B = brute_force_homogenize({1.0, 1.0}, spec, 32, 2);
    const double scale = B.cwiseAbs().maxCoeff();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(A(i, j) - B(i, j)) <= 0.02 * std::max(std::abs(B(i, j)), 1e-3 * scale));
}

TEST_CASE("elongated cell matches the oracle and breaks symmetry as expected") {
    const UnitCellSpec spec = testutil::paper_cell();
    const Mat A = homogenize_cell({2.0, 1.0}, spec, {32});
    const Mat B = brute_force_homogenize({2.0, 1.0}, spec, 32, 2);
    const double scale = B.cwiseAbs().maxCoeff();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(A(i, j) - B(i, j)) <= 0.02 * std::max(std::abs(B(i, j)), 1e-3 * scale));
    // stretching along x spreads the vertical walls apart, so the cell
    // softens against loading in y
    CHECK(A(1, 1) < A(0, 0));
}

TEST_CASE("effective tensor is symmetric positive definite and softer than solid") {
    const UnitCellSpec spec = testutil::paper_cell();
    const Mat CH = homogenize_cell({1.5, 2.5}, spec, {32});
    CHECK((CH - CH.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> es(CH);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    const Mat D0 = isotropic_plane_stress(spec.base_E, spec.base_nu);
    CHECK(CH(0, 0) < D0(0, 0));
    CHECK(CH(2, 2) < D0(2, 2));
}

TEST_CASE("lookup table obeys the axis-swap symmetry") {
    const auto& lut = testutil::small_lookup();
    const int n = lut.nsx();
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const Mat& A = lut.at(ix, iy);
            const Mat& B = lut.at(iy, ix);
            CHECK(A(0, 0) == Catch::Approx(B(1, 1)).margin(1e-12));
            CHECK(A(0, 1) == Catch::Approx(B(0, 1)).margin(1e-12));
            CHECK(A(2, 2) == Catch::Approx(B(2, 2)).margin(1e-12));
        }
}

TEST_CASE("interpolation is exact at the samples and affine between them") {
    const auto& lut = testutil::small_lookup();
    Vec a(2);
    a << lut.samples_x[1], lut.samples_y[2];
    CHECK((interpolate_D(lut, a) - lut.at(1, 2)).cwiseAbs().maxCoeff() < 1e-12);

    // midpoint of a table cell equals the average of its corners
    Vec mid(2);
    mid << 0.5 * (lut.samples_x[0] + lut.samples_x[1]),
        0.5 * (lut.samples_y[0] + lut.samples_y[1]);
    const Mat avg = 0.25 * (lut.at(0, 0) + lut.at(1, 0) + lut.at(0, 1) + lut.at(1, 1));
    CHECK((interpolate_D(lut, mid) - avg).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("interpolant derivative matches finite differences inside a cell") {
    const auto& lut = testutil::small_lookup();
    Vec a(2);
    a << 1.3, 2.1; // interior of a table cell for the 5-sample table
    const double h = 1e-6;
    for (int axis = 0; axis < 2; ++axis) {
        Vec ap = a, am = a;
        ap[axis] += h;
        am[axis] -= h;
        const Mat fd = (interpolate_D(lut, ap) - interpolate_D(lut, am)) / (2 * h);
        CHECK((interpolate_D_grad(lut, a, axis) - fd).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("out-of-range lookups clamp and are counted") {
    const auto& lut = testutil::small_lookup();
    const long before = lut.clamp_warnings;
    Vec a(2);
    a << 0.5, 2.0;
    Vec lo(2);
    lo << lut.samples_x.front(), 2.0;
    CHECK((interpolate_D(lut, a) - interpolate_D(lut, lo)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(lut.clamp_warnings > before);
}

TEST_CASE("lookup serialization round-trips") {
    const auto& lut = testutil::small_lookup();
    const std::string path = "dtable_roundtrip.txt";
    save_lookup(lut, path);
    const ElasticityLookup back = load_lookup(path);
    REQUIRE(back.k == lut.k);
    REQUIRE(back.samples_x == lut.samples_x);
    REQUIRE(back.D_table.size() == lut.D_table.size());
    for (size_t i = 0; i < lut.D_table.size(); ++i)
        CHECK((back.D_table[i] - lut.D_table[i]).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("a 3D table can be ingested and interpolated") {
    ElasticityLookup lut;
    lut.k = 3;
    lut.samples_x = {1.0, 2.0};
    lut.samples_y = {1.0, 2.0};
    lut.samples_z = {1.0, 2.0};
    const Mat D = isotropic_3d(1.0, 0.3);
    for (int i = 0; i < 8; ++i) lut.D_table.push_back(double(i + 1) * D);
    const std::string path = "dtable3d_roundtrip.txt";
    save_lookup(lut, path);
    const ElasticityLookup back = load_lookup(path);
    REQUIRE(back.k == 3);
    Vec a(3);
    a << 1.5, 1.5, 1.5;
    // multilinear midpoint: mean of the eight corner weights
    CHECK((interpolate_D(back, a) - 4.5 * D).cwiseAbs().maxCoeff() < 1e-12);
    std::filesystem::remove(path);
}
