#pragma once

// Input graph for lattice compilation: per-vertex position, frame, scale,
// and parameterization origin.  Frames store the lattice axes as columns,
// so M = R*S maps integer lattice steps to world offsets.

#include "latopt/common.hpp"
#include "latopt/grid.hpp"

#include <fstream>

namespace latopt {

struct FrameGraphData {
    int k = 2;
    double h = 1.0;          // global target edge length
    Mat X;                   // n x k positions
    Mat S;                   // n x k scales
    std::vector<Mat> R;      // k x k frames, columns are lattice axes
    Mat P;                   // n x k parameterization origins (filled by the compiler)
    std::vector<std::pair<int, int>> edges;

    int num_vertices() const { return int(X.rows()); }

    void validate() const {
        require(k == 2 || k == 3, "FrameGraph: k must be 2 or 3");
        require(h > 0.0, "FrameGraph: target edge length must be positive");
        require(X.cols() == k && S.cols() == k, "FrameGraph: dimension mismatch");
        require(int(R.size()) == num_vertices(), "FrameGraph: frame count mismatch");
        for (const auto& [a, b] : edges)
            require(a != b && a >= 0 && b >= 0 && a < num_vertices() && b < num_vertices(),
                    "FrameGraph: invalid edge");
        require(S.minCoeff() > 0.0, "FrameGraph: scales must be positive");
    }
};

inline void save_frame_graph(const FrameGraphData& g, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "save_frame_graph: cannot open " + path);
    out.precision(17);
    out << "latopt_framegraph 1\n";
    out << "k " << g.k << "\nh " << g.h << "\n";
    out << "vertices " << g.num_vertices() << "\n";
    for (int i = 0; i < g.num_vertices(); ++i) {
        out << "v";
        for (int d = 0; d < g.k; ++d) out << " " << g.X(i, d);
        for (int r = 0; r < g.k; ++r)
            for (int c = 0; c < g.k; ++c) out << " " << g.R[size_t(i)](r, c);
        for (int d = 0; d < g.k; ++d) out << " " << g.S(i, d);
        out << "\n";
    }
    out << "edges " << g.edges.size() << "\n";
    for (const auto& [a, b] : g.edges) out << "e " << a << " " << b << "\n";
}

inline FrameGraphData load_frame_graph(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "load_frame_graph: cannot open " + path);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    require(tag == "latopt_framegraph" && version == 1,
            "load_frame_graph: unrecognized format in " + path);
    FrameGraphData g;
    int nv = 0;
    size_t ne = 0;
    in >> tag >> g.k >> tag >> g.h >> tag >> nv;
    require(g.k == 2 || g.k == 3, "load_frame_graph: bad dimension");
    g.X = Mat(nv, g.k);
    g.S = Mat(nv, g.k);
    g.R.assign(size_t(nv), Mat::Zero(g.k, g.k));
    for (int i = 0; i < nv; ++i) {
        in >> tag;
        require(tag == "v", "load_frame_graph: expected vertex record");
        for (int d = 0; d < g.k; ++d) in >> g.X(i, d);
        for (int r = 0; r < g.k; ++r)
            for (int c = 0; c < g.k; ++c) in >> g.R[size_t(i)](r, c);
        for (int d = 0; d < g.k; ++d) in >> g.S(i, d);
    }
    in >> tag >> ne;
    g.edges.resize(ne);
    for (auto& [a, b] : g.edges) {
        in >> tag >> a >> b;
        require(tag == "e", "load_frame_graph: expected edge record");
    }
    require(in.good() || in.eof(), "load_frame_graph: truncated file");
    g.validate();
    return g;
}

namespace detail {

// Bilinear sample of a per-element scalar field at a physical point,
// using element centers as data sites (clamped at the boundary).
inline double sample_element_field(const GridDomain& dom, const Vec& field, double x, double y) {
    const double h = dom.element_size;
    double fx = x / h - 0.5, fy = y / h - 0.5;
    fx = std::min(double(dom.nx - 1), std::max(0.0, fx));
    fy = std::min(double(dom.ny - 1), std::max(0.0, fy));
    const int ix = std::min(dom.nx - 2 >= 0 ? int(fx) : 0, std::max(dom.nx - 2, 0));
    const int iy = std::min(dom.ny - 2 >= 0 ? int(fy) : 0, std::max(dom.ny - 2, 0));
    const double wx = fx - ix, wy = fy - iy;
    auto at = [&](int jx, int jy) {
        jx = std::min(dom.nx - 1, jx);
        jy = std::min(dom.ny - 1, jy);
        return field[dom.idx(jx, jy)];
    };
    return (1 - wx) * (1 - wy) * at(ix, iy) + wx * (1 - wy) * at(ix + 1, iy) +
           (1 - wx) * wy * at(ix, iy + 1) + wx * wy * at(ix + 1, iy + 1);
}

} // namespace detail

// Builds the compilation input from the optimized fields: vertices at the
// (optionally subdivided) centers of the thresholded elements, edges over
// the 8-neighborhood so that diagonal edges exist for classification.
// Scales are interpolated multilinearly; the frame is taken from the
// owning element (transposed: optimizer rows become lattice axis columns).
inline FrameGraphData build_compilation_graph(const GridDomain& dom, const DesignFields& fields,
                                              const std::vector<uint8_t>& mask,
                                              int refine, double h_target) {
    require(refine >= 0 && refine <= 2, "build_compilation_graph: refine must be in {0,1,2}");
    require(int(mask.size()) == dom.num_cells(), "build_compilation_graph: mask size mismatch");
    int nmask = 0;
    for (uint8_t m : mask) nmask += (m != 0);
    require(nmask > 0, "build_compilation_graph: empty mask");

    const int sub = 1 << refine;
    const int gx = dom.nx * sub, gy = dom.ny * sub;
    const double hs = dom.element_size / sub;

    std::vector<int> vid(size_t(gx) * gy, -1);
    FrameGraphData g;
    g.k = 2;
    g.h = h_target;
    std::vector<double> xs, ys;
    std::vector<Mat> Rs;
    std::vector<double> sxs, sys;
    for (int jy = 0; jy < gy; ++jy)
        for (int jx = 0; jx < gx; ++jx) {
            const int ex = jx / sub, ey = jy / sub;
            if (!mask[size_t(dom.idx(ex, ey))]) continue;
            vid[size_t(jy) * gx + jx] = int(xs.size());
            const double x = (jx + 0.5) * hs, y = (jy + 0.5) * hs;
            xs.push_back(x);
            ys.push_back(y);
            Rs.push_back(fields.R[size_t(dom.idx(ex, ey))].transpose());
            sxs.push_back(detail::sample_element_field(dom, fields.alpha_tilde.col(0), x, y));
            sys.push_back(detail::sample_element_field(dom, fields.alpha_tilde.col(1), x, y));
        }

    const int n = int(xs.size());
    g.X = Mat(n, 2);
    g.S = Mat(n, 2);
    g.R.resize(size_t(n));
    for (int i = 0; i < n; ++i) {
        g.X(i, 0) = xs[size_t(i)];
        g.X(i, 1) = ys[size_t(i)];
        g.S(i, 0) = sxs[size_t(i)];
        g.S(i, 1) = sys[size_t(i)];
        g.R[size_t(i)] = Rs[size_t(i)];
    }
    // 8-neighborhood; each undirected edge stored once
    const int offs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    for (int jy = 0; jy < gy; ++jy)
        for (int jx = 0; jx < gx; ++jx) {
            const int a = vid[size_t(jy) * gx + jx];
            if (a < 0) continue;
            for (const auto& o : offs) {
                const int kx = jx + o[0], ky = jy + o[1];
                if (kx < 0 || kx >= gx || ky < 0 || ky >= gy) continue;
                const int b = vid[size_t(ky) * gx + kx];
                if (b >= 0) g.edges.emplace_back(a, b);
            }
        }
    g.validate();
    return g;
}

} // namespace latopt
