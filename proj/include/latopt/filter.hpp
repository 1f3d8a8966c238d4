#pragma once

// Density filter (linear cone weights) and smoothed Heaviside projection.

#include "latopt/common.hpp"
#include "latopt/grid.hpp"

namespace latopt {

// Cone-weighted neighborhood average over active elements; the weights of
// each element's neighborhood are normalized to sum to one.
class DensityFilter {
public:
    DensityFilter(const GridDomain& dom, double radius) {
        require(radius >= 0.0, "DensityFilter: radius must be non-negative");
        const int n = dom.num_cells();
        const int reach = int(std::ceil(radius)) - 1 >= 0 ? int(std::ceil(radius)) : 0;
        rows_.resize(size_t(n));
        for (int ey = 0; ey < dom.ny; ++ey)
            for (int ex = 0; ex < dom.nx; ++ex) {
                const int e = dom.idx(ex, ey);
                if (!dom.active_mask[size_t(e)]) continue;
                auto& row = rows_[size_t(e)];
                double wsum = 0.0;
                for (int dy = -reach; dy <= reach; ++dy)
                    for (int dx = -reach; dx <= reach; ++dx) {
                        const int jx = ex + dx, jy = ey + dy;
                        if (jx < 0 || jx >= dom.nx || jy < 0 || jy >= dom.ny) continue;
                        const int j = dom.idx(jx, jy);
                        if (!dom.active_mask[size_t(j)]) continue;
                        const double w = radius - std::sqrt(double(dx * dx + dy * dy));
                        if (w <= 0.0) continue;
                        row.emplace_back(j, w);
                        wsum += w;
                    }
                if (row.empty()) {
                    row.emplace_back(e, 1.0);
                    wsum = 1.0;
                }
                for (auto& [j, w] : row) w /= wsum;
            }
    }

    Vec apply(const Vec& x) const {
        Vec y = Vec::Zero(x.size());
        for (size_t e = 0; e < rows_.size(); ++e)
            for (const auto& [j, w] : rows_[e]) y[Eigen::Index(e)] += w * x[j];
        return y;
    }

    // Chain rule through the filter: given dF/d(filtered), returns dF/d(raw).
    Vec apply_transpose(const Vec& g) const {
        Vec y = Vec::Zero(g.size());
        for (size_t e = 0; e < rows_.size(); ++e)
            for (const auto& [j, w] : rows_[e]) y[j] += w * g[Eigen::Index(e)];
        return y;
    }

private:
    std::vector<std::vector<std::pair<int, double>>> rows_;
};

// Smoothed Heaviside projection; maps 0 to 0 and 1 to 1 for any beta.
inline double heaviside_project(double v, double beta, double eta) {
    const double denom = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
    return (std::tanh(beta * eta) + std::tanh(beta * (v - eta))) / denom;
}

inline double heaviside_project_grad(double v, double beta, double eta) {
    const double denom = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
    const double th = std::tanh(beta * (v - eta));
    return beta * (1.0 - th * th) / denom;
}

inline Vec heaviside_project(const Vec& v, double beta, double eta) {
    Vec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = heaviside_project(v[i], beta, eta);
    return out;
}

} // namespace latopt
