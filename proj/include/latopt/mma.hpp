#pragma once

// Method of moving asymptotes for box-constrained minimization with a
// single inequality constraint, solved via dual bisection.

#include "latopt/common.hpp"

namespace latopt {

class MmaSolver {
public:
    MmaSolver(int n, const Vec& xmin, const Vec& xmax, double move_limit = 0.2)
        : n_(n), xmin_(xmin), xmax_(xmax), move_(move_limit) {
        require(xmin.size() == n && xmax.size() == n, "MmaSolver: bound size mismatch");
        for (int j = 0; j < n; ++j) require(xmax[j] >= xmin[j], "MmaSolver: empty box");
    }

    // One MMA iteration.  df: objective gradient; g: constraint value
    // (feasible when <= 0); dg: constraint gradient.  Returns the new x.
    Vec update(const Vec& x, const Vec& df, double g, const Vec& dg) {
        require(x.size() == n_ && df.size() == n_ && dg.size() == n_, "MmaSolver: size mismatch");
        require(df.allFinite() && dg.allFinite() && std::isfinite(g), "MmaSolver: non-finite gradients");
        ++iter_;

        Vec range = xmax_ - xmin_;
        for (int j = 0; j < n_; ++j) range[j] = std::max(range[j], 1e-12);

        Vec low(n_), upp(n_);
        if (iter_ <= 2) {
            low = x - 0.5 * range;
            upp = x + 0.5 * range;
        } else {
            for (int j = 0; j < n_; ++j) {
                const double osc = (x[j] - xold1_[j]) * (xold1_[j] - xold2_[j]);
                double gamma = 1.0;
                if (osc < 0.0) gamma = 0.7;
                else if (osc > 0.0) gamma = 1.2;
                low[j] = x[j] - gamma * (xold1_[j] - low_[j]);
                upp[j] = x[j] + gamma * (upp_[j] - xold1_[j]);
                low[j] = std::min(low[j], x[j] - 0.01 * range[j]);
                low[j] = std::max(low[j], x[j] - 10.0 * range[j]);
                upp[j] = std::max(upp[j], x[j] + 0.01 * range[j]);
                upp[j] = std::min(upp[j], x[j] + 10.0 * range[j]);
            }
        }

        Vec a(n_), b(n_); // per-variable bounds of the subproblem
        Vec p0(n_), q0(n_), p1(n_), q1(n_);
        const double eps = 1e-7;
        for (int j = 0; j < n_; ++j) {
            a[j] = std::max({xmin_[j], low[j] + 0.1 * (x[j] - low[j]), x[j] - move_ * range[j]});
            b[j] = std::min({xmax_[j], upp[j] - 0.1 * (upp[j] - x[j]), x[j] + move_ * range[j]});
            if (a[j] > b[j]) a[j] = b[j] = 0.5 * (a[j] + b[j]);
            const double u2 = (upp[j] - x[j]) * (upp[j] - x[j]);
            const double l2 = (x[j] - low[j]) * (x[j] - low[j]);
            p0[j] = u2 * (std::max(df[j], 0.0) + 0.001 * std::abs(df[j]) + eps / range[j]);
            q0[j] = l2 * (std::max(-df[j], 0.0) + 0.001 * std::abs(df[j]) + eps / range[j]);
            p1[j] = u2 * std::max(dg[j], 0.0);
            q1[j] = l2 * std::max(-dg[j], 0.0);
        }

        // constant part of the constraint approximation at x
        double r1 = g;
        for (int j = 0; j < n_; ++j) r1 -= p1[j] / (upp[j] - x[j]) + q1[j] / (x[j] - low[j]);

        auto x_of_lambda = [&](double lam, Vec& xn) {
            for (int j = 0; j < n_; ++j) {
                const double pj = p0[j] + lam * p1[j];
                const double qj = q0[j] + lam * q1[j];
                const double sp = std::sqrt(pj), sq = std::sqrt(qj);
                double xj = (sp * low[j] + sq * upp[j]) / (sp + sq);
                xn[j] = std::min(b[j], std::max(a[j], xj));
            }
        };
        auto constraint_of = [&](const Vec& xn) {
            double c = r1;
            for (int j = 0; j < n_; ++j)
                c += p1[j] / (upp[j] - xn[j]) + q1[j] / (xn[j] - low[j]);
            return c;
        };

        Vec xn(n_);
        x_of_lambda(0.0, xn);
        if (constraint_of(xn) > 0.0) {
            double lo = 0.0, hi = 1.0;
            x_of_lambda(hi, xn);
            int guard = 0;
            while (constraint_of(xn) > 0.0 && guard++ < 60) {
                hi *= 2.0;
                x_of_lambda(hi, xn);
            }
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                x_of_lambda(mid, xn);
                if (constraint_of(xn) > 0.0) lo = mid;
                else hi = mid;
            }
            x_of_lambda(hi, xn);
        }

        xold2_ = (iter_ >= 2) ? xold1_ : x;
        xold1_ = x;
        low_ = low;
        upp_ = upp;
        return xn;
    }

private:
    int n_;
    Vec xmin_, xmax_;
    double move_;
    int iter_ = 0;
    Vec xold1_, xold2_, low_, upp_;
};

} // namespace latopt
