#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace latopt {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// Voigt dimension for spatial dimension k: 3 in 2D, 6 in 3D.
inline int voigt_dim(int k) { return k * (k + 1) / 2; }

} // namespace latopt
