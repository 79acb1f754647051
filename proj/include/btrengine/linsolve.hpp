#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <sstream>
#include <vector>

#include "btrengine/errors.hpp"

namespace btrengine {

struct LinearSolveResult {
    std::vector<double> x;
    double condition_estimate = 0.0;
};

// Dense solve with a rank guard. Systems here are small (the C-matrix is
// (d-1)x(d-1)), so a full-pivot LU plus an SVD condition estimate is cheap.
inline LinearSolveResult linsolve(const std::vector<std::vector<double>>& A,
                                  const std::vector<double>& b) {
    const int n = static_cast<int>(A.size());
    require(n > 0, "singular system", "empty matrix");
    require(static_cast<int>(b.size()) == n, "shape mismatch", "linsolve rhs size");
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        require(static_cast<int>(A[i].size()) == n, "shape mismatch", "linsolve row size");
        for (int j = 0; j < n; ++j) M(i, j) = A[i][j];
        rhs(i) = b[i];
    }

    const double scale = M.cwiseAbs().maxCoeff();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-13 * std::max(1.0, scale));
    if (lu.rank() < n) {
        std::ostringstream os;
        os << "numerically singular matrix, rank " << lu.rank() << " of " << n;
        throw Error("singular system", os.str());
    }
    Eigen::VectorXd x = lu.solve(rhs);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    double cond = sv(0) / sv(sv.size() - 1);

    const double resid = (M * x - rhs).lpNorm<Eigen::Infinity>();
    const double bnorm = rhs.lpNorm<Eigen::Infinity>();
    require(resid <= 1e-10 * std::max(1.0, bnorm), "solve residual",
            "linear solve residual above contract");

    LinearSolveResult out;
    out.x.assign(x.data(), x.data() + n);
    out.condition_estimate = cond;
    return out;
}

inline int matrix_rank(const std::vector<std::vector<double>>& A) {
    const int n = static_cast<int>(A.size());
    if (n == 0) return 0;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = A[i][j];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-13 * std::max(1.0, M.cwiseAbs().maxCoeff()));
    return static_cast<int>(lu.rank());
}

}  // namespace btrengine
