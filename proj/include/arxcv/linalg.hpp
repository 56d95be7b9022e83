#pragma once

#include <Eigen/Dense>

namespace arxcv {

struct SymEigen {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
};

// LAPACK dsyevd on the lower triangle
SymEigen sym_eigen(const Eigen::MatrixXd& S);

// Largest k with a nonzero L(i, i-k); L lower triangular.
Eigen::Index lower_bandwidth(const Eigen::MatrixXd& L);

// L^{-T} X for lower-triangular L, exploiting its band
Eigen::MatrixXd lower_solve_t(const Eigen::MatrixXd& L, Eigen::Index band, const Eigen::MatrixXd& X);

} // namespace arxcv
