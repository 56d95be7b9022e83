#include "arxcv/linalg.hpp"
#include "arxcv/errors.hpp"

#include <lapacke.h>

#include <string>

namespace arxcv {

SymEigen sym_eigen(const Eigen::MatrixXd& S) {
    const lapack_int n = static_cast<lapack_int>(S.rows());
    SymEigen out;
    out.vectors = S;
    out.values.resize(n);
    if (n == 0) return out;
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data());
    if (info != 0) throw NumericalFailure("dsyevd failed with info " + std::to_string(info));
    return out;
}

Eigen::Index lower_bandwidth(const Eigen::MatrixXd& L) {
    const Eigen::Index T = L.rows();
    Eigen::Index band = 0;
    for (Eigen::Index j = 0; j < T; ++j)
        for (Eigen::Index i = T - 1; i > j + band; --i)
            if (L(i, j) != 0.0) {
                band = i - j;
                break;
            }
    return band;
}

Eigen::MatrixXd lower_solve_t(const Eigen::MatrixXd& L, Eigen::Index band, const Eigen::MatrixXd& X) {
    // L' is upper triangular: back substitution, row s uses rows s+1..s+band
    const Eigen::Index T = L.rows();
    Eigen::MatrixXd Y = X.transpose(); // work on columns for locality
    for (Eigen::Index s = T - 1; s >= 0; --s) {
        for (Eigen::Index i = 1; i <= band && s + i < T; ++i) {
            const double l = L(s + i, s);
            if (l != 0.0) Y.col(s) -= l * Y.col(s + i);
        }
        Y.col(s) /= L(s, s);
    }
    return Y.transpose();
}

} // namespace arxcv
