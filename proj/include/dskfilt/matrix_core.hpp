#pragma once

#include "dskfilt/types.hpp"

namespace dskfilt {

/// Thin SVD A = U * diag(sigma) * V^T with sigma non-increasing.
struct SvdFactors {
    Matrix U;
    Vector sigma;
    Matrix V;

    Matrix reconstruct() const { return U * sigma.asDiagonal() * V.transpose(); }
};

SvdFactors svd_decompose(const Matrix& A);

// Moore-Penrose inverse via SVD. tol is a cutoff relative to sigma_1;
// tol < 0 selects the standard eps * max(rows, cols) default.
Matrix mp_inverse(const Matrix& A, double tol = -1.0);

// Number of singular values exceeding tol * sigma_1 (same default as mp_inverse).
Index numerical_rank(const Matrix& A, double tol = -1.0);

// Extremal eigenvalues of a symmetric matrix. Inputs are symmetrized as
// (S + S^T)/2 before solving; asymmetry beyond 1e-10 * ||S|| is an error.
double max_symmetric_eigenvalue(const Matrix& S);
double min_symmetric_eigenvalue(const Matrix& S);
Vector symmetric_eigenvalues(const Matrix& S);

/// Solution family of X * Y = Z: every solution is X0 - V * projector
/// for arbitrary V. Unsolvable is a returned state, not an error.
struct LinearMatrixEquation {
    Matrix X0;         // Z * Y^+
    Matrix projector;  // I - Y * Y^+
    bool solvable = false;
    Index rank_y = 0;
    Index rank_augmented = 0;
};

LinearMatrixEquation solve_linear_matrix_equation(const Matrix& Y, const Matrix& Z);

} // namespace dskfilt
