#include "dskfilt/matrix_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <limits>
#include <stdexcept>
#include <string>

namespace dskfilt {

namespace {

void require_finite(const Matrix& A, const char* name) {
    if (!A.allFinite()) {
        throw std::invalid_argument(std::string(name) + " contains non-finite entries");
    }
}

double default_cutoff(const Matrix& A) {
    return std::numeric_limits<double>::epsilon() *
           static_cast<double>(std::max(A.rows(), A.cols()));
}

Index rank_from_singular_values(const Vector& sigma, double abs_tol) {
    Index rank = 0;
    for (Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > abs_tol) ++rank;
    }
    return rank;
}

} // namespace

SvdFactors svd_decompose(const Matrix& A) {
    require_finite(A, "svd input");
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw std::runtime_error("SVD failed to converge after " +
                                 std::to_string(svd.rows() * svd.cols()) + " sweeps");
    }
    return SvdFactors{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Matrix mp_inverse(const Matrix& A, double tol) {
    SvdFactors f = svd_decompose(A);
    if (tol <= 0.0) tol = default_cutoff(A);
    const double cutoff = f.sigma.size() > 0 ? tol * f.sigma(0) : 0.0;
    Vector inv = Vector::Zero(f.sigma.size());
    for (Index i = 0; i < f.sigma.size(); ++i) {
        if (f.sigma(i) > cutoff) inv(i) = 1.0 / f.sigma(i);
    }
    return f.V * inv.asDiagonal() * f.U.transpose();
}

Index numerical_rank(const Matrix& A, double tol) {
    if (A.size() == 0) return 0;
    SvdFactors f = svd_decompose(A);
    if (tol <= 0.0) tol = default_cutoff(A);
    const double sigma1 = f.sigma.size() > 0 ? f.sigma(0) : 0.0;
    return rank_from_singular_values(f.sigma, tol * sigma1);
}

Vector symmetric_eigenvalues(const Matrix& S) {
    require_finite(S, "symmetric eigenvalue input");
    if (S.rows() != S.cols()) {
        throw std::invalid_argument("symmetric eigenvalue input must be square");
    }
    const double asym = (S - S.transpose()).norm();
    if (asym > 1e-10 * std::max(S.norm(), 1e-300)) {
        throw std::invalid_argument("matrix is not symmetric: ||S - S^T|| = " +
                                    std::to_string(asym));
    }
    Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigensolver failed to converge");
    }
    return es.eigenvalues();
}

double max_symmetric_eigenvalue(const Matrix& S) {
    return symmetric_eigenvalues(S).maxCoeff();
}

double min_symmetric_eigenvalue(const Matrix& S) {
    return symmetric_eigenvalues(S).minCoeff();
}

LinearMatrixEquation solve_linear_matrix_equation(const Matrix& Y, const Matrix& Z) {
    require_finite(Y, "Y");
    require_finite(Z, "Z");
    if (Y.cols() != Z.cols()) {
        throw std::invalid_argument("X*Y = Z needs Y and Z with equal column counts");
    }
    Matrix stacked(Y.rows() + Z.rows(), Y.cols());
    stacked << Y, Z;

    // One absolute threshold, anchored at the stacked spectrum, keeps the two
    // rank evaluations comparable when Y and Z differ in scale.
    SvdFactors fs = svd_decompose(stacked);
    SvdFactors fy = svd_decompose(Y);
    const double abs_tol = default_cutoff(stacked) * (fs.sigma.size() ? fs.sigma(0) : 0.0);

    LinearMatrixEquation out;
    out.rank_y = rank_from_singular_values(fy.sigma, abs_tol);
    out.rank_augmented = rank_from_singular_values(fs.sigma, abs_tol);
    out.solvable = (out.rank_y == out.rank_augmented);

    const Matrix y_pinv = mp_inverse(Y);
    out.X0 = Z * y_pinv;
    out.projector = Matrix::Identity(Y.rows(), Y.rows()) - Y * y_pinv;
    return out;
}

} // namespace dskfilt
