#include "dskfilt/synthesis.hpp"

#include <stdexcept>
#include <string>

#include "dskfilt/matrix_core.hpp"

namespace dskfilt {

namespace {

FilterRealization finish(const DescriptorSystem& sys, FilterRealization filt,
                         double tol) {
    filt.L = filt.N * filt.M - filt.P;
    auto [ra, rb] = verify_design_equations(sys, filt);
    filt.res_a = ra;
    filt.res_b = rb;
    filt.residual_ok = (ra <= tol && rb <= tol);
    return filt;
}

} // namespace

std::pair<Matrix, Matrix> assemble_psi_theta(const DescriptorSystem& sys) {
    const Index m = sys.m(), n = sys.n(), r = sys.r(), p = sys.p();
    Matrix psi(m + 2 * r + p, 2 * n);
    psi << sys.E, sys.A,
           sys.C, Matrix::Zero(r, n),
           Matrix::Zero(r, n), sys.C,
           Matrix::Zero(p, n), -sys.K;  // minus sign: P C enters (ta) with +, K with -
    Matrix theta(p, 2 * n);
    theta << sys.K, Matrix::Zero(p, n);
    return {psi, theta};
}

SynthesisBasis compute_base_solution(const Matrix& Psi, const Matrix& Theta,
                                     Index m, Index r, Index p) {
    const Index rows = m + 2 * r + p;
    if (Psi.rows() != rows || Theta.rows() != p || Psi.cols() != Theta.cols()) {
        throw std::invalid_argument("Psi/Theta shapes inconsistent with (m, r, p)");
    }

    LinearMatrixEquation eq = solve_linear_matrix_equation(Psi, Theta);
    if (!eq.solvable) {
        throw std::runtime_error(
            "design equations unsolvable: rank [Psi; Theta] = " +
            std::to_string(eq.rank_augmented) + " exceeds rank Psi = " +
            std::to_string(eq.rank_y) + " (rank condition fails)");
    }

    SynthesisBasis basis;
    basis.Psi = Psi;
    basis.Theta = Theta;
    basis.base = eq.X0;
    basis.null_projector = eq.projector;
    basis.m = m;
    basis.r = r;
    basis.p = p;
    basis.n = Psi.cols() / 2;

    const Index c0 = 0, c1 = m, c2 = m + r, c3 = m + 2 * r;
    basis.T1 = basis.base.middleCols(c0, m);
    basis.M1 = basis.base.middleCols(c1, r);
    basis.P1 = basis.base.middleCols(c2, r);
    basis.N1 = basis.base.middleCols(c3, p);
    basis.T2 = basis.null_projector.middleCols(c0, m);
    basis.M2 = basis.null_projector.middleCols(c1, r);
    basis.P2 = basis.null_projector.middleCols(c2, r);
    basis.N2 = basis.null_projector.middleCols(c3, p);
    return basis;
}

void compute_reduced(SynthesisBasis& basis, const DescriptorSystem& sys) {
    basis.q = sys.q();
    basis.l = sys.l();
    basis.M2bar = basis.M2 * sys.G;
    // M2bar is a product of an SVD projector chain, so its "zero" singular
    // values sit a few eps above the bare machine cutoff; a looser relative
    // cutoff keeps M2bar * M2bar^+ an honest projector.
    basis.reduce_projector = Matrix::Identity(basis.stacked_rows(), basis.stacked_rows()) -
                             basis.M2bar * mp_inverse(basis.M2bar, 1e-12);
    basis.T2r = basis.reduce_projector * basis.T2;
    basis.M2r = basis.reduce_projector * basis.M2;
    basis.P2r = basis.reduce_projector * basis.P2;
    basis.N2r = basis.reduce_projector * basis.N2;
    basis.B1 = basis.T1 * sys.D - basis.N1 * basis.M1 * sys.G + basis.P1 * sys.G;
    basis.B2 = basis.T2r * sys.D - basis.N2r * basis.M1 * sys.G + basis.P2r * sys.G;
    basis.Htilde = basis.M1 * sys.G;
    basis.Hscr = sys.H.transpose() * sys.H;

    const double annihilation = (basis.M2r * sys.G).norm();
    if (annihilation > 1e-9) {
        throw std::runtime_error("MP-inverse annihilation identity violated: ||M2r G|| = " +
                                 std::to_string(annihilation));
    }
}

SynthesisBasis synthesize_basis(const DescriptorSystem& sys) {
    auto [psi, theta] = assemble_psi_theta(sys);
    SynthesisBasis basis = compute_base_solution(psi, theta, sys.m(), sys.r(), sys.p());
    compute_reduced(basis, sys);
    return basis;
}

FilterRealization recover_filter(const SynthesisBasis& basis, const DescriptorSystem& sys,
                                 const Matrix& Z1, double tol) {
    if (Z1.rows() != basis.p || Z1.cols() != basis.stacked_rows()) {
        throw std::invalid_argument("Z1 must be p x (m + 2r + p)");
    }
    FilterRealization filt;
    filt.Z1 = Z1;
    filt.Z = Z1 * basis.reduce_projector;
    filt.T = basis.T1 - Z1 * basis.T2r;
    filt.M = basis.M1 - Z1 * basis.M2r;
    filt.P = basis.P1 - Z1 * basis.P2r;
    filt.N = basis.N1 - Z1 * basis.N2r;
    return finish(sys, std::move(filt), tol);
}

FilterRealization recover_filter_from_z(const SynthesisBasis& basis,
                                        const DescriptorSystem& sys, const Matrix& Z,
                                        double tol) {
    if (Z.rows() != basis.p || Z.cols() != basis.stacked_rows()) {
        throw std::invalid_argument("Z must be p x (m + 2r + p)");
    }
    FilterRealization filt;
    filt.Z1 = Z;
    filt.Z = Z;
    filt.T = basis.T1 - Z * basis.T2;
    filt.M = basis.M1 - Z * basis.M2;
    filt.P = basis.P1 - Z * basis.P2;
    filt.N = basis.N1 - Z * basis.N2;
    return finish(sys, std::move(filt), tol);
}

std::pair<double, double> verify_design_equations(const DescriptorSystem& sys,
                                                  const FilterRealization& filt) {
    const double res_a =
        (filt.T * sys.A - filt.L * sys.C - filt.N * filt.T * sys.E).norm();
    const double res_b = (filt.T * sys.E + filt.M * sys.C - sys.K).norm();
    return {res_a, res_b};
}

} // namespace dskfilt
