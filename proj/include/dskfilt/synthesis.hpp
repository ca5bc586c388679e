#pragma once

#include <utility>

#include "dskfilt/system.hpp"
#include "dskfilt/types.hpp"

namespace dskfilt {

/// Base and reduced matrices of the design-equation solution family.
/// The family [T M P N] = Theta Psi^+ - Z (I - Psi Psi^+) satisfies
/// T E + M C = K and T A + P C - N K = 0 for every Z; the reduced set
/// (T2r, ..., B2) restricts Z = Z1 (I - M2bar M2bar^+) so the error system
/// coefficients become affine in Z1.
struct SynthesisBasis {
    Matrix Psi;    // [E A; C 0; 0 C; 0 -K]
    Matrix Theta;  // [K 0]

    Matrix base;            // Theta * Psi^+
    Matrix null_projector;  // I - Psi * Psi^+

    Matrix T1, T2, M1, M2, P1, P2, N1, N2;

    Matrix M2bar;             // M2 * G
    Matrix reduce_projector;  // I - M2bar * M2bar^+
    Matrix T2r, M2r, P2r, N2r;
    Matrix B1, B2;
    Matrix Htilde;  // M1 * G
    Matrix Hscr;    // H^T * H

    Index m = 0, n = 0, r = 0, p = 0, q = 0, l = 0;
    Index stacked_rows() const { return m + 2 * r + p; }
};

std::pair<Matrix, Matrix> assemble_psi_theta(const DescriptorSystem& sys);

// General solution of [T M P N] Psi = Theta split into base and null parts.
// Refuses (with both ranks in the message) when the rank condition fails.
SynthesisBasis compute_base_solution(const Matrix& Psi, const Matrix& Theta,
                                     Index m, Index r, Index p);

// Fills M2bar, the reduced matrices, B1/B2 and the feedthrough terms.
void compute_reduced(SynthesisBasis& basis, const DescriptorSystem& sys);

// assemble + base + reduced in one call.
SynthesisBasis synthesize_basis(const DescriptorSystem& sys);

struct FilterRealization {
    Matrix N, T, L, M, P;
    Matrix Z1, Z;
    double res_a = 0.0;  // ||T A - L C - N T E||_F
    double res_b = 0.0;  // ||T E + M C - K||_F
    bool residual_ok = true;
};

// Algorithm steps 6-8: filter matrices from the reduced parameterization.
FilterRealization recover_filter(const SynthesisBasis& basis, const DescriptorSystem& sys,
                                 const Matrix& Z1, double tol = 1e-8);

// Raw general-solution entry point: Z applied directly to the null projector.
FilterRealization recover_filter_from_z(const SynthesisBasis& basis,
                                        const DescriptorSystem& sys, const Matrix& Z,
                                        double tol = 1e-8);

// Frobenius residuals of the two design equations.
std::pair<double, double> verify_design_equations(const DescriptorSystem& sys,
                                                  const FilterRealization& filt);

} // namespace dskfilt
