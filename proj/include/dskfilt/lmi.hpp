#pragma once

#include <functional>
#include <string>

#include "dskfilt/synthesis.hpp"
#include "dskfilt/system.hpp"
#include "dskfilt/types.hpp"

namespace dskfilt {

/// Affine feasibility problem in (Q, Y): Pi(Q, Y) <= 0 with Q = Q^T > 0.
/// The zero (2,2) block of Pi forces its neighbours to vanish, so
/// (Q T1 - Y T2r) F = -H^T is carried as an explicit equality constraint and
/// H * Htilde = 0 is a data precondition; the cone constraint acts on the
/// principal submatrix that drops the zero block.
struct LmiProblem {
    Index p = 0, l = 0, q = 0, s = 0;  // s = m + 2r + p
    double gamma = 1.0;
    double rho = 0.0;

    Matrix N1, N2r, T1, T2r, F, H, Htilde, Hscr, B1, B2;

    double margin = 1e-6;    // strict-feasibility slack on the reduced block
    double q_floor = 1e-6;   // required lambda_min(Q)
    double eps_cert = 1e-7;  // certified lambda_max(Pi) ceiling
    double eq_tol = 1e-6;    // implied-equality verification tolerance
};

LmiProblem make_lmi_problem(const SynthesisBasis& basis, const DescriptorSystem& sys,
                            double gamma, double rho);

// Full symmetric Pi(Q, Y), (p+l+q) square.
Matrix assemble_blocks(const LmiProblem& prob, const Matrix& Q, const Matrix& Y);

struct LmiCertificates {
    double lambda_max_Pi = 0.0;
    double lambda_min_Q = 0.0;
    double lambda_max_Omega = 0.0;  // leading (p+l) principal submatrix of Pi
    double eq_residual = 0.0;       // ||(Q T1 - Y T2r) F + H^T||
};

LmiCertificates evaluate_certificate(const LmiProblem& prob, const Matrix& Q,
                                     const Matrix& Y);

struct LmiSolution {
    Matrix Q, Y, Z1;
    double lambda_max_Pi = 0.0;
    double lambda_min_Q = 0.0;
    double lambda_max_Omega = 0.0;
    bool feasible = false;
    std::string diagnostic;
    long iterations = 0;
};

struct SolveOptions {
    long max_iterations = 120000;
    bool maximize_q = true;    // push lambda_min(Q) to the top of the feasible set
    double q_cap = 1e9;        // search ceiling for the lambda_min(Q) bisection
    double q_rel_tol = 0.01;   // relative bisection tolerance
};

// Alternating projections between the affine set (equalities + slack
// definitions) and the PSD cone; the returned pair is certified by
// eigenvalues only, so the backend is replaceable.
LmiSolution solve_feasibility(const LmiProblem& prob, const SolveOptions& opts = {});

struct GammaSearch {
    double gamma_star = 0.0;
    LmiSolution solution;
    bool ok = false;
    std::string diagnostic;
};

// Smallest certified-feasible gamma in [gamma_lo, gamma_hi] by bisection;
// feasibility is monotone in gamma (the -gamma^2 I block only relaxes).
GammaSearch bisect_gamma(const std::function<LmiProblem(double)>& problem_at,
                         double gamma_lo, double gamma_hi, double tol_gamma);
GammaSearch bisect_gamma(const SynthesisBasis& basis, const DescriptorSystem& sys,
                         double rho, double gamma_lo, double gamma_hi,
                         double tol_gamma);

} // namespace dskfilt
