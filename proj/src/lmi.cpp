#include "dskfilt/lmi.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

#include "dskfilt/matrix_core.hpp"

namespace dskfilt {

namespace {

Index svec_size(Index n) { return n * (n + 1) / 2; }

Vector svec(const Matrix& S) {
    const Index n = S.rows();
    Vector v(svec_size(n));
    Index k = 0;
    const double rt2 = std::sqrt(2.0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            v(k++) = (i == j) ? S(i, j) : rt2 * S(i, j);
        }
    }
    return v;
}

Matrix unsvec(const Vector& v, Index n) {
    Matrix S(n, n);
    Index k = 0;
    const double rt2 = std::sqrt(2.0);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j) {
            const double x = (i == j) ? v(k) : v(k) / rt2;
            S(i, j) = x;
            S(j, i) = x;
            ++k;
        }
    }
    return S;
}

Matrix project_psd(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    Vector w = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

// Variable layout: [svec(Q); vec(Y); svec(S1); svec(S2)] with
// S1 = Q - t I  and  S2 = -Pi_red(Q, Y) - margin I, both constrained PSD.
struct Workspace {
    const LmiProblem& prob;
    Index nQ, nY, nS1, nS2, nv, nred;
    std::vector<Index> red_idx;
    Matrix A;      // constraint Jacobian (constant in t except through b)
    Vector b;
    Eigen::CompleteOrthogonalDecomposition<Matrix> normal;  // of A * A^T

    explicit Workspace(const LmiProblem& p) : prob(p) {
        nQ = svec_size(prob.p);
        nY = prob.p * prob.s;
        nS1 = svec_size(prob.p);
        nred = prob.p + prob.q;
        nS2 = svec_size(nred);
        nv = nQ + nY + nS1 + nS2;
        for (Index i = 0; i < prob.p; ++i) red_idx.push_back(i);
        for (Index i = 0; i < prob.q; ++i) red_idx.push_back(prob.p + prob.l + i);
    }

    Matrix getQ(const Vector& u) const { return unsvec(u.head(nQ), prob.p); }
    Matrix getY(const Vector& u) const {
        return Eigen::Map<const Matrix>(u.data() + nQ, prob.p, prob.s);
    }
    Matrix getS1(const Vector& u) const { return unsvec(u.segment(nQ + nY, nS1), prob.p); }
    Matrix getS2(const Vector& u) const { return unsvec(u.tail(nS2), nred); }

    Vector pack(const Matrix& Q, const Matrix& Y, const Matrix& S1, const Matrix& S2) const {
        Vector u(nv);
        u.head(nQ) = svec(Q);
        Eigen::Map<Matrix>(u.data() + nQ, prob.p, prob.s) = Y;
        u.segment(nQ + nY, nS1) = svec(S1);
        u.tail(nS2) = svec(S2);
        return u;
    }

    Matrix pi_reduced(const Matrix& Q, const Matrix& Y) const {
        const Matrix pi = assemble_blocks(prob, Q, Y);
        Matrix red(nred, nred);
        for (Index i = 0; i < nred; ++i) {
            for (Index j = 0; j < nred; ++j) red(i, j) = pi(red_idx[i], red_idx[j]);
        }
        return red;
    }

    // C(u) = 0 stacks the two slack definitions and the implied equality.
    Vector constraint(const Vector& u, double t) const {
        const Matrix Q = getQ(u), Y = getY(u);
        Vector c(nS1 + nS2 + prob.p * prob.l);
        c.head(nS1) = svec(getS1(u) - Q + t * Matrix::Identity(prob.p, prob.p));
        c.segment(nS1, nS2) = svec(getS2(u) + pi_reduced(Q, Y) +
                                   prob.margin * Matrix::Identity(nred, nred));
        const Matrix eq = (Q * prob.T1 - Y * prob.T2r) * prob.F + prob.H.transpose();
        c.tail(prob.p * prob.l) = Eigen::Map<const Vector>(eq.data(), eq.size());
        return c;
    }

    void build(double t) {
        const Index rows = nS1 + nS2 + prob.p * prob.l;
        const Vector c0 = constraint(Vector::Zero(nv), t);
        A.resize(rows, nv);
        for (Index k = 0; k < nv; ++k) {
            Vector e = Vector::Zero(nv);
            e(k) = 1.0;
            A.col(k) = constraint(e, t) - c0;
        }
        b = -c0;
        normal.compute(Matrix(A * A.transpose()));
    }

    Vector project_affine(const Vector& u) const {
        return u - A.transpose() * normal.solve(A * u - b);
    }

    Vector project_cone(const Vector& u) const {
        Vector v = u;
        v.segment(nQ + nY, nS1) = svec(project_psd(getS1(u)));
        v.tail(nS2) = svec(project_psd(getS2(u)));
        return v;
    }
};

struct PocsResult {
    bool ok = false;
    Vector u;
    long iterations = 0;
};

PocsResult run_pocs(Workspace& ws, double t, long max_iter, const Vector* warm) {
    ws.build(t);
    Vector u = warm ? *warm
                    : ws.pack(std::max(t, 1.0) * Matrix::Identity(ws.prob.p, ws.prob.p),
                              Matrix::Zero(ws.prob.p, ws.prob.s),
                              Matrix::Zero(ws.prob.p, ws.prob.p),
                              Matrix::Zero(ws.nred, ws.nred));
    PocsResult res;
    for (long it = 0; it < max_iter; ++it) {
        u = ws.project_affine(u);
        if (it % 64 == 0 || it == max_iter - 1) {
            const Matrix Q = ws.getQ(u);
            const Matrix pr = ws.pi_reduced(Q, ws.getY(u));
            const double lam_q = min_symmetric_eigenvalue(Q);
            const double lam_pi = max_symmetric_eigenvalue(pr);
            if (lam_q >= 0.98 * t - 1e-12 && lam_pi <= -0.5 * ws.prob.margin) {
                res.ok = true;
                res.u = u;
                res.iterations = it + 1;
                return res;
            }
        }
        u = ws.project_cone(u);
    }
    res.u = u;
    res.iterations = max_iter;
    return res;
}

} // namespace

LmiProblem make_lmi_problem(const SynthesisBasis& basis, const DescriptorSystem& sys,
                            double gamma, double rho) {
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be positive");
    LmiProblem prob;
    prob.p = basis.p;
    prob.l = basis.l;
    prob.q = basis.q;
    prob.s = basis.stacked_rows();
    prob.gamma = gamma;
    prob.rho = rho;
    prob.N1 = basis.N1;
    prob.N2r = basis.N2r;
    prob.T1 = basis.T1;
    prob.T2r = basis.T2r;
    prob.F = sys.F;
    prob.H = sys.H;
    prob.Htilde = basis.Htilde;
    prob.Hscr = basis.Hscr;
    prob.B1 = basis.B1;
    prob.B2 = basis.B2;
    return prob;
}

Matrix assemble_blocks(const LmiProblem& prob, const Matrix& Q, const Matrix& Y) {
    const Index p = prob.p, l = prob.l, q = prob.q;
    if (Q.rows() != p || Q.cols() != p || Y.rows() != p || Y.cols() != prob.s) {
        throw std::invalid_argument("assemble_blocks: Q must be p x p and Y p x (m+2r+p)");
    }
    if ((Q - Q.transpose()).norm() > 1e-10 * std::max(1.0, Q.norm())) {
        throw std::invalid_argument("assemble_blocks: Q must be symmetric");
    }

    const Matrix a11 = prob.N1.transpose() * Q + Q * prob.N1 -
                       prob.N2r.transpose() * Y.transpose() - Y * prob.N2r -
                       prob.rho * prob.Hscr;
    const Matrix a12 = (Q * prob.T1 - Y * prob.T2r) * prob.F + prob.H.transpose();
    const Matrix a13 = Q * prob.B1 - Y * prob.B2 + prob.rho * prob.Hscr * prob.Htilde;
    const Matrix a23 = -prob.H * prob.Htilde;
    const Matrix a33 = -prob.rho * prob.Htilde.transpose() * prob.Hscr * prob.Htilde;

    Matrix pi(p + l + q, p + l + q);
    pi << a11 + Matrix::Identity(p, p), a12, a13 - prob.Htilde,
          a12.transpose(), Matrix::Zero(l, l), a23,
          (a13 - prob.Htilde).transpose(), a23.transpose(),
          a33 + prob.Htilde.transpose() * prob.Htilde -
              prob.gamma * prob.gamma * Matrix::Identity(q, q);
    return 0.5 * (pi + pi.transpose());
}

LmiCertificates evaluate_certificate(const LmiProblem& prob, const Matrix& Q,
                                     const Matrix& Y) {
    const Matrix pi = assemble_blocks(prob, Q, Y);
    LmiCertificates cert;
    cert.lambda_max_Pi = max_symmetric_eigenvalue(pi);
    cert.lambda_min_Q = min_symmetric_eigenvalue(Q);
    cert.lambda_max_Omega =
        max_symmetric_eigenvalue(pi.topLeftCorner(prob.p + prob.l, prob.p + prob.l));
    cert.eq_residual =
        ((Q * prob.T1 - Y * prob.T2r) * prob.F + prob.H.transpose()).norm();
    return cert;
}

LmiSolution solve_feasibility(const LmiProblem& prob, const SolveOptions& opts) {
    LmiSolution sol;

    const double feedthrough = (prob.H * prob.Htilde).norm();
    if (feedthrough > prob.eq_tol) {
        sol.diagnostic = "precondition failed: the (2,3) block -H*Htilde has norm " +
                         std::to_string(feedthrough) +
                         "; a zero (2,2) block then forbids Pi <= 0";
        return sol;
    }

    Workspace ws(prob);
    long used = 0;

    PocsResult phase1 = run_pocs(ws, prob.q_floor, opts.max_iterations, nullptr);
    used += phase1.iterations;
    if (!phase1.ok) {
        const Matrix Q = ws.getQ(phase1.u);
        const Matrix pr = ws.pi_reduced(Q, ws.getY(phase1.u));
        sol.iterations = used;
        sol.diagnostic = "no certified point found: lambda_min(Q) = " +
                         std::to_string(min_symmetric_eigenvalue(Q)) +
                         ", lambda_max(Pi_reduced) = " +
                         std::to_string(max_symmetric_eigenvalue(pr)) +
                         " (needs <= -" + std::to_string(prob.margin) + ")";
        return sol;
    }

    Vector best = phase1.u;
    double lo = min_symmetric_eigenvalue(ws.getQ(best));

    if (opts.maximize_q) {
        // lambda_min(Q) is concave and the set is convex, so its maximum is
        // found by bisection on the floor t; warm starts keep probes cheap.
        double hi = std::max(2.0 * lo, 1.0);
        while (hi < opts.q_cap) {
            PocsResult probe = run_pocs(ws, hi, opts.max_iterations, &best);
            used += probe.iterations;
            if (!probe.ok) break;
            best = probe.u;
            lo = hi;
            hi *= 2.0;
        }
        while (hi - lo > opts.q_rel_tol * std::max(1.0, lo)) {
            const double mid = 0.5 * (lo + hi);
            PocsResult probe = run_pocs(ws, mid, opts.max_iterations, &best);
            used += probe.iterations;
            if (probe.ok) {
                best = probe.u;
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    sol.Q = ws.getQ(best);
    sol.Y = ws.getY(best);
    sol.Z1 = sol.Q.llt().solve(sol.Y);
    const LmiCertificates cert = evaluate_certificate(prob, sol.Q, sol.Y);
    sol.lambda_max_Pi = cert.lambda_max_Pi;
    sol.lambda_min_Q = cert.lambda_min_Q;
    sol.lambda_max_Omega = cert.lambda_max_Omega;
    sol.iterations = used;
    sol.feasible = cert.lambda_max_Pi <= prob.eps_cert &&
                   cert.lambda_min_Q >= prob.q_floor * (1.0 - 1e-9) &&
                   cert.eq_residual <= prob.eq_tol;
    if (!sol.feasible) {
        sol.diagnostic = "certificate check failed: lambda_max(Pi) = " +
                         std::to_string(cert.lambda_max_Pi) + ", lambda_min(Q) = " +
                         std::to_string(cert.lambda_min_Q) + ", eq residual = " +
                         std::to_string(cert.eq_residual);
    }
    return sol;
}

GammaSearch bisect_gamma(const std::function<LmiProblem(double)>& problem_at,
                         double gamma_lo, double gamma_hi, double tol_gamma) {
    if (!(gamma_lo > 0.0) || gamma_hi <= gamma_lo || tol_gamma <= 0.0) {
        throw std::invalid_argument("need 0 < gamma_lo < gamma_hi and tol_gamma > 0");
    }
    SolveOptions probe_opts;
    probe_opts.maximize_q = false;

    auto probe = [&](double gamma) {
        return solve_feasibility(problem_at(gamma), probe_opts);
    };

    GammaSearch out;
    LmiSolution at_hi = probe(gamma_hi);
    if (!at_hi.feasible) {
        out.gamma_star = gamma_hi;
        out.diagnostic = "gamma_hi = " + std::to_string(gamma_hi) +
                         " already infeasible: " + at_hi.diagnostic;
        return out;
    }

    double lo = gamma_lo, hi = gamma_hi;
    if (probe(lo).feasible) {
        hi = lo;
    } else {
        while (hi - lo > tol_gamma) {
            const double mid = 0.5 * (lo + hi);
            if (probe(mid).feasible) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    out.gamma_star = hi;
    out.solution = solve_feasibility(problem_at(hi));
    out.ok = out.solution.feasible;
    if (!out.ok) out.diagnostic = "final solve at gamma* failed: " + out.solution.diagnostic;
    return out;
}

GammaSearch bisect_gamma(const SynthesisBasis& basis, const DescriptorSystem& sys,
                         double rho, double gamma_lo, double gamma_hi,
                         double tol_gamma) {
    return bisect_gamma(
        [&](double gamma) { return make_lmi_problem(basis, sys, gamma, rho); },
        gamma_lo, gamma_hi, tol_gamma);
}

} // namespace dskfilt
