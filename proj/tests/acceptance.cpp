// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion carries its own tolerance and runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dskfilt/lmi.hpp"
#include "dskfilt/matrix_core.hpp"
#include "dskfilt/simulation.hpp"
#include "dskfilt/synthesis.hpp"
#include "dskfilt/system.hpp"

using namespace dskfilt;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    double ms = 0.0;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& out) {
    std::printf("%s  criterion %2d  %-38s  %8.2f ms  %s\n", out.pass ? "PASS" : "FAIL",
                id, name.c_str(), out.ms, out.detail.c_str());
    if (!out.pass) ++failures;
}

template <typename Fn>
Outcome timed(double budget_ms, Fn&& body) {
    Outcome out;
    const auto start = Clock::now();
    body(out);
    out.ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (out.ms > budget_ms) {
        out.pass = false;
        out.detail += " [over runtime budget " + std::to_string(budget_ms) + " ms]";
    }
    return out;
}

Matrix random_mat(Index rows, Index cols, std::mt19937& gen) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix A(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) A(i, j) = dist(gen);
    return A;
}

Matrix random_rank_mat(Index rows, Index cols, Index rank, std::mt19937& gen) {
    if (rank == 0) return Matrix::Zero(rows, cols);
    return random_mat(rows, rank, gen) * random_mat(rank, cols, gen);
}

VectorSignal paper_input() {
    return [](double t) {
        return Vector::Constant(1, 0.2 * std::sin(std::numbers::pi * t));
    };
}

} // namespace

int main() {
    const DescriptorSystem sys = rolling_disc_system();
    const Vector x0 = (Vector(3) << 0.1, 0.2, 0.1).finished();
    const Vector w0 = Vector::Constant(1, 0.3);
    const double gamma = 1.4;

    // --- 1: rank condition -------------------------------------------------
    {
        check_rank_condition(sys);  // warm caches before timing
        const Outcome out = timed(1.0, [&](Outcome& o) {
            const RankCondition rc = check_rank_condition(sys);
            o.pass = rc.holds;
            o.detail = "rank_with_K_row = " + std::to_string(rc.rank_big) +
                       ", rank_without = " + std::to_string(rc.rank_small);
        });
        report(1, "rank condition on the disc system", out);
    }

    // --- 2: published filter verification ----------------------------------
    {
        FilterRealization printed;
        printed.T = (Matrix(1, 3) << 1.0, 0.0, 0.0653).finished();
        printed.L = (Matrix(1, 2) << 1.0, -0.2614).finished();
        printed.M = Matrix::Zero(1, 2);
        printed.P = (Matrix(1, 2) << -1.0, 0.2614).finished();
        printed.N = Matrix::Constant(1, 1, -1.0653);
        const Outcome out = timed(1.0, [&](Outcome& o) {
            const auto [res_a, res_b] = verify_design_equations(sys, printed);
            Eigen::EigenSolver<Matrix> es(printed.N);
            const bool hurwitz = es.eigenvalues()(0).real() < 0.0;
            o.pass = res_a <= 5e-3 && res_b <= 5e-3 && hurwitz;
            o.detail = "res_a = " + std::to_string(res_a) + ", res_b = " +
                       std::to_string(res_b) + ", N Hurwitz = " +
                       (hurwitz ? "yes" : "no");
        });
        report(2, "published filter satisfies the design eqs", out);
    }

    // --- 3: LMI feasibility at the published level --------------------------
    const SynthesisBasis basis = synthesize_basis(sys);
    LmiSolution sol;
    {
        const Outcome out = timed(1000.0, [&](Outcome& o) {
            sol = solve_feasibility(make_lmi_problem(basis, sys, gamma, 0.0));
            o.pass = sol.feasible && sol.lambda_max_Pi <= 1e-7 &&
                     sol.lambda_min_Q >= 1e-6;
            o.detail = "lambda_max(Pi) = " + std::to_string(sol.lambda_max_Pi) +
                       ", lambda_min(Q) = " + std::to_string(sol.lambda_min_Q);
        });
        report(3, "LMI feasible at gamma = 1.4, rho = 0", out);
        if (!sol.feasible) {
            std::printf("cannot continue without a certified solution\n");
            return ++failures;
        }
    }
    const FilterRealization filt = recover_filter(basis, sys, sol.Z1);

    // --- 4: residual-free parameterization ----------------------------------
    {
        const Outcome out = timed(1000.0, [&](Outcome& o) {
            std::mt19937 gen(2024);
            double worst = 0.0;
            for (int i = 0; i < 100; ++i) {
                const FilterRealization f =
                    recover_filter(basis, sys, Matrix(10.0 * random_mat(1, 8, gen)));
                worst = std::max({worst, f.res_a, f.res_b});
            }
            o.pass = worst <= 1e-8;
            o.detail = "worst residual over 100 draws = " + std::to_string(worst);
        });
        report(4, "design residuals <= 1e-8 for 100 Z1", out);
    }

    // --- 5: error decay without disturbance ---------------------------------
    SimGrid grid{0.0, 1e-3, 10000};
    {
        const Outcome out = timed(5000.0, [&](Outcome& o) {
            const Trajectory traj = co_simulate(RollingDiscParams{}, sys, filt, x0, w0,
                                                paper_input(), zero_signal(grid, 1), grid);
            const double final_err = traj.e.back().norm();
            o.pass = final_err <= 1e-3;
            o.detail = "|e(10 s)| = " + std::to_string(final_err);
        });
        report(5, "v = 0: |e(10 s)| <= 1e-3", out);
    }

    // --- 6: energy certificate over 100 seeded disturbances -----------------
    const Vector e1_0 = filt.T * sys.E * x0 - w0;
    const double beta = derived_beta(e1_0, sol.Q, gamma);
    {
        const Outcome out = timed(120000.0, [&](Outcome& o) {
            std::vector<std::uint64_t> seeds;
            for (std::uint64_t s = 1; s <= 100; ++s) seeds.push_back(s);
            const EnergyBatch batch =
                monte_carlo_energy(RollingDiscParams{}, sys, filt, x0, w0, paper_input(),
                                   grid, 2.0, 6.0, 1.0, seeds, gamma, beta);
            o.pass = batch.n_satisfied == 100;
            o.detail = std::to_string(batch.n_satisfied) +
                       "/100 satisfied, worst lhs - rhs = " +
                       std::to_string(batch.worst_margin) + " (beta = " +
                       std::to_string(beta) + ")";
        });
        report(6, "energy certificate, 100 seeds", out);
    }

    // --- 7: Lyapunov decay inequality along the error dynamics --------------
    {
        const Outcome out = timed(10000.0, [&](Outcome& o) {
            const SampledSignal v = disturbance_generator(1, grid, 2.0, 6.0, 1.0);
            const PlantTrajectory plant =
                simulate_rolling_disc(RollingDiscParams{}, x0, paper_input(), v, grid);
            const ErrorTrajectory err = integrate_error_dynamics(
                sys, filt, basis, v, e1_0, plant.z_stage_signal(), paper_input(), grid);
            double max_v = 0.0;
            for (const auto& e1 : err.e1) max_v = std::max(max_v, e1.dot(sol.Q * e1));
            const double viol = lyapunov_decay_check(err, sol.Q, gamma);
            const double tol = 1e-3 * (1.0 + max_v);
            o.pass = viol <= tol;
            o.detail = "max violation = " + std::to_string(viol) + " vs tol " +
                       std::to_string(tol);
        });
        report(7, "dV/dt <= gamma^2 v'v - e'e (fwd diff)", out);
    }

    // --- 8: Lemma-1 solver oracle -------------------------------------------
    {
        const Outcome out = timed(10000.0, [&](Outcome& o) {
            std::mt19937 gen(99);
            std::uniform_int_distribution<int> dim(1, 10);
            double worst = 0.0;
            int wrong = 0;
            for (int i = 0; i < 1000; ++i) {
                const Index xr = dim(gen), yr = dim(gen), yc = dim(gen);
                const Matrix Y = random_mat(yr, yc, gen);
                const Matrix Z = random_mat(xr, yr, gen) * Y;
                const auto eq = solve_linear_matrix_equation(Y, Z);
                if (!eq.solvable) ++wrong;
                worst = std::max(worst, (eq.X0 * Y - Z).norm() /
                                            std::max(1.0, Z.norm()));
            }
            for (int i = 0; i < 1000; ++i) {
                const Index xr = dim(gen), yr = dim(gen);
                const Index yc = yr + dim(gen);  // guarantees a row-space escape
                std::uniform_int_distribution<int> rk(0, static_cast<int>(
                                                             std::min(yr, yc) - 1));
                const Matrix Y = random_rank_mat(yr, yc, rk(gen), gen);
                Matrix escape;
                do {
                    const Matrix cand = random_mat(1, yc, gen);
                    escape = cand -
                             cand * mp_inverse(Y) * Y;  // component outside rowspan(Y)
                } while (escape.norm() < 1e-3);
                Matrix Z = random_mat(xr, yr, gen) * Y;
                Z.row(0) += escape / escape.norm();
                if (solve_linear_matrix_equation(Y, Z).solvable) ++wrong;
            }
            o.pass = wrong == 0 && worst <= 1e-9;
            o.detail = "misclassified = " + std::to_string(wrong) +
                       ", worst solvable residual = " + std::to_string(worst);
        });
        report(8, "1000 solvable + 1000 unsolvable XY=Z", out);
    }

    // --- 9: Penrose identity suite ------------------------------------------
    {
        const Outcome out = timed(10000.0, [&](Outcome& o) {
            std::mt19937 gen(314);
            std::uniform_int_distribution<int> dim(1, 20);
            double worst = 0.0;
            for (int i = 0; i < 1000; ++i) {
                const Index rows = dim(gen), cols = dim(gen);
                std::uniform_int_distribution<int> rk(0, static_cast<int>(
                                                             std::min(rows, cols)));
                const Matrix A = random_rank_mat(rows, cols, rk(gen), gen);
                const Matrix Ap = mp_inverse(A);
                const double sa = std::max(1.0, A.norm());
                const double sp = std::max(1.0, Ap.norm());
                worst = std::max(worst, (A * Ap * A - A).norm() / sa);
                worst = std::max(worst, (Ap * A * Ap - Ap).norm() / sp);
                worst = std::max(worst, ((A * Ap) - (A * Ap).transpose()).norm() /
                                            std::max(1.0, (A * Ap).norm()));
                worst = std::max(worst, ((Ap * A) - (Ap * A).transpose()).norm() /
                                            std::max(1.0, (Ap * A).norm()));
            }
            o.pass = worst <= 1e-8;
            o.detail = "worst relative Penrose residual = " + std::to_string(worst);
        });
        report(9, "four Penrose identities, 1000 matrices", out);
    }

    // --- 10: error-dynamics cross-validation --------------------------------
    {
        const Outcome out = timed(10000.0, [&](Outcome& o) {
            const SampledSignal v = disturbance_generator(1, grid, 2.0, 6.0, 1.0);
            const Trajectory cosim = co_simulate(RollingDiscParams{}, sys, filt, x0, w0,
                                                 paper_input(), v, grid);
            const PlantTrajectory plant =
                simulate_rolling_disc(RollingDiscParams{}, x0, paper_input(), v, grid);
            const ErrorTrajectory err = integrate_error_dynamics(
                sys, filt, basis, v, e1_0, plant.z_stage_signal(), paper_input(), grid);
            double worst = 0.0;
            for (int i = 0; i <= grid.steps; ++i) {
                worst = std::max(worst, (cosim.e[static_cast<std::size_t>(i)] -
                                         err.e[static_cast<std::size_t>(i)])
                                            .norm());
            }
            o.pass = worst <= 1e-5;
            o.detail = "max route difference = " + std::to_string(worst);
            if (!o.pass) {
                o.detail +=
                    " — the index-reduced plant leaves the torque-balance row of the "
                    "descriptor model unsatisfied (residual reported by the plant), and "
                    "every certified filter couples that residual into e1 through its "
                    "third T entry (= 1/Q > 0), so the reduced error form cannot track "
                    "the co-simulation at 1e-5; with a plant satisfying the model the "
                    "routes agree to 1e-9 (see unit suite)";
            }
        });
        report(10, "Eq-21 route vs co-simulation <= 1e-5", out);
    }

    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures;
}
