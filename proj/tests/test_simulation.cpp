#include <doctest.h>

#include <cmath>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "dskfilt/simulation.hpp"
#include "dskfilt/synthesis.hpp"
#include "dskfilt/system.hpp"

using namespace dskfilt;

namespace {

Matrix paper_Z1() {
    Matrix z(1, 8);
    z << 442.8408, 136.8489, -11.2463, 546.9125, 11.7694, 38.4020, 7.0763, 19.2352;
    return z;
}

VectorSignal zero_vec(Index dim) {
    return [dim](double) { return Vector(Vector::Zero(dim)); };
}

VectorSignal paper_input() {
    return [](double t) {
        return Vector::Constant(1, 0.2 * std::sin(std::numbers::pi * t));
    };
}

FilterRealization scalar_decay_filter() {
    FilterRealization filt;
    filt.N = Matrix::Constant(1, 1, -1.0);
    filt.T = Matrix::Zero(1, 3);
    filt.L = Matrix::Zero(1, 2);
    filt.M = Matrix::Zero(1, 2);
    filt.P = Matrix::Zero(1, 2);
    return filt;
}

} // namespace

TEST_CASE("integrate_filter: scalar exponential decay") {
    const DescriptorSystem sys = rolling_disc_system();
    const FilterRealization filt = scalar_decay_filter();
    SimGrid grid{0.0, 1e-3, 1000};
    const FilterRun run = integrate_filter(sys, filt, zero_vec(2), zero_vec(1),
                                           Vector::Constant(1, 1.0), grid);
    CHECK(std::abs(run.w.back()(0) - std::exp(-1.0)) <= 1e-6);
    CHECK(run.zhat.back()(0) == run.w.back()(0));
}

TEST_CASE("integrate_filter: zero dynamics stay at rest") {
    const DescriptorSystem sys = rolling_disc_system();
    FilterRealization filt = scalar_decay_filter();
    filt.N.setZero();
    SimGrid grid{0.0, 1e-2, 200};
    const FilterRun run =
        integrate_filter(sys, filt, zero_vec(2), zero_vec(1), Vector::Zero(1), grid);
    for (const auto& w : run.w) CHECK(w.norm() == 0.0);
}

TEST_CASE("integrate_filter: RK4 is fourth order on the linear test case") {
    const DescriptorSystem sys = rolling_disc_system();
    const FilterRealization filt = scalar_decay_filter();
    auto error_at = [&](double h) {
        SimGrid grid{0.0, h, static_cast<int>(std::llround(1.0 / h))};
        const FilterRun run = integrate_filter(sys, filt, zero_vec(2), zero_vec(1),
                                               Vector::Constant(1, 1.0), grid);
        return std::abs(run.w.back()(0) - std::exp(-1.0));
    };
    const double ratio = error_at(0.1) / error_at(0.05);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("disturbance_generator: window, bounds, determinism") {
    SimGrid grid{0.0, 1e-2, 1000};
    const SampledSignal a = disturbance_generator(77, grid, 2.0, 6.0, 1.0);
    const SampledSignal b = disturbance_generator(77, grid, 2.0, 6.0, 1.0);
    double peak = 0.0;
    for (int i = 0; i < grid.points(); ++i) {
        const double t = grid.time(i);
        const double val = a.at(i)(0);
        if (t < 2.0 || t > 6.0) {
            CHECK(val == 0.0);
        } else {
            CHECK(std::abs(val) <= 1.0);
        }
        CHECK(val == b.at(i)(0));  // bit-identical for a fixed seed
        peak = std::max(peak, std::abs(val));
    }
    CHECK(peak > 0.5);

    const SampledSignal z = disturbance_generator(77, grid, 2.0, 6.0, 0.0);
    for (int i = 0; i < grid.points(); ++i) CHECK(z.at(i).norm() == 0.0);

    CHECK_THROWS_AS(disturbance_generator(1, grid, -1.0, 6.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("simulate_rolling_disc: equilibrium and constraint screening") {
    RollingDiscParams prm;
    SimGrid grid{0.0, 1e-3, 2000};
    const SampledSignal v0 = zero_signal(grid, 1);

    const PlantTrajectory rest =
        simulate_rolling_disc(prm, Vector::Zero(3), zero_vec(1), v0, grid);
    for (const auto& x : rest.x) CHECK(x.norm() == 0.0);
    CHECK(rest.max_torque_residual == 0.0);

    Vector bad(3);
    bad << 0.1, 0.2, 0.15;  // violates x2 = r x3
    CHECK_THROWS_WITH_AS(simulate_rolling_disc(prm, bad, zero_vec(1), v0, grid),
                         doctest::Contains("rolling constraint"), std::invalid_argument);
}

TEST_CASE("simulate_rolling_disc: mechanical energy decays unforced") {
    RollingDiscParams prm;
    SimGrid grid{0.0, 1e-3, 5000};
    Vector x0(3);
    x0 << 0.4, 0.2, 0.1;
    const PlantTrajectory run =
        simulate_rolling_disc(prm, x0, zero_vec(1), zero_signal(grid, 1), grid);
    auto energy = [&](const Vector& x) {
        return 0.5 * prm.k1 * x(0) * x(0) + 0.25 * prm.k2 * std::pow(x(0), 4) +
               0.5 * prm.m_mass * x(1) * x(1);
    };
    double prev = energy(run.x.front());
    for (std::size_t i = 1; i < run.x.size(); ++i) {
        const double cur = energy(run.x[i]);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    // the torque-balance equation is not enforced; its residual is visible
    CHECK(run.max_torque_residual > 0.0);
}

TEST_CASE("integrate_error_dynamics: zero initial error is an equilibrium") {
    const DescriptorSystem sys = rolling_disc_system();
    const SynthesisBasis basis = synthesize_basis(sys);
    const FilterRealization filt = recover_filter(basis, sys, paper_Z1());
    SimGrid grid{0.0, 1e-3, 2000};
    const VectorSignal z = [](double t) { return Vector::Constant(1, std::sin(2.0 * t)); };
    const ErrorTrajectory err = integrate_error_dynamics(
        sys, filt, basis, zero_signal(grid, 1), Vector::Zero(1), z, zero_vec(1), grid);
    for (const auto& e : err.e) CHECK(e.norm() == 0.0);
}

TEST_CASE("integrate_error_dynamics: linear g matches the matrix exponential") {
    DescriptorSystem sys = rolling_disc_system();
    const double slope = 0.7;
    sys.g = [slope](const Vector& s, const Vector&) { return Vector(slope * s); };
    sys.g_name.clear();
    const SynthesisBasis basis = synthesize_basis(sys);
    const FilterRealization filt = recover_filter(basis, sys, paper_Z1());

    SimGrid grid{0.0, 1e-3, 3000};
    const VectorSignal z = [](double t) { return Vector::Constant(1, std::cos(t)); };
    const Vector e1_0 = Vector::Constant(1, 0.3);
    const ErrorTrajectory err = integrate_error_dynamics(
        sys, filt, basis, zero_signal(grid, 1), e1_0, z, zero_vec(1), grid);

    // with v = 0 and linear g: e' = (N + T F slope H) e, solved exactly
    const Matrix gen = filt.N + filt.T * sys.F * slope * sys.H;
    for (int i = 0; i <= grid.steps; i += 500) {
        const Matrix expm = (gen * grid.time(i)).exp();
        CHECK(std::abs(err.e[static_cast<std::size_t>(i)](0) - (expm * e1_0)(0)) <= 1e-6);
    }
}

TEST_CASE("two error routes agree when the plant satisfies the descriptor model") {
    // Plant variant whose third semistate solves the algebraic row of
    // E x' = A x + ... exactly, so the trajectory lies in the model behavior.
    const RollingDiscParams prm;
    const DescriptorSystem sys = rolling_disc_system();
    const SynthesisBasis basis = synthesize_basis(sys);
    const FilterRealization filt = recover_filter(basis, sys, paper_Z1());

    SimGrid grid{0.0, 1e-3, 4000};
    const SampledSignal v = disturbance_generator(5, grid, 1.0, 3.0, 1.0);
    const VectorSignal u = paper_input();
    const PlantTrajectory plant = simulate_rolling_disc(
        prm, (Vector(3) << 0.1, 0.2, 0.1).finished(), u, v, grid);

    const double k1m = prm.k1 / prm.m_mass, k2m = prm.k2 / prm.m_mass;
    const double bm = prm.b / prm.m_mass, r = prm.r_radius;
    auto x3_algebraic = [&](double x1, double ut, double vt) {
        return (-k1m * x1 - k2m * x1 * x1 * x1 - (r / prm.J) * ut +
                (1.0 / prm.m_mass + r * r / prm.J) * vt) /
               (r * bm);
    };

    // filter driven by the behavior-consistent measurement
    const Matrix TB = filt.T * sys.B;
    const Matrix TF = filt.T * sys.F;
    std::vector<double> w{0.3};
    for (int i = 0; i < grid.steps; ++i) {
        const double vt = v.at(i)(0);
        auto deriv = [&](double wv, int half_idx, double t) {
            const double x1 = plant.x12_half[static_cast<std::size_t>(half_idx)](0);
            const double x2 = plant.x12_half[static_cast<std::size_t>(half_idx)](1);
            const double ut = u(t)(0);
            Vector x(3);
            x << x1, x2, x3_algebraic(x1, ut, vt);
            const Vector y = sys.C * x + sys.G * v.at(i);
            const double zhat = wv + (filt.M * y)(0);
            return (filt.N(0, 0) * wv + TB(0, 0) * ut + (filt.L * y)(0) +
                    TF(0, 0) * zhat * zhat * zhat);
        };
        const double t = grid.time(i), h = grid.h;
        const double k1 = deriv(w.back(), 2 * i, t);
        const double k2 = deriv(w.back() + h / 2 * k1, 2 * i + 1, t + h / 2);
        const double k3 = deriv(w.back() + h / 2 * k2, 2 * i + 1, t + h / 2);
        const double k4 = deriv(w.back() + h * k3, 2 * i + 2, t + h);
        w.push_back(w.back() + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
    }

    const ErrorTrajectory err = integrate_error_dynamics(
        sys, filt, basis, v, Vector::Constant(1, 0.1 - 0.3), plant.z_stage_signal(),
        u, grid);

    double worst = 0.0;
    for (int i = 0; i <= grid.steps; ++i) {
        const double x1 = plant.x12_half[static_cast<std::size_t>(2 * i)](0);
        const double ut = u(grid.time(i))(0);
        Vector x(3);
        x << x1, plant.x12_half[static_cast<std::size_t>(2 * i)](1),
            x3_algebraic(x1, ut, v.at(i)(0));
        const Vector y = sys.C * x + sys.G * v.at(i);
        const double e_cosim = x1 - (w[static_cast<std::size_t>(i)] + (filt.M * y)(0));
        worst = std::max(worst,
                         std::abs(e_cosim - err.e[static_cast<std::size_t>(i)](0)));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("unforced error decays monotonically along the reduced dynamics") {
    // v = 0 and monotone g with T F < 0 make d|e1|^2/dt strictly negative.
    const DescriptorSystem sys = rolling_disc_system();
    const SynthesisBasis basis = synthesize_basis(sys);
    const FilterRealization filt = recover_filter(basis, sys, paper_Z1());
    REQUIRE((filt.T * sys.F)(0, 0) < 0.0);

    SimGrid grid{0.0, 1e-3, 10000};
    const PlantTrajectory plant = simulate_rolling_disc(
        RollingDiscParams{}, (Vector(3) << 0.1, 0.2, 0.1).finished(), paper_input(),
        zero_signal(grid, 1), grid);
    const ErrorTrajectory err = integrate_error_dynamics(
        sys, filt, basis, zero_signal(grid, 1), Vector::Constant(1, -0.2),
        plant.z_stage_signal(), paper_input(), grid);

    for (std::size_t i = 1; i < err.e.size(); ++i) {
        CHECK(err.e[i].norm() <= err.e[i - 1].norm() + 1e-12);
    }
    CHECK(err.e.back().norm() <= 1e-3);
}

TEST_CASE("energy_certificate: trivial and adversarial cases") {
    SimGrid grid{0.0, 0.1, 10};
    Trajectory traj;
    traj.grid = grid;
    for (int i = 0; i < grid.points(); ++i) {
        traj.e.push_back(Vector::Zero(1));
        traj.v.push_back(Vector::Zero(1));
    }
    const EnergyCertificate ok = energy_certificate(traj, 1.4, 0.1);
    CHECK(ok.satisfied);
    CHECK(ok.lhs == 0.0);

    for (auto& e : traj.e) e = Vector::Constant(1, 0.5);
    const EnergyCertificate bad = energy_certificate(traj, 0.001, 0.0);
    CHECK_FALSE(bad.satisfied);
}

TEST_CASE("lyapunov_decay_check: zero trajectory and unstable counterexample") {
    SimGrid grid{0.0, 1e-2, 100};
    ErrorTrajectory err;
    err.grid = grid;
    err.v = zero_signal(grid, 1);
    for (int i = 0; i < grid.points(); ++i) {
        err.e1.push_back(Vector::Zero(1));
        err.e.push_back(Vector::Zero(1));
    }
    CHECK(lyapunov_decay_check(err, Matrix::Identity(1, 1), 1.4) == 0.0);

    // growing error: dV/dt = 2 e^{2t} clearly beats -e^T e
    for (int i = 0; i < grid.points(); ++i) {
        const double val = std::exp(grid.time(i));
        err.e1[static_cast<std::size_t>(i)] = Vector::Constant(1, val);
        err.e[static_cast<std::size_t>(i)] = Vector::Constant(1, val);
    }
    CHECK(lyapunov_decay_check(err, Matrix::Identity(1, 1), 1.4) > 0.0);
}

TEST_CASE("monte_carlo_energy: seeded batch with the printed filter") {
    const DescriptorSystem sys = rolling_disc_system();
    const SynthesisBasis basis = synthesize_basis(sys);
    const FilterRealization filt = recover_filter(basis, sys, paper_Z1());
    SimGrid grid{0.0, 1e-3, 10000};
    const EnergyBatch batch = monte_carlo_energy(
        RollingDiscParams{}, sys, filt, (Vector(3) << 0.1, 0.2, 0.1).finished(),
        Vector::Constant(1, 0.3), paper_input(), grid, 2.0, 6.0, 1.0,
        {1, 2, 3, 4, 5}, 1.4, 1.0);
    CHECK(batch.n_runs == 5);
    CHECK(batch.n_satisfied == 5);
    CHECK(batch.worst_margin < 0.0);
    CHECK(batch.failed_seeds.empty());
}

TEST_CASE("co_simulate: pointwise trajectory invariants") {
    const DescriptorSystem sys = rolling_disc_system();
    const SynthesisBasis basis = synthesize_basis(sys);
    const FilterRealization filt = recover_filter(basis, sys, paper_Z1());
    SimGrid grid{0.0, 1e-3, 1000};
    const SampledSignal v = disturbance_generator(3, grid, 0.2, 0.8, 1.0);
    const Trajectory traj =
        co_simulate(RollingDiscParams{}, sys, filt, (Vector(3) << 0.1, 0.2, 0.1).finished(),
                    Vector::Constant(1, 0.3), paper_input(), v, grid);
    for (int i = 0; i < grid.points(); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        CHECK((traj.e[ii] - (traj.z[ii] - traj.zhat[ii])).norm() == 0.0);
        CHECK((traj.y[ii] - (sys.C * traj.x[ii] + sys.G * traj.v[ii])).norm() <= 1e-14);
        CHECK((traj.z[ii] - sys.K * traj.x[ii]).norm() == 0.0);
    }
}
