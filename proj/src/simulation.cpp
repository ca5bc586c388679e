#include "dskfilt/simulation.hpp"

#include <cmath>
#include <future>
#include <stdexcept>
#include <string>
#include <thread>

#include "dskfilt/rng.hpp"

namespace dskfilt {

namespace {

Vector eval_g(const DescriptorSystem& sys, const Vector& arg, const Vector& u, double t) {
    try {
        return sys.g(arg, u);
    } catch (const std::exception& e) {
        throw std::runtime_error("g evaluation failed at t = " + std::to_string(t) +
                                 ": " + e.what());
    }
}

// One classical RK4 step for x' = f(x, t); f may sample held inputs.
template <typename State, typename Deriv>
State rk4_step(const State& x, double t, double h, Deriv&& f) {
    const State k1 = f(x, t);
    const State k2 = f(x + (h / 2) * k1, t + h / 2);
    const State k3 = f(x + (h / 2) * k2, t + h / 2);
    const State k4 = f(x + h * k3, t + h);
    return x + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

} // namespace

SampledSignal zero_signal(const SimGrid& grid, Index dim) {
    SampledSignal s;
    s.grid = grid;
    s.values.assign(static_cast<std::size_t>(grid.points()), Vector::Zero(dim));
    return s;
}

SampledSignal disturbance_generator(std::uint64_t seed, const SimGrid& grid,
                                    double win_lo, double win_hi, double amplitude,
                                    Index dim) {
    if (win_lo > win_hi) throw std::invalid_argument("disturbance window is empty");
    if (win_lo < grid.t0 - 1e-12 || win_hi > grid.t_final() + 1e-12) {
        throw std::invalid_argument("disturbance window must lie inside the grid span");
    }
    SampledSignal s = zero_signal(grid, dim);
    SplitMix64 rng(seed);
    for (int i = 0; i < grid.points(); ++i) {
        const double t = grid.time(i);
        if (t >= win_lo && t <= win_hi) {
            for (Index d = 0; d < dim; ++d) {
                s.values[static_cast<std::size_t>(i)](d) =
                    rng.uniform(-amplitude, amplitude);
            }
        }
    }
    return s;
}

FilterRun integrate_filter(const DescriptorSystem& sys, const FilterRealization& filt,
                           const VectorSignal& y, const VectorSignal& u,
                           const Vector& w0, const SimGrid& grid) {
    if (w0.size() != filt.N.rows()) throw std::invalid_argument("w0 must be p-dimensional");
    const Matrix TB = filt.T * sys.B;
    const Matrix TF = filt.T * sys.F;

    FilterRun run;
    run.grid = grid;
    run.w.reserve(static_cast<std::size_t>(grid.points()));
    run.zhat.reserve(static_cast<std::size_t>(grid.points()));
    run.w.push_back(w0);

    auto deriv = [&](const Vector& w, double t) -> Vector {
        const Vector yt = y(t);
        const Vector ut = u(t);
        const Vector zhat = w + filt.M * yt;
        return filt.N * w + TB * ut + filt.L * yt +
               TF * eval_g(sys, sys.H * zhat, ut, t);
    };

    for (int i = 0; i < grid.steps; ++i) {
        run.w.push_back(rk4_step(run.w.back(), grid.time(i), grid.h, deriv));
    }
    for (int i = 0; i < grid.points(); ++i) {
        const double t = grid.time(i);
        run.zhat.push_back(run.w[static_cast<std::size_t>(i)] + filt.M * y(t));
    }
    return run;
}

Vector PlantTrajectory::x_at_half(int j) const {
    const Eigen::Vector2d& x12 = x12_half.at(static_cast<std::size_t>(j));
    Vector out(3);
    out << x12(0), x12(1), x12(1) / r_radius;
    return out;
}

VectorSignal PlantTrajectory::z_stage_signal() const {
    const double hh = grid.h / 2.0;
    const double t0 = grid.t0;
    return [this, hh, t0](double t) -> Vector {
        const double pos = (t - t0) / hh;
        const int j = static_cast<int>(std::llround(pos));
        if (std::abs(pos - j) > 1e-6) {
            throw std::invalid_argument("stage signal sampled off the half-step lattice");
        }
        return Vector::Constant(1, x12_half.at(static_cast<std::size_t>(j))(0));
    };
}

PlantTrajectory simulate_rolling_disc(const RollingDiscParams& prm, const Vector& x0,
                                      const VectorSignal& u, const SampledSignal& v,
                                      const SimGrid& grid) {
    if (x0.size() != 3) throw std::invalid_argument("x0 must be 3-dimensional");
    const double r = prm.r_radius;
    const double cres = std::abs(x0(1) - r * x0(2));
    if (cres > 1e-9) {
        throw std::invalid_argument("x0 violates the rolling constraint x2 = r*x3 "
                                    "(residual " + std::to_string(cres) + ")");
    }
    if (static_cast<std::size_t>(grid.points()) != v.values.size()) {
        throw std::invalid_argument("disturbance signal and grid disagree");
    }
    const double k1m = prm.k1 / prm.m_mass;
    const double k2m = prm.k2 / prm.m_mass;
    const double bm = prm.b / prm.m_mass;

    PlantTrajectory out;
    out.grid = grid;
    out.v = v;
    out.r_radius = r;
    out.x12_half.reserve(static_cast<std::size_t>(2 * grid.steps + 1));
    out.x12_half.emplace_back(x0(0), x0(1));

    const double hh = grid.h / 2.0;
    for (int j = 0; j < 2 * grid.steps; ++j) {
        const double lam = v.at(j / 2)(0);  // held over the parent step
        auto deriv = [&](const Eigen::Vector2d& xv, double) -> Eigen::Vector2d {
            return {xv(1), -k1m * xv(0) - k2m * xv(0) * xv(0) * xv(0) - bm * xv(1) +
                               lam / prm.m_mass};
        };
        out.x12_half.push_back(
            rk4_step(out.x12_half.back(), grid.t0 + hh * j, hh, deriv));
    }

    const DescriptorSystem sys = rolling_disc_system(prm);
    for (int i = 0; i < grid.points(); ++i) {
        const Vector xi = out.x_at_half(2 * i);
        out.x.push_back(xi);
        out.y.push_back(sys.C * xi + sys.G * v.at(i));
        out.z.push_back(sys.K * xi);
        const double torque = -k2m * std::pow(xi(0), 3) - k1m * xi(0) - bm * xi(1) +
                              (1.0 / prm.m_mass + r * r / prm.J) * v.at(i)(0) -
                              (r / prm.J) * u(grid.time(i))(0);
        out.max_torque_residual = std::max(out.max_torque_residual, std::abs(torque));
    }
    return out;
}

Trajectory co_simulate(const RollingDiscParams& prm, const DescriptorSystem& sys,
                       const FilterRealization& filt, const Vector& x0, const Vector& w0,
                       const VectorSignal& u, const SampledSignal& v, const SimGrid& grid) {
    PlantTrajectory plant = simulate_rolling_disc(prm, x0, u, v, grid);
    const Matrix TB = filt.T * sys.B;
    const Matrix TF = filt.T * sys.F;

    Trajectory out;
    out.grid = grid;
    std::vector<Vector> w;
    w.reserve(static_cast<std::size_t>(grid.points()));
    w.push_back(w0);

    // Filter pass against the plant; y at stage times uses the refined plant
    // samples and the step's held disturbance value.
    for (int i = 0; i < grid.steps; ++i) {
        const Vector& vi = v.at(i);
        auto y_stage = [&](int j) { return Vector(sys.C * plant.x_at_half(j) + sys.G * vi); };
        auto deriv_at = [&](const Vector& wv, int j, double t) -> Vector {
            const Vector yt = y_stage(j);
            const Vector ut = u(t);
            const Vector zhat = wv + filt.M * yt;
            return filt.N * wv + TB * ut + filt.L * yt +
                   TF * eval_g(sys, sys.H * zhat, ut, t);
        };
        const double t = grid.time(i), h = grid.h;
        const Vector& wi = w.back();
        const Vector k1 = deriv_at(wi, 2 * i, t);
        const Vector k2 = deriv_at(wi + (h / 2) * k1, 2 * i + 1, t + h / 2);
        const Vector k3 = deriv_at(wi + (h / 2) * k2, 2 * i + 1, t + h / 2);
        const Vector k4 = deriv_at(wi + h * k3, 2 * i + 2, t + h);
        w.push_back(wi + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4));
    }

    for (int i = 0; i < grid.points(); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        out.x.push_back(plant.x[ii]);
        out.y.push_back(plant.y[ii]);
        out.z.push_back(plant.z[ii]);
        out.v.push_back(v.at(i));
        out.u.push_back(u(grid.time(i)));
        out.w.push_back(w[ii]);
        out.zhat.push_back(w[ii] + filt.M * plant.y[ii]);
        out.e.push_back(out.z.back() - out.zhat.back());
    }
    return out;
}

ErrorTrajectory integrate_error_dynamics(const DescriptorSystem& sys,
                                         const FilterRealization& filt,
                                         const SynthesisBasis& basis,
                                         const SampledSignal& v, const Vector& e1_0,
                                         const VectorSignal& z, const VectorSignal& u,
                                         const SimGrid& grid) {
    if (e1_0.size() != basis.p) throw std::invalid_argument("e1_0 must be p-dimensional");
    const Matrix TF = filt.T * sys.F;
    const Matrix Bscr = basis.B1 - filt.Z1 * basis.B2;

    ErrorTrajectory out;
    out.grid = grid;
    out.v = v;
    out.e1.reserve(static_cast<std::size_t>(grid.points()));
    out.e1.push_back(e1_0);

    for (int i = 0; i < grid.steps; ++i) {
        const Vector& vi = v.at(i);
        auto deriv = [&](const Vector& e1, double t) -> Vector {
            const Vector zt = z(t);
            const Vector ut = u(t);
            const Vector e = e1 - basis.Htilde * vi;
            const Vector zhat = zt - e;
            const Vector dg = eval_g(sys, sys.H * zt, ut, t) -
                              eval_g(sys, sys.H * zhat, ut, t);
            return filt.N * e1 + TF * dg + Bscr * vi;
        };
        out.e1.push_back(rk4_step(out.e1.back(), grid.time(i), grid.h, deriv));
    }
    for (int i = 0; i < grid.points(); ++i) {
        out.e.push_back(out.e1[static_cast<std::size_t>(i)] - basis.Htilde * v.at(i));
    }
    return out;
}

EnergyCertificate energy_certificate(const Trajectory& traj, double gamma, double beta) {
    EnergyCertificate cert;
    cert.gamma = gamma;
    cert.beta = beta;
    const double h = traj.grid.h;
    for (int i = 0; i < traj.grid.steps; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        cert.int_ee += 0.5 * h * (traj.e[ii].squaredNorm() + traj.e[ii + 1].squaredNorm());
        cert.int_vv += 0.5 * h * (traj.v[ii].squaredNorm() + traj.v[ii + 1].squaredNorm());
    }
    cert.lhs = cert.int_ee;
    cert.rhs = gamma * gamma * (beta + cert.int_vv);
    cert.satisfied = (cert.lhs <= cert.rhs + 1e-9);
    return cert;
}

double derived_beta(const Vector& e1_0, const Matrix& Q, double gamma) {
    return e1_0.dot(Q * e1_0) / (gamma * gamma);
}

double lyapunov_decay_check(const ErrorTrajectory& traj, const Matrix& Q, double gamma) {
    const double h = traj.grid.h;
    double worst = -std::numeric_limits<double>::infinity();
    auto V = [&](int i) {
        const Vector& e1 = traj.e1[static_cast<std::size_t>(i)];
        return e1.dot(Q * e1);
    };
    for (int i = 0; i < traj.grid.steps; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double dV = (V(i + 1) - V(i)) / h;
        const double bound = gamma * gamma * traj.v.at(i).squaredNorm() -
                             traj.e[ii].squaredNorm();
        worst = std::max(worst, dV - bound);
    }
    return worst;
}

EnergyBatch monte_carlo_energy(const RollingDiscParams& prm, const DescriptorSystem& sys,
                               const FilterRealization& filt, const Vector& x0,
                               const Vector& w0, const VectorSignal& u,
                               const SimGrid& grid, double win_lo, double win_hi,
                               double amplitude, const std::vector<std::uint64_t>& seeds,
                               double gamma, double beta) {
    EnergyBatch batch;
    batch.n_runs = static_cast<int>(seeds.size());

    auto run_one = [&](std::uint64_t seed) {
        SampledSignal v = disturbance_generator(seed, grid, win_lo, win_hi, amplitude);
        Trajectory traj = co_simulate(prm, sys, filt, x0, w0, u, v, grid);
        EnergyCertificate cert = energy_certificate(traj, gamma, beta);
        return std::make_pair(cert.satisfied, cert.lhs - cert.rhs);
    };

    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<std::pair<bool, double>>> futures;
    futures.reserve(seeds.size());
    std::size_t launched = 0, collected = 0;
    batch.worst_margin = -std::numeric_limits<double>::infinity();
    while (collected < seeds.size()) {
        while (launched < seeds.size() && launched - collected < workers) {
            futures.push_back(std::async(std::launch::async, run_one, seeds[launched]));
            ++launched;
        }
        auto [ok, margin] = futures[collected].get();
        if (ok) {
            ++batch.n_satisfied;
        } else {
            batch.failed_seeds.push_back(seeds[collected]);
        }
        batch.worst_margin = std::max(batch.worst_margin, margin);
        ++collected;
    }
    return batch;
}

} // namespace dskfilt
