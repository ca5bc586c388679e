#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dskfilt/synthesis.hpp"
#include "dskfilt/system.hpp"
#include "dskfilt/types.hpp"

namespace dskfilt {

/// Fixed-step time grid t0, t0+h, ..., t0+steps*h.
struct SimGrid {
    double t0 = 0.0;
    double h = 1e-3;
    int steps = 10000;

    double time(int i) const { return t0 + h * static_cast<double>(i); }
    int points() const { return steps + 1; }
    double t_final() const { return time(steps); }
};

using VectorSignal = std::function<Vector(double)>;

/// One value per grid point, held constant over each step (zero-order hold).
struct SampledSignal {
    SimGrid grid;
    std::vector<Vector> values;

    const Vector& at(int i) const { return values.at(static_cast<std::size_t>(i)); }
};

SampledSignal zero_signal(const SimGrid& grid, Index dim);

// Per-step uniform draws in [-amplitude, amplitude] for t in [win_lo, win_hi],
// zero outside; splitmix64 stream, bit-identical for a fixed seed.
SampledSignal disturbance_generator(std::uint64_t seed, const SimGrid& grid,
                                    double win_lo, double win_hi, double amplitude,
                                    Index dim = 1);

struct FilterRun {
    SimGrid grid;
    std::vector<Vector> w, zhat;
};

// RK4 on w' = N w + T B u + L y + T F g(H zhat, u), zhat = w + M y.
// y and u are sampled at the stage times; g enters w' only, so the equation
// stays explicit.
FilterRun integrate_filter(const DescriptorSystem& sys, const FilterRealization& filt,
                           const VectorSignal& y, const VectorSignal& u,
                           const Vector& w0, const SimGrid& grid);

/// Disc plant reduced to x1' = x2, x2' = -(k1/m)x1 - (k2/m)x1^3 - (b/m)x2 + v/m
/// with x3 = x2/r eliminated by the rolling constraint. The torque-balance
/// (algebraic) equation is not imposed when u and v are both prescribed; its
/// residual is recorded instead.
struct PlantTrajectory {
    SimGrid grid;
    std::vector<Vector> x, y, z;
    SampledSignal v;
    double max_torque_residual = 0.0;

    // (x1, x2) at half-step resolution, for stage-exact downstream sampling
    std::vector<Eigen::Vector2d> x12_half;
    double r_radius = 1.0;

    Vector x_at_half(int j) const;
    // z(t) at RK4 stage times (t must fall on the half-step lattice)
    VectorSignal z_stage_signal() const;
};

PlantTrajectory simulate_rolling_disc(const RollingDiscParams& params, const Vector& x0,
                                      const VectorSignal& u, const SampledSignal& v,
                                      const SimGrid& grid);

/// Plant + filter records on a common grid; e = z - zhat pointwise and
/// y = C x + G v pointwise.
struct Trajectory {
    SimGrid grid;
    std::vector<Vector> x, w, z, zhat, e, v, u, y;
};

Trajectory co_simulate(const RollingDiscParams& params, const DescriptorSystem& sys,
                       const FilterRealization& filt, const Vector& x0, const Vector& w0,
                       const VectorSignal& u, const SampledSignal& v, const SimGrid& grid);

struct ErrorTrajectory {
    SimGrid grid;
    std::vector<Vector> e1, e;
    SampledSignal v;
};

// RK4 on e1' = N e1 + T F dg + (B1 - Z1 B2) v, e = e1 - Htilde v, with
// dg = g(Hz, u) - g(H zhat, u) and zhat = z - e reconstructed per stage.
ErrorTrajectory integrate_error_dynamics(const DescriptorSystem& sys,
                                         const FilterRealization& filt,
                                         const SynthesisBasis& basis,
                                         const SampledSignal& v, const Vector& e1_0,
                                         const VectorSignal& z, const VectorSignal& u,
                                         const SimGrid& grid);

struct EnergyCertificate {
    double gamma = 0.0;
    double beta = 0.0;
    double int_ee = 0.0;  // integral of e^T e (trapezoid)
    double int_vv = 0.0;  // integral of v^T v (trapezoid)
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false;
};

EnergyCertificate energy_certificate(const Trajectory& traj, double gamma, double beta);

double derived_beta(const Vector& e1_0, const Matrix& Q, double gamma);

// Max over the grid of forward-difference dV/dt - gamma^2 v^T v + e^T e with
// V = e1^T Q e1. Forward differences line up with the zero-order-hold v.
double lyapunov_decay_check(const ErrorTrajectory& traj, const Matrix& Q, double gamma);

struct EnergyBatch {
    int n_runs = 0;
    int n_satisfied = 0;
    double worst_margin = 0.0;  // max over runs of lhs - rhs
    std::vector<std::uint64_t> failed_seeds;
};

// Independent seeded runs of the disturbance scenario, executed concurrently
// and merged in seed order.
EnergyBatch monte_carlo_energy(const RollingDiscParams& params, const DescriptorSystem& sys,
                               const FilterRealization& filt, const Vector& x0,
                               const Vector& w0, const VectorSignal& u,
                               const SimGrid& grid, double win_lo, double win_hi,
                               double amplitude, const std::vector<std::uint64_t>& seeds,
                               double gamma, double beta);

} // namespace dskfilt
