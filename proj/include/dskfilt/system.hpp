#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dskfilt/types.hpp"

namespace dskfilt {

// Nonlinearity g(s, u): s in R^l, u in R^k.
using NonlinearFn = std::function<Vector(const Vector&, const Vector&)>;

/// Descriptor plant  E x' = A x + B u + D v + F g(H K x, u),
///                   y = C x + G v,   z = K x.
struct DescriptorSystem {
    Matrix E, A, B, C, D, F, G, H, K;
    double rho = 0.0;  // generalized monotone constant of g
    NonlinearFn g;
    std::string g_name;  // registry name, empty for custom callables

    // axis-aligned sampling box for z-space (preimage of the g domain under H)
    Vector box_lo, box_hi;

    Index m() const { return E.rows(); }
    Index n() const { return E.cols(); }
    Index k() const { return B.cols(); }
    Index r() const { return C.rows(); }
    Index p() const { return K.rows(); }
    Index q() const { return D.cols(); }
    Index l() const { return F.cols(); }
};

// Empty result means all dimension invariants hold and every entry is finite.
std::vector<std::string> validate(const DescriptorSystem& sys);

struct RankCondition {
    bool holds = false;
    Index rank_big = 0;    // [E A; C 0; 0 C; 0 K; K 0]
    Index rank_small = 0;  // [E A; C 0; 0 C; 0 K]
};

RankCondition check_rank_condition(const DescriptorSystem& sys);

struct MonotonicityReport {
    double min_ratio = 0.0;
    bool holds = false;
};

// Samples pairs z1, z2 from [box_lo, box_hi] in R^p, maps them through H and
// evaluates the sector ratio (dx^T dg + dg^T dx) / ||dx||^2 over every pair
// and every supplied input. Degenerate pairs (dx = 0) are resampled, at most
// 100 times each before failing.
MonotonicityReport check_monotonicity_sampled(const DescriptorSystem& sys,
                                              const Vector& box_lo, const Vector& box_hi,
                                              const std::vector<Vector>& u_samples,
                                              int n_pairs, std::uint64_t seed);

struct SlopeBoundReport {
    double min_eig = 0.0;
    bool holds = false;
};

// Finite-difference Jacobian check of the slope bound J + J^T >= rho*I at the
// given sample points in R^l.
SlopeBoundReport slope_bound_check(const DescriptorSystem& sys,
                                   const std::vector<Vector>& samples,
                                   double fd_step,
                                   const std::vector<Vector>& u_samples = {},
                                   double tol = 1e-6);

/// Disc rolling without slipping, tied to a wall by a stiffening spring
/// (k1 x + k2 x^3) and a linear damper.
struct RollingDiscParams {
    double k1 = 1.0;
    double k2 = 1.0;
    double b = 2.0;
    double m_mass = 1.0;
    double r_radius = 2.0;
    double J = 4.0;
};

DescriptorSystem rolling_disc_system(const RollingDiscParams& params = {});

// Reconstructs RollingDiscParams from a system whose matrices match the
// rolling-disc template; returns false otherwise. Lets file-loaded systems
// drive the disc plant integrator.
bool match_rolling_disc(const DescriptorSystem& sys, RollingDiscParams& out,
                        double tol = 1e-9);

// Registered builtin nonlinearities ("zero", "identity", "cubic", ...), the
// only forms a data file can select.
const std::vector<std::string>& nonlinearity_names();
NonlinearFn make_nonlinearity(const std::string& name);

} // namespace dskfilt
