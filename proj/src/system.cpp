#include "dskfilt/system.hpp"

#include <cmath>
#include <stdexcept>

#include "dskfilt/matrix_core.hpp"
#include "dskfilt/rng.hpp"

namespace dskfilt {

namespace {

void append_dim(std::vector<std::string>& out, bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
}

std::string shape(const Matrix& A) {
    return std::to_string(A.rows()) + "x" + std::to_string(A.cols());
}

} // namespace

std::vector<std::string> validate(const DescriptorSystem& sys) {
    std::vector<std::string> out;
    const Index m = sys.m(), n = sys.n(), r = sys.r(), p = sys.p(), q = sys.q(), l = sys.l();

    append_dim(out, sys.A.rows() == m && sys.A.cols() == n,
               "A must match E in shape (A " + shape(sys.A) + ", E " + shape(sys.E) + ")");
    append_dim(out, sys.B.rows() == m,
               "B must have the same row count as E (B " + shape(sys.B) + ")");
    append_dim(out, sys.C.cols() == n,
               "C must have n columns to act on the semistate of E (C " + shape(sys.C) + ")");
    append_dim(out, sys.D.rows() == m,
               "D must have the same row count as E (D " + shape(sys.D) + ")");
    append_dim(out, sys.F.rows() == m,
               "F must have the same row count as E (F " + shape(sys.F) + ")");
    append_dim(out, sys.G.rows() == r && sys.G.cols() == q,
               "G must be r x q to enter y = Cx + Gv (G " + shape(sys.G) + ")");
    append_dim(out, sys.K.cols() == n,
               "K must have n columns to match the semistate of E (K " + shape(sys.K) + ")");
    append_dim(out, sys.H.rows() == l && sys.H.cols() == p,
               "H must be l x p linking K rows to the g argument (H " + shape(sys.H) + ")");

    const struct { const char* name; const Matrix* mat; } fields[] = {
        {"E", &sys.E}, {"A", &sys.A}, {"B", &sys.B}, {"C", &sys.C}, {"D", &sys.D},
        {"F", &sys.F}, {"G", &sys.G}, {"H", &sys.H}, {"K", &sys.K},
    };
    for (const auto& f : fields) {
        if (!f.mat->allFinite()) {
            out.push_back(std::string(f.name) + " contains non-finite entries");
        }
    }
    if (!std::isfinite(sys.rho)) out.push_back("rho is not finite");
    return out;
}

RankCondition check_rank_condition(const DescriptorSystem& sys) {
    const Index m = sys.m(), n = sys.n(), r = sys.r(), p = sys.p();
    Matrix small(m + 2 * r + p, 2 * n);
    small << sys.E, sys.A,
             sys.C, Matrix::Zero(r, n),
             Matrix::Zero(r, n), sys.C,
             Matrix::Zero(p, n), sys.K;
    Matrix big(m + 2 * r + 2 * p, 2 * n);
    big << small,
           sys.K, Matrix::Zero(p, n);

    RankCondition out;
    out.rank_big = numerical_rank(big);
    out.rank_small = numerical_rank(small);
    out.holds = (out.rank_big == out.rank_small);
    return out;
}

MonotonicityReport check_monotonicity_sampled(const DescriptorSystem& sys,
                                              const Vector& box_lo, const Vector& box_hi,
                                              const std::vector<Vector>& u_samples,
                                              int n_pairs, std::uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
    const Index p = sys.p();
    if (box_lo.size() != p || box_hi.size() != p) {
        throw std::invalid_argument("sampling box must live in R^p");
    }
    std::vector<Vector> inputs = u_samples;
    if (inputs.empty()) inputs.push_back(Vector::Zero(sys.k()));

    SplitMix64 rng(seed);
    auto draw = [&]() {
        Vector z(p);
        for (Index i = 0; i < p; ++i) z(i) = rng.uniform(box_lo(i), box_hi(i));
        return z;
    };

    MonotonicityReport out;
    out.min_ratio = std::numeric_limits<double>::infinity();
    for (int pair = 0; pair < n_pairs; ++pair) {
        Vector x1, dx;
        int attempts = 0;
        do {
            if (++attempts > 100) {
                throw std::runtime_error("degenerate sampling box: dx = 0 after 100 retries");
            }
            x1 = sys.H * draw();
            dx = x1 - sys.H * draw();
        } while (dx.squaredNorm() == 0.0);
        const Vector x2 = x1 - dx;
        for (const Vector& u : inputs) {
            const Vector dg = sys.g(x1, u) - sys.g(x2, u);
            const double ratio = 2.0 * dx.dot(dg) / dx.squaredNorm();
            out.min_ratio = std::min(out.min_ratio, ratio);
        }
    }
    out.holds = (out.min_ratio >= sys.rho - 1e-9);
    return out;
}

SlopeBoundReport slope_bound_check(const DescriptorSystem& sys,
                                   const std::vector<Vector>& samples,
                                   double fd_step,
                                   const std::vector<Vector>& u_samples,
                                   double tol) {
    if (samples.empty()) throw std::invalid_argument("slope_bound_check needs samples");
    if (fd_step <= 0.0) throw std::invalid_argument("fd_step must be positive");
    const Index l = sys.l();
    std::vector<Vector> inputs = u_samples;
    if (inputs.empty()) inputs.push_back(Vector::Zero(sys.k()));

    SlopeBoundReport out;
    out.min_eig = std::numeric_limits<double>::infinity();
    for (const Vector& s : samples) {
        if (s.size() != l) throw std::invalid_argument("slope samples must live in R^l");
        for (const Vector& u : inputs) {
            Matrix jac(l, l);
            for (Index j = 0; j < l; ++j) {
                Vector hi = s, lo = s;
                hi(j) += fd_step;
                lo(j) -= fd_step;
                jac.col(j) = (sys.g(hi, u) - sys.g(lo, u)) / (2.0 * fd_step);
            }
            out.min_eig = std::min(out.min_eig,
                                   min_symmetric_eigenvalue(jac + jac.transpose()));
        }
    }
    out.holds = (out.min_eig >= sys.rho - tol);
    return out;
}

DescriptorSystem rolling_disc_system(const RollingDiscParams& prm) {
    if (prm.k1 <= 0 || prm.k2 <= 0 || prm.b <= 0 || prm.m_mass <= 0 ||
        prm.r_radius <= 0 || prm.J <= 0) {
        throw std::invalid_argument("rolling disc parameters must be strictly positive");
    }
    const double k1m = prm.k1 / prm.m_mass;
    const double k2m = prm.k2 / prm.m_mass;
    const double bm = prm.b / prm.m_mass;
    const double r = prm.r_radius;

    DescriptorSystem sys;
    sys.E = Matrix::Zero(3, 3);
    sys.E(0, 0) = 1.0;
    sys.E(1, 1) = 1.0;
    sys.A = Matrix::Zero(3, 3);
    sys.A << 0.0, 1.0, 0.0,
             -k1m, -bm, 0.0,
             -k1m, 0.0, -r * bm;
    sys.B = Matrix::Zero(3, 1);
    sys.B(2, 0) = -r / prm.J;
    sys.D = Matrix::Zero(3, 1);
    sys.D(1, 0) = 1.0 / prm.m_mass;
    sys.D(2, 0) = 1.0 / prm.m_mass + r * r / prm.J;
    sys.F = Matrix::Zero(3, 1);
    sys.F(1, 0) = -k2m;
    sys.F(2, 0) = -k2m;
    sys.C = Matrix::Zero(2, 3);
    sys.C << 1.0, 1.0, 0.0,
             0.0, 0.0, 1.0;
    sys.K = Matrix::Zero(1, 3);
    sys.K(0, 0) = 1.0;
    sys.G = Matrix::Zero(2, 1);
    sys.G << 0.35, 0.11;
    sys.H = Matrix::Constant(1, 1, 1.0);
    sys.rho = 0.0;
    sys.g_name = "cubic";
    sys.g = make_nonlinearity("cubic");
    sys.box_lo = Vector::Constant(1, -2.0);
    sys.box_hi = Vector::Constant(1, 2.0);
    return sys;
}

bool match_rolling_disc(const DescriptorSystem& sys, RollingDiscParams& out, double tol) {
    if (sys.m() != 3 || sys.n() != 3 || sys.r() != 2 || sys.p() != 1 ||
        sys.q() != 1 || sys.l() != 1 || sys.k() != 1) {
        return false;
    }
    if (sys.D(1, 0) <= 0.0 || sys.B(2, 0) >= 0.0 || sys.A(1, 1) >= 0.0) return false;
    RollingDiscParams prm;
    prm.m_mass = 1.0 / sys.D(1, 0);
    prm.k1 = -sys.A(1, 0) * prm.m_mass;
    prm.k2 = -sys.F(1, 0) * prm.m_mass;
    prm.b = -sys.A(1, 1) * prm.m_mass;
    prm.r_radius = -sys.A(2, 2) * prm.m_mass / prm.b;
    prm.J = -prm.r_radius / sys.B(2, 0);
    if (!(prm.k1 > 0 && prm.k2 > 0 && prm.b > 0 && prm.m_mass > 0 &&
          prm.r_radius > 0 && prm.J > 0)) {
        return false;
    }
    DescriptorSystem ref = rolling_disc_system(prm);
    ref.G = sys.G;  // measurement feedthrough is free data, not a disc parameter
    const double diff = (ref.E - sys.E).norm() + (ref.A - sys.A).norm() +
                        (ref.B - sys.B).norm() + (ref.C - sys.C).norm() +
                        (ref.D - sys.D).norm() + (ref.F - sys.F).norm() +
                        (ref.K - sys.K).norm() + (ref.H - sys.H).norm();
    if (diff > tol) return false;
    out = prm;
    return true;
}

const std::vector<std::string>& nonlinearity_names() {
    static const std::vector<std::string> names = {"zero", "identity", "cubic",
                                                   "cubic_plus_linear"};
    return names;
}

NonlinearFn make_nonlinearity(const std::string& name) {
    if (name == "zero") {
        return [](const Vector& s, const Vector&) { return Vector(Vector::Zero(s.size())); };
    }
    if (name == "identity") {
        return [](const Vector& s, const Vector&) { return s; };
    }
    if (name == "cubic") {
        return [](const Vector& s, const Vector&) { return Vector(s.array().cube()); };
    }
    if (name == "cubic_plus_linear") {
        return [](const Vector& s, const Vector&) { return Vector(s.array().cube() + s.array()); };
    }
    throw std::invalid_argument("unknown nonlinearity '" + name + "'");
}

} // namespace dskfilt
