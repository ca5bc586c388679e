#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "dskfilt/io.hpp"
#include "dskfilt/lmi.hpp"
#include "dskfilt/simulation.hpp"
#include "dskfilt/synthesis.hpp"
#include "dskfilt/system.hpp"

namespace {

using namespace dskfilt;

// Exit codes are a total function of the pipeline outcome:
//   0 success, 1 usage/file/validation error, 2 rank-condition failure,
//   3 LMI infeasible, 4 residuals exceed tolerance, 5 energy certificate
//   violated, 6 filter matrix N not Hurwitz.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kRankFailure = 2,
    kInfeasible = 3,
    kResidual = 4,
    kCertificate = 5,
    kNotHurwitz = 6,
};

std::string default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("DSKFILT_OUT"); env && *env) return env;
    return ".";
}

Vector parse_vector(const std::string& csv) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t next = csv.find(',', pos);
        const std::string tok = csv.substr(pos, next == std::string::npos
                                                    ? std::string::npos
                                                    : next - pos);
        vals.push_back(std::stod(tok));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    Vector out(static_cast<Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out(static_cast<Index>(i)) = vals[i];
    return out;
}

VectorSignal sine_input(double amplitude) {
    return [amplitude](double t) {
        return Vector::Constant(1, amplitude * std::sin(std::numbers::pi * t));
    };
}

bool is_hurwitz(const Matrix& N) {
    Eigen::EigenSolver<Matrix> es(N);
    for (Index i = 0; i < N.rows(); ++i) {
        if (es.eigenvalues()(i).real() >= 0.0) return false;
    }
    return true;
}

struct SynthConfig {
    double gamma = 1.4;
    bool bisect = false;
    double gamma_lo = 1e-3;
    double tol_gamma = 1e-2;
    Vector x0;  // for the derived beta; empty means zero
    double w0_scalar = 0.0;
    std::string report_path, filter_path;
};

int run_synth_pipeline(const DescriptorSystem& sys, const SynthConfig& cfg) {
    SynthesisReport rep;
    rep.gamma = cfg.gamma;

    const RankCondition rank = check_rank_condition(sys);
    rep.rank_holds = rank.holds;
    rep.rank_big = rank.rank_big;
    rep.rank_small = rank.rank_small;
    if (!rank.holds) {
        rep.stage = "rank_condition";
        rep.diagnostic = "rank condition fails: rank with [K 0] row = " +
                         std::to_string(rank.rank_big) + ", without = " +
                         std::to_string(rank.rank_small);
        write_synthesis_report(cfg.report_path, rep);
        std::cerr << rep.diagnostic << "\n";
        return kRankFailure;
    }

    const SynthesisBasis basis = synthesize_basis(sys);
    LmiSolution sol;
    if (cfg.bisect) {
        const GammaSearch search =
            bisect_gamma(basis, sys, sys.rho, cfg.gamma_lo, cfg.gamma, cfg.tol_gamma);
        rep.gamma_star = search.gamma_star;
        sol = search.solution;
        if (!search.ok) {
            rep.stage = "lmi";
            rep.diagnostic = search.diagnostic;
            write_synthesis_report(cfg.report_path, rep);
            std::cerr << search.diagnostic << "\n";
            return kInfeasible;
        }
        rep.gamma = search.gamma_star;
    } else {
        sol = solve_feasibility(make_lmi_problem(basis, sys, cfg.gamma, sys.rho));
    }
    if (!sol.feasible) {
        rep.stage = "lmi";
        rep.diagnostic = sol.diagnostic;
        write_synthesis_report(cfg.report_path, rep);
        std::cerr << "LMI infeasible at gamma = " << cfg.gamma << ": " << sol.diagnostic
                  << "\n";
        return kInfeasible;
    }

    const FilterRealization filt = recover_filter(basis, sys, sol.Z1);
    rep.stage = "complete";
    rep.feasible = true;
    rep.lambda_max_Pi = sol.lambda_max_Pi;
    rep.lambda_min_Q = sol.lambda_min_Q;
    rep.lambda_max_Omega = sol.lambda_max_Omega;
    rep.res_a = filt.res_a;
    rep.res_b = filt.res_b;
    rep.filt = filt;
    rep.Q = sol.Q;
    rep.Y = sol.Y;

    Vector x0 = cfg.x0.size() == sys.n() ? cfg.x0 : Vector(Vector::Zero(sys.n()));
    Vector w0 = Vector::Constant(sys.p(), cfg.w0_scalar);
    const Vector e1_0 = filt.T * sys.E * x0 - w0;
    rep.beta = derived_beta(e1_0, sol.Q, rep.gamma);

    write_synthesis_report(cfg.report_path, rep);
    write_filter_file(cfg.filter_path, filt, sol.Q, rep.gamma);

    std::cout << "feasible at gamma = " << rep.gamma
              << "  lambda_max(Pi) = " << sol.lambda_max_Pi
              << "  lambda_min(Q) = " << sol.lambda_min_Q << "\n"
              << "design residuals: res_a = " << filt.res_a
              << "  res_b = " << filt.res_b << "\n"
              << "report: " << cfg.report_path << "  filter: " << cfg.filter_path << "\n";
    return kOk;
}

struct SimulateConfig {
    double t_final = 10.0;
    double step = 1e-3;
    std::uint64_t seed = 1;
    double win_lo = 2.0, win_hi = 6.0;
    double amplitude = 1.0;
    double gamma = 1.4;
    std::optional<double> beta;
    Vector x0;
    double w0_scalar = 0.3;
    double u_amplitude = 0.2;
    std::string traj_path;
};

int run_simulate(const DescriptorSystem& sys, const FilterFile& ff,
                 const SimulateConfig& cfg) {
    RollingDiscParams prm;
    if (!match_rolling_disc(sys, prm)) {
        std::cerr << "simulate needs a system matching the built-in rolling-disc "
                     "plant template\n";
        return kUsage;
    }
    SimGrid grid{0.0, cfg.step, static_cast<int>(std::llround(cfg.t_final / cfg.step))};
    SampledSignal v =
        cfg.amplitude == 0.0
            ? zero_signal(grid, sys.q())
            : disturbance_generator(cfg.seed, grid, cfg.win_lo, cfg.win_hi, cfg.amplitude);
    const VectorSignal u = sine_input(cfg.u_amplitude);

    Trajectory traj;
    const Vector w0 = Vector::Constant(sys.p(), cfg.w0_scalar);
    try {
        traj = co_simulate(prm, sys, ff.filt, cfg.x0, w0, u, v, grid);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    }

    double beta = 0.0;
    if (ff.Q) {
        const Vector e1_0 = ff.filt.T * sys.E * cfg.x0 - w0;
        // beta belongs to the certified design: V(e1(0)) = gamma_design^2 beta
        beta = derived_beta(e1_0, *ff.Q, ff.gamma.value_or(cfg.gamma));
    }
    if (cfg.beta) {
        if (ff.Q && *cfg.beta < beta) {
            std::cerr << "note: user beta " << *cfg.beta
                      << " is below the derived e1(0)^T Q e1(0)/gamma^2 = " << beta
                      << "\n";
        }
        beta = *cfg.beta;
    } else if (!ff.Q) {
        std::cerr << "note: no Q available; beta defaults to 0\n";
    }

    const EnergyCertificate cert = energy_certificate(traj, cfg.gamma, beta);
    export_trajectory(cfg.traj_path, traj, cert);
    std::cout << "energy certificate: int e'e = " << cert.int_ee
              << "  gamma^2(beta + int v'v) = " << cert.rhs
              << (cert.satisfied ? "  satisfied" : "  VIOLATED") << "\n"
              << "final error norm |e(t_f)| = " << traj.e.back().norm() << "\n"
              << "trajectory: " << cfg.traj_path << "\n";
    return cert.satisfied ? kOk : kCertificate;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional H-infinity filter synthesis and verification for "
                 "nonlinear descriptor systems"};
    app.require_subcommand(1);

    std::string out_dir_flag;
    app.add_option("--out-dir", out_dir_flag,
                   "output directory (default: $DSKFILT_OUT or '.')");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "design a filter from a system file");
    std::string synth_system;
    SynthConfig synth_cfg;
    std::string synth_x0;
    synth->add_option("system", synth_system, "system description file")->required();
    synth->add_option("--gamma", synth_cfg.gamma, "L2-gain level")
        ->check(CLI::PositiveNumber);
    synth->add_flag("--bisect", synth_cfg.bisect, "bisect down from --gamma");
    synth->add_option("--gamma-lo", synth_cfg.gamma_lo, "bisection lower bracket")
        ->check(CLI::PositiveNumber);
    synth->add_option("--tol-gamma", synth_cfg.tol_gamma, "bisection tolerance")
        ->check(CLI::PositiveNumber);
    synth->add_option("--x0", synth_x0, "initial semistate for the derived beta (csv)");
    synth->add_option("--w0", synth_cfg.w0_scalar, "initial filter state for beta");
    synth->add_option("--report", synth_cfg.report_path, "report file path");
    synth->add_option("--filter-out", synth_cfg.filter_path, "filter file path");

    // ---- verify ----
    auto* verify = app.add_subcommand("verify", "check a filter against a system");
    std::string verify_system, verify_filter;
    double verify_tol = 5e-3;
    verify->add_option("system", verify_system)->required();
    verify->add_option("filter", verify_filter)->required();
    verify->add_option("--tol", verify_tol, "residual tolerance")
        ->check(CLI::PositiveNumber);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "run a verification scenario");
    std::string sim_system, sim_filter, sim_x0 = "0.1,0.2,0.1";
    SimulateConfig sim_cfg;
    double sim_beta = -1.0;
    simulate->add_option("system", sim_system)->required();
    simulate->add_option("filter", sim_filter)->required();
    simulate->add_option("--t-final", sim_cfg.t_final)->check(CLI::PositiveNumber);
    simulate->add_option("--step", sim_cfg.step)->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim_cfg.seed);
    simulate->add_option("--dist-window", [&sim_cfg](const std::vector<std::string>& vals) {
        sim_cfg.win_lo = std::stod(vals.at(0));
        sim_cfg.win_hi = std::stod(vals.at(1));
        return true;
    }, "disturbance window lo hi")->expected(2);
    simulate->add_option("--dist-amplitude", sim_cfg.amplitude)
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--gamma", sim_cfg.gamma)->check(CLI::PositiveNumber);
    simulate->add_option("--beta", sim_beta, "certificate beta (derived from Q if absent)");
    simulate->add_option("--x0", sim_x0, "initial semistate (csv)");
    simulate->add_option("--w0", sim_cfg.w0_scalar);
    simulate->add_option("--u-amplitude", sim_cfg.u_amplitude);
    simulate->add_option("--traj-out", sim_cfg.traj_path);

    // ---- example ----
    auto* example = app.add_subcommand("example", "run the built-in rolling-disc pipeline");
    double ex_gamma = 1.4;
    bool ex_bisect = false;
    std::uint64_t ex_seed = 1;
    example->add_option("--gamma", ex_gamma)->check(CLI::PositiveNumber);
    example->add_flag("--bisect", ex_bisect);
    example->add_option("--seed", ex_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    const std::string out_dir = default_out_dir(out_dir_flag);

    try {
        std::filesystem::create_directories(out_dir);

        if (synth->parsed()) {
            const DescriptorSystem sys = read_system_file(synth_system);
            if (!synth_x0.empty()) synth_cfg.x0 = parse_vector(synth_x0);
            if (synth_cfg.report_path.empty()) synth_cfg.report_path = out_dir + "/report.json";
            if (synth_cfg.filter_path.empty()) synth_cfg.filter_path = out_dir + "/filter.json";
            return run_synth_pipeline(sys, synth_cfg);
        }

        if (verify->parsed()) {
            const DescriptorSystem sys = read_system_file(verify_system);
            const FilterFile ff = read_filter_file(verify_filter);
            if (ff.filt.T.cols() != sys.m() || ff.filt.L.cols() != sys.r() ||
                ff.filt.M.cols() != sys.r() || ff.filt.N.rows() != sys.p()) {
                std::cerr << "filter dimensions do not match the system\n";
                return kUsage;
            }
            auto [res_a, res_b] = verify_design_equations(sys, ff.filt);
            Eigen::EigenSolver<Matrix> es(ff.filt.N);
            std::cout << "res_a = " << res_a << "\nres_b = " << res_b
                      << "\nN eigenvalues:";
            for (Index i = 0; i < ff.filt.N.rows(); ++i) {
                std::cout << " " << es.eigenvalues()(i).real();
                if (es.eigenvalues()(i).imag() != 0.0) {
                    std::cout << (es.eigenvalues()(i).imag() > 0 ? "+" : "")
                              << es.eigenvalues()(i).imag() << "i";
                }
            }
            std::cout << "\n";
            if (res_a > verify_tol || res_b > verify_tol) {
                std::cerr << "residuals exceed tolerance " << verify_tol << "\n";
                return kResidual;
            }
            if (!is_hurwitz(ff.filt.N)) {
                std::cerr << "N is not Hurwitz\n";
                return kNotHurwitz;
            }
            return kOk;
        }

        if (simulate->parsed()) {
            const DescriptorSystem sys = read_system_file(sim_system);
            const FilterFile ff = read_filter_file(sim_filter);
            sim_cfg.x0 = parse_vector(sim_x0);
            if (sim_beta >= 0.0) sim_cfg.beta = sim_beta;
            if (sim_cfg.traj_path.empty()) sim_cfg.traj_path = out_dir + "/trajectory.csv";
            return run_simulate(sys, ff, sim_cfg);
        }

        if (example->parsed()) {
            const DescriptorSystem sys = rolling_disc_system();
            write_system_file(out_dir + "/system.json", sys);

            SynthConfig cfg;
            cfg.gamma = ex_gamma;
            cfg.bisect = ex_bisect;
            cfg.x0 = parse_vector("0.1,0.2,0.1");
            cfg.w0_scalar = 0.3;
            cfg.report_path = out_dir + "/report.json";
            cfg.filter_path = out_dir + "/filter.json";
            const int synth_code = run_synth_pipeline(sys, cfg);
            if (synth_code != kOk) return synth_code;

            const FilterFile ff = read_filter_file(out_dir + "/filter.json");
            SimulateConfig sim;
            sim.seed = ex_seed;
            sim.gamma = ex_gamma;
            sim.x0 = cfg.x0;
            sim.traj_path = out_dir + "/trajectory.csv";
            return run_simulate(sys, ff, sim);
        }
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
