#pragma once

#include <optional>
#include <string>

#include "dskfilt/lmi.hpp"
#include "dskfilt/simulation.hpp"
#include "dskfilt/synthesis.hpp"
#include "dskfilt/system.hpp"

namespace dskfilt {

// File-format problems (missing fields, parse errors, shape mismatches).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// System description: JSON object with 2-D arrays "E","A","B","C","D","F",
// "G","H","K", scalar "rho" and a registered builtin under "nonlinearity".
DescriptorSystem read_system_file(const std::string& path);
void write_system_file(const std::string& path, const DescriptorSystem& sys);

// Filter file: arrays "N","T","L","M" and optional "P" (recomputed as
// N*M - L when absent). Synthesis provenance ("Q","gamma","Z1","Z") rides
// along when written by the synth pipeline.
struct FilterFile {
    FilterRealization filt;
    std::optional<Matrix> Q;
    std::optional<double> gamma;
};

FilterFile read_filter_file(const std::string& path);
void write_filter_file(const std::string& path, const FilterRealization& filt,
                       const std::optional<Matrix>& Q = std::nullopt,
                       std::optional<double> gamma = std::nullopt);

struct SynthesisReport {
    std::string stage = "";  // farthest pipeline stage reached
    bool rank_holds = false;
    Index rank_big = 0, rank_small = 0;
    bool feasible = false;
    double gamma = 0.0;
    double beta = 0.0;
    double lambda_max_Pi = 0.0, lambda_min_Q = 0.0, lambda_max_Omega = 0.0;
    double res_a = 0.0, res_b = 0.0;
    std::optional<FilterRealization> filt;
    std::optional<Matrix> Q, Y;
    std::optional<double> gamma_star;  // present after a bisection run
    std::string diagnostic;
};

void write_synthesis_report(const std::string& path, const SynthesisReport& report);

// Delimited text, one row per step, header row with column names, then the
// certificate as key=value footer lines.
void export_trajectory(const std::string& path, const Trajectory& traj,
                       const std::optional<EnergyCertificate>& cert = std::nullopt);

} // namespace dskfilt
