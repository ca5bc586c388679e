#include "dskfilt/io.hpp"

#include <fstream>
#include <json.hpp>

namespace dskfilt {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& A) {
    json rows = json::array();
    for (Index i = 0; i < A.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw IoError("field '" + field + "' must be a 2-D array (list of rows)");
    }
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j.front().size());
    Matrix A(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw IoError("field '" + field + "' has ragged rows");
        }
        for (Index jj = 0; jj < cols; ++jj) {
            const json& cell = row.at(static_cast<std::size_t>(jj));
            if (!cell.is_number()) {
                throw IoError("field '" + field + "' contains a non-numeric entry");
            }
            A(i, jj) = cell.get<double>();
        }
    }
    return A;
}

json load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("parse error in '" + path + "': " + e.what());
    }
}

void save(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

const json& field(const json& j, const std::string& name) {
    auto it = j.find(name);
    if (it == j.end()) throw IoError("missing field '" + name + "'");
    return *it;
}

} // namespace

DescriptorSystem read_system_file(const std::string& path) {
    const json j = load(path);
    DescriptorSystem sys;
    sys.E = matrix_from_json(field(j, "E"), "E");
    sys.A = matrix_from_json(field(j, "A"), "A");
    sys.B = matrix_from_json(field(j, "B"), "B");
    sys.C = matrix_from_json(field(j, "C"), "C");
    sys.D = matrix_from_json(field(j, "D"), "D");
    sys.F = matrix_from_json(field(j, "F"), "F");
    sys.G = matrix_from_json(field(j, "G"), "G");
    sys.H = matrix_from_json(field(j, "H"), "H");
    sys.K = matrix_from_json(field(j, "K"), "K");
    const json& rho = field(j, "rho");
    if (!rho.is_number()) throw IoError("field 'rho' must be a number");
    sys.rho = rho.get<double>();
    const json& nl = field(j, "nonlinearity");
    if (!nl.is_string()) throw IoError("field 'nonlinearity' must name a builtin");
    sys.g_name = nl.get<std::string>();
    try {
        sys.g = make_nonlinearity(sys.g_name);
    } catch (const std::invalid_argument& e) {
        throw IoError(e.what());
    }
    sys.box_lo = Vector::Constant(sys.p(), -2.0);
    sys.box_hi = Vector::Constant(sys.p(), 2.0);
    if (auto it = j.find("box"); it != j.end()) {
        const Matrix box = matrix_from_json(*it, "box");
        if (box.rows() != 2 || box.cols() != sys.p()) {
            throw IoError("field 'box' must be 2 x p (low row, high row)");
        }
        sys.box_lo = box.row(0).transpose();
        sys.box_hi = box.row(1).transpose();
    }
    const auto violations = validate(sys);
    if (!violations.empty()) {
        std::string msg = "system file '" + path + "' is inconsistent:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw IoError(msg);
    }
    return sys;
}

void write_system_file(const std::string& path, const DescriptorSystem& sys) {
    json j;
    j["E"] = matrix_to_json(sys.E);
    j["A"] = matrix_to_json(sys.A);
    j["B"] = matrix_to_json(sys.B);
    j["C"] = matrix_to_json(sys.C);
    j["D"] = matrix_to_json(sys.D);
    j["F"] = matrix_to_json(sys.F);
    j["G"] = matrix_to_json(sys.G);
    j["H"] = matrix_to_json(sys.H);
    j["K"] = matrix_to_json(sys.K);
    j["rho"] = sys.rho;
    j["nonlinearity"] = sys.g_name.empty() ? "zero" : sys.g_name;
    if (sys.box_lo.size() == sys.p() && sys.box_hi.size() == sys.p()) {
        Matrix box(2, sys.p());
        box.row(0) = sys.box_lo.transpose();
        box.row(1) = sys.box_hi.transpose();
        j["box"] = matrix_to_json(box);
    }
    save(path, j);
}

FilterFile read_filter_file(const std::string& path) {
    const json j = load(path);
    FilterFile out;
    out.filt.N = matrix_from_json(field(j, "N"), "N");
    out.filt.T = matrix_from_json(field(j, "T"), "T");
    out.filt.L = matrix_from_json(field(j, "L"), "L");
    out.filt.M = matrix_from_json(field(j, "M"), "M");
    if (auto it = j.find("P"); it != j.end()) {
        out.filt.P = matrix_from_json(*it, "P");
    } else {
        out.filt.P = out.filt.N * out.filt.M - out.filt.L;
    }
    if (auto it = j.find("Z1"); it != j.end()) out.filt.Z1 = matrix_from_json(*it, "Z1");
    if (auto it = j.find("Z"); it != j.end()) out.filt.Z = matrix_from_json(*it, "Z");
    if (auto it = j.find("Q"); it != j.end()) out.Q = matrix_from_json(*it, "Q");
    if (auto it = j.find("gamma"); it != j.end()) {
        if (!it->is_number()) throw IoError("field 'gamma' must be a number");
        out.gamma = it->get<double>();
    }
    const Index p = out.filt.N.rows();
    if (out.filt.N.cols() != p || out.filt.T.rows() != p || out.filt.L.rows() != p ||
        out.filt.M.rows() != p || out.filt.P.rows() != p) {
        throw IoError("filter file '" + path + "': N must be square and T,L,M,P row counts must match it");
    }
    return out;
}

void write_filter_file(const std::string& path, const FilterRealization& filt,
                       const std::optional<Matrix>& Q, std::optional<double> gamma) {
    json j;
    j["N"] = matrix_to_json(filt.N);
    j["T"] = matrix_to_json(filt.T);
    j["L"] = matrix_to_json(filt.L);
    j["M"] = matrix_to_json(filt.M);
    j["P"] = matrix_to_json(filt.P);
    if (filt.Z1.size() > 0) j["Z1"] = matrix_to_json(filt.Z1);
    if (filt.Z.size() > 0) j["Z"] = matrix_to_json(filt.Z);
    if (Q) j["Q"] = matrix_to_json(*Q);
    if (gamma) j["gamma"] = *gamma;
    save(path, j);
}

void write_synthesis_report(const std::string& path, const SynthesisReport& rep) {
    json j;
    j["stage"] = rep.stage;
    j["rank_condition"] = rep.rank_holds;
    j["rank_big"] = rep.rank_big;
    j["rank_small"] = rep.rank_small;
    j["feasible"] = rep.feasible;
    j["gamma"] = rep.gamma;
    j["beta"] = rep.beta;
    j["lambda_max_Pi"] = rep.lambda_max_Pi;
    j["lambda_min_Q"] = rep.lambda_min_Q;
    j["lambda_max_Omega"] = rep.lambda_max_Omega;
    j["res_a"] = rep.res_a;
    j["res_b"] = rep.res_b;
    if (rep.filt) {
        j["N"] = matrix_to_json(rep.filt->N);
        j["T"] = matrix_to_json(rep.filt->T);
        j["L"] = matrix_to_json(rep.filt->L);
        j["M"] = matrix_to_json(rep.filt->M);
        j["P"] = matrix_to_json(rep.filt->P);
        j["Z1"] = matrix_to_json(rep.filt->Z1);
        j["Z"] = matrix_to_json(rep.filt->Z);
    }
    if (rep.Q) j["Q"] = matrix_to_json(*rep.Q);
    if (rep.Y) j["Y"] = matrix_to_json(*rep.Y);
    if (rep.gamma_star) j["gamma_star"] = *rep.gamma_star;
    if (!rep.diagnostic.empty()) j["diagnostic"] = rep.diagnostic;
    save(path, j);
}

void export_trajectory(const std::string& path, const Trajectory& traj,
                       const std::optional<EnergyCertificate>& cert) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.precision(17);

    auto emit_header = [&](const char* base, std::size_t dim) {
        for (std::size_t d = 0; d < dim; ++d) out << ',' << base << (d + 1);
    };
    out << "t";
    emit_header("x", traj.x.front().size());
    emit_header("w", traj.w.front().size());
    emit_header("z", traj.z.front().size());
    emit_header("zhat", traj.zhat.front().size());
    emit_header("e", traj.e.front().size());
    emit_header("v", traj.v.front().size());
    emit_header("y", traj.y.front().size());
    out << "\n";

    auto emit = [&](const Vector& v) {
        for (Index d = 0; d < v.size(); ++d) out << ',' << v(d);
    };
    for (int i = 0; i < traj.grid.points(); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        out << traj.grid.time(i);
        emit(traj.x[ii]);
        emit(traj.w[ii]);
        emit(traj.z[ii]);
        emit(traj.zhat[ii]);
        emit(traj.e[ii]);
        emit(traj.v[ii]);
        emit(traj.y[ii]);
        out << "\n";
    }
    if (cert) {
        out << "gamma=" << cert->gamma << "\n";
        out << "beta=" << cert->beta << "\n";
        out << "int_ee=" << cert->int_ee << "\n";
        out << "int_vv=" << cert->int_vv << "\n";
        out << "lhs=" << cert->lhs << "\n";
        out << "rhs=" << cert->rhs << "\n";
        out << "satisfied=" << (cert->satisfied ? 1 : 0) << "\n";
    }
}

} // namespace dskfilt
