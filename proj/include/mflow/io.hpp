#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflow/flow.hpp"
#include "mflow/functionals.hpp"

namespace mflow {

/// 17-significant-digit decimal: round-trips every double bit-exactly.
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline const char* timeseries_header() {
    return "t,F,W,grad_A_l2,lap_A_l2,A_l2,A_sup,mean_trace,eig_min,eig_max,dt";
}

inline std::string timeseries_row(const DiagnosticsRecord& r) {
    std::string row;
    row += format_g17(r.t);
    row += ',';
    row += format_g17(r.F);
    row += ',';
    if (r.W) row += format_g17(*r.W);
    row += ',';
    row += format_g17(r.grad_A_l2);
    row += ',';
    row += format_g17(r.lap_A_l2);
    row += ',';
    row += format_g17(r.A_l2);
    row += ',';
    row += format_g17(r.A_sup);
    row += ',';
    row += format_g17(r.mean_trace);
    row += ',';
    row += format_g17(r.eig_min);
    row += ',';
    row += format_g17(r.eig_max);
    row += ',';
    row += format_g17(r.dt_last);
    return row;
}

/// Writes the diagnostics series as CSV. The W column is left empty for rows
/// without an entropy value.
inline void write_timeseries(const std::vector<DiagnosticsRecord>& records, const std::string& path) {
    if (records.empty()) throw std::invalid_argument("no records to write");
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open for writing: " + path);
    out << timeseries_header() << '\n';
    for (const auto& r : records) out << timeseries_row(r) << '\n';
    if (!out) throw std::ios_base::failure("write failed: " + path);
}

/// Checkpoint format (text, one value per line after the header):
///   line 1: "MFLOW1 m n L t step"    (L and t in 17-significant-digit form)
///   line 2: controller dt
///   line 3: controller accept streak
///   line 4: controller initial energy (pins the rejection tolerance)
///   then ncomp * npts component samples, component-major, x-fastest.
/// The controller lines make a resumed run replay the original step
/// sequence exactly.
inline void checkpoint_write(const FlowState& state, const StepController& ctl,
                             const std::string& path) {
    const Grid& g = state.A.grid();
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open for writing: " + path);
    out << "MFLOW1 " << g.dim() << ' ' << g.n() << ' ' << format_g17(g.length()) << ' '
        << format_g17(state.t) << ' ' << state.step << '\n';
    out << format_g17(ctl.dt) << '\n';
    out << ctl.accept_streak << '\n';
    out << format_g17(ctl.initial_energy) << '\n';
    for (int c = 0; c < state.A.ncomp(); ++c)
        for (int i = 0; i < state.A.num_points(); ++i) out << format_g17(state.A.at(c, i)) << '\n';
    if (!out) throw std::ios_base::failure("write failed: " + path);
}

struct Checkpoint {
    FlowState state;
    StepController controller;
};

inline Checkpoint checkpoint_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open checkpoint: " + path);
    std::string tag;
    in >> tag;
    if (tag != "MFLOW1") throw std::runtime_error("checkpoint version mismatch: expected MFLOW1, got " + tag);
    int m = 0, n = 0;
    double L = 0.0, t = 0.0;
    long step = 0;
    in >> m >> n >> L >> t >> step;
    if (!in) throw std::runtime_error("malformed checkpoint header");
    Checkpoint ck;
    ck.state.A = SymTensorField(make_grid(m, n, L));
    ck.state.t = t;
    ck.state.step = step;
    in >> ck.controller.dt >> ck.controller.accept_streak >> ck.controller.initial_energy;
    if (!in) throw std::runtime_error("malformed checkpoint controller block");
    for (int c = 0; c < ck.state.A.ncomp(); ++c)
        for (int i = 0; i < ck.state.A.num_points(); ++i) {
            double v = 0.0;
            in >> v;
            if (!in) throw std::runtime_error("checkpoint truncated");
            ck.state.A.at(c, i) = v;
        }
    ck.state.dt_last = ck.controller.dt;
    return ck;
}

}  // namespace mflow
