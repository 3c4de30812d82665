#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mflow/functionals.hpp"
#include "mflow/tensor_field.hpp"

namespace mflow {

/// Constant-curvature ambient model. With sectional curvature c the ambient
/// curvature tensor is R(X,Y)Z = c(<Y,Z>X - <X,Z>Y), its covariant
/// derivative vanishes, and the curvature bound is Lambda = |c|.
struct AmbientModel {
    double c = 0.0;        // sectional curvature, must be <= 0
    double lambda = 0.0;   // curvature bound, diagnostic only
    bool trace_adjusted = true;

    static AmbientModel flat() { return AmbientModel{0.0, 0.0, true}; }
    static AmbientModel constant_curvature(double c, bool trace_adjusted = true) {
        if (c > 0.0) throw std::invalid_argument("sectional curvature c must be <= 0");
        return AmbientModel{c, std::abs(c), trace_adjusted};
    }

    void validate() const {
        if (c > 0.0) throw std::invalid_argument("sectional curvature c must be <= 0");
        if (lambda < std::abs(c)) throw std::invalid_argument("curvature bound must dominate |c|");
    }
};

/// Weights of the five reaction terms; the schematic contractions carry
/// unspecified constants, so each term is tunable.
struct FlowCoefficients {
    double theta1 = 1.0;  // Lap(A^2)
    double theta2 = 1.0;  // sym(A^2 LapA)
    double theta3 = 1.0;  // curvature acting on the connection Laplacian of A
    double theta4 = 1.0;  // A^4
    double theta5 = 1.0;  // c (m A^2 - tr(A) A)

    bool all_zero() const {
        return theta1 == 0.0 && theta2 == 0.0 && theta3 == 0.0 && theta4 == 0.0 && theta5 == 0.0;
    }
};

struct FlowState {
    SymTensorField A;
    double t = 0.0;
    long step = 0;
    double dt_last = 0.0;
};

/// Curvature action on a symmetric tensor for the constant-curvature model:
/// K(X) = m X - tr(X) Id when trace-adjusted, else m X. Positive
/// semidefinite in the Frobenius inner product either way.
inline SymTensorField curvature_action(const SymTensorField& x, bool trace_adjusted) {
    const int m = x.grid().dim();
    SymTensorField r = static_cast<double>(m) * x;
    if (trace_adjusted) {
        r -= identity_scale(x.grid(), trace_field(x));
    }
    return r;
}

/// The reaction part N(A) of the flow, i.e. everything except the principal
/// -Lap^2 A term:
///   N = th1 Lap(A^2) + th2 sym(A^2 LapA) + th3 c K(conn-Lap A)
///     + th4 A^4 + th5 c (m A^2 - tr(A) A).
/// The curvature coupling acts through the connection Laplacian
/// conn-Lap = -Lap, which keeps it dissipative for c <= 0 on every mode.
inline SymTensorField reaction_term(const SymTensorField& a, const AmbientModel& ambient,
                                    const FlowCoefficients& coeffs) {
    ambient.validate();
    const Grid& g = a.grid();
    const int m = g.dim();
    SymTensorField n(g);
    if (coeffs.all_zero()) return n;

    const SymTensorField a2 = sym_product(a, a);
    const bool need_lap =
        coeffs.theta2 != 0.0 || (coeffs.theta3 != 0.0 && ambient.c != 0.0);
    std::optional<SymTensorField> lap_a;
    if (need_lap) lap_a = laplacian(a);

    if (coeffs.theta1 != 0.0) n.axpy(coeffs.theta1, laplacian(a2));
    if (coeffs.theta2 != 0.0) n.axpy(coeffs.theta2, sym_product(a2, *lap_a));
    if (coeffs.theta3 != 0.0 && ambient.c != 0.0) {
        SymTensorField conn_lap = *lap_a;
        conn_lap *= -1.0;
        n.axpy(coeffs.theta3 * ambient.c, curvature_action(conn_lap, ambient.trace_adjusted));
    }
    if (coeffs.theta4 != 0.0) n.axpy(coeffs.theta4, sym_product(a2, a2));
    if (coeffs.theta5 != 0.0 && ambient.c != 0.0) {
        SymTensorField poly = static_cast<double>(m) * a2;
        const ScalarField tr = trace_field(a);
        for (int c = 0; c < a.ncomp(); ++c)
            for (int i = 0; i < g.num_points(); ++i)
                poly.at(c, i) -= tr[static_cast<std::size_t>(i)] * a.at(c, i);
        n.axpy(coeffs.theta5 * ambient.c, poly);
    }
    return n;
}

/// Full right-hand side: -Lap^2 A + N(A).
inline SymTensorField assemble_rhs(const SymTensorField& a, const AmbientModel& ambient,
                                   const FlowCoefficients& coeffs) {
    SymTensorField rhs = bilaplacian(a);
    rhs *= -1.0;
    rhs += reaction_term(a, ambient, coeffs);
    return rhs;
}

/// One exponential-Euler (ETD1) step: per Fourier mode,
///   A_hat <- exp(-|k|^4 dt) A_hat + dt phi1(-|k|^4 dt) N_hat.
/// Exact to roundoff whenever N vanishes.
inline FlowState step_etd1(const FlowState& state, double dt, const AmbientModel& ambient,
                           const FlowCoefficients& coeffs) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const Grid& g = state.A.grid();
    const bool linear_only = coeffs.all_zero();
    SymTensorField nlin = linear_only ? SymTensorField(g) : reaction_term(state.A, ambient, coeffs);
    FlowState next;
    next.A = SymTensorField(g);
    for (int c = 0; c < state.A.ncomp(); ++c)
        next.A.set_component(c, etd1_combine(state.A.component(c), nlin.component(c), g, dt));
    next.t = state.t + dt;
    next.step = state.step + 1;
    next.dt_last = dt;
    return next;
}

struct FlowSchedule {
    double t_end = 1.0;
    double dt_init = 1e-3;
    double dt_min = 1e-9;
    double dt_max = 0.25;
    double safety = 0.5;  // shrink factor applied to dt on rejection
    int diag_every = 1;   // record/store every k-th accepted step

    void validate() const {
        if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
        if (!(dt_min > 0.0) || dt_min > dt_init || dt_init > dt_max)
            throw std::invalid_argument("dt bounds must satisfy 0 < dt_min <= dt_init <= dt_max");
        if (!(safety > 0.0) || safety >= 1.0)
            throw std::invalid_argument("safety factor must lie in (0,1)");
        if (diag_every < 1) throw std::invalid_argument("diag_every must be >= 1");
    }
};

/// Adaptive-step controller state; checkpointed so a resumed run replays the
/// exact step sequence.
struct StepController {
    double dt = 0.0;
    int accept_streak = 0;
    double initial_energy = 0.0;  // pins the rejection tolerance for the run
};

class BlowupError : public std::runtime_error {
public:
    BlowupError(std::string msg, FlowState last, StepController ctl)
        : std::runtime_error(std::move(msg)), last_good(std::move(last)), controller(ctl) {}

    FlowState last_good;
    StepController controller;
};

struct Trajectory {
    std::vector<FlowState> states;             // stored every diag_every-th accepted step
    std::vector<DiagnosticsRecord> records;    // aligned with states
    std::vector<long> rejects_before_record;   // rejections since the previous stored record
    long total_steps = 0;
    long total_rejects = 0;
    long rejects_after_first_5_steps = 0;
    StepController final_controller;

    const FlowState& final_state() const { return states.back(); }
};

struct RunFlowOptions {
    std::optional<StepController> resume_controller;
    std::function<void(const FlowState&, const StepController&)> on_accept;
};

/// Integrates the flow to t_end with energy-monotonicity step control: a
/// step is rejected and dt shrunk when F increases beyond
/// 1e-12 (1 + F(0)) or any value goes non-finite; dt grows by 1.2x after
/// every 10 consecutive accepts, capped at dt_max. dt underflow below dt_min
/// raises BlowupError carrying the last good state.
inline Trajectory run_flow(const FlowState& initial, const AmbientModel& ambient,
                           const FlowCoefficients& coeffs, const FlowSchedule& schedule,
                           const RunFlowOptions& options = {}) {
    schedule.validate();
    ambient.validate();
    if (!is_finite(initial.A)) throw std::invalid_argument("initial state is not finite");

    FlowState state = initial;
    StepController ctl;
    if (options.resume_controller) {
        ctl = *options.resume_controller;
    } else {
        ctl.dt = schedule.dt_init;
        ctl.accept_streak = 0;
        ctl.initial_energy = moduli_energy(state.A);
    }
    const double reject_tol = 1e-12 * (1.0 + ctl.initial_energy);

    Trajectory traj;
    traj.states.push_back(state);
    traj.records.push_back(make_diagnostics(state.A, state.t, state.dt_last));
    traj.rejects_before_record.push_back(0);

    double f_prev = moduli_energy(state.A);
    long rejects_since_record = 0;
    long accepted = 0;
    const double t_eps = 1e-14 * std::max(1.0, schedule.t_end);

    while (state.t < schedule.t_end - t_eps) {
        const double dt_try = std::min(ctl.dt, schedule.t_end - state.t);
        FlowState cand = step_etd1(state, dt_try, ambient, coeffs);
        double f_new = std::numeric_limits<double>::quiet_NaN();
        const bool finite = is_finite(cand.A);
        if (finite) f_new = moduli_energy(cand.A);
        if (!finite || !std::isfinite(f_new) || f_new > f_prev + reject_tol) {
            ctl.dt *= schedule.safety;
            ctl.accept_streak = 0;
            ++traj.total_rejects;
            ++rejects_since_record;
            if (accepted >= 5) ++traj.rejects_after_first_5_steps;
            if (ctl.dt < schedule.dt_min)
                throw BlowupError("blow-up suspected: dt underflow below dt_min", state, ctl);
            continue;
        }
        state = std::move(cand);
        f_prev = f_new;
        ++accepted;
        ++traj.total_steps;
        ++ctl.accept_streak;
        if (ctl.accept_streak % 10 == 0) ctl.dt = std::min(ctl.dt * 1.2, schedule.dt_max);

        const bool at_end = state.t >= schedule.t_end - t_eps;
        if (accepted % schedule.diag_every == 0 || at_end) {
            traj.states.push_back(state);
            traj.records.push_back(make_diagnostics(state.A, state.t, state.dt_last));
            traj.rejects_before_record.push_back(rejects_since_record);
            rejects_since_record = 0;
        }
        if (options.on_accept) options.on_accept(state, ctl);
    }
    traj.final_controller = ctl;
    return traj;
}

/// Stationarity test: sup-norm of the assembled right-hand side below tol.
inline bool detect_stationary(const FlowState& state, const AmbientModel& ambient,
                              const FlowCoefficients& coeffs, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("stationarity tolerance must be positive");
    return sup_norm(assemble_rhs(state.A, ambient, coeffs)) <= tol;
}

struct StationaryReport {
    bool stationary = false;
    double rhs_sup = 0.0;
    double grad_l2 = 0.0;    // parallelism indicator
    double mean_trace = 0.0; // minimality indicator
};

inline StationaryReport stationary_report(const FlowState& state, const AmbientModel& ambient,
                                          const FlowCoefficients& coeffs, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("stationarity tolerance must be positive");
    StationaryReport rep;
    rep.rhs_sup = sup_norm(assemble_rhs(state.A, ambient, coeffs));
    rep.stationary = rep.rhs_sup <= tol;
    rep.grad_l2 = gradient_l2_norm(state.A);
    rep.mean_trace = integrate(trace_field(state.A), state.A.grid()) / state.A.grid().volume();
    return rep;
}

}  // namespace mflow
