#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflow/config.hpp"
#include "mflow/entropy.hpp"
#include "mflow/flow.hpp"
#include "mflow/io.hpp"
#include "mflow/stability.hpp"
#include "mflow/willmore.hpp"

namespace mflow {

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::string> checkpoint_path;
    std::optional<std::string> resume_path;
    std::optional<std::uint64_t> seed_override;
};

namespace exit_code {
constexpr int ok = 0;
constexpr int validation = 1;
constexpr int runtime = 2;
constexpr int blowup = 3;
}  // namespace exit_code

namespace detail {

using Json = nlohmann::ordered_json;

inline Json config_summary(const ExperimentConfig& cfg) {
    Json j;
    j["kind"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["grid"] = {{"m", cfg.grid_m}, {"n", cfg.grid_n}, {"L", cfg.grid_L}};
    j["ambient"] = {{"c", cfg.ambient.c},
                    {"lambda", cfg.ambient.lambda},
                    {"trace_adjusted", cfg.ambient.trace_adjusted}};
    j["coefficients"] = {{"theta1", cfg.coeffs.theta1},
                         {"theta2", cfg.coeffs.theta2},
                         {"theta3", cfg.coeffs.theta3},
                         {"theta4", cfg.coeffs.theta4},
                         {"theta5", cfg.coeffs.theta5}};
    if (cfg.kind != ExperimentKind::gradcheck) {
        j["schedule"] = {{"t_end", cfg.schedule.t_end},   {"dt_init", cfg.schedule.dt_init},
                         {"dt_min", cfg.schedule.dt_min}, {"dt_max", cfg.schedule.dt_max},
                         {"safety", cfg.schedule.safety}, {"diag_every", cfg.schedule.diag_every}};
    }
    return j;
}

inline Json record_summary(const DiagnosticsRecord& r) {
    Json j;
    j["t"] = r.t;
    j["F"] = r.F;
    j["grad_A_l2"] = r.grad_A_l2;
    j["lap_A_l2"] = r.lap_A_l2;
    j["A_l2"] = r.A_l2;
    j["A_sup"] = r.A_sup;
    j["mean_trace"] = r.mean_trace;
    j["eig_min"] = r.eig_min;
    j["eig_max"] = r.eig_max;
    j["dt"] = r.dt_last;
    return j;
}

inline bool energy_monotone(const std::vector<DiagnosticsRecord>& records) {
    if (records.empty()) return true;
    const double tol = 1e-12 * (1.0 + records.front().F);
    for (std::size_t j = 0; j + 1 < records.size(); ++j)
        if (records[j + 1].F > records[j].F + tol) return false;
    return true;
}

inline void write_json(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::ios_base::failure("write failed: " + path);
}

struct PreparedRun {
    Grid grid;
    FlowState state;
    RunFlowOptions flow_options;
    bool resumed = false;
};

inline PreparedRun prepare_run(const ExperimentConfig& cfg, const RunOptions& opts) {
    PreparedRun prep;
    prep.grid = make_grid(cfg.grid_m, cfg.grid_n, cfg.grid_L);

    if (opts.resume_path) {
        Checkpoint ck = checkpoint_read(*opts.resume_path);
        if (!ck.state.A.grid().same_as(prep.grid))
            throw std::invalid_argument("checkpoint grid does not match the config grid");
        if (ck.state.t >= cfg.schedule.t_end)
            throw std::invalid_argument("checkpoint time is already past schedule.t_end");
        prep.state = std::move(ck.state);
        prep.flow_options.resume_controller = ck.controller;
        prep.resumed = true;
    } else {
        prep.state = FlowState{build_initial_field(cfg, prep.grid), 0.0, 0, 0.0};
    }

    if (cfg.checkpoint_at && !opts.checkpoint_path)
        throw std::invalid_argument("output.checkpoint_at requires a --checkpoint path");
    if (opts.checkpoint_path && cfg.checkpoint_at) {
        const double trigger = *cfg.checkpoint_at;
        const std::string path = *opts.checkpoint_path;
        auto written = std::make_shared<bool>(false);
        prep.flow_options.on_accept = [written, trigger, path](const FlowState& s,
                                                               const StepController& ctl) {
            if (!*written && s.t >= trigger) {
                checkpoint_write(s, ctl, path);
                *written = true;
            }
        };
    }
    return prep;
}

}  // namespace detail

/// Runs one configured experiment, writing timeseries.csv / summary.json
/// (and experiment-specific extras) under opts.out_dir. Deterministic for a
/// fixed (config, seed). Throws on failure; run_experiment maps exceptions
/// to exit codes.
inline void run_experiment_or_throw(ExperimentConfig cfg, const RunOptions& opts) {
    using detail::Json;
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    std::filesystem::create_directories(opts.out_dir);
    const std::string csv_path = opts.out_dir + "/timeseries.csv";
    const std::string summary_path = opts.out_dir + "/summary.json";

    Json summary = detail::config_summary(cfg);

    switch (cfg.kind) {
        case ExperimentKind::flow:
        case ExperimentKind::entropy:
        case ExperimentKind::willmore_compare: {
            detail::PreparedRun prep = detail::prepare_run(cfg, opts);
            Trajectory traj = run_flow(prep.state, cfg.ambient, cfg.coeffs, cfg.schedule,
                                       prep.flow_options);

            if (cfg.kind == ExperimentKind::entropy) {
                const EntropySeries series =
                    monitor_entropy(traj, cfg.entropy_horizon(), cfg.adjoint_sign, cfg.entropy_tol);
                for (std::size_t j = 0; j < traj.records.size(); ++j)
                    traj.records[j].W = series.W[j];
                double wi_dev = 0.0;
                for (double wi : series.weight_integral) wi_dev = std::max(wi_dev, std::abs(wi - 1.0));
                double shift_total = 0.0;
                for (double s : series.shift) shift_total += s;
                summary["entropy"] = {{"T", cfg.entropy_horizon()},
                                      {"adjoint_sign", cfg.adjoint_sign == AdjointSign::diffusive
                                                           ? "diffusive"
                                                           : "paper_literal"},
                                      {"tol", cfg.entropy_tol},
                                      {"monotone_W", series.monotone},
                                      {"max_increment", series.max_increment},
                                      {"weight_integral_max_dev", wi_dev},
                                      {"normalization_shift_total", shift_total},
                                      {"W_initial", series.W.front()},
                                      {"W_final", series.W.back()}};
            }

            write_timeseries(traj.records, csv_path);

            if (cfg.kind == ExperimentKind::willmore_compare) {
                const EnergyProfile prof = compare_profiles(traj);
                const std::string prof_path = opts.out_dir + "/willmore.csv";
                std::ofstream out(prof_path);
                if (!out) throw std::ios_base::failure("cannot open for writing: " + prof_path);
                out << "t,F,willmore\n";
                for (std::size_t j = 0; j < prof.t.size(); ++j)
                    out << format_g17(prof.t[j]) << ',' << format_g17(prof.moduli[j]) << ','
                        << format_g17(prof.willmore[j]) << '\n';
                if (!out) throw std::ios_base::failure("write failed: " + prof_path);
                summary["willmore"] = {{"initial", prof.willmore.front()},
                                       {"final", prof.willmore.back()},
                                       {"willmore_decreased", prof.willmore_decreased},
                                       {"moduli_decreased", prof.moduli_decreased},
                                       {"profile_csv", "willmore.csv"}};
            }

            if (opts.checkpoint_path && !cfg.checkpoint_at)
                checkpoint_write(traj.final_state(), traj.final_controller, *opts.checkpoint_path);

            const StationaryReport stat =
                stationary_report(traj.final_state(), cfg.ambient, cfg.coeffs, cfg.stationary_tol);
            summary["resumed"] = prep.resumed;
            summary["steps"] = traj.total_steps;
            summary["rejects"] = traj.total_rejects;
            summary["rejects_after_first_5_steps"] = traj.rejects_after_first_5_steps;
            summary["monotone_F"] = detail::energy_monotone(traj.records);
            summary["final"] = detail::record_summary(traj.records.back());
            summary["stationary"] = {{"stationary", stat.stationary},
                                     {"rhs_sup", stat.rhs_sup},
                                     {"grad_l2", stat.grad_l2},
                                     {"mean_trace", stat.mean_trace},
                                     {"tol", cfg.stationary_tol}};
            break;
        }

        case ExperimentKind::stability: {
            const Grid grid = make_grid(cfg.grid_m, cfg.grid_n, cfg.grid_L);
            SymMat a_inf = SymMat::zero(cfg.grid_m);
            if (cfg.initial == InitialKind::constant) {
                for (std::size_t c = 0; c < cfg.init_entries.size(); ++c) a_inf.a[c] = cfg.init_entries[c];
            } else if (cfg.initial != InitialKind::zero) {
                throw std::invalid_argument(
                    "stability runs take a constant (or zero) base point as the initial preset");
            }
            SymTensorField p0(grid);
            ScalarField mode(static_cast<std::size_t>(grid.num_points()));
            const int n = grid.n();
            for (int i = 0; i < grid.num_points(); ++i) {
                const int ix = grid.dim() == 1 ? i : i % n;
                mode[static_cast<std::size_t>(i)] =
                    std::cos(2.0 * std::numbers::pi * cfg.stab_mode * ix / static_cast<double>(n));
            }
            p0.set_component(cfg.stab_component, mode);

            Trajectory traj;
            const DecayReport rep =
                perturbation_experiment(a_inf, p0, cfg.stab_amplitude, cfg.ambient, cfg.coeffs,
                                        cfg.schedule.t_end, cfg.stab_amplitude_cap, &traj);
            write_timeseries(traj.records, csv_path);
            summary["decay"] = {{"beta_predicted", rep.beta_predicted},
                                {"beta_fitted", rep.beta_fitted},
                                {"fit_r2", rep.fit_r2},
                                {"window", {rep.window_t_begin, rep.window_t_end}},
                                {"amplitude", rep.amplitude},
                                {"n_samples", rep.n_samples},
                                {"unstable", rep.unstable},
                                {"zero_mode_drift", rep.zero_mode_drift}};
            summary["final"] = detail::record_summary(traj.records.back());
            break;
        }

        case ExperimentKind::gradcheck: {
            const Grid grid = make_grid(cfg.grid_m, cfg.grid_n, cfg.grid_L);
            double max_rel = 0.0;
            bool all_flagged = true;
            Json orders = Json::array();
            for (int pair = 0; pair < cfg.gradcheck_pairs; ++pair) {
                RandomSmoothSpec sa{cfg.seed + 2 * static_cast<std::uint64_t>(pair), 4, 1.0, true};
                RandomSmoothSpec sb{cfg.seed + 2 * static_cast<std::uint64_t>(pair) + 1, 4, 1.0, true};
                const SymTensorField a = random_smooth_field(grid, sa);
                const SymTensorField b = random_smooth_field(grid, sb);
                const FdCheckReport rep = gradient_fd_check(a, b, cfg.gradcheck_eps);
                for (double e : rep.rel_error) max_rel = std::max(max_rel, e);
                all_flagged = all_flagged && rep.roundoff_dominated;
                orders.push_back(rep.fitted_order);
            }
            summary["gradcheck"] = {{"pairs", cfg.gradcheck_pairs},
                                    {"eps", cfg.gradcheck_eps},
                                    {"max_rel_error", max_rel},
                                    {"all_roundoff_dominated", all_flagged},
                                    {"fitted_orders", orders}};
            break;
        }
    }

    detail::write_json(summary, summary_path);
}

/// Exception-to-exit-code boundary. On failure prints one machine-readable
/// JSON line to stderr and returns the nonzero code.
inline int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    auto report = [](int code, const std::string& what) {
        detail::Json err;
        err["error"] = what;
        err["exit_code"] = code;
        std::cerr << err.dump() << std::endl;
        return code;
    };
    try {
        run_experiment_or_throw(cfg, opts);
        return exit_code::ok;
    } catch (const BlowupError& e) {
        return report(exit_code::blowup, e.what());
    } catch (const ConfigError& e) {
        return report(exit_code::validation, e.what());
    } catch (const std::invalid_argument& e) {
        return report(exit_code::validation, e.what());
    } catch (const std::ios_base::failure& e) {
        return report(exit_code::runtime, e.what());
    } catch (const std::exception& e) {
        return report(exit_code::runtime, e.what());
    }
}

}  // namespace mflow
