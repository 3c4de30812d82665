// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Tolerances are pinned in code next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mflow/mflow.hpp"

using namespace mflow;
namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
int g_failures = 0;

class Criterion {
public:
    Criterion(int idx, std::string name) : idx_(idx), name_(std::move(name)) {
        start_ = std::chrono::steady_clock::now();
    }

    void require(bool ok, const std::string& detail) {
        if (!ok && why_.empty()) why_ = detail;
        pass_ = pass_ && ok;
    }

    void note(const std::string& s) { notes_.push_back(s); }

    void finish() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::printf("[%s] %2d %s (%.1fs)%s%s\n", pass_ ? "PASS" : "FAIL", idx_, name_.c_str(), secs,
                    why_.empty() ? "" : " -- ", why_.c_str());
        for (const auto& n : notes_) std::printf("         %s\n", n.c_str());
        if (!pass_) ++g_failures;
    }

private:
    int idx_;
    std::string name_;
    bool pass_ = true;
    std::string why_;
    std::vector<std::string> notes_;
    std::chrono::steady_clock::time_point start_;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

const FlowCoefficients kThetaOff{0.0, 0.0, 0.0, 0.0, 0.0};

struct RunConfig {
    double c;
    bool trace_adjusted;
    std::uint64_t seed;
};

// Ten small-data configurations: c in {0,-1} x trace adjustment, distinct seeds.
std::vector<RunConfig> lyapunov_configs() {
    std::vector<RunConfig> cfgs;
    const double cs[2] = {0.0, -1.0};
    const bool adj[2] = {true, false};
    for (int i = 0; i < 10; ++i)
        cfgs.push_back({cs[i % 2], adj[(i / 2) % 2], 101u + static_cast<std::uint64_t>(i)});
    return cfgs;
}

Trajectory run_small_data(const RunConfig& rc, double t_end, int n, int diag_every) {
    const Grid g = make_grid(2, n, kTwoPi);
    const SymTensorField a0 = random_smooth_field(g, RandomSmoothSpec{rc.seed, 4, 0.1, true});
    FlowSchedule sch;
    sch.t_end = t_end;
    sch.diag_every = diag_every;
    return run_flow(FlowState{a0, 0.0, 0, 0.0},
                    AmbientModel::constant_curvature(rc.c, rc.trace_adjusted), FlowCoefficients{},
                    sch);
}

// ---------------------------------------------------------------------------

void criterion_1_linear_oracle() {
    Criterion cr(1, "linear-sector analytic oracle (mode decay e^{-k^4 t})");
    const Grid g = make_grid(1, 64, kTwoPi);
    FlowSchedule sch;
    sch.t_end = 0.1;
    // Error normalization: against the initial datum for every k (for k >= 4
    // the exact amplitude e^{-k^4/10} sits at or below the 1e-16 transform
    // noise floor left over from the first steps, so an error relative to
    // the decayed solution itself is not representable in double precision);
    // for k <= 3 the solution is large enough to also pin the self-relative
    // error.
    double worst_initial = 0.0, worst_self = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const SymTensorField a0 = SymTensorField::from_function(
            g, [&](double x, double) { return SymMat::scalar(std::cos(k * x)); });
        const Trajectory traj =
            run_flow(FlowState{a0, 0.0, 0, 0.0}, AmbientModel::flat(), kThetaOff, sch);
        const double factor = std::exp(-std::pow(static_cast<double>(k), 4.0) * 0.1);
        SymTensorField exact = a0;
        exact *= factor;
        SymTensorField diff = traj.final_state().A;
        diff -= exact;
        const double err = l2_norm(diff);
        worst_initial = std::max(worst_initial, err / l2_norm(a0));
        if (k <= 3) worst_self = std::max(worst_self, err / l2_norm(exact));
    }
    cr.require(worst_initial <= 1e-10,
               fmt("max L2 error %.3e of the initial norm > 1e-10", worst_initial));
    cr.require(worst_self <= 1e-10, fmt("self-relative L2 error %.3e > 1e-10 for k <= 3", worst_self));
    cr.note(fmt("k=1..8 vs e^{-k^4 t} cos(kx): max error %.3e of the initial norm; "
                "self-relative %.3e for k <= 3 (tol 1e-10)",
                worst_initial, worst_self));
    cr.finish();
}

void criterion_2_gradient_structure() {
    Criterion cr(2, "gradient structure: central differences vs <grad F, B>");
    const Grid g = make_grid(2, 32, kTwoPi);
    double worst = 0.0;
    bool all_flagged = true;
    for (int pair = 0; pair < 20; ++pair) {
        const SymTensorField a =
            random_smooth_field(g, RandomSmoothSpec{1000u + 2u * static_cast<std::uint64_t>(pair), 4, 1.0, true});
        const SymTensorField b =
            random_smooth_field(g, RandomSmoothSpec{1001u + 2u * static_cast<std::uint64_t>(pair), 4, 1.0, true});
        const FdCheckReport rep = gradient_fd_check(a, b, {1e-3, 1e-4, 1e-5});
        for (double e : rep.rel_error) worst = std::max(worst, e);
        all_flagged = all_flagged && rep.roundoff_dominated;
    }
    cr.require(worst <= 1e-6, fmt("max rel error %.3e > 1e-6", worst));
    cr.require(all_flagged, "quadratic exactness not flagged on some pair");
    cr.note(fmt("20 pairs, eps {1e-3,1e-4,1e-5}: max rel error %.3e, all flagged roundoff-dominated",
                worst));
    cr.finish();
}

void criterion_3_lyapunov() {
    Criterion cr(3, "Lyapunov monotonicity of F on small data");
    long total_late_rejects = 0;
    double worst_violation = -1.0;
    for (const RunConfig& rc : lyapunov_configs()) {
        const Trajectory traj = run_small_data(rc, 1.0, 32, 1);
        const double tol = 1e-12 * (1.0 + traj.records.front().F);
        for (std::size_t j = 0; j + 1 < traj.records.size(); ++j) {
            const double rise = traj.records[j + 1].F - traj.records[j].F;
            worst_violation = std::max(worst_violation, rise - tol);
        }
        total_late_rejects += traj.rejects_after_first_5_steps;
    }
    cr.require(worst_violation <= 0.0, fmt("F rose %.3e beyond tolerance", worst_violation));
    cr.require(total_late_rejects == 0,
               fmt("%g step rejections after the first 5 steps", static_cast<double>(total_late_rejects)));
    cr.note("10 runs: m=2, n=32, c in {0,-1}, trace adjustment on/off, sup|A0| = 0.1, t_end = 1");
    cr.finish();
}

void criterion_4_global_run() {
    Criterion cr(4, "global run to t=25: no blow-up, convergence to a parallel tensor");
    const double cs[2] = {0.0, -1.0};
    const bool adj[2] = {true, false};
    double worst_grad = 0.0;
    int runs = 0;
    try {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const RunConfig rc{cs[i], adj[j], 201u + static_cast<std::uint64_t>(2 * i + j)};
                const Trajectory traj = run_small_data(rc, 25.0, 32, 10);
                worst_grad = std::max(worst_grad, gradient_l2_norm(traj.final_state().A));
                ++runs;
            }
    } catch (const BlowupError& e) {
        cr.require(false, std::string("dt underflow: ") + e.what());
    }
    if (runs == 4) {
        cr.require(worst_grad <= 1e-8, fmt("final grad L2 norm %.3e > 1e-8", worst_grad));
        cr.note(fmt("4 configurations, worst final |grad A|_L2 = %.3e (tol 1e-8)", worst_grad));
    }
    cr.finish();
}

void criterion_5_decay_rate() {
    Criterion cr(5, "exponential perturbation decay: fitted vs predicted rate");
    // (a) control: pure biharmonic sector on the circle
    {
        const Grid g = make_grid(1, 64, kTwoPi);
        const SymTensorField p0 = SymTensorField::from_function(
            g, [](double x, double) { return SymMat::scalar(std::cos(x)); });
        const DecayReport rep =
            perturbation_experiment(SymMat::scalar(0.0), p0, 1e-3, AmbientModel::flat(), kThetaOff, 6.0);
        cr.require(std::abs(rep.beta_fitted - 2.0) <= 1e-6 * 2.0,
                   fmt("control beta %.12f differs from 2 beyond 1e-6 rel", rep.beta_fitted));
        cr.note(fmt("control: beta_fitted = %.12f (target 2, rel tol 1e-6), r2 = %.12f",
                    rep.beta_fitted, rep.fit_r2));
    }
    // (b) nonlinear small-amplitude run about the trivial base point
    {
        const Grid g = make_grid(2, 32, kTwoPi);
        SymTensorField p0(g);
        ScalarField mode(static_cast<std::size_t>(g.num_points()));
        for (int i = 0; i < g.num_points(); ++i)
            mode[static_cast<std::size_t>(i)] = std::cos(g.coord(i % g.n()));
        p0.set_component(0, mode);
        const AmbientModel amb = AmbientModel::constant_curvature(-1.0, true);
        const DecayReport rep =
            perturbation_experiment(SymMat::zero(2), p0, 1e-3, amb, FlowCoefficients{}, 6.5);
        const double rel_gap = std::abs(rep.beta_fitted - rep.beta_predicted) / rep.beta_predicted;
        cr.require(rep.beta_predicted > 0.0, "predicted rate is not positive");
        cr.require(rel_gap <= 0.1, fmt("|fitted-predicted|/predicted = %.3f > 0.1", rel_gap));
        cr.require(rep.fit_r2 >= 0.999, fmt("fit r2 %.6f < 0.999", rep.fit_r2));
        cr.note(fmt("nonlinear: beta_fitted = %.6f, beta_predicted = %.6f, r2 = %.6f",
                    rep.beta_fitted, rep.beta_predicted, rep.fit_r2));
    }
    cr.finish();
}

void criterion_6_coercivity() {
    Criterion cr(6, "coercivity constant equals k_min^4 = (2 pi / L)^4");
    struct Case {
        int m, n;
        double L;
    };
    const Case cases[] = {{1, 64, kTwoPi}, {2, 16, kTwoPi}, {1, 32, 2.0 * kTwoPi}};
    for (const auto& cs : cases) {
        const Grid g = make_grid(cs.m, cs.n, cs.L);
        const double expect = std::pow(kTwoPi / cs.L, 4.0);
        const double got = min_rayleigh_quotient(g);
        cr.require(std::abs(got - expect) <= 1e-10 * expect,
                   fmt("m=%g n=%g: quotient off", static_cast<double>(cs.m), static_cast<double>(cs.n)));
        cr.note(fmt("min Rayleigh quotient %.15f vs (2pi/L)^4 = %.15f", got, expect));
    }
    cr.finish();
}

void criterion_7_entropy() {
    Criterion cr(7, "entropy: weight normalization, W monotonicity, closed form");
    // (a)+(b): along the criterion-3 runs with horizon T = 2
    double worst_weight_dev = 0.0;
    double worst_increment = 0.0;
    bool monotone_all = true;
    for (const RunConfig& rc : lyapunov_configs()) {
        const Trajectory traj = run_small_data(rc, 1.0, 32, 1);
        const EntropySeries series = monitor_entropy(traj, 2.0, AdjointSign::diffusive, 1e-8);
        for (double wi : series.weight_integral)
            worst_weight_dev = std::max(worst_weight_dev, std::abs(wi - 1.0));
        worst_increment = std::max(worst_increment, series.max_increment);
        monotone_all = monotone_all && series.monotone;
    }
    cr.require(worst_weight_dev <= 1e-9, fmt("int u deviates by %.3e > 1e-9", worst_weight_dev));
    cr.require(monotone_all, fmt("W rose by %.3e in a step (tol 1e-8)", worst_increment));
    cr.note(fmt("max |int u - 1| = %.3e; max single-step W increment = %.3e", worst_weight_dev,
                worst_increment));
    if (!monotone_all)
        cr.note("note: with int u = 1 enforced on a fixed compact domain, the zero-field entropy "
                "log(vol/(4 pi eta)^(m/2)) rises as eta = T - t shrinks, so late-time steps gain "
                "~ dt*m/(2 eta) regardless of the data; see the closed-form check below");

    // (c): the zero-field closed form
    {
        const Grid g = make_grid(2, 16, kTwoPi);
        FlowSchedule sch;
        sch.t_end = 1.0;
        const Trajectory traj = run_flow(FlowState{SymTensorField(g), 0.0, 0, 0.0},
                                         AmbientModel::flat(), FlowCoefficients{}, sch);
        const EntropySeries series = monitor_entropy(traj, 2.0);
        double worst = 0.0;
        for (std::size_t j = 0; j < series.t.size(); ++j)
            worst = std::max(worst,
                             std::abs(series.W[j] - zero_field_entropy(g, 2.0 - series.t[j])));
        cr.require(worst <= 1e-10, fmt("zero-field W deviates %.3e from the closed form", worst));
        cr.note(fmt("zero-field closed form matched to %.3e (tol 1e-10)", worst));
    }
    cr.finish();
}

void criterion_8_gauge_equivariance() {
    Criterion cr(8, "gauge equivariance: flow commutes with conjugation");
    const Grid g = make_grid(2, 16, kTwoPi);
    const AmbientModel amb = AmbientModel::constant_curvature(-1.0, true);
    FlowSchedule sch;
    sch.t_end = 0.5;
    double worst_dist = 0.0, worst_f = 0.0, worst_w = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const SymTensorField a0 =
            random_smooth_field(g, RandomSmoothSpec{400u + static_cast<std::uint64_t>(trial), 3, 0.1, true});
        const GaugeRotation r = random_rotation(g, 300u + static_cast<std::uint64_t>(trial));

        const Trajectory plain = run_flow(FlowState{a0, 0.0, 0, 0.0}, amb, FlowCoefficients{}, sch);
        const Trajectory rotated =
            run_flow(FlowState{conjugate(a0, r), 0.0, 0, 0.0}, amb, FlowCoefficients{}, sch);

        worst_dist = std::max(
            worst_dist, moduli_distance(conjugate(plain.final_state().A, r), rotated.final_state().A));

        const std::size_t rows = std::min(plain.records.size(), rotated.records.size());
        for (std::size_t j = 0; j < rows; ++j)
            worst_f = std::max(worst_f, std::abs(plain.records[j].F - rotated.records[j].F));

        const EntropySeries wa = monitor_entropy(plain, 2.0);
        const EntropySeries wb = monitor_entropy(rotated, 2.0);
        for (std::size_t j = 0; j < std::min(wa.W.size(), wb.W.size()); ++j)
            worst_w = std::max(worst_w, std::abs(wa.W[j] - wb.W[j]));
    }
    cr.require(worst_dist <= 1e-10, fmt("moduli distance %.3e > 1e-10", worst_dist));
    cr.require(worst_f <= 1e-10, fmt("F series differ by %.3e > 1e-10", worst_f));
    cr.require(worst_w <= 1e-10, fmt("W series differ by %.3e > 1e-10", worst_w));
    cr.note(fmt("5 rotations: moduli distance %.2e, |dF| %.2e, |dW| %.2e (tol 1e-10)", worst_dist,
                worst_f, worst_w));
    cr.finish();
}

void criterion_9_willmore_baseline() {
    Criterion cr(9, "scalar baseline: exact trace decay and linear-run profiles");
    // (a) tr A(t) = tr A(0) e^{-2 m t} over t in [0,1] at dt = 1e-4
    for (int m = 1; m <= 2; ++m) {
        const Grid g = make_grid(m, 8, kTwoPi);
        const double a = 0.45;
        SymTensorField f = SymTensorField::constant(
            g, m == 1 ? SymMat::scalar(a) : SymMat::diag2(a, a));
        const double tr0 = trace_field(f)[0];
        const double dt = 1e-4;
        double worst = 0.0;
        for (int s = 1; s <= 10000; ++s) {
            f = scalar_baseline_step(f, dt, 0.0);
            const double expect = tr0 * std::exp(-2.0 * m * (dt * s));
            worst = std::max(worst, std::abs(trace_field(f)[0] - expect) / std::abs(expect));
        }
        cr.require(worst <= 1e-8, fmt("m=%g: trace decay off by %.3e rel", static_cast<double>(m), worst));
        cr.note(fmt("m=%.0f: max relative trace-decay error %.3e (tol 1e-8)", static_cast<double>(m), worst));
    }
    // (b) profiles on the exact linear run: F = (pi/2) e^{-2t}, willmore = pi e^{-2t}
    {
        const Grid g = make_grid(1, 64, kTwoPi);
        const SymTensorField a0 = SymTensorField::from_function(
            g, [](double x, double) { return SymMat::scalar(std::cos(x)); });
        FlowSchedule sch;
        sch.t_end = 1.0;
        const Trajectory traj =
            run_flow(FlowState{a0, 0.0, 0, 0.0}, AmbientModel::flat(), kThetaOff, sch);
        const EnergyProfile prof = compare_profiles(traj);
        double worst = 0.0;
        for (std::size_t j = 0; j < prof.t.size(); ++j) {
            const double decay = std::exp(-2.0 * prof.t[j]);
            worst = std::max(worst, std::abs(prof.moduli[j] - 0.5 * std::numbers::pi * decay));
            worst = std::max(worst, std::abs(prof.willmore[j] - std::numbers::pi * decay));
        }
        cr.require(worst <= 1e-8, fmt("profile deviates %.3e > 1e-8", worst));
        cr.note(fmt("profile max deviation from (pi/2)e^{-2t}, pi e^{-2t}: %.3e", worst));
    }
    cr.finish();
}

void criterion_10_infrastructure() {
    Criterion cr(10, "infrastructure: checkpoint bit-exactness, resume, determinism");
    const fs::path root = fs::temp_directory_path() / "mflow_acceptance_infra";
    fs::remove_all(root);
    fs::create_directories(root);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    // checkpoint round-trip is bit-exact
    {
        const Grid g = make_grid(2, 16, kTwoPi);
        FlowState s;
        s.A = random_smooth_field(g, RandomSmoothSpec{31, 4, 0.37, true});
        s.t = 0.1234567890123;
        s.step = 17;
        const StepController ctl{0.00123, 4, 0.987654321};
        const std::string path = (root / "roundtrip.ck").string();
        checkpoint_write(s, ctl, path);
        const Checkpoint ck = checkpoint_read(path);
        bool bitexact = ck.state.t == s.t && ck.state.step == s.step && ck.controller.dt == ctl.dt &&
                        ck.controller.accept_streak == ctl.accept_streak &&
                        ck.controller.initial_energy == ctl.initial_energy;
        for (int c = 0; c < s.A.ncomp() && bitexact; ++c)
            for (int i = 0; i < s.A.num_points(); ++i)
                if (ck.state.A.at(c, i) != s.A.at(c, i)) {
                    bitexact = false;
                    break;
                }
        cr.require(bitexact, "checkpoint round-trip is not bit-exact");
    }

    const std::string base_cfg =
        "kind = flow\nseed = 5\n[grid]\nm = 2\nn = 16\nL = 6.283185307179586\n"
        "[ambient]\nc = -1\n[initial]\npreset = random-smooth\ncutoff = 3\namplitude = 0.1\n"
        "[schedule]\nt_end = 1.0\n";

    // determinism: byte-identical outputs
    {
        RunOptions o1, o2;
        o1.out_dir = (root / "det1").string();
        o2.out_dir = (root / "det2").string();
        if (run_experiment(parse_config(base_cfg), o1) != 0 ||
            run_experiment(parse_config(base_cfg), o2) != 0)
            cr.require(false, "determinism runs failed");
        else {
            cr.require(slurp(root / "det1/timeseries.csv") == slurp(root / "det2/timeseries.csv"),
                       "CSV outputs differ between identical runs");
            cr.require(slurp(root / "det1/summary.json") == slurp(root / "det2/summary.json"),
                       "JSON summaries differ between identical runs");
        }
    }

    // resume equivalence within 1e-12 on all diagnostics
    {
        RunOptions ock;
        ock.out_dir = (root / "ck").string();
        ock.checkpoint_path = (root / "mid.ck").string();
        const int rc1 = run_experiment(parse_config(base_cfg + "[output]\ncheckpoint_at = 0.5\n"), ock);
        RunOptions ores;
        ores.out_dir = (root / "res").string();
        ores.resume_path = (root / "mid.ck").string();
        const int rc2 = run_experiment(parse_config(base_cfg), ores);
        if (rc1 != 0 || rc2 != 0) {
            cr.require(false, "resume runs failed");
        } else {
            // the checkpointing run equals the determinism run bit for bit
            cr.require(slurp(root / "ck/timeseries.csv") == slurp(root / "det1/timeseries.csv"),
                       "mid-run checkpointing perturbed the trajectory");
            // compare the shared tail of the two CSVs row by row
            std::istringstream full(slurp(root / "det1/timeseries.csv"));
            std::istringstream resumed(slurp(root / "res/timeseries.csv"));
            std::vector<std::string> rows_full, rows_res;
            std::string line;
            std::getline(full, line);
            while (std::getline(full, line)) rows_full.push_back(line);
            std::getline(resumed, line);
            while (std::getline(resumed, line)) rows_res.push_back(line);
            bool tail_ok = rows_res.size() >= 2 && rows_full.size() >= rows_res.size();
            if (tail_ok) {
                const std::size_t offset = rows_full.size() - rows_res.size();
                double worst = 0.0;
                for (std::size_t j = 0; j < rows_res.size(); ++j) {
                    std::istringstream ra(rows_full[offset + j]), rb(rows_res[j]);
                    std::string ta, tb;
                    while (std::getline(ra, ta, ',') && std::getline(rb, tb, ',')) {
                        const double va = ta.empty() ? 0.0 : std::stod(ta);
                        const double vb = tb.empty() ? 0.0 : std::stod(tb);
                        worst = std::max(worst, std::abs(va - vb) / (1.0 + std::abs(va)));
                    }
                }
                cr.require(worst <= 1e-12, fmt("resumed diagnostics deviate by %.3e > 1e-12", worst));
                cr.note(fmt("resume vs single run: max diagnostic deviation %.3e over %g shared rows",
                            worst, static_cast<double>(rows_res.size())));
            } else {
                cr.require(false, "resumed run produced no comparable rows");
            }
        }
    }
    fs::remove_all(root);
    cr.finish();
}

}  // namespace

int main() {
    std::printf("acceptance suite\n----------------\n");
    criterion_1_linear_oracle();
    criterion_2_gradient_structure();
    criterion_3_lyapunov();
    criterion_4_global_run();
    criterion_5_decay_rate();
    criterion_6_coercivity();
    criterion_7_entropy();
    criterion_8_gauge_equivariance();
    criterion_9_willmore_baseline();
    criterion_10_infrastructure();
    std::printf("----------------\n%s: %d criterion(s) failed\n", g_failures == 0 ? "OK" : "RED",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
