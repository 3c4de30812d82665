#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mflow/flow.hpp"
#include "mflow/linalg.hpp"
#include "mflow/tensor_field.hpp"

namespace mflow {

namespace detail {

// Orthonormal basis of Sym(2) in the Frobenius inner product:
// E11, E22, (E12 + E21)/sqrt(2).
inline SymMat sym2_basis(int i) {
    const double s = std::numbers::sqrt2 / 2.0;
    switch (i) {
        case 0: return SymMat{2, {1.0, 0.0, 0.0}};
        case 1: return SymMat{2, {0.0, 0.0, 1.0}};
        default: return SymMat{2, {0.0, s, 0.0}};
    }
}

}  // namespace detail

/// Frozen-coefficient linearization of the flow about a constant tensor:
/// for each grid mode k, the symbol S(k) = -|k|^4 I + D N[A_inf](k) acting
/// on symmetric matrices (a scalar for m=1, a symmetric 3x3 matrix in an
/// orthonormal Sym(2) basis for m=2).
class LinearizedOperator {
public:
    LinearizedOperator(const SymMat& a_inf, const AmbientModel& ambient,
                       const FlowCoefficients& coeffs, const Grid& grid)
        : a_inf_(a_inf), ambient_(ambient), coeffs_(coeffs), grid_(grid) {
        ambient.validate();
        if (a_inf.dim != grid.dim()) throw std::invalid_argument("base point dimension mismatch");
        build_table();
    }

    const Grid& grid() const { return grid_; }
    const SymMat& base_point() const { return a_inf_; }

    /// Derivative of the reaction term at A_inf applied to P, per mode k
    /// (|k|^2 = k2). Pure matrix algebra; no grid data involved.
    SymMat reaction_derivative(const SymMat& p, double k2) const {
        const int m = a_inf_.dim;
        SymMat out = SymMat::zero(m);
        const SymMat anti = sym_mul(a_inf_, p) + sym_mul(p, a_inf_);  // A P + P A
        if (coeffs_.theta1 != 0.0) out = out + (coeffs_.theta1 * -k2) * anti;
        if (coeffs_.theta2 != 0.0) {
            const SymMat a2 = sym_mul(a_inf_, a_inf_);
            out = out + (coeffs_.theta2 * -k2) * sym_mul(a2, p);
        }
        if (coeffs_.theta3 != 0.0 && ambient_.c != 0.0) {
            // curvature acting on the connection Laplacian: c K(+k2 P)
            SymMat kp = static_cast<double>(m) * p;
            if (ambient_.trace_adjusted) kp = kp - trace(p) * SymMat::identity(m);
            out = out + (coeffs_.theta3 * ambient_.c * k2) * kp;
        }
        if (coeffs_.theta4 != 0.0) {
            // d/de (A + eP)^4 = sum_i A^i P A^(3-i) = 4 sym(A^2 sym(A P)).
            const SymMat a2 = sym_mul(a_inf_, a_inf_);
            out = out + (4.0 * coeffs_.theta4) * sym_mul(a2, sym_mul(a_inf_, p));
        }
        if (coeffs_.theta5 != 0.0 && ambient_.c != 0.0) {
            SymMat poly = static_cast<double>(m) * anti;
            poly = poly - trace(p) * a_inf_ - trace(a_inf_) * p;
            out = out + (coeffs_.theta5 * ambient_.c) * poly;
        }
        return out;
    }

    SymMat full_symbol_apply(const SymMat& p, double k2) const {
        return (-k2 * k2) * p + reaction_derivative(p, k2);
    }

    /// Largest eigenvalue of S(k) at squared wavenumber k2.
    double max_eigenvalue(double k2) const {
        if (grid_.dim() == 1) return full_symbol_apply(SymMat::scalar(1.0), k2).a[0];
        std::array<std::array<double, 3>, 3> s{};
        for (int j = 0; j < 3; ++j) {
            const SymMat img = full_symbol_apply(detail::sym2_basis(j), k2);
            for (int i = 0; i < 3; ++i)
                s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    frobenius_dot(detail::sym2_basis(i), img);
        }
        return sym3_eigenvalues(s)[2];
    }

    /// Mode table entries: (|kappa|^2, largest eigenvalue of S(k)).
    const std::vector<std::pair<double, double>>& mode_table() const { return table_; }

private:
    void build_table() {
        table_.clear();
        table_.reserve(static_cast<std::size_t>(grid_.num_points()));
        detail::for_each_mode(grid_, [&](int, double k2) {
            table_.emplace_back(k2, max_eigenvalue(k2));
        });
    }

    SymMat a_inf_;
    AmbientModel ambient_;
    FlowCoefficients coeffs_;
    Grid grid_;
    std::vector<std::pair<double, double>> table_;
};

inline LinearizedOperator linearize(const SymMat& a_inf, const AmbientModel& ambient,
                                    const FlowCoefficients& coeffs, const Grid& grid) {
    return LinearizedOperator(a_inf, ambient, coeffs, grid);
}

/// Decay rate of the quadratic perturbation energy predicted by the mode
/// spectrum: beta = -2 max_k max-eig S(k). The zero mode feels no
/// dissipation and is excluded by default (the energy controls grad P,
/// which is blind to constants).
inline double predicted_decay_rate(const LinearizedOperator& lin_op, bool exclude_zero_mode = true) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [k2, lam] : lin_op.mode_table()) {
        if (exclude_zero_mode && k2 == 0.0) continue;
        worst = std::max(worst, lam);
    }
    return -2.0 * worst;
}

/// Least-squares exponential-rate fit on (t, log E); returns (beta_hat, r2).
inline std::pair<double, double> fit_decay_rate(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 10) throw std::invalid_argument("decay fit needs at least 10 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [t, e] : series) {
        if (!(e > 0.0)) throw std::invalid_argument("decay fit requires positive energies");
        const double y = std::log(e);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    const auto n = static_cast<double>(series.size());
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("degenerate time samples in decay fit");
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = sy / n;
    for (const auto& [t, e] : series) {
        const double y = std::log(e);
        ss_res += (y - slope * t - intercept) * (y - slope * t - intercept);
        ss_tot += (y - ybar) * (y - ybar);
    }
    const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return {-slope, r2};
}

struct DecayReport {
    double beta_predicted = 0.0;
    double beta_fitted = 0.0;
    double fit_r2 = 0.0;
    double window_t_begin = 0.0;
    double window_t_end = 0.0;
    double amplitude = 0.0;
    long n_samples = 0;
    bool unstable = false;          // energy rose beyond tolerance inside the window
    double zero_mode_drift = 0.0;   // |mean P(t_end)|_F, reported separately
};

/// Runs the full nonlinear flow from A_inf + amplitude P0 and fits the decay
/// of E(P) = (1/2) int |grad P|^2 on the window where E has dropped by
/// factors 10 .. 1e4, then compares against the mode-spectrum prediction.
inline DecayReport perturbation_experiment(const SymMat& a_inf, const SymTensorField& p0,
                                           double amplitude, const AmbientModel& ambient,
                                           const FlowCoefficients& coeffs, double t_end,
                                           double amplitude_cap = 1e-2,
                                           Trajectory* trajectory_out = nullptr) {
    const Grid& g = p0.grid();
    if (!(amplitude > 0.0)) throw std::invalid_argument("zero perturbation");
    if (amplitude > amplitude_cap)
        throw std::invalid_argument("perturbation amplitude exceeds the linear-regime cap");
    const SymMat p0_mean = mean_value(p0);
    if (std::sqrt(frobenius_sq(p0_mean)) > 1e-12 * (sup_norm(p0) + 1e-300))
        throw std::invalid_argument("perturbation must be mean-free");

    SymTensorField a0 = SymTensorField::constant(g, a_inf);
    a0.axpy(amplitude, p0);

    FlowSchedule schedule;
    schedule.t_end = t_end;
    Trajectory traj = run_flow(FlowState{std::move(a0), 0.0, 0, 0.0}, ambient, coeffs, schedule);

    // A_inf is constant, so grad P = grad A and E(P) = F(A).
    std::vector<std::pair<double, double>> energy;
    energy.reserve(traj.records.size());
    for (const auto& r : traj.records) energy.emplace_back(r.t, r.F);

    DecayReport rep;
    rep.amplitude = amplitude;
    rep.beta_predicted = predicted_decay_rate(linearize(a_inf, ambient, coeffs, g), true);

    const double e0 = energy.front().second;
    if (!(e0 > 0.0)) throw std::invalid_argument("zero perturbation");
    std::vector<std::pair<double, double>> window;
    for (const auto& [t, e] : energy)
        if (e <= e0 / 10.0 && e >= e0 / 1e4) window.emplace_back(t, e);
    if (window.size() < 10)
        throw std::runtime_error("decay window too short; extend t_end or sampling");

    for (std::size_t j = 0; j + 1 < window.size(); ++j)
        if (window[j + 1].second > window[j].second * (1.0 + 1e-9))
            rep.unstable = true;

    auto [beta, r2] = fit_decay_rate(window);
    rep.beta_fitted = beta;
    rep.fit_r2 = r2;
    rep.window_t_begin = window.front().first;
    rep.window_t_end = window.back().first;
    rep.n_samples = static_cast<long>(window.size());

    SymTensorField p_end = traj.final_state().A;
    p_end -= SymTensorField::constant(g, a_inf);
    rep.zero_mode_drift = std::sqrt(frobenius_sq(mean_value(p_end)));
    if (trajectory_out != nullptr) *trajectory_out = std::move(traj);
    return rep;
}

/// Brute-force minimum of the Rayleigh quotient ||Lap grad P||^2/||grad P||^2
/// over mean-free sub-Nyquist grid modes (the coercivity constant). Uses the
/// library operators mode by mode rather than the known symbol.
inline double min_rayleigh_quotient(const Grid& g) {
    double best = std::numeric_limits<double>::infinity();
    const int n = g.n();
    auto consider = [&](int kx, int ky) {
        if (kx == 0 && ky == 0) return;
        ScalarField p(static_cast<std::size_t>(g.num_points()));
        if (g.dim() == 1) {
            for (int i = 0; i < n; ++i)
                p[static_cast<std::size_t>(i)] = std::cos(g.kappa(kx < 0 ? kx + n : kx) * g.coord(i));
        } else {
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix)
                    p[static_cast<std::size_t>(g.index(ix, iy))] =
                        std::cos(2.0 * std::numbers::pi *
                                 (static_cast<double>(kx) * ix + static_cast<double>(ky) * iy) /
                                 static_cast<double>(n));
        }
        double num = 0.0, den = 0.0;
        for (int d = 0; d < g.dim(); ++d) {
            const ScalarField dp = spectral_derivative(p, g, d);
            const ScalarField lap_dp = laplacian(dp, g);
            ScalarField dp_sq(dp.size()), lap_sq(dp.size());
            for (std::size_t i = 0; i < dp.size(); ++i) {
                dp_sq[i] = dp[i] * dp[i];
                lap_sq[i] = lap_dp[i] * lap_dp[i];
            }
            den += integrate(dp_sq, g);
            num += integrate(lap_sq, g);
        }
        if (den > 0.0) best = std::min(best, num / den);
    };
    const int kmax = n / 2 - 1;  // first derivatives are exact below Nyquist
    if (g.dim() == 1) {
        for (int k = 1; k <= kmax; ++k) consider(k, 0);
    } else {
        for (int ky = -kmax; ky <= kmax; ++ky)
            for (int kx = -kmax; kx <= kmax; ++kx) consider(kx, ky);
    }
    return best;
}

}  // namespace mflow
