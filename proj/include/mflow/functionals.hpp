#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mflow/tensor_field.hpp"

namespace mflow {

/// Dirichlet energy of the tensor field: F(A) = (1/2) int |grad A|^2.
/// Computed as a Parseval sum, (vol/2) sum_k |kappa|^2 |A_hat|^2_F, which
/// makes F an exact quadratic form on the interpolant and keeps the
/// integration-by-parts identity <grad F, A> = 2 F exact on all grid data.
inline double moduli_energy(const SymTensorField& a) {
    const Grid& g = a.grid();
    double s = 0.0;
    for (int c = 0; c < a.ncomp(); ++c) {
        const double w = a.component_weight(c);
        s += w * weighted_spectrum_sum(a.component(c), g, [](double k2) { return k2; });
    }
    return 0.5 * g.volume() * s;
}

/// L2 gradient of the energy: grad F = -Lap A (positive operator, symbol +|k|^2).
inline SymTensorField energy_gradient(const SymTensorField& a) {
    SymTensorField r = laplacian(a);
    r *= -1.0;
    return r;
}

inline double l2_inner(const SymTensorField& a, const SymTensorField& b) {
    a.require_same_grid(b);
    ScalarField dot(static_cast<std::size_t>(a.num_points()));
    for (int i = 0; i < a.num_points(); ++i)
        dot[static_cast<std::size_t>(i)] = frobenius_dot(a.value_at(i), b.value_at(i));
    return integrate(dot, a.grid());
}

struct FdCheckReport {
    std::vector<double> eps;
    std::vector<double> rel_error;  // relative to |<grad F, B>|
    std::vector<double> abs_error;
    double directional = 0.0;   // <grad F, B>
    double fitted_order = 0.0;  // slope of log(err) vs log(eps)
    bool roundoff_dominated = false;
};

/// Central-difference check of the first variation: compares
/// [F(A+eB) - F(A-eB)]/(2e) against <grad F, B> for each e. F is quadratic,
/// so the central difference is exact up to roundoff; the report flags that
/// regime by comparing each absolute error against the cancellation floor
/// ~ eps_machine * F / e instead of reporting a convergence order.
inline FdCheckReport gradient_fd_check(const SymTensorField& a, const SymTensorField& b,
                                       const std::vector<double>& eps_list) {
    a.require_same_grid(b);
    if (eps_list.size() < 3) throw std::invalid_argument("eps_list needs at least 3 entries");
    if (l2_norm(b) == 0.0) throw std::invalid_argument("degenerate direction");
    FdCheckReport rep;
    rep.eps = eps_list;
    rep.directional = l2_inner(energy_gradient(a), b);
    const double denom = std::max(std::abs(rep.directional), 1e-300);
    bool all_at_floor = true;
    for (double e : eps_list) {
        if (!(e > 0.0)) throw std::invalid_argument("eps values must be positive");
        SymTensorField plus = a, minus = a;
        plus.axpy(e, b);
        minus.axpy(-e, b);
        const double f_plus = moduli_energy(plus);
        const double f_minus = moduli_energy(minus);
        const double fd = (f_plus - f_minus) / (2.0 * e);
        const double err = std::abs(fd - rep.directional);
        rep.abs_error.push_back(err);
        rep.rel_error.push_back(err / denom);
        const double roundoff_floor = 1e-13 * std::max(f_plus, f_minus) / e;
        all_at_floor = all_at_floor && err <= roundoff_floor;
    }
    // Least-squares slope of log err vs log eps; meaningless at the roundoff
    // floor, which is what the flag records.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = static_cast<double>(eps_list.size());
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double x = std::log(eps_list[i]);
        const double y = std::log(std::max(rep.rel_error[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = m * sxx - sx * sx;
    rep.fitted_order = det != 0.0 ? (m * sxy - sx * sy) / det : 0.0;
    rep.roundoff_dominated = all_at_floor;
    return rep;
}

/// Per-step scalar diagnostics.
struct DiagnosticsRecord {
    double t = 0.0;
    double F = 0.0;
    std::optional<double> W;  // filled by the entropy monitor
    double grad_A_l2 = 0.0;
    double lap_A_l2 = 0.0;
    double A_l2 = 0.0;
    double A_sup = 0.0;
    double mean_trace = 0.0;
    double eig_min = 0.0;
    double eig_max = 0.0;
    double dt_last = 0.0;
};

inline DiagnosticsRecord make_diagnostics(const SymTensorField& a, double t, double dt_last) {
    DiagnosticsRecord r;
    r.t = t;
    r.dt_last = dt_last;
    r.F = moduli_energy(a);
    r.grad_A_l2 = gradient_l2_norm(a);
    r.lap_A_l2 = l2_norm(laplacian(a));
    r.A_l2 = l2_norm(a);
    r.A_sup = sup_norm(a);
    const ScalarField tr = trace_field(a);
    r.mean_trace = integrate(tr, a.grid()) / a.grid().volume();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < a.num_points(); ++i) {
        const auto e = sym_eigenvalues(a.value_at(i));
        lo = std::min(lo, e[0]);
        hi = std::max(hi, a.grid().dim() == 2 ? e[1] : e[0]);
    }
    r.eig_min = lo;
    r.eig_max = hi;
    return r;
}

}  // namespace mflow
