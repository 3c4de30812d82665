#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mflow/flow.hpp"
#include "mflow/tensor_field.hpp"

namespace mflow {

/// Sign of the Laplacian term in the weight equation. The literal
/// transcription is anti-diffusive in this Laplacian convention and can blow
/// up; the diffusive variant is the default.
enum class AdjointSign { diffusive, paper_literal };

/// Weight state co-evolved with the flow: scalar log-weight f, horizon T,
/// current time t, time scale eta = T - t, and the normalized weight
/// u = exp(-f)/(4 pi eta)^(m/2) with int u dmu = 1.
struct EntropyState {
    ScalarField f;
    double T = 0.0;
    double t = 0.0;
    ScalarField u;
    double last_shift = 0.0;        // additive normalization applied on the last step
    double cumulative_shift = 0.0;  // total drift absorbed by normalization

    double eta() const { return T - t; }
};

namespace detail {

inline double heat_prefactor(int m, double eta) {
    return std::pow(4.0 * std::numbers::pi * eta, 0.5 * static_cast<double>(m));
}

}  // namespace detail

/// Shifts f additively so that u = exp(-f)/(4 pi eta)^(m/2) integrates to 1,
/// and returns the shifted f together with u. Invariant under adding a
/// constant to f.
inline std::pair<ScalarField, ScalarField> normalize_weight(const ScalarField& f, double eta,
                                                            const Grid& g) {
    check_field_shape(f, g);
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    const double pref = detail::heat_prefactor(g.dim(), eta);
    ScalarField w(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        w[i] = std::exp(-f[i]) / pref;
        if (!std::isfinite(w[i])) throw std::runtime_error("weight overflow: f is too negative");
    }
    const double z = integrate(w, g);
    if (!(z > 0.0) || !std::isfinite(z)) throw std::runtime_error("weight normalization failed");
    const double shift = std::log(z);
    ScalarField f_shifted(f.size());
    ScalarField u(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f_shifted[i] = f[i] + shift;
        u[i] = w[i] / z;
    }
    return {std::move(f_shifted), std::move(u)};
}

inline EntropyState make_entropy_state(const Grid& g, double T, double t0,
                                       const ScalarField* f0 = nullptr) {
    if (!(T > t0)) throw std::invalid_argument("entropy horizon T must exceed the start time");
    EntropyState es;
    es.T = T;
    es.t = t0;
    ScalarField f = f0 != nullptr ? *f0 : ScalarField(static_cast<std::size_t>(g.num_points()), 0.0);
    auto [fs, u] = normalize_weight(f, es.eta(), g);
    es.f = std::move(fs);
    es.u = std::move(u);
    return es;
}

/// Weighted entropy of the tensor field:
///   W = int ( eta |grad A|^2 + |A|^2 / 2 + eta^2 |Lap A|^2 + f ) u dmu.
/// Requires a normalized weight (int u within 1e-6 of 1).
inline double entropy_value(const SymTensorField& a, const EntropyState& es) {
    const Grid& g = a.grid();
    check_field_shape(es.u, g);
    check_field_shape(es.f, g);
    const double eta = es.eta();
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (std::abs(integrate(es.u, g) - 1.0) > 1e-6)
        throw std::runtime_error("entropy weight is not normalized");

    const ScalarField grad_sq = gradient_sq_field(a);
    const SymTensorField lap = laplacian(a);
    ScalarField integrand(static_cast<std::size_t>(g.num_points()));
    for (int i = 0; i < g.num_points(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        const double a_sq = frobenius_sq(a.value_at(i));
        const double lap_sq = frobenius_sq(lap.value_at(i));
        integrand[s] = (eta * grad_sq[s] + 0.5 * a_sq + eta * eta * lap_sq + es.f[s]) * es.u[s];
    }
    return integrate(integrand, g);
}

/// Advances the weight equation
///   df/dt = (+/-) Lap f + |grad f|^2 - tr(A^2) + m/(2 eta)
/// by dt, holding A fixed, in explicit substeps bounded by the diffusion
/// stability limit of the spectral Laplacian (dt_sub <= 0.4 / lambda_max
/// with lambda_max = m (pi/h)^2, a fifth of the explicit-Euler bound).
/// Renormalizes afterwards and records the absorbed shift.
inline EntropyState evolve_f(const EntropyState& es, const SymTensorField& a, double dt,
                             AdjointSign sign = AdjointSign::diffusive) {
    const Grid& g = a.grid();
    check_field_shape(es.f, g);
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (es.t + dt >= es.T) throw std::runtime_error("entropy horizon reached");

    // tr(A^2) = |A|^2_F for symmetric A.
    ScalarField tr_a2(static_cast<std::size_t>(g.num_points()));
    for (int i = 0; i < g.num_points(); ++i)
        tr_a2[static_cast<std::size_t>(i)] = frobenius_sq(a.value_at(i));

    const double m = static_cast<double>(g.dim());
    const double k_nyquist = std::numbers::pi / g.spacing();
    const double lambda_max = m * k_nyquist * k_nyquist;
    const double cfl_dt = 0.4 / lambda_max;
    const int nsub = std::max(1, static_cast<int>(std::ceil(dt / cfl_dt)));
    const double dts = dt / static_cast<double>(nsub);
    const double lap_sign = sign == AdjointSign::diffusive ? 1.0 : -1.0;

    ScalarField f = es.f;
    double t = es.t;
    for (int s = 0; s < nsub; ++s) {
        const double eta = es.T - t;
        const ScalarField lap_f = laplacian(f, g);
        ScalarField grad_sq(static_cast<std::size_t>(g.num_points()), 0.0);
        for (int d = 0; d < g.dim(); ++d) {
            const ScalarField df = spectral_derivative(f, g, d);
            for (int i = 0; i < g.num_points(); ++i)
                grad_sq[static_cast<std::size_t>(i)] += df[static_cast<std::size_t>(i)] * df[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < g.num_points(); ++i) {
            const auto si = static_cast<std::size_t>(i);
            f[si] += dts * (lap_sign * lap_f[si] + grad_sq[si] - tr_a2[si] + m / (2.0 * eta));
            if (!std::isfinite(f[si])) throw std::runtime_error("weight evolution became non-finite");
        }
        t += dts;
    }

    EntropyState next;
    next.T = es.T;
    next.t = es.t + dt;
    auto [fs, u] = normalize_weight(f, next.eta(), g);
    next.last_shift = fs[0] - f[0];
    next.cumulative_shift = es.cumulative_shift + next.last_shift;
    next.f = std::move(fs);
    next.u = std::move(u);
    return next;
}

struct EntropySeries {
    std::vector<double> t;
    std::vector<double> W;
    std::vector<double> weight_integral;  // int u after each step
    std::vector<double> shift;            // normalization drift per step
    bool monotone = false;
    double max_increment = 0.0;  // max over steps of W(j+1) - W(j)
    double tol = 0.0;
};

/// Co-evolves the weight along a stored trajectory (A held at the left state
/// of each interval) and reports the entropy series with a monotonicity
/// verdict: true iff W never rises by more than tol_W between records.
inline EntropySeries monitor_entropy(const Trajectory& traj, double T,
                                     AdjointSign sign = AdjointSign::diffusive,
                                     double tol_W = 1e-8) {
    if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
    for (const auto& s : traj.states)
        if (s.t >= T) throw std::invalid_argument("trajectory reaches the entropy horizon");

    const Grid& g = traj.states.front().A.grid();
    EntropyState es = make_entropy_state(g, T, traj.states.front().t);

    EntropySeries series;
    series.tol = tol_W;
    series.t.push_back(es.t);
    series.W.push_back(entropy_value(traj.states.front().A, es));
    series.weight_integral.push_back(integrate(es.u, g));
    series.shift.push_back(0.0);

    for (std::size_t j = 0; j + 1 < traj.states.size(); ++j) {
        const double dt = traj.states[j + 1].t - traj.states[j].t;
        es = evolve_f(es, traj.states[j].A, dt, sign);
        series.t.push_back(es.t);
        series.W.push_back(entropy_value(traj.states[j + 1].A, es));
        series.weight_integral.push_back(integrate(es.u, g));
        series.shift.push_back(es.last_shift);
    }

    series.max_increment = 0.0;
    for (std::size_t j = 0; j + 1 < series.W.size(); ++j)
        series.max_increment = std::max(series.max_increment, series.W[j + 1] - series.W[j]);
    series.monotone = series.max_increment <= tol_W;
    return series;
}

/// Closed-form entropy of the zero tensor with constant weight:
/// W = log( vol / (4 pi eta)^(m/2) ).
inline double zero_field_entropy(const Grid& g, double eta) {
    return std::log(g.volume() / detail::heat_prefactor(g.dim(), eta));
}

}  // namespace mflow
