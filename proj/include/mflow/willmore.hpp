#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mflow/flow.hpp"
#include "mflow/tensor_field.hpp"

namespace mflow {

/// Scalar-level bending energy int (tr A)^2 dmu. Zero exactly on trace-free
/// fields (the pointwise minimality indicator).
inline double willmore_energy(const SymTensorField& a) {
    const ScalarField tr = trace_field(a);
    ScalarField sq(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) sq[i] = tr[i] * tr[i];
    return integrate(sq, a.grid());
}

/// One step of the scalar baseline flow dA/dt = -2 tr(A) Id + sigma Lap A,
/// the L2 gradient flow of the trace energy plus an optional diffusive
/// regularizer. The trace sector satisfies d(tr A)/dt = -2m tr A pointwise
/// and is advanced by its exact exponential factor; the diffusive part is an
/// explicit Euler step guarded by the CFL bound dt <= 0.2 h^2 / sigma.
inline SymTensorField scalar_baseline_step(const SymTensorField& a, double dt, double sigma = 0.0) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (sigma < 0.0) throw std::invalid_argument("diffusive weight must be >= 0");
    const Grid& g = a.grid();
    const double m = static_cast<double>(g.dim());
    if (sigma > 0.0 && dt > 0.2 * g.spacing() * g.spacing() / sigma)
        throw std::invalid_argument("CFL violation: dt too large for the diffusive weight");

    // Split A into trace and trace-free parts; only the trace part moves
    // under the gradient term.
    const double decay = std::exp(-2.0 * m * dt);
    SymTensorField out(g);
    const ScalarField tr = trace_field(a);
    for (int i = 0; i < g.num_points(); ++i) {
        const SymMat v = a.value_at(i);
        const double t_over_m = tr[static_cast<std::size_t>(i)] / m;
        SymMat trace_free = v - t_over_m * SymMat::identity(g.dim());
        out.set_value(i, trace_free + (decay * t_over_m) * SymMat::identity(g.dim()));
    }
    if (sigma > 0.0) {
        SymTensorField lap = laplacian(a);
        out.axpy(dt * sigma, lap);
    }
    return out;
}

struct EnergyProfile {
    std::vector<double> t;
    std::vector<double> moduli;    // F along the trajectory
    std::vector<double> willmore;  // int (tr A)^2 along the trajectory
    bool moduli_decreased = false;
    bool willmore_decreased = false;
};

/// Side-by-side energy profile along a stored moduli-flow trajectory.
inline EnergyProfile compare_profiles(const Trajectory& traj) {
    if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
    EnergyProfile prof;
    prof.t.reserve(traj.states.size());
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        prof.t.push_back(traj.states[j].t);
        prof.moduli.push_back(traj.records[j].F);
        prof.willmore.push_back(willmore_energy(traj.states[j].A));
    }
    prof.moduli_decreased = prof.moduli.back() <= prof.moduli.front();
    prof.willmore_decreased = prof.willmore.back() <= prof.willmore.front();
    return prof;
}

}  // namespace mflow
