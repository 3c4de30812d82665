#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "mflow/tensor_field.hpp"

namespace mflow {

namespace detail {

// Counter-based generator: identical bits for identical (seed, counter) on
// every platform, no hidden stream state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t bits = splitmix64(splitmix64(seed) ^ counter);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

struct RandomSmoothSpec {
    std::uint64_t seed = 0;
    int cutoff = 4;          // modes with |k|_inf <= cutoff
    double amplitude = 0.1;  // resulting sup-norm
    bool include_mean = true;
};

/// Band-limited random tensor field: each component is a sum of cosines over
/// a half-space of integer modes with |k|_inf <= cutoff, with counter-based
/// amplitudes and phases, rescaled so the field's sup-norm equals amplitude.
inline SymTensorField random_smooth_field(const Grid& g, const RandomSmoothSpec& spec) {
    if (spec.cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    if (spec.cutoff >= g.n() / 2) throw std::invalid_argument("cutoff must stay below Nyquist");
    if (!(spec.amplitude > 0.0)) throw std::invalid_argument("amplitude must be positive");

    SymTensorField f(g);
    const int kc = spec.cutoff;
    std::uint64_t counter = 1;
    const double two_pi = 2.0 * std::numbers::pi;

    auto add_mode = [&](int c, int kx, int ky) {
        const double amp = 2.0 * detail::uniform01(spec.seed, counter++) - 1.0;
        const double phase = two_pi * detail::uniform01(spec.seed, counter++);
        if (kx == 0 && ky == 0) {
            if (!spec.include_mean) return;
            const double v = amp * std::cos(phase);
            for (int i = 0; i < g.num_points(); ++i) f.at(c, i) += v;
            return;
        }
        const int n = g.n();
        if (g.dim() == 1) {
            for (int i = 0; i < n; ++i)
                f.at(c, i) += amp * std::cos(two_pi * kx * i / static_cast<double>(n) + phase);
        } else {
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix)
                    f.at(c, g.index(ix, iy)) +=
                        amp * std::cos(two_pi * (static_cast<double>(kx) * ix + static_cast<double>(ky) * iy) /
                                           static_cast<double>(n) +
                                       phase);
        }
    };

    for (int c = 0; c < f.ncomp(); ++c) {
        if (g.dim() == 1) {
            for (int kx = 0; kx <= kc; ++kx) add_mode(c, kx, 0);
        } else {
            // Half-space selection so +-k are not drawn twice.
            for (int ky = -kc; ky <= kc; ++ky)
                for (int kx = 0; kx <= kc; ++kx) {
                    if (kx == 0 && ky < 0) continue;
                    add_mode(c, kx, ky);
                }
        }
    }

    const double sup = sup_norm(f);
    if (sup == 0.0) throw std::runtime_error("degenerate random field");
    f *= spec.amplitude / sup;
    return f;
}

/// Deterministic gauge rotation from a seed (a plane rotation for m=2, a
/// sign flip or identity for m=1).
inline GaugeRotation random_rotation(const Grid& g, std::uint64_t seed) {
    if (g.dim() == 1)
        return detail::uniform01(seed, 7) < 0.5 ? GaugeRotation::identity(1) : GaugeRotation::sign_flip();
    const double angle = 2.0 * std::numbers::pi * detail::uniform01(seed, 7);
    return GaugeRotation::plane_rotation(angle);
}

}  // namespace mflow
