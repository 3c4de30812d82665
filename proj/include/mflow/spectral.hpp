#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mflow/grid.hpp"

namespace mflow {

namespace detail {

inline int thread_cap() {
    static const int cap = [] {
        const char* env = std::getenv("MFLOW_THREADS");
        if (env == nullptr) return 1;
        const long v = std::strtol(env, nullptr, 10);
        if (v <= 1) return 1;
        return static_cast<int>(std::min<long>(v, 16));
    }();
    return cap;
}

// Runs fn(lo, hi) over [0, count) in contiguous chunks. Each chunk writes
// disjoint output, so the result is identical for any thread count.
template <typename Fn>
void for_chunks(int count, Fn&& fn) {
    const int threads = std::min(thread_cap(), count);
    if (threads <= 1) {
        fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    const int chunk = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] { fn(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

using Cplx = std::complex<double>;

// One DFT pass along `axis` of a complex buffer laid out x-fastest.
// forward == true applies exp(-i...) and the 1/n normalization, so
// coefficients are mode amplitudes; the inverse applies conj without scaling.
inline void transform_axis(std::vector<Cplx>& buf, const Grid& g, int axis, bool forward) {
    const int n = g.n();
    const auto& w = g.tables().w;
    const int rows = (g.dim() == 1) ? 1 : n;
    const int stride = (axis == 0) ? 1 : n;
    const int row_stride = (axis == 0) ? n : 1;
    const double scale = forward ? 1.0 / static_cast<double>(n) : 1.0;

    for_chunks(rows, [&](int lo, int hi) {
        std::vector<Cplx> tmp(static_cast<std::size_t>(n));
        std::vector<Cplx> out(static_cast<std::size_t>(n));
        for (int r = lo; r < hi; ++r) {
            const int base = r * row_stride;
            for (int j = 0; j < n; ++j) tmp[static_cast<std::size_t>(j)] = buf[base + j * stride];
            for (int k = 0; k < n; ++k) {
                Cplx acc(0.0, 0.0);
                int p = 0;
                if (forward) {
                    for (int j = 0; j < n; ++j) {
                        acc += tmp[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(p)];
                        p += k;
                        if (p >= n) p -= n;
                    }
                } else {
                    for (int j = 0; j < n; ++j) {
                        acc += tmp[static_cast<std::size_t>(j)] * std::conj(w[static_cast<std::size_t>(p)]);
                        p += k;
                        if (p >= n) p -= n;
                    }
                }
                out[static_cast<std::size_t>(k)] = acc * scale;
            }
            for (int k = 0; k < n; ++k) buf[base + k * stride] = out[static_cast<std::size_t>(k)];
        }
    });
}

inline void forward_all(std::vector<Cplx>& buf, const Grid& g) {
    transform_axis(buf, g, 0, true);
    if (g.dim() == 2) transform_axis(buf, g, 1, true);
}

inline void inverse_all(std::vector<Cplx>& buf, const Grid& g) {
    transform_axis(buf, g, 0, false);
    if (g.dim() == 2) transform_axis(buf, g, 1, false);
}

inline std::vector<Cplx> to_complex(const ScalarField& f) {
    std::vector<Cplx> buf(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) buf[i] = Cplx(f[i], 0.0);
    return buf;
}

// Real part of a spectral round-trip. Real input and a real multiplier keep
// the spectrum Hermitian, so the imaginary residue is pure roundoff; it must
// stay below 1e-12 * ||input||_inf * (1 + max|multiplier|) or the pipeline
// is broken.
inline ScalarField to_real_checked(const std::vector<Cplx>& buf, double scale_hint) {
    ScalarField out(buf.size());
    double resid = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) {
        out[i] = buf[i].real();
        resid = std::max(resid, std::abs(buf[i].imag()));
    }
    if (resid > 1e-12 * (scale_hint + 1e-300) && resid > 1e-290)
        throw std::runtime_error("spectral round-trip produced a non-real field");
    return out;
}

inline double sup_abs(const ScalarField& f) {
    double s = 0.0;
    for (double v : f) s = std::max(s, std::abs(v));
    return s;
}

// Visits every mode index with its squared physical wavenumber |kappa|^2.
template <typename Fn>
void for_each_mode(const Grid& g, Fn&& fn) {
    const int n = g.n();
    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            const double kx = g.kappa(i);
            fn(i, kx * kx);
        }
    } else {
        for (int iy = 0; iy < n; ++iy) {
            const double ky = g.kappa(iy);
            for (int ix = 0; ix < n; ++ix) {
                const double kx = g.kappa(ix);
                fn(ix + n * iy, kx * kx + ky * ky);
            }
        }
    }
}

}  // namespace detail

/// Applies a real Fourier multiplier sym(|kappa|^2) to the trigonometric
/// interpolant of f. Exact (to roundoff) for content below the Nyquist index.
template <typename SymbolFn>
ScalarField spectral_filter(const ScalarField& f, const Grid& g, SymbolFn&& sym) {
    check_field_shape(f, g);
    const double scale = detail::sup_abs(f);
    auto buf = detail::to_complex(f);
    detail::forward_all(buf, g);
    double amp = 0.0;
    detail::for_each_mode(g, [&](int idx, double k2) {
        const double s = sym(k2);
        amp = std::max(amp, std::abs(s));
        buf[static_cast<std::size_t>(idx)] *= s;
    });
    detail::inverse_all(buf, g);
    return detail::to_real_checked(buf, scale * (1.0 + amp));
}

inline ScalarField laplacian(const ScalarField& f, const Grid& g) {
    return spectral_filter(f, g, [](double k2) { return -k2; });
}

inline ScalarField bilaplacian(const ScalarField& f, const Grid& g) {
    return spectral_filter(f, g, [](double k2) { return k2 * k2; });
}

/// Spectral partial derivative along `axis`. The Nyquist mode of the
/// differentiated axis is dropped (its real interpolant has zero derivative
/// at the sample points).
inline ScalarField spectral_derivative(const ScalarField& f, const Grid& g, int axis) {
    check_field_shape(f, g);
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("derivative axis out of range");
    const double scale = detail::sup_abs(f);
    auto buf = detail::to_complex(f);
    detail::forward_all(buf, g);
    const int n = g.n();
    double amp = 0.0;
    detail::for_each_mode(g, [&](int idx, double) {
        const int i_axis = (axis == 0) ? idx % n : idx / n;
        double k = g.kappa(i_axis);
        if (g.k_int(i_axis) == n / 2) k = 0.0;
        amp = std::max(amp, std::abs(k));
        buf[static_cast<std::size_t>(idx)] *= detail::Cplx(0.0, k);
    });
    detail::inverse_all(buf, g);
    return detail::to_real_checked(buf, scale * (1.0 + amp));
}

/// phi1(z) = (exp(z) - 1)/z with the removable singularity filled in.
inline double phi1(double z) {
    if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z / 6.0);
    return std::expm1(z) / z;
}

/// One exponential-Euler update per Fourier mode:
///   out_hat = exp(-|k|^4 dt) * a_hat + dt * phi1(-|k|^4 dt) * nlin_hat.
/// Exact for the pure biharmonic flow (nlin == 0).
inline ScalarField etd1_combine(const ScalarField& a, const ScalarField& nlin, const Grid& g,
                                double dt) {
    check_field_shape(a, g);
    check_field_shape(nlin, g);
    const double scale = std::max(detail::sup_abs(a), dt * detail::sup_abs(nlin));
    auto abuf = detail::to_complex(a);
    auto nbuf = detail::to_complex(nlin);
    detail::forward_all(abuf, g);
    detail::forward_all(nbuf, g);
    detail::for_each_mode(g, [&](int idx, double k2) {
        const double z = -k2 * k2 * dt;
        const auto i = static_cast<std::size_t>(idx);
        abuf[i] = std::exp(z) * abuf[i] + dt * phi1(z) * nbuf[i];
    });
    detail::inverse_all(abuf, g);
    return detail::to_real_checked(abuf, scale);
}

/// Parseval-weighted power sum: sum_k w(|kappa|^2) |f_hat(k)|^2.
/// With w == 1 this equals integrate(f^2)/volume.
template <typename WeightFn>
double weighted_spectrum_sum(const ScalarField& f, const Grid& g, WeightFn&& weight) {
    check_field_shape(f, g);
    auto buf = detail::to_complex(f);
    detail::forward_all(buf, g);
    double s = 0.0;
    detail::for_each_mode(g, [&](int idx, double k2) {
        s += weight(k2) * std::norm(buf[static_cast<std::size_t>(idx)]);
    });
    return s;
}

}  // namespace mflow
