#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflow {

using ScalarField = std::vector<double>;

namespace detail {

// Twiddle table for the length-n DFT: w[p] = exp(-2*pi*i*p/n).
// Forward and inverse transforms index into the same table (inverse
// conjugates), so one table per grid size is enough.
struct DftTables {
    int n = 0;
    std::vector<std::complex<double>> w;

    explicit DftTables(int n_) : n(n_), w(static_cast<std::size_t>(n_)) {
        const double step = -2.0 * std::numbers::pi / static_cast<double>(n);
        for (int p = 0; p < n; ++p) {
            w[static_cast<std::size_t>(p)] =
                std::complex<double>(std::cos(step * p), std::sin(step * p));
        }
    }
};

}  // namespace detail

/// Uniform periodic sample grid on a flat torus [0,L)^m, m in {1,2}.
/// Spacing is h = L/n per axis; sample layout is row-major with x fastest.
class Grid {
public:
    Grid() = default;

    int dim() const { return dim_; }
    int n() const { return n_; }
    double length() const { return length_; }
    double spacing() const { return spacing_; }
    double volume() const { return volume_; }
    int num_points() const { return npts_; }

    int index(int ix, int iy = 0) const { return ix + n_ * iy; }
    double coord(int i) const { return spacing_ * i; }

    // Integer wavenumber for sample index i, in the symmetric set
    // {0, 1, ..., n/2, -(n/2-1), ..., -1}.
    int k_int(int i) const { return i <= n_ / 2 ? i : i - n_; }
    // Physical wavenumber 2*pi*k/L.
    double kappa(int i) const {
        return 2.0 * std::numbers::pi * static_cast<double>(k_int(i)) / length_;
    }

    const detail::DftTables& tables() const { return *tables_; }

    bool same_as(const Grid& other) const {
        return dim_ == other.dim_ && n_ == other.n_ && length_ == other.length_;
    }

    friend Grid make_grid(int m, int n, double L);

private:
    int dim_ = 0;
    int n_ = 0;
    double length_ = 0.0;
    double spacing_ = 0.0;
    double volume_ = 0.0;
    int npts_ = 0;
    std::shared_ptr<const detail::DftTables> tables_;
};

inline Grid make_grid(int m, int n, double L) {
    if (m != 1 && m != 2) throw std::invalid_argument("grid dimension m must be 1 or 2");
    if (n % 2 != 0) throw std::invalid_argument("n must be even");
    if (n < 8) throw std::invalid_argument("n must be >= 8");
    if (!(L > 0.0)) throw std::invalid_argument("period L must be positive");
    Grid g;
    g.dim_ = m;
    g.n_ = n;
    g.length_ = L;
    g.spacing_ = L / static_cast<double>(n);
    g.volume_ = (m == 1) ? L : L * L;
    g.npts_ = (m == 1) ? n : n * n;
    g.tables_ = std::make_shared<const detail::DftTables>(n);
    return g;
}

inline void check_field_shape(const ScalarField& f, const Grid& g) {
    if (static_cast<int>(f.size()) != g.num_points())
        throw std::invalid_argument("field size does not match grid");
}

/// Quadrature of a scalar sample field: h^m * sum of samples.
/// Exact for trigonometric polynomials below the Nyquist index.
/// Fixed sequential summation order; repeated calls are bit-identical.
inline double integrate(const ScalarField& f, const Grid& g) {
    check_field_shape(f, g);
    double s = 0.0;
    for (double v : f) s += v;
    const double hm = (g.dim() == 1) ? g.spacing() : g.spacing() * g.spacing();
    return hm * s;
}

}  // namespace mflow
