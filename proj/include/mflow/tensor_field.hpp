#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mflow/grid.hpp"
#include "mflow/linalg.hpp"
#include "mflow/spectral.hpp"

namespace mflow {

/// Field of symmetric m x m matrices over a Grid, stored component-major:
/// component c occupies data[c*npts .. (c+1)*npts). Component order is (xx)
/// for m=1 and (xx, xy, yy) for m=2; only the upper triangle is stored, so
/// pointwise symmetry is structural.
class SymTensorField {
public:
    SymTensorField() = default;

    explicit SymTensorField(const Grid& g)
        : grid_(g),
          ncomp_(g.dim() == 1 ? 1 : 3),
          data_(static_cast<std::size_t>(ncomp_) * static_cast<std::size_t>(g.num_points()), 0.0) {}

    static SymTensorField constant(const Grid& g, const SymMat& value) {
        if (value.dim != g.dim()) throw std::invalid_argument("constant value dimension mismatch");
        SymTensorField f(g);
        for (int c = 0; c < f.ncomp_; ++c)
            std::fill(f.comp_begin(c), f.comp_begin(c) + g.num_points(),
                      value.a[static_cast<std::size_t>(c)]);
        return f;
    }

    static SymTensorField from_function(const Grid& g,
                                        const std::function<SymMat(double, double)>& fn) {
        SymTensorField f(g);
        const int n = g.n();
        if (g.dim() == 1) {
            for (int i = 0; i < n; ++i) {
                const SymMat v = fn(g.coord(i), 0.0);
                f.at(0, i) = v.a[0];
            }
        } else {
            for (int iy = 0; iy < n; ++iy)
                for (int ix = 0; ix < n; ++ix) {
                    const SymMat v = fn(g.coord(ix), g.coord(iy));
                    const int idx = g.index(ix, iy);
                    f.at(0, idx) = v.a[0];
                    f.at(1, idx) = v.a[1];
                    f.at(2, idx) = v.a[2];
                }
        }
        return f;
    }

    const Grid& grid() const { return grid_; }
    int ncomp() const { return ncomp_; }
    int num_points() const { return grid_.num_points(); }

    double& at(int c, int idx) { return data_[static_cast<std::size_t>(c) * static_cast<std::size_t>(grid_.num_points()) + static_cast<std::size_t>(idx)]; }
    double at(int c, int idx) const { return data_[static_cast<std::size_t>(c) * static_cast<std::size_t>(grid_.num_points()) + static_cast<std::size_t>(idx)]; }

    SymMat value_at(int idx) const {
        if (ncomp_ == 1) return SymMat{1, {at(0, idx), 0.0, 0.0}};
        return SymMat{2, {at(0, idx), at(1, idx), at(2, idx)}};
    }

    void set_value(int idx, const SymMat& v) {
        at(0, idx) = v.a[0];
        if (ncomp_ == 3) {
            at(1, idx) = v.a[1];
            at(2, idx) = v.a[2];
        }
    }

    ScalarField component(int c) const {
        return ScalarField(comp_begin(c), comp_begin(c) + grid_.num_points());
    }

    void set_component(int c, const ScalarField& f) {
        check_field_shape(f, grid_);
        std::copy(f.begin(), f.end(), comp_begin(c));
    }

    // Off-diagonal components carry weight 2 in Frobenius contractions.
    double component_weight(int c) const { return (ncomp_ == 3 && c == 1) ? 2.0 : 1.0; }

    SymTensorField& operator+=(const SymTensorField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    SymTensorField& operator-=(const SymTensorField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    SymTensorField& operator*=(double s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend SymTensorField operator+(SymTensorField x, const SymTensorField& y) { return x += y; }
    friend SymTensorField operator-(SymTensorField x, const SymTensorField& y) { return x -= y; }
    friend SymTensorField operator*(double s, SymTensorField x) { return x *= s; }

    void axpy(double s, const SymTensorField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
    }

    void require_same_grid(const SymTensorField& o) const {
        if (!grid_.same_as(o.grid_)) throw std::invalid_argument("tensor fields live on different grids");
    }

private:
    std::vector<double>::iterator comp_begin(int c) {
        return data_.begin() + static_cast<std::ptrdiff_t>(c) * grid_.num_points();
    }
    std::vector<double>::const_iterator comp_begin(int c) const {
        return data_.begin() + static_cast<std::ptrdiff_t>(c) * grid_.num_points();
    }

    Grid grid_;
    int ncomp_ = 0;
    std::vector<double> data_;
};

/// Constant orthogonal gauge rotation (R^T R = I to 1e-12).
class GaugeRotation {
public:
    explicit GaugeRotation(const Mat& r) : r_(r) {
        if (orthogonality_defect(r) > 1e-12)
            throw std::invalid_argument("gauge rotation is not orthogonal");
    }

    static GaugeRotation identity(int m) { return GaugeRotation(Mat::identity(m)); }
    static GaugeRotation plane_rotation(double angle) { return GaugeRotation(Mat::rotation2(angle)); }
    static GaugeRotation sign_flip() { return GaugeRotation(Mat::reflection1(-1.0)); }

    const Mat& matrix() const { return r_; }
    int dim() const { return r_.dim; }

private:
    Mat r_;
};

inline bool is_finite(const SymTensorField& f) {
    for (int c = 0; c < f.ncomp(); ++c)
        for (int i = 0; i < f.num_points(); ++i)
            if (!std::isfinite(f.at(c, i))) return false;
    return true;
}

/// Pointwise symmetrized product (AB + BA)/2.
inline SymTensorField sym_product(const SymTensorField& a, const SymTensorField& b) {
    a.require_same_grid(b);
    SymTensorField r(a.grid());
    for (int i = 0; i < a.num_points(); ++i)
        r.set_value(i, sym_mul(a.value_at(i), b.value_at(i)));
    return r;
}

/// Pointwise matrix power, p >= 1. Powers of one matrix commute, so the
/// symmetrized product reproduces the exact power.
inline SymTensorField matrix_power(const SymTensorField& a, int p) {
    if (p < 1) throw std::invalid_argument("matrix power requires p >= 1");
    SymTensorField r = a;
    for (int q = 1; q < p; ++q) r = sym_product(r, a);
    return r;
}

inline ScalarField trace_field(const SymTensorField& a) {
    ScalarField t(static_cast<std::size_t>(a.num_points()));
    for (int i = 0; i < a.num_points(); ++i) t[static_cast<std::size_t>(i)] = trace(a.value_at(i));
    return t;
}

inline SymTensorField identity_scale(const Grid& g, const ScalarField& s) {
    check_field_shape(s, g);
    SymTensorField r(g);
    r.set_component(0, s);
    if (g.dim() == 2) r.set_component(2, s);
    return r;
}

inline SymTensorField identity_scale(const Grid& g, double s) {
    return identity_scale(g, ScalarField(static_cast<std::size_t>(g.num_points()), s));
}

/// Pointwise R^T A R (gauge conjugation; R orthogonal so R^{-1} = R^T).
inline SymTensorField conjugate(const SymTensorField& a, const GaugeRotation& r) {
    if (r.dim() != a.grid().dim()) throw std::invalid_argument("rotation dimension mismatch");
    SymTensorField out(a.grid());
    for (int i = 0; i < a.num_points(); ++i)
        out.set_value(i, congruence(r.matrix(), a.value_at(i)));
    return out;
}

/// Ascending pointwise eigenvalue fields (m of them).
inline std::vector<ScalarField> eigenvalue_fields(const SymTensorField& a) {
    const int m = a.grid().dim();
    std::vector<ScalarField> eigs(static_cast<std::size_t>(m),
                                  ScalarField(static_cast<std::size_t>(a.num_points())));
    for (int i = 0; i < a.num_points(); ++i) {
        const auto e = sym_eigenvalues(a.value_at(i));
        eigs[0][static_cast<std::size_t>(i)] = e[0];
        if (m == 2) eigs[1][static_cast<std::size_t>(i)] = e[1];
    }
    return eigs;
}

/// L2 distance between the pointwise sorted eigenvalue vectors. Invariant of
/// the orthogonal-conjugation class, zero iff the classes agree pointwise.
inline double moduli_distance(const SymTensorField& a, const SymTensorField& b) {
    a.require_same_grid(b);
    const Grid& g = a.grid();
    ScalarField sq(static_cast<std::size_t>(g.num_points()), 0.0);
    for (int i = 0; i < g.num_points(); ++i) {
        const auto ea = sym_eigenvalues(a.value_at(i));
        const auto eb = sym_eigenvalues(b.value_at(i));
        double s = (ea[0] - eb[0]) * (ea[0] - eb[0]);
        if (g.dim() == 2) s += (ea[1] - eb[1]) * (ea[1] - eb[1]);
        sq[static_cast<std::size_t>(i)] = s;
    }
    return std::sqrt(std::max(0.0, integrate(sq, g)));
}

inline double l2_norm(const SymTensorField& a) {
    ScalarField sq(static_cast<std::size_t>(a.num_points()));
    for (int i = 0; i < a.num_points(); ++i) sq[static_cast<std::size_t>(i)] = frobenius_sq(a.value_at(i));
    return std::sqrt(std::max(0.0, integrate(sq, a.grid())));
}

inline double sup_norm(const SymTensorField& a) {
    double s = 0.0;
    for (int i = 0; i < a.num_points(); ++i) s = std::max(s, frobenius_sq(a.value_at(i)));
    return std::sqrt(s);
}

/// Pointwise |grad A|^2 = sum_d |d_d A|^2_F, assembled from spectral
/// derivatives of each component.
inline ScalarField gradient_sq_field(const SymTensorField& a) {
    const Grid& g = a.grid();
    ScalarField out(static_cast<std::size_t>(g.num_points()), 0.0);
    for (int c = 0; c < a.ncomp(); ++c) {
        const double w = a.component_weight(c);
        const ScalarField fc = a.component(c);
        for (int d = 0; d < g.dim(); ++d) {
            const ScalarField dfc = spectral_derivative(fc, g, d);
            for (int i = 0; i < g.num_points(); ++i)
                out[static_cast<std::size_t>(i)] += w * dfc[static_cast<std::size_t>(i)] * dfc[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

inline double gradient_l2_norm(const SymTensorField& a) {
    return std::sqrt(std::max(0.0, integrate(gradient_sq_field(a), a.grid())));
}

/// Componentwise spectral Laplacian of a tensor field.
inline SymTensorField laplacian(const SymTensorField& a) {
    SymTensorField r(a.grid());
    for (int c = 0; c < a.ncomp(); ++c) r.set_component(c, laplacian(a.component(c), a.grid()));
    return r;
}

inline SymTensorField bilaplacian(const SymTensorField& a) {
    SymTensorField r(a.grid());
    for (int c = 0; c < a.ncomp(); ++c) r.set_component(c, bilaplacian(a.component(c), a.grid()));
    return r;
}

/// Component means (the k=0 Fourier mode).
inline SymMat mean_value(const SymTensorField& a) {
    SymMat m = SymMat::zero(a.grid().dim());
    const double inv = 1.0 / static_cast<double>(a.num_points());
    for (int c = 0; c < a.ncomp(); ++c) {
        double s = 0.0;
        for (int i = 0; i < a.num_points(); ++i) s += a.at(c, i);
        m.a[static_cast<std::size_t>(c)] = s * inv;
    }
    return m;
}

}  // namespace mflow
