#pragma once

// Uniform periodic collocation grid on [-L, L) and real fields sampled on it.
// Wavenumbers follow the usual FFT index set: k_j = (pi / L) * m_j with
// m_j = j for j <= n/2 and m_j = j - n otherwise (Nyquist carried at +n/2).

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "errors.hpp"

namespace beamwave {

struct PeriodicGrid {
    int n_points = 0;
    double half_length = 0.0;
    double spacing = 0.0;
    std::vector<double> nodes;        // x_m = -L + m h
    std::vector<double> wavenumbers;  // FFT ordering
};

using GridPtr = std::shared_ptr<const PeriodicGrid>;

inline GridPtr make_grid(int n_points, double half_length) {
    if (n_points < 8 || n_points % 2 != 0)
        throw InvalidGrid("make_grid: n_points must be even and >= 8");
    if (!(half_length > 0.0) || !std::isfinite(half_length))
        throw InvalidGrid("make_grid: half_length must be positive and finite");
    auto g = std::make_shared<PeriodicGrid>();
    g->n_points = n_points;
    g->half_length = half_length;
    g->spacing = 2.0 * half_length / n_points;
    g->nodes.resize(n_points);
    g->wavenumbers.resize(n_points);
    for (int m = 0; m < n_points; ++m)
        g->nodes[m] = -half_length + m * g->spacing;
    const double k0 = M_PI / half_length;
    for (int j = 0; j < n_points; ++j) {
        const int mode = (j <= n_points / 2) ? j : j - n_points;
        g->wavenumbers[j] = k0 * mode;
    }
    return g;
}

struct RealField {
    GridPtr grid;
    std::vector<double> values;

    RealField() = default;
    RealField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (!grid) throw InvalidArgument("RealField: null grid");
        if (static_cast<int>(values.size()) != grid->n_points)
            throw InvalidArgument("RealField: length does not match grid");
    }

    int size() const { return grid ? grid->n_points : 0; }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
};

inline RealField zero_field(const GridPtr& g) {
    return RealField(g, std::vector<double>(static_cast<std::size_t>(g->n_points), 0.0));
}

template <class F>
RealField field_from_function(const GridPtr& g, F&& f) {
    std::vector<double> v(static_cast<std::size_t>(g->n_points));
    for (int m = 0; m < g->n_points; ++m) v[static_cast<std::size_t>(m)] = f(g->nodes[m]);
    return RealField(g, std::move(v));
}

inline void require_finite(const RealField& f, const char* who) {
    for (double v : f.values)
        if (!std::isfinite(v)) throw InvalidArgument(std::string(who) + ": field has non-finite entries");
}

inline bool same_grid(const RealField& a, const RealField& b) {
    return a.grid == b.grid ||
           (a.grid && b.grid && a.grid->n_points == b.grid->n_points &&
            a.grid->half_length == b.grid->half_length);
}

// ---- elementwise arithmetic -------------------------------------------------

inline RealField operator+(const RealField& a, const RealField& b) {
    RealField r = a;
    for (int i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

inline RealField operator-(const RealField& a, const RealField& b) {
    RealField r = a;
    for (int i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

inline RealField operator*(double s, const RealField& a) {
    RealField r = a;
    for (double& v : r.values) v *= s;
    return r;
}

inline RealField& operator+=(RealField& a, const RealField& b) {
    for (int i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline RealField& operator-=(RealField& a, const RealField& b) {
    for (int i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline RealField& operator*=(RealField& a, double s) {
    for (double& v : a.values) v *= s;
    return a;
}

// ---- norms and quadrature ---------------------------------------------------

/// Periodic trapezoid rule, h * sum(f).  Spectrally accurate for smooth f.
inline double quadrature(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return f.grid->spacing * s;
}

inline double inner_product(const RealField& a, const RealField& b) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return a.grid->spacing * s;
}

inline double l2_norm_sq(const RealField& f) { return inner_product(f, f); }
inline double l2_norm(const RealField& f) { return std::sqrt(l2_norm_sq(f)); }

inline double sup_norm(const RealField& f) {
    double s = 0.0;
    for (double v : f.values) s = std::max(s, std::abs(v));
    return s;
}

// ---- even symmetry ----------------------------------------------------------

/// Projects a field onto the even subspace about x = 0.  Node m pairs with
/// node (n - m) mod n; the x = 0 and x = -L nodes are fixed points.
inline RealField project_even(const RealField& f) {
    const int n = f.size();
    RealField r = f;
    for (int m = 1; m < n / 2; ++m) {
        const double avg = 0.5 * (f[m] + f[n - m]);
        r[m] = avg;
        r[n - m] = avg;
    }
    return r;
}

inline double even_asymmetry(const RealField& f) {
    const int n = f.size();
    double s = 0.0;
    for (int m = 1; m < n / 2; ++m) s = std::max(s, std::abs(f[m] - f[n - m]));
    return s;
}

} // namespace beamwave
