// Cell-centred scalar/vector fields, quadrature and difference stencils.
#pragma once

#include "grid.hpp"

#include <limits>
#include <utility>

namespace mhd {

class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr g, double fill = 0.0)
        : grid_(std::move(g)), values_(static_cast<std::size_t>(grid_->cells()), fill) {}
    ScalarField(GridPtr g, std::vector<double> v) : grid_(std::move(g)), values_(std::move(v)) {
        if (values_.size() != static_cast<std::size_t>(grid_->cells()))
            throw Error("ScalarField: value count does not match grid");
    }

    static ScalarField sample(GridPtr g, const ScalarFunction& f) {
        ScalarField s(g);
        for (int k = 0; k < g->cells(); ++k) {
            Vec2 c = g->center(k);
            s[k] = f(c.x, c.y);
        }
        return s;
    }

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double& operator[](int k) { return values_[static_cast<std::size_t>(k)]; }
    double operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const ScalarField& a, const ScalarField& b) { return a.values_ == b.values_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

class VectorField {
public:
    VectorField() = default;
    explicit VectorField(GridPtr g, Vec2 fill = {})
        : grid_(std::move(g)), values_(2 * static_cast<std::size_t>(grid_->cells())) {
        for (int k = 0; k < grid_->cells(); ++k) set(k, fill);
    }
    VectorField(GridPtr g, std::vector<double> v) : grid_(std::move(g)), values_(std::move(v)) {
        if (values_.size() != 2 * static_cast<std::size_t>(grid_->cells()))
            throw Error("VectorField: value count does not match grid");
    }

    static VectorField sample(GridPtr g, const BoundaryVelocity& f) {
        VectorField v(g);
        for (int k = 0; k < g->cells(); ++k) {
            Vec2 c = g->center(k);
            v.set(k, f(c.x, c.y));
        }
        return v;
    }

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    int cells() const { return grid_->cells(); }

    Vec2 operator[](int k) const {
        return {values_[2 * static_cast<std::size_t>(k)], values_[2 * static_cast<std::size_t>(k) + 1]};
    }
    void set(int k, Vec2 v) {
        values_[2 * static_cast<std::size_t>(k)] = v.x;
        values_[2 * static_cast<std::size_t>(k) + 1] = v.y;
    }
    double component(int k, int c) const { return values_[2 * static_cast<std::size_t>(k) + static_cast<std::size_t>(c)]; }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool finite() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const VectorField& a, const VectorField& b) { return a.values_ == b.values_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

// Symmetric-or-not 2x2 tensor; g[a][b] = d u_a / d x_b for gradients.
struct Tensor2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;
    double trace() const { return xx + yy; }
    friend Tensor2 operator+(Tensor2 a, Tensor2 b) { return {a.xx + b.xx, a.xy + b.xy, a.yx + b.yx, a.yy + b.yy}; }
};

inline double contract(const Tensor2& a, const Tensor2& b) {
    return a.xx * b.xx + a.xy * b.xy + a.yx * b.yx + a.yy * b.yy;
}

enum class FaceSubset { all, inflow, outflow, characteristic };

inline bool in_subset(const BoundaryFace& f, FaceSubset s) {
    switch (s) {
    case FaceSubset::all: return true;
    case FaceSubset::inflow: return f.tag == FaceTag::inflow;
    case FaceSubset::outflow: return f.tag == FaceTag::outflow;
    case FaceSubset::characteristic: return f.tag == FaceTag::characteristic;
    }
    return false;
}

// ---------------------------------------------------------------- quadrature

inline double integrate(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid().cell_area();
}

// Sum over boundary faces of g * length; g is indexed by boundary face.
inline double boundary_integrate(const Grid& grid, const std::vector<double>& g, FaceSubset subset) {
    if (g.size() != grid.boundary_faces().size())
        throw Error("boundary_integrate: expected one value per boundary face");
    double s = 0.0;
    for (const auto& f : grid.boundary_faces())
        if (in_subset(f, subset)) s += g[static_cast<std::size_t>(f.index)] * f.length;
    return s;
}

// Per-face samples of a closed-form function at the face midpoints.
inline std::vector<double> sample_faces(const Grid& grid, const ScalarFunction& f) {
    std::vector<double> out;
    out.reserve(grid.boundary_faces().size());
    for (const auto& bf : grid.boundary_faces()) out.push_back(f(bf.midpoint.x, bf.midpoint.y));
    return out;
}

// u_B.n at every boundary face midpoint.
inline std::vector<double> normal_velocity(const Grid& grid, const BoundaryVelocity& u_B) {
    std::vector<double> out;
    out.reserve(grid.boundary_faces().size());
    for (const auto& bf : grid.boundary_faces())
        out.push_back(dot(u_B(bf.midpoint.x, bf.midpoint.y), bf.normal));
    return out;
}

// ---------------------------------------------------------------- traces

enum class TraceMode {
    cell,         // value of the adjacent cell (the upwind trace the transport scheme uses)
    extrapolated  // linear extrapolation from the two nearest cells to the face midpoint
};

inline std::vector<double> boundary_trace(const ScalarField& f, TraceMode mode = TraceMode::extrapolated) {
    const Grid& g = f.grid();
    std::vector<double> out;
    out.reserve(g.boundary_faces().size());
    for (const auto& bf : g.boundary_faces()) {
        double vk = f[bf.cell];
        if (mode == TraceMode::cell) {
            out.push_back(vk);
            continue;
        }
        int i = g.col(bf.cell), j = g.row(bf.cell);
        int inner = bf.cell;
        switch (bf.side) {
        case Side::bottom: inner = g.index(i, j + 1); break;
        case Side::top: inner = g.index(i, j - 1); break;
        case Side::left: inner = g.index(i + 1, j); break;
        case Side::right: inner = g.index(i - 1, j); break;
        }
        out.push_back(1.5 * vk - 0.5 * f[inner]);
    }
    return out;
}

// ---------------------------------------------------------------- stencils

namespace detail {

// d f / d x along a grid line: centred in the interior, one-sided second
// order next to the boundary (first order when only two cells exist).
inline double line_derivative(const double* f, int n, int stride, int i, double h) {
    auto at = [&](int m) { return f[m * stride]; };
    if (i > 0 && i < n - 1) return (at(i + 1) - at(i - 1)) / (2.0 * h);
    if (n == 2) return (at(1) - at(0)) / h;
    if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
}

inline double ddx(const Grid& g, const double* f, int stride, int k) {
    int i = g.col(k), j = g.row(k);
    return line_derivative(f + static_cast<std::ptrdiff_t>(stride) * g.index(0, j), g.nx(), stride, i, g.dx());
}

inline double ddy(const Grid& g, const double* f, int stride, int k) {
    int i = g.col(k), j = g.row(k);
    return line_derivative(f + static_cast<std::ptrdiff_t>(stride) * i, g.ny(), stride * g.nx(), j, g.dy());
}

} // namespace detail

inline VectorField gradient(const ScalarField& f) {
    const Grid& g = f.grid();
    VectorField out(f.grid_ptr());
    const double* p = f.values().data();
    for (int k = 0; k < g.cells(); ++k) out.set(k, {detail::ddx(g, p, 1, k), detail::ddy(g, p, 1, k)});
    return out;
}

// Cellwise velocity gradient, grad[k].xy = d u_x / d y.
inline std::vector<Tensor2> velocity_gradient(const VectorField& v) {
    const Grid& g = v.grid();
    std::vector<Tensor2> out(static_cast<std::size_t>(g.cells()));
    const double* p = v.values().data();
    for (int k = 0; k < g.cells(); ++k) {
        Tensor2& t = out[static_cast<std::size_t>(k)];
        t.xx = detail::ddx(g, p, 2, k);
        t.xy = detail::ddy(g, p, 2, k);
        t.yx = detail::ddx(g, p + 1, 2, k);
        t.yy = detail::ddy(g, p + 1, 2, k);
    }
    return out;
}

inline ScalarField divergence(const VectorField& v) {
    auto grad = velocity_gradient(v);
    ScalarField out(v.grid_ptr());
    for (int k = 0; k < v.cells(); ++k) out[k] = grad[static_cast<std::size_t>(k)].trace();
    return out;
}

struct StrainAndDivergence {
    std::vector<Tensor2> strain;  // symmetric part of the velocity gradient
    ScalarField div;
};

inline StrainAndDivergence strain_and_div(const VectorField& v) {
    auto grad = velocity_gradient(v);
    StrainAndDivergence out{std::vector<Tensor2>(grad.size()), ScalarField(v.grid_ptr())};
    for (std::size_t k = 0; k < grad.size(); ++k) {
        const Tensor2& t = grad[k];
        double off = 0.5 * (t.xy + t.yx);
        out.strain[k] = {t.xx, off, off, t.yy};
        out.div[static_cast<int>(k)] = t.trace();
    }
    return out;
}

// ---------------------------------------------------------------- extrema

struct Extrema {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    int argmin = -1;
    int argmax = -1;
};

inline Extrema extrema(const std::vector<double>& v) {
    Extrema e;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] < e.min) { e.min = v[k]; e.argmin = static_cast<int>(k); }
        if (v[k] > e.max) { e.max = v[k]; e.argmax = static_cast<int>(k); }
    }
    return e;
}

inline Extrema extrema(const ScalarField& f) { return extrema(f.values()); }

// Extrema of the boundary trace over a subset of faces; arg* are face indices.
inline Extrema extrema_boundary(const ScalarField& f, FaceSubset subset,
                                TraceMode mode = TraceMode::extrapolated) {
    auto tr = boundary_trace(f, mode);
    Extrema e;
    for (const auto& bf : f.grid().boundary_faces()) {
        if (!in_subset(bf, subset)) continue;
        double v = tr[static_cast<std::size_t>(bf.index)];
        if (v < e.min) { e.min = v; e.argmin = bf.index; }
        if (v > e.max) { e.max = v; e.argmax = bf.index; }
    }
    return e;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace mhd
