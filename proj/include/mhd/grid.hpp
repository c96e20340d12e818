// Rectangular cell-centred grid with boundary-face metadata.
//
// Cells are indexed k = i + nx*j with centres at ((i+1/2)dx, (j+1/2)dy).
// Boundary faces are enumerated bottom, right, top, left; each one carries
// the adjacent cell, outward unit normal, midpoint, length and an
// inflow/outflow/characteristic tag derived from the boundary velocity.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhd {

// Base class of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

enum class FaceTag { characteristic, inflow, outflow };

enum class Side { bottom, right, top, left };

inline const char* to_string(FaceTag t) {
    switch (t) {
    case FaceTag::inflow: return "inflow";
    case FaceTag::outflow: return "outflow";
    default: return "characteristic";
    }
}

struct BoundaryFace {
    int index = 0;
    int cell = 0;        // adjacent cell
    Side side = Side::bottom;
    Vec2 midpoint;
    Vec2 normal;         // unit outward normal
    double length = 0.0;
    FaceTag tag = FaceTag::characteristic;
};

// Velocity field defined on the closure of the domain.
using BoundaryVelocity = std::function<Vec2(double, double)>;

// Scalar data defined on the closure of the domain (rho_B, b_B, initial data).
using ScalarFunction = std::function<double(double, double)>;

class Grid {
public:
    Grid(int nx, int ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
        if (nx < 2 || ny < 2)
            throw Error("grid: cell counts must be >= 2 (got " + std::to_string(nx) + "x" +
                        std::to_string(ny) + ")");
        if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
            throw Error("grid: domain extents must be positive and finite");
        dx_ = lx / nx;
        dy_ = ly / ny;
        build_faces();
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double lx() const { return lx_; }
    double ly() const { return ly_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    int cells() const { return nx_ * ny_; }
    double cell_area() const { return dx_ * dy_; }
    double area() const { return lx_ * ly_; }

    int index(int i, int j) const { return i + nx_ * j; }
    int col(int k) const { return k % nx_; }
    int row(int k) const { return k / nx_; }

    Vec2 center(int k) const { return {(col(k) + 0.5) * dx_, (row(k) + 0.5) * dy_}; }
    Vec2 vertex(int i, int j) const { return {i * dx_, j * dy_}; }

    const std::vector<BoundaryFace>& boundary_faces() const { return faces_; }
    const BoundaryFace& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }
    int boundary_face_count() const { return static_cast<int>(faces_.size()); }

    // Boundary face adjacent to cell (i,j) on the given side, or -1 if interior.
    int boundary_face_of(int i, int j, Side s) const {
        switch (s) {
        case Side::bottom: return j == 0 ? i : -1;
        case Side::right: return i == nx_ - 1 ? nx_ + j : -1;
        case Side::top: return j == ny_ - 1 ? nx_ + ny_ + (nx_ - 1 - i) : -1;
        case Side::left: return i == 0 ? 2 * nx_ + ny_ + (ny_ - 1 - j) : -1;
        }
        return -1;
    }

    // Tags every boundary face from the sign of u_B.n with tolerance
    // 1e-12 * max|u_B| over the face midpoints.
    void classify_boundary(const BoundaryVelocity& u_B) {
        std::vector<double> un(faces_.size());
        double umax = 0.0;
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            Vec2 u = u_B(faces_[f].midpoint.x, faces_[f].midpoint.y);
            un[f] = dot(u, faces_[f].normal);
            umax = std::max(umax, norm(u));
        }
        const double tol = 1e-12 * umax;
        for (std::size_t f = 0; f < faces_.size(); ++f) {
            if (un[f] < -tol)
                faces_[f].tag = FaceTag::inflow;
            else if (un[f] > tol)
                faces_[f].tag = FaceTag::outflow;
            else
                faces_[f].tag = FaceTag::characteristic;
        }
    }

    double perimeter_sum() const {
        double s = 0.0;
        for (const auto& f : faces_) s += f.length;
        return s;
    }

private:
    void build_faces() {
        faces_.clear();
        faces_.reserve(static_cast<std::size_t>(2 * (nx_ + ny_)));
        auto push = [&](int cell, Side s, Vec2 mid, Vec2 n, double len) {
            BoundaryFace f;
            f.index = static_cast<int>(faces_.size());
            f.cell = cell;
            f.side = s;
            f.midpoint = mid;
            f.normal = n;
            f.length = len;
            faces_.push_back(f);
        };
        for (int i = 0; i < nx_; ++i)
            push(index(i, 0), Side::bottom, {(i + 0.5) * dx_, 0.0}, {0.0, -1.0}, dx_);
        for (int j = 0; j < ny_; ++j)
            push(index(nx_ - 1, j), Side::right, {lx_, (j + 0.5) * dy_}, {1.0, 0.0}, dy_);
        for (int i = nx_ - 1; i >= 0; --i)
            push(index(i, ny_ - 1), Side::top, {(i + 0.5) * dx_, ly_}, {0.0, 1.0}, dx_);
        for (int j = ny_ - 1; j >= 0; --j)
            push(index(0, j), Side::left, {0.0, (j + 0.5) * dy_}, {-1.0, 0.0}, dy_);
    }

    int nx_, ny_;
    double lx_, ly_, dx_ = 0.0, dy_ = 0.0;
    std::vector<BoundaryFace> faces_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr build_grid(int nx, int ny, double lx, double ly) {
    return std::make_shared<const Grid>(nx, ny, lx, ly);
}

// Copy of `grid` with boundary tags set from u_B.
inline GridPtr classify_boundary(const Grid& grid, const BoundaryVelocity& u_B) {
    auto g = std::make_shared<Grid>(grid);
    g->classify_boundary(u_B);
    return g;
}

} // namespace mhd
