// Face-based discrete operators shared by the transport and momentum
// solvers and by the energy/mass bookkeeping.
//
// Every budget the diagnostics evaluate is written with exactly these
// operators, so discrete identities close to solver precision:
//
// - face normal velocity w_s: average of the two adjacent cell velocities on
// interior faces, u_B.n on boundary faces;
// - face divergence (div_h u)_K = (1/|K|) sum_s |s| w_s;
// - viscous bilinear form a(u, w) = sum_s omega_s S(G_s u) : G_s w, where G_s
// is a full 2x2 gradient at each face (compact normal difference, tangential
// difference of vertex values) and omega_s is the face's share of the area.
#pragma once

#include "fields.hpp"

namespace mhd {

struct InteriorFace {
    int left = 0;        // cell K
    int right = 0;       // cell L
    Vec2 normal;         // unit normal from K to L
    double length = 0.0;
    double distance = 0.0;  // distance between the two cell centres
};

inline std::vector<InteriorFace> interior_faces(const Grid& g) {
    std::vector<InteriorFace> out;
    out.reserve(static_cast<std::size_t>((g.nx() - 1) * g.ny() + g.nx() * (g.ny() - 1)));
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i + 1 < g.nx(); ++i)
            out.push_back({g.index(i, j), g.index(i + 1, j), {1.0, 0.0}, g.dy(), g.dx()});
    for (int j = 0; j + 1 < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            out.push_back({g.index(i, j), g.index(i, j + 1), {0.0, 1.0}, g.dx(), g.dy()});
    return out;
}

// Normal velocities on interior faces (K -> L orientation) for a cell velocity.
inline std::vector<double> interior_normal_velocity(const std::vector<InteriorFace>& faces, const VectorField& u) {
    std::vector<double> w(faces.size());
    for (std::size_t s = 0; s < faces.size(); ++s) {
        const auto& f = faces[s];
        w[s] = 0.5 * dot(u[f.left] + u[f.right], f.normal);
    }
    return w;
}

// (div_h u)_K using interior face averages and the given boundary normal velocities.
inline ScalarField face_divergence(const VectorField& u, const std::vector<InteriorFace>& faces,
                                   const std::vector<double>& boundary_un) {
    const Grid& g = u.grid();
    ScalarField d(u.grid_ptr());
    auto w = interior_normal_velocity(faces, u);
    for (std::size_t s = 0; s < faces.size(); ++s) {
        double flux = faces[s].length * w[s];
        d[faces[s].left] += flux;
        d[faces[s].right] -= flux;
    }
    for (const auto& bf : g.boundary_faces())
        d[bf.cell] += bf.length * boundary_un[static_cast<std::size_t>(bf.index)];
    const double inv = 1.0 / g.cell_area();
    for (auto& v : d.values()) v *= inv;
    return d;
}

// ------------------------------------------------------------------ viscous form

// S(G) = mu (G + G^T) + lambda tr(G) I.
inline Tensor2 stress(const Tensor2& g, double mu, double lambda) {
    const double tr = lambda * g.trace();
    return {2.0 * mu * g.xx + tr, mu * (g.xy + g.yx), mu * (g.yx + g.xy), 2.0 * mu * g.yy + tr};
}

// Boundary data nodes: boundary face midpoints (ids 0..F-1) followed by the
// perimeter vertices (ids F..F+V-1).
class BoundaryNodes {
public:
    explicit BoundaryNodes(const Grid& g) : nx_(g.nx()), ny_(g.ny()), faces_(g.boundary_face_count()) {
        for (const auto& bf : g.boundary_faces()) points_.push_back(bf.midpoint);
        // perimeter vertices, counter-clockwise starting at the origin
        for (int i = 0; i < nx_; ++i) points_.push_back(g.vertex(i, 0));
        for (int j = 0; j < ny_; ++j) points_.push_back(g.vertex(nx_, j));
        for (int i = nx_; i > 0; --i) points_.push_back(g.vertex(i, ny_));
        for (int j = ny_; j > 0; --j) points_.push_back(g.vertex(0, j));
    }

    int count() const { return static_cast<int>(points_.size()); }
    Vec2 point(int n) const { return points_[static_cast<std::size_t>(n)]; }
    int face_node(int f) const { return f; }

    int vertex_node(int i, int j) const {
        int base = faces_;
        if (j == 0) return base + i;
        if (i == nx_) return base + nx_ + j;
        if (j == ny_) return base + nx_ + ny_ + (nx_ - i);
        return base + 2 * nx_ + ny_ + (ny_ - j);  // i == 0
    }

    bool is_boundary_vertex(int i, int j) const { return i == 0 || j == 0 || i == nx_ || j == ny_; }

    std::vector<Vec2> sample(const BoundaryVelocity& f) const {
        std::vector<Vec2> out;
        out.reserve(points_.size());
        for (Vec2 p : points_) out.push_back(f(p.x, p.y));
        return out;
    }

private:
    int nx_, ny_, faces_;
    std::vector<Vec2> points_;
};

// One term of a face gradient: node value times (coefficient for d/dx, d/dy).
struct GradientTerm {
    int node = 0;          // cell index (>= 0) or -(data node + 1)
    double cx = 0.0;
    double cy = 0.0;
};

struct FaceGradientStencil {
    double weight = 0.0;  // quadrature weight (area share)
    std::vector<GradientTerm> terms;
};

inline int data_ref(int node) { return -(node + 1); }
inline int data_index(int ref) { return -ref - 1; }

// Stencils of the face gradients used by the viscous form, one per face
// (interior and boundary, x-normal and y-normal).
class ViscousStencil {
public:
    explicit ViscousStencil(const Grid& g) : nodes_(g) { build(g); }

    const std::vector<FaceGradientStencil>& faces() const { return faces_; }
    const BoundaryNodes& nodes() const { return nodes_; }

    // Gradient at face s of a field given by cell values and boundary data values.
    Tensor2 gradient(std::size_t s, const VectorField& cells, const std::vector<Vec2>& data) const {
        Tensor2 t;
        for (const auto& term : faces_[s].terms) {
            Vec2 v = term.node >= 0 ? cells[term.node] : data[static_cast<std::size_t>(data_index(term.node))];
            t.xx += term.cx * v.x;
            t.xy += term.cy * v.x;
            t.yx += term.cx * v.y;
            t.yy += term.cy * v.y;
        }
        return t;
    }

    // a(u, w) for two fields, each with its own boundary data.
    double form(const VectorField& u, const std::vector<Vec2>& u_data, const VectorField& w,
                const std::vector<Vec2>& w_data, double mu, double lambda) const {
        double sum = 0.0;
        for (std::size_t s = 0; s < faces_.size(); ++s) {
            Tensor2 gu = gradient(s, u, u_data);
            Tensor2 gw = gradient(s, w, w_data);
            sum += faces_[s].weight * contract(stress(gu, mu, lambda), gw);
        }
        return sum;
    }

private:
    void add_vertex(std::vector<GradientTerm>& terms, const Grid& g, int I, int J, double cx, double cy) const {
        if (nodes_.is_boundary_vertex(I, J)) {
            terms.push_back({data_ref(nodes_.vertex_node(I, J)), cx, cy});
            return;
        }
        for (int dj = -1; dj <= 0; ++dj)
            for (int di = -1; di <= 0; ++di)
                terms.push_back({g.index(I + di, J + dj), 0.25 * cx, 0.25 * cy});
    }

    void build(const Grid& g) {
        const double dx = g.dx(), dy = g.dy(), area = g.cell_area();
        // x-normal faces at x = I dx, I = 0..nx
        for (int j = 0; j < g.ny(); ++j) {
            for (int I = 0; I <= g.nx(); ++I) {
                FaceGradientStencil st;
                if (I == 0 || I == g.nx()) {
                    st.weight = 0.25 * area;
                    Side side = I == 0 ? Side::left : Side::right;
                    int cell = I == 0 ? g.index(0, j) : g.index(g.nx() - 1, j);
                    int f = g.boundary_face_of(g.col(cell), j, side);
                    double sgn = I == 0 ? 1.0 : -1.0;  // (inner - face) orientation along +x
                    st.terms.push_back({cell, sgn * 2.0 / dx, 0.0});
                    st.terms.push_back({data_ref(nodes_.face_node(f)), -sgn * 2.0 / dx, 0.0});
                } else {
                    st.weight = 0.5 * area;
                    st.terms.push_back({g.index(I, j), 1.0 / dx, 0.0});
                    st.terms.push_back({g.index(I - 1, j), -1.0 / dx, 0.0});
                }
                add_vertex(st.terms, g, I, j + 1, 0.0, 1.0 / dy);
                add_vertex(st.terms, g, I, j, 0.0, -1.0 / dy);
                faces_.push_back(std::move(st));
            }
        }
        // y-normal faces at y = J dy, J = 0..ny
        for (int J = 0; J <= g.ny(); ++J) {
            for (int i = 0; i < g.nx(); ++i) {
                FaceGradientStencil st;
                if (J == 0 || J == g.ny()) {
                    st.weight = 0.25 * area;
                    Side side = J == 0 ? Side::bottom : Side::top;
                    int cell = J == 0 ? g.index(i, 0) : g.index(i, g.ny() - 1);
                    int f = g.boundary_face_of(i, g.row(cell), side);
                    double sgn = J == 0 ? 1.0 : -1.0;
                    st.terms.push_back({cell, 0.0, sgn * 2.0 / dy});
                    st.terms.push_back({data_ref(nodes_.face_node(f)), 0.0, -sgn * 2.0 / dy});
                } else {
                    st.weight = 0.5 * area;
                    st.terms.push_back({g.index(i, J), 0.0, 1.0 / dy});
                    st.terms.push_back({g.index(i, J - 1), 0.0, -1.0 / dy});
                }
                add_vertex(st.terms, g, i + 1, J, 1.0 / dx, 0.0);
                add_vertex(st.terms, g, i, J, -1.0 / dx, 0.0);
                faces_.push_back(std::move(st));
            }
        }
    }

    BoundaryNodes nodes_;
    std::vector<FaceGradientStencil> faces_;
};

} // namespace mhd
