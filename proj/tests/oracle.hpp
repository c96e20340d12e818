// Dense reference solutions for single transport and momentum steps.
//
// The residuals below are written cell by cell from the scheme description,
// without the library's face lists or stencil tables. The steps are affine in
// the unknown, so the dense matrix is recovered by probing unit vectors and
// the system is solved by full-pivot LU.
#pragma once

#include "mhd/momentum.hpp"

#include <Eigen/Dense>

namespace oracle {

using mhd::Vec2;

struct Neighbour {
    bool interior;
    int cell;      // neighbour cell, or -1
    Vec2 normal;
    Vec2 mid;      // face midpoint
    double len;
    double dist;
};

inline std::array<Neighbour, 4> neighbours(const mhd::Grid& g, int k) {
    const int i = g.col(k), j = g.row(k);
    const double dx = g.dx(), dy = g.dy();
    const Vec2 c = g.center(k);
    std::array<Neighbour, 4> out;
    out[0] = {i + 1 < g.nx(), i + 1 < g.nx() ? g.index(i + 1, j) : -1, {1, 0}, {c.x + dx / 2, c.y}, dy, dx};
    out[1] = {i > 0, i > 0 ? g.index(i - 1, j) : -1, {-1, 0}, {c.x - dx / 2, c.y}, dy, dx};
    out[2] = {j + 1 < g.ny(), j + 1 < g.ny() ? g.index(i, j + 1) : -1, {0, 1}, {c.x, c.y + dy / 2}, dx, dy};
    out[3] = {j > 0, j > 0 ? g.index(i, j - 1) : -1, {0, -1}, {c.x, c.y - dy / 2}, dx, dy};
    return out;
}

// -1 inflow, +1 outflow, 0 characteristic.
inline int face_kind(const mhd::Grid& g, const mhd::BoundaryVelocity& uB, Vec2 mid, Vec2 n) {
    double umax = 0.0;
    for (const auto& f : g.boundary_faces()) umax = std::max(umax, mhd::norm(uB(f.midpoint.x, f.midpoint.y)));
    const double un = mhd::dot(uB(mid.x, mid.y), n);
    if (un < -1e-12 * umax) return -1;
    if (un > 1e-12 * umax) return 1;
    return 0;
}

// ------------------------------------------------------------------ transport

struct TransportCase {
    mhd::GridPtr grid;
    std::vector<double> c_old;
    std::vector<Vec2> u;
    mhd::BoundaryVelocity u_B;
    mhd::ScalarFunction c_B;
    double eps, dt;
};

inline Eigen::VectorXd transport_residual(const TransportCase& tc, const Eigen::VectorXd& c) {
    const mhd::Grid& g = *tc.grid;
    Eigen::VectorXd r(g.cells());
    for (int k = 0; k < g.cells(); ++k) {
        double s = g.cell_area() * (c[k] - tc.c_old[static_cast<std::size_t>(k)]) / tc.dt;
        for (const auto& nb : neighbours(g, k)) {
            if (nb.interior) {
                const double w = 0.5 * mhd::dot(tc.u[static_cast<std::size_t>(k)] + tc.u[static_cast<std::size_t>(nb.cell)], nb.normal);
                s += nb.len * w * (w > 0 ? c[k] : c[nb.cell]);
                s += tc.eps * nb.len * (c[k] - c[nb.cell]) / nb.dist;
            } else {
                const int kind = face_kind(g, tc.u_B, nb.mid, nb.normal);
                const double un = mhd::dot(tc.u_B(nb.mid.x, nb.mid.y), nb.normal);
                if (kind < 0) s += nb.len * un * tc.c_B(nb.mid.x, nb.mid.y);
                if (kind > 0) s += nb.len * un * c[k];
            }
        }
        r[k] = s;
    }
    return r;
}

template <class Residual>
Eigen::VectorXd solve_affine(int n, Residual R) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd r0 = R(zero);
    Eigen::MatrixXd A(n, n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd e = zero;
        e[j] = 1.0;
        A.col(j) = R(e) - r0;
    }
    return A.fullPivLu().solve(-r0);
}

inline Eigen::VectorXd transport_solve(const TransportCase& tc) {
    return solve_affine(tc.grid->cells(), [&](const Eigen::VectorXd& c) { return transport_residual(tc, c); });
}

// ------------------------------------------------------------------ momentum

// Full 2x2 gradient at every face (x-faces I = 0..nx for each row j, then
// y-faces J = 0..ny for each column i) of the velocity given by cell values
// and a boundary function; returns gradients with their quadrature weights.
struct FaceGrad {
    double weight;
    mhd::Tensor2 G;
};

inline std::vector<FaceGrad> face_gradients(const mhd::Grid& g, const std::vector<Vec2>& u,
                                            const mhd::BoundaryVelocity& bc) {
    const double dx = g.dx(), dy = g.dy();
    auto cell = [&](int i, int j) { return u[static_cast<std::size_t>(g.index(i, j))]; };
    auto vertex = [&](int I, int J) -> Vec2 {
        if (I == 0 || J == 0 || I == g.nx() || J == g.ny()) return bc(I * dx, J * dy);
        Vec2 s = cell(I - 1, J - 1) + cell(I, J - 1) + cell(I - 1, J) + cell(I, J);
        return 0.25 * s;
    };
    std::vector<FaceGrad> out;
    for (int j = 0; j < g.ny(); ++j)
        for (int I = 0; I <= g.nx(); ++I) {
            Vec2 dn;
            double w;
            if (I == 0) {
                dn = (2.0 / dx) * (cell(0, j) - bc(0.0, (j + 0.5) * dy));
                w = dx * dy / 4;
            } else if (I == g.nx()) {
                dn = (2.0 / dx) * (bc(g.lx(), (j + 0.5) * dy) - cell(g.nx() - 1, j));
                w = dx * dy / 4;
            } else {
                dn = (1.0 / dx) * (cell(I, j) - cell(I - 1, j));
                w = dx * dy / 2;
            }
            Vec2 dt = (1.0 / dy) * (vertex(I, j + 1) - vertex(I, j));
            out.push_back({w, {dn.x, dt.x, dn.y, dt.y}});
        }
    for (int J = 0; J <= g.ny(); ++J)
        for (int i = 0; i < g.nx(); ++i) {
            Vec2 dn;
            double w;
            if (J == 0) {
                dn = (2.0 / dy) * (cell(i, 0) - bc((i + 0.5) * dx, 0.0));
                w = dx * dy / 4;
            } else if (J == g.ny()) {
                dn = (2.0 / dy) * (bc((i + 0.5) * dx, g.ly()) - cell(i, g.ny() - 1));
                w = dx * dy / 4;
            } else {
                dn = (1.0 / dy) * (cell(i, J) - cell(i, J - 1));
                w = dx * dy / 2;
            }
            Vec2 dt = (1.0 / dx) * (vertex(i + 1, J) - vertex(i, J));
            out.push_back({w, {dt.x, dn.x, dt.y, dn.y}});
        }
    return out;
}

struct MomentumCase {
    mhd::GridPtr grid;
    std::vector<double> rho_old, rho, b;
    std::vector<Vec2> u_old, u_guess, force;
    mhd::BoundaryVelocity u_B;
    mhd::ScalarFunction rho_B;
    double dt, mu, lambda, gamma, eps, delta, beta;
};

// Residual rows (x then y per cell) for the deviation v.
inline Eigen::VectorXd momentum_residual(const MomentumCase& mc, const Eigen::VectorXd& v) {
    const mhd::Grid& g = *mc.grid;
    const int N = g.cells();
    std::vector<Vec2> u(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        Vec2 c = g.center(k);
        u[static_cast<std::size_t>(k)] = Vec2{v[2 * k], v[2 * k + 1]} + mc.u_B(c.x, c.y);
    }
    auto P = [&](int k) {
        const double r = mc.rho[static_cast<std::size_t>(k)], b = mc.b[static_cast<std::size_t>(k)];
        return std::pow(r, mc.gamma) + 0.5 * b * b + mc.delta * std::pow(r + b, mc.beta);
    };
    auto at = [](const std::vector<double>& f, int k) { return f[static_cast<std::size_t>(k)]; };
    auto atv = [](const std::vector<Vec2>& f, int k) { return f[static_cast<std::size_t>(k)]; };
    Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * N);
    const auto Gu = face_gradients(g, u, mc.u_B);
    const mhd::BoundaryVelocity zero = [](double, double) { return Vec2{}; };
    for (int k = 0; k < N; ++k) {
        Vec2 s = (g.cell_area() / mc.dt) * (at(mc.rho, k) * atv(u, k) - at(mc.rho_old, k) * atv(mc.u_old, k));
        for (const auto& nb : neighbours(g, k)) {
            if (nb.interior) {
                const double w = 0.5 * mhd::dot(atv(mc.u_guess, k) + atv(mc.u_guess, nb.cell), nb.normal);
                const int up = w > 0 ? k : nb.cell;
                const double F = nb.len * w * at(mc.rho, up);
                s = s + F * atv(u, up);
                const double gr = mc.eps * nb.len * (at(mc.rho, nb.cell) - at(mc.rho, k)) / nb.dist;
                s = s + (0.5 * gr) * (atv(u, nb.cell) - atv(u, k));
                s = s + (nb.len * 0.5 * (P(k) + P(nb.cell))) * nb.normal;
            } else {
                const int kind = face_kind(g, mc.u_B, nb.mid, nb.normal);
                const double un = mhd::dot(mc.u_B(nb.mid.x, nb.mid.y), nb.normal);
                if (kind < 0) s = s + (nb.len * un * mc.rho_B(nb.mid.x, nb.mid.y)) * mc.u_B(nb.mid.x, nb.mid.y);
                if (kind > 0) s = s + (nb.len * un * at(mc.rho, k)) * atv(u, k);
                s = s + (nb.len * P(k)) * nb.normal;
            }
        }
        s = s - g.cell_area() * atv(mc.force, k);
        for (int a = 0; a < 2; ++a) {
            std::vector<Vec2> phi(static_cast<std::size_t>(N));
            phi[static_cast<std::size_t>(k)] = a == 0 ? Vec2{1, 0} : Vec2{0, 1};
            const auto Gp = face_gradients(g, phi, zero);
            double form = 0.0;
            for (std::size_t f = 0; f < Gu.size(); ++f) {
                const auto& G = Gu[f].G;
                const double tr = G.xx + G.yy;
                const mhd::Tensor2 S{2 * mc.mu * G.xx + mc.lambda * tr, mc.mu * (G.xy + G.yx), mc.mu * (G.xy + G.yx),
                                     2 * mc.mu * G.yy + mc.lambda * tr};
                form += Gu[f].weight * mhd::contract(S, Gp[f].G);
            }
            r[2 * k + a] = (a == 0 ? s.x : s.y) + form;
        }
    }
    return r;
}

inline Eigen::VectorXd momentum_solve(const MomentumCase& mc) {
    return solve_affine(2 * mc.grid->cells(), [&](const Eigen::VectorXd& v) { return momentum_residual(mc, v); });
}

} // namespace oracle
