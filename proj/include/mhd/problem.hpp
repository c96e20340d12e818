// Problem data (grid, boundary data, parameters) and the solution state.
#pragma once

#include "momentum.hpp"

namespace mhd {

struct State {
    double t = 0.0;
    ScalarField rho;
    ScalarField b;
    VectorField u;  // full velocity; equals u_B on the boundary
};

struct Problem {
    GridPtr grid;            // boundary faces tagged from u_B
    BoundaryVelocity u_B;
    ScalarFunction rho_B_fn;
    ScalarFunction b_B_fn;
    std::vector<double> rho_B;  // per boundary face
    std::vector<double> b_B;
    std::vector<double> un;     // u_B.n per face, characteristic faces exactly 0
    PhysParams phys;
    RegParams reg;
    double C_lower = 0.5;
    double C_upper = 2.0;
    // Reused momentum factorization (performance only; results do not depend on it).
    std::shared_ptr<LinearSolver> workspace = std::make_shared<LinearSolver>();

    double u_B_sup() const {
        const Grid& g = *grid;
        double m = 0.0;
        for (int k = 0; k < g.cells(); ++k) {
            Vec2 c = g.center(k);
            m = std::max(m, norm(u_B(c.x, c.y)));
        }
        for (const auto& bf : g.boundary_faces()) m = std::max(m, norm(u_B(bf.midpoint.x, bf.midpoint.y)));
        return m;
    }
};

inline Problem make_problem(const Grid& grid, BoundaryVelocity u_B, ScalarFunction rho_B, ScalarFunction b_B,
                            PhysParams phys, RegParams reg, double C_lower, double C_upper) {
    Problem p;
    p.grid = classify_boundary(grid, u_B);
    p.u_B = std::move(u_B);
    p.rho_B_fn = std::move(rho_B);
    p.b_B_fn = std::move(b_B);
    p.rho_B = sample_faces(*p.grid, p.rho_B_fn);
    p.b_B = sample_faces(*p.grid, p.b_B_fn);
    p.un = boundary_flux_velocity(*p.grid, normal_velocity(*p.grid, p.u_B));
    p.phys = phys;
    p.reg = reg;
    p.C_lower = C_lower;
    p.C_upper = C_upper;
    return p;
}

inline State sample_state(const Problem& p, const ScalarFunction& rho0, const ScalarFunction& b0,
                          const BoundaryVelocity& u0) {
    return {0.0, ScalarField::sample(p.grid, rho0), ScalarField::sample(p.grid, b0), VectorField::sample(p.grid, u0)};
}

} // namespace mhd
