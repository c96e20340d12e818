// Trajectory-level checks: aggregated energy balance and the weak
// residuals of the continuity, magnetic and momentum equations
// against closed-form test functions.
//
// Time integrals use the new-level rule of the implicit stepping over the
// stored snapshots, space integrals the cell-centre rule, boundary integrals
// the face-midpoint rule with cell traces. The weak forms include the eps
// terms, so with eps = delta = 0 they are the limit-problem forms.
#pragma once

#include "solver.hpp"

namespace mhd {

// Sum of the per-step balances of a trajectory; energy components are those of the final state.
inline EnergyReport energy_budget(const Trajectory& tr, const Problem& p) {
    if (tr.states.empty()) throw Error("energy_budget: empty trajectory");
    EnergyReport r = energy(tr.states.back(), p);
    r.scale = 1.0;
    for (const auto& s : tr.reports) {
        const auto& e = s.energy;
        r.dissipation += e.dissipation;
        r.eps_dissipation += e.eps_dissipation;
        r.boundary_in += e.boundary_in;
        r.boundary_out += e.boundary_out;
        r.forcing += e.forcing;
        r.numerical += e.numerical;
        r.inequality_residual += e.inequality_residual;
        r.scale = std::max(r.scale, e.scale);
    }
    return r;
}

// Balance recomputed from stored snapshots; requires every step to be stored.
inline std::vector<EnergyReport> energy_budget_from_states(const std::vector<State>& states, const Problem& p) {
    std::vector<EnergyReport> out;
    for (std::size_t n = 1; n < states.size(); ++n) out.push_back(step_energy_budget(states[n - 1], states[n], p));
    return out;
}

using SpaceTimeScalar = std::function<double(double, double, double)>;
using SpaceTimeVector = std::function<Vec2(double, double, double)>;

// Scalar test function with its time derivative and gradient (t, x, y).
struct ScalarTest {
    SpaceTimeScalar phi;
    SpaceTimeScalar dt;
    SpaceTimeVector grad;
};

// Vector test function; grad(t,x,y).xy = d phi_x / d y.
struct VectorTest {
    SpaceTimeVector phi;
    SpaceTimeVector dt;
    std::function<Tensor2(double, double, double)> grad;
};

namespace detail {

inline double scalar_weak_residual(const std::vector<State>& states, const Problem& p, const ScalarTest& phi,
                                   bool magnetic) {
    if (states.size() < 2) throw Error("weak residual: need at least two states");
    const Grid& g = *p.grid;
    const double area = g.cell_area();
    const auto& cB = magnetic ? p.b_B : p.rho_B;
    auto field = [&](const State& s) -> const ScalarField& { return magnetic ? s.b : s.rho; };
    auto pairing = [&](const State& s) {
        double sum = 0.0;
        for (int k = 0; k < g.cells(); ++k) {
            Vec2 x = g.center(k);
            sum += field(s)[k] * phi.phi(s.t, x.x, x.y);
        }
        return sum * area;
    };
    double rhs = 0.0;
    for (std::size_t n = 1; n < states.size(); ++n) {
        const State& s = states[n];
        const double dt = s.t - states[n - 1].t;
        const ScalarField& c = field(s);
        const VectorField gc = gradient(c);
        double vol = 0.0;
        for (int k = 0; k < g.cells(); ++k) {
            Vec2 x = g.center(k);
            vol += c[k] * phi.dt(s.t, x.x, x.y) + c[k] * dot(s.u[k], phi.grad(s.t, x.x, x.y)) -
                   p.reg.eps * dot(gc[k], phi.grad(s.t, x.x, x.y));
        }
        double bnd = 0.0;
        for (const auto& bf : g.boundary_faces()) {
            auto fi = static_cast<std::size_t>(bf.index);
            const double ph = phi.phi(s.t, bf.midpoint.x, bf.midpoint.y);
            if (bf.tag == FaceTag::inflow)
                bnd += bf.length * ph * cB[fi] * p.un[fi];
            else if (bf.tag == FaceTag::outflow)
                bnd += bf.length * ph * c[bf.cell] * p.un[fi];
        }
        rhs += dt * (vol * area - bnd);
    }
    return std::abs(pairing(states.back()) - pairing(states.front()) - rhs);
}

} // namespace detail

// |int rho phi(tau) - int rho0 phi(0) - int int [rho phi_t + rho u.grad phi - eps grad rho.grad phi]
//  + boundary fluxes| over consecutive stored states.
inline double weak_residual_continuity(const std::vector<State>& states, const Problem& p, const ScalarTest& phi) {
    return detail::scalar_weak_residual(states, p, phi, false);
}

inline double weak_residual_magnetic(const std::vector<State>& states, const Problem& p, const ScalarTest& phi) {
    return detail::scalar_weak_residual(states, p, phi, true);
}

// Momentum weak residual; phi must vanish on the boundary (checked at the face midpoints and corners).
inline double weak_residual_momentum(const std::vector<State>& states, const Problem& p, const VectorTest& phi) {
    if (states.size() < 2) throw Error("weak residual: need at least two states");
    const Grid& g = *p.grid;
    const double area = g.cell_area();
    for (const State* s : {&states.front(), &states.back()}) {
        double m = 0.0;
        for (const auto& bf : g.boundary_faces()) m = std::max(m, norm(phi.phi(s->t, bf.midpoint.x, bf.midpoint.y)));
        for (Vec2 c : {g.vertex(0, 0), g.vertex(g.nx(), 0), g.vertex(0, g.ny()), g.vertex(g.nx(), g.ny())})
            m = std::max(m, norm(phi.phi(s->t, c.x, c.y)));
        if (m > 1e-12)
            throw Error("weak_residual_momentum: test function does not vanish on the boundary (|phi| = " +
                        std::to_string(m) + ")");
    }
    auto pairing = [&](const State& s) {
        double sum = 0.0;
        for (int k = 0; k < g.cells(); ++k) {
            Vec2 x = g.center(k);
            sum += s.rho[k] * dot(s.u[k], phi.phi(s.t, x.x, x.y));
        }
        return sum * area;
    };
    double rhs = 0.0;
    for (std::size_t n = 1; n < states.size(); ++n) {
        const State& s = states[n];
        const double dt = s.t - states[n - 1].t;
        const auto gu = velocity_gradient(s.u);
        const VectorField grho = gradient(s.rho);
        const ScalarField P = total_pressure(s.rho, s.b, p.phys, p.reg);
        double vol = 0.0;
        for (int k = 0; k < g.cells(); ++k) {
            Vec2 x = g.center(k);
            const Vec2 u = s.u[k];
            const Vec2 ph = phi.phi(s.t, x.x, x.y);
            const Tensor2 G = phi.grad(s.t, x.x, x.y);
            const Tensor2& D = gu[static_cast<std::size_t>(k)];
            const double r = s.rho[k];
            const double conv = r * (u.x * (u.x * G.xx + u.y * G.xy) + u.y * (u.x * G.yx + u.y * G.yy));
            const Vec2 gr = grho[k];
            const Vec2 corr{gr.x * D.xx + gr.y * D.xy, gr.x * D.yx + gr.y * D.yy};
            vol += r * dot(u, phi.dt(s.t, x.x, x.y)) + conv + P[k] * G.trace() -
                   contract(stress(D, p.phys.mu, p.phys.lambda), G) - p.reg.eps * dot(corr, ph);
        }
        rhs += dt * vol * area;
    }
    return std::abs(pairing(states.back()) - pairing(states.front()) - rhs);
}

} // namespace mhd
