// Energy, the per-step discrete energy balance, mass ledgers, the zeta
// field and relative energy.
//
// Energy density: rho|u-u_B|^2/2 + H(rho) + b^2/2 + Phi(rho+b) with
// H(r) = r^gamma/(gamma-1) and Phi(s) = delta s^beta/(beta-1).
//
// Step balance, all integrals discrete and evaluated at the new level:
//
// E(n+1) - E(n) + dt [ a(u,u) + D_eps + G_in + O_out ]
// <=  dt a(u,u_B) - dt sum_in |s| u_B.n [H(rho_B) + b_B^2/2 + Phi(rho_B+b_B)]
// - dt sum_K |K| P_K (div_h u_B)_K - W_B + dt sum_K |K| f.v
//
// D_eps: eps-diffusion dissipation of the three potentials, G_in: inflow
// convexity gaps, O_out: outflow potential flux, W_B: work of the transport
// and eps terms on u_B. The slack ("numerical") is the upwind and implicit
// time dissipation; it is computed separately so the identity can be checked
// as an equality too.
#pragma once

#include "problem.hpp"

#include <numeric>

namespace mhd {

inline double pressure_potential(double r, double gamma) { return std::pow(r, gamma) / (gamma - 1.0); }

inline double pressure_potential_slope(double r, double gamma) {
    return gamma * std::pow(r, gamma - 1.0) / (gamma - 1.0);
}

// (a^g - r^g - g r^(g-1)(a - r))/(g - 1) >= 0 for a, r >= 0.
inline double convexity_gap(double a, double r, double gamma) {
    if (a < 0.0 || r < 0.0) throw Error("convexity_gap: arguments must be nonnegative");
    double v = (std::pow(a, gamma) - std::pow(r, gamma) - gamma * std::pow(r, gamma - 1.0) * (a - r)) / (gamma - 1.0);
    return std::max(v, 0.0);
}

// Quadratic analogue used for the magnetic field: (a - r)^2 / 2.
inline double convexity_gap_quadratic(double a, double r) { return 0.5 * (a - r) * (a - r); }

// The three convex potentials the energy is built from.
struct Potentials {
    double gamma, delta, beta;

    double H(double r) const { return pressure_potential(r, gamma); }
    double dH(double r) const { return pressure_potential_slope(r, gamma); }
    double gap_H(double a, double r) const { return convexity_gap(a, r, gamma); }
    double M(double b) const { return 0.5 * b * b; }
    double Phi(double s) const { return delta > 0.0 ? delta * std::pow(s, beta) / (beta - 1.0) : 0.0; }
    double dPhi(double s) const { return delta > 0.0 ? delta * beta * std::pow(s, beta - 1.0) / (beta - 1.0) : 0.0; }
    double gap_Phi(double a, double r) const { return delta > 0.0 ? delta * convexity_gap(a, r, beta) : 0.0; }
    // Potential density of (rho, b).
    double density(double r, double b) const { return H(r) + M(b) + Phi(r + b); }
    // Sum of the three Bregman gaps between (r1, b1) and the reference (r0, b0).
    double gap(double r1, double b1, double r0, double b0) const {
        return gap_H(r1, r0) + convexity_gap_quadratic(b1, b0) + gap_Phi(r1 + b1, r0 + b0);
    }
};

inline Potentials potentials(const PhysParams& phys, const RegParams& reg) { return {phys.gamma, reg.delta, reg.beta}; }

struct EnergyReport {
    double kinetic = 0.0;             // int rho |u - u_B|^2 / 2
    double pressure_potential = 0.0;  // int H(rho)
    double magnetic = 0.0;            // int b^2 / 2
    double artificial = 0.0;          // int delta (rho+b)^beta / (beta-1)
    double dissipation = 0.0;         // dt a(u, u) summed over the reported steps
    double eps_dissipation = 0.0;
    double boundary_in = 0.0;         // inflow convexity gaps
    double boundary_out = 0.0;        // outflow potential flux
    double forcing = 0.0;             // right-hand side of the balance
    double numerical = 0.0;           // upwind and implicit time dissipation
    double inequality_residual = 0.0; // LHS - RHS
    double scale = 1.0;

    double total() const { return kinetic + pressure_potential + magnetic + artificial; }
};

// Instantaneous energy; the kinetic part uses u - u_B at cell centres.
inline EnergyReport energy(const State& s, const Problem& p) {
    const Grid& g = s.rho.grid();
    const double area = g.cell_area();
    const Potentials pot = potentials(p.phys, p.reg);
    EnergyReport e;
    for (int k = 0; k < g.cells(); ++k) {
        Vec2 c = g.center(k);
        Vec2 v = s.u[k] - p.u_B(c.x, c.y);
        e.kinetic += 0.5 * s.rho[k] * dot(v, v);
        e.pressure_potential += pot.H(s.rho[k]);
        e.magnetic += pot.M(s.b[k]);
        e.artificial += pot.Phi(s.rho[k] + s.b[k]);
    }
    e.kinetic *= area;
    e.pressure_potential *= area;
    e.magnetic *= area;
    e.artificial *= area;
    return e;
}

// Energy balance of one step from `old` to `now` (transport velocity taken as now.u).
inline EnergyReport step_energy_budget(const State& old, const State& now, const Problem& p,
                                       const VectorField* body_force = nullptr) {
    const Grid& g = *p.grid;
    const double dt = now.t - old.t;
    if (!(dt > 0.0)) throw Error("energy budget: states must have increasing times");
    const double area = g.cell_area();
    const double eps = p.reg.eps;
    const Potentials pot = potentials(p.phys, p.reg);
    const auto faces = interior_faces(g);
    const auto& un = p.un;
    const VectorField uB = VectorField::sample(p.grid, p.u_B);

    VectorField v_old(p.grid), v(p.grid);
    for (int k = 0; k < g.cells(); ++k) {
        v_old.set(k, old.u[k] - uB[k]);
        v.set(k, now.u[k] - uB[k]);
    }
    const EnergyReport e0 = energy(old, p);
    EnergyReport r = energy(now, p);

    const ViscousStencil visc(g);
    const auto data = visc.nodes().sample(p.u_B);
    r.dissipation = dt * visc.form(now.u, data, now.u, data, p.phys.mu, p.phys.lambda);
    const double visc_work = dt * visc.form(now.u, data, uB, data, p.phys.mu, p.phys.lambda);

    const auto& rho = now.rho;
    const auto& b = now.b;
    const auto flux = mass_fluxes(faces, rho, now.u, un, p.rho_B, eps);

    double numerical = 0.0, forcing_transport = 0.0;
    // time level
    for (int k = 0; k < g.cells(); ++k) {
        Vec2 dv = v[k] - v_old[k];
        numerical += area * (pot.gap(old.rho[k], old.b[k], rho[k], b[k]) + 0.5 * old.rho[k] * dot(dv, dv));
        forcing_transport += area * (rho[k] - old.rho[k]) * dot(uB[k], v[k]);
    }
    // interior faces
    for (std::size_t s = 0; s < faces.size(); ++s) {
        const auto& f = faces[s];
        const int K = f.left, L = f.right;
        const double coef = eps * f.length / f.distance;
        const double sK = rho[K] + b[K], sL = rho[L] + b[L];
        r.eps_dissipation += dt * coef *
                             ((rho[L] - rho[K]) * (pot.dH(rho[L]) - pot.dH(rho[K])) + (b[L] - b[K]) * (b[L] - b[K]) +
                              (sL - sK) * (pot.dPhi(sL) - pot.dPhi(sK)));
        const double aw = f.length * std::abs(flux.w[s]);
        const int up = flux.w[s] > 0.0 ? K : L, down = flux.w[s] > 0.0 ? L : K;
        numerical += dt * aw * pot.gap(rho[up], b[up], rho[down], b[down]);
        Vec2 dv = v[K] - v[L];
        numerical += dt * 0.5 * std::abs(flux.interior[s]) * dot(dv, dv);
        const Vec2 uB_up = uB[up];
        const double F = flux.interior[s];
        forcing_transport += dt * F * (dot(uB_up, v[K]) - dot(uB_up, v[L]));
        const double h = 0.5 * flux.gradient[s];
        const Vec2 duB = uB[L] - uB[K];
        forcing_transport += dt * h * (dot(duB, v[K]) + dot(duB, v[L]));
    }
    // boundary faces
    double inflow_supply = 0.0;
    for (const auto& bf : g.boundary_faces()) {
        auto fi = static_cast<std::size_t>(bf.index);
        const int K = bf.cell;
        const double w = un[fi];
        const double F = flux.boundary[fi];
        if (bf.tag == FaceTag::inflow) {
            r.boundary_in += dt * bf.length * std::abs(w) * pot.gap(p.rho_B[fi], p.b_B[fi], rho[K], b[K]);
            inflow_supply += dt * bf.length * w * pot.density(p.rho_B[fi], p.b_B[fi]);
            numerical += dt * 0.5 * std::abs(F) * dot(v[K], v[K]);
            forcing_transport += dt * F * dot(p.u_B(bf.midpoint.x, bf.midpoint.y), v[K]);
        } else if (bf.tag == FaceTag::outflow) {
            r.boundary_out += dt * bf.length * w * pot.density(rho[K], b[K]);
            numerical += dt * 0.5 * F * dot(v[K], v[K]);
            forcing_transport += dt * F * dot(uB[K], v[K]);
        }
    }
    // pressure work on u_B
    const ScalarField P = total_pressure(rho, b, p.phys, p.reg);
    const ScalarField divB = face_divergence(uB, faces, un);
    double pressure_work = 0.0;
    for (int k = 0; k < g.cells(); ++k) pressure_work += area * P[k] * divB[k];
    pressure_work *= dt;
    double body = 0.0;
    if (body_force)
        for (int k = 0; k < g.cells(); ++k) body += dt * area * dot((*body_force)[k], v[k]);

    const double lhs = r.total() - e0.total() + r.dissipation + r.eps_dissipation + r.boundary_in + r.boundary_out;
    r.forcing = visc_work - inflow_supply - pressure_work - forcing_transport + body;
    r.numerical = numerical;
    r.inequality_residual = lhs - r.forcing;
    r.scale = std::max({1.0, e0.total(), r.total(), r.dissipation, std::abs(visc_work), std::abs(inflow_supply),
                        std::abs(pressure_work), std::abs(forcing_transport)});
    return r;
}

// ------------------------------------------------------------------ mass ledgers

// int c(new) - int c(old) + dt (sum_in |s| u_B.n c_B + sum_out |s| u_B.n c_K).
inline double mass_ledger_defect(const ScalarField& c_old, const ScalarField& c_new, const std::vector<double>& c_B,
                                 const std::vector<double>& un, double dt) {
    const Grid& g = c_new.grid();
    double flux = 0.0;
    for (const auto& bf : g.boundary_faces()) {
        auto fi = static_cast<std::size_t>(bf.index);
        if (bf.tag == FaceTag::inflow)
            flux += bf.length * un[fi] * c_B[fi];
        else if (bf.tag == FaceTag::outflow)
            flux += bf.length * un[fi] * c_new[bf.cell];
    }
    return integrate(c_new) - integrate(c_old) + dt * flux;
}

// ------------------------------------------------------------------ zeta

struct ZetaField {
    ScalarField values;
    std::vector<double> boundary;  // cell trace per boundary face
};

// zeta = b / rho, (C_lower + C_upper)/2 where rho = 0.
inline ZetaField zeta(const State& s, double C_lower, double C_upper) {
    ZetaField z{ScalarField(s.rho.grid_ptr()), {}};
    const double vac = 0.5 * (C_lower + C_upper);
    for (int k = 0; k < static_cast<int>(s.rho.size()); ++k) z.values[k] = s.rho[k] > 0.0 ? s.b[k] / s.rho[k] : vac;
    z.boundary = boundary_trace(z.values, TraceMode::cell);
    return z;
}

// int rho |zeta - zeta_ref|^2 + sum_out |s| u_B.n rho |zeta - zeta_ref|^2 (rho of the first state).
inline double zeta_gap(const State& s, const State& ref, const Problem& p) {
    if (s.rho.size() != ref.rho.size()) throw Error("zeta_gap: states live on different grids");
    const auto z = zeta(s, p.C_lower, p.C_upper);
    const auto zr = zeta(ref, p.C_lower, p.C_upper);
    double sum = 0.0;
    for (int k = 0; k < static_cast<int>(s.rho.size()); ++k) {
        double d = z.values[k] - zr.values[k];
        sum += s.rho[k] * d * d;
    }
    sum *= s.rho.grid().cell_area();
    for (const auto& bf : s.rho.grid().boundary_faces()) {
        if (bf.tag != FaceTag::outflow) continue;
        auto fi = static_cast<std::size_t>(bf.index);
        double d = z.boundary[fi] - zr.boundary[fi];
        sum += bf.length * p.un[fi] * s.rho[bf.cell] * d * d;
    }
    return sum;
}

// ------------------------------------------------------------------ relative energy

struct RelativeEnergyReport {
    double value = 0.0;
    double kinetic_gap = 0.0;
    double bregman_gap = 0.0;
    double magnetic_gap = 0.0;
};

inline RelativeEnergyReport relative_energy(const State& s, const State& ref, double gamma) {
    if (s.rho.size() != ref.rho.size()) throw Error("relative_energy: states live on different grids");
    RelativeEnergyReport r;
    for (int k = 0; k < static_cast<int>(s.rho.size()); ++k) {
        Vec2 d = s.u[k] - ref.u[k];
        r.kinetic_gap += 0.5 * s.rho[k] * dot(d, d);
        r.bregman_gap += convexity_gap(s.rho[k], ref.rho[k], gamma);
        r.magnetic_gap += convexity_gap_quadratic(s.b[k], ref.b[k]);
    }
    const double area = s.rho.grid().cell_area();
    r.kinetic_gap *= area;
    r.bregman_gap *= area;
    r.magnetic_gap *= area;
    r.value = r.kinetic_gap + r.bregman_gap + r.magnetic_gap;
    return r;
}

struct GronwallFit {
    double C = 0.0;
    double slack = 0.0;
    bool pass = true;
    int worst_sample = -1;
    double worst_ratio = 0.0;  // max_i E_i / ((E_0 + slack) exp(C t_i))
};

// Least-squares slope of log(E + floor) against t; the verdict checks
// E_i <= (E_0 + slack) exp(C t_i) with C clipped below at 0.
inline GronwallFit gronwall_fit(const std::vector<double>& t, const std::vector<double>& E, double slack,
                                double floor = 1e-300) {
    if (t.size() != E.size() || t.size() < 3) throw Error("gronwall_fit: need at least 3 samples");
    for (double e : E)
        if (!(e >= 0.0) || !std::isfinite(e)) throw Error("gronwall_fit: series must be nonnegative and finite");
    GronwallFit fit;
    fit.slack = slack;
    if (std::all_of(E.begin(), E.end(), [](double e) { return e == 0.0; })) return fit;
    const double n = static_cast<double>(t.size());
    const double tm = std::accumulate(t.begin(), t.end(), 0.0) / n;
    double ym = 0.0;
    for (double e : E) ym += std::log(e + floor);
    ym /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        sxy += (t[i] - tm) * (std::log(E[i] + floor) - ym);
        sxx += (t[i] - tm) * (t[i] - tm);
    }
    fit.C = sxx > 0.0 ? sxy / sxx : 0.0;
    const double c = std::max(fit.C, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double bound = (E.front() + slack) * std::exp(c * (t[i] - t.front()));
        const double ratio = bound > 0.0 ? E[i] / bound : (E[i] > 0.0 ? INFINITY : 0.0);
        if (ratio > fit.worst_ratio) {
            fit.worst_ratio = ratio;
            fit.worst_sample = static_cast<int>(i);
        }
    }
    fit.pass = fit.worst_ratio <= 1.0 + 1e-9;
    return fit;
}

} // namespace mhd
