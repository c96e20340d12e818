// Time marching by Picard iteration of the transport/momentum map,
// and the parameter continuation driver.
#pragma once

#include "diagnostics.hpp"

namespace mhd {

struct Tolerances {
    double energy = 1e-8;  // relative to the step energy scale
    double dom = 1e-8;
    double mp = 1e-8;
    double mass = 1e-8;
};

struct StepReport {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    int halvings = 0;
    int picard_iters = 0;
    double picard_residual = 0.0;
    LinearStats linear;
    DominationReport domination;
    double mass_defect_rho = 0.0;
    double mass_defect_b = 0.0;
    double mass_scale = 1.0;
    double div_norm = 0.0;  // sup of the face divergence of the transport velocity
    Extrema rho;
    Extrema b;
    bool mp_ok = true;
    double mp_violation = 0.0;
    EnergyReport energy;
};

struct FixedPointResult {
    ScalarField rho;
    ScalarField b;
    VectorField v;
    LinearStats linear;
};

// One evaluation of the map v -> u[rho[v], b[v]] - u_B.
inline FixedPointResult fixed_point_step(const State& s, const VectorField& v_guess, double dt, const Problem& p,
                                         const VectorField* body_force = nullptr) {
    const VectorField uB = VectorField::sample(p.grid, p.u_B);
    VectorField u(p.grid);
    for (int k = 0; k < u.cells(); ++k) u.set(k, v_guess[k] + uB[k]);
    FixedPointResult r;
    TransportOperator op(u, p.un, p.reg.eps, dt, p.reg.linear());
    r.rho = op.solve(s.rho, p.rho_B, &r.linear);
    r.b = op.solve(s.b, p.b_B, &r.linear);
    const double scale = std::max({extrema(s.rho).max, extrema(s.b).max, max_abs(p.rho_B), max_abs(p.b_B)});
    check_positivity(r.rho, "density", scale);
    check_positivity(r.b, "magnetic field", scale);
    // round-off negatives within tolerance are clipped to keep the potentials defined
    for (auto& x : r.rho.values()) x = std::max(x, 0.0);
    for (auto& x : r.b.values()) x = std::max(x, 0.0);
    MomentumStep st{s.rho, r.rho, r.b, s.u, u, p.u_B, p.rho_B, dt, p.phys, p.reg, std::nullopt};
    if (body_force) st.body_force = *body_force;
    VectorField un = solve_momentum(st, &r.linear, p.workspace.get());
    r.v = VectorField(p.grid);
    for (int k = 0; k < un.cells(); ++k) r.v.set(k, un[k] - uB[k]);
    return r;
}

inline VectorField fixed_point_map(const State& s, const VectorField& v_guess, double dt, const Problem& p) {
    return fixed_point_step(s, v_guess, dt, p).v;
}

inline double max_abs(const VectorField& v) { return max_abs(v.values()); }

inline double max_diff(const VectorField& a, const VectorField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

// Picard iteration for one step of size dt; throws StepFailure if it does not converge.
inline std::pair<State, StepReport> picard_step(const State& s, double dt, const Problem& p,
                                                const VectorField* body_force = nullptr) {
    const VectorField uB = VectorField::sample(p.grid, p.u_B);
    VectorField v(p.grid);
    for (int k = 0; k < v.cells(); ++k) v.set(k, s.u[k] - uB[k]);
    StepReport rep;
    rep.dt = dt;
    for (int it = 1; it <= p.reg.picard_max; ++it) {
        FixedPointResult r = fixed_point_step(s, v, dt, p, body_force);
        rep.linear.iterations += r.linear.iterations;
        rep.linear.relative_residual = std::max(rep.linear.relative_residual, r.linear.relative_residual);
        const double diff = max_diff(r.v, v);
        if (!std::isfinite(diff)) throw StepFailure("Picard iteration produced non-finite velocity");
        const double vmax = max_abs(v);
        rep.picard_iters = it;
        rep.picard_residual = diff / (1.0 + vmax);
        if (diff <= p.reg.picard_tol * (1.0 + vmax)) {
            State next{s.t + dt, std::move(r.rho), std::move(r.b), VectorField(p.grid)};
            for (int k = 0; k < v.cells(); ++k) next.u.set(k, r.v[k] + uB[k]);
            return {std::move(next), rep};
        }
        v = std::move(r.v);
    }
    throw StepFailure("Picard iteration did not converge in " + std::to_string(p.reg.picard_max) +
                      " iterations (residual " + std::to_string(rep.picard_residual) + ")");
}

// Fills the per-step invariant checks of a committed step.
inline void check_step(const State& old, const State& now, const Problem& p, StepReport& rep,
                       const VectorField* body_force = nullptr) {
    const double dt = now.t - old.t;
    rep.t = now.t;
    rep.domination = domination_check(now.rho, now.b, p.C_lower, p.C_upper);
    rep.mass_defect_rho = mass_ledger_defect(old.rho, now.rho, p.rho_B, p.un, dt);
    rep.mass_defect_b = mass_ledger_defect(old.b, now.b, p.b_B, p.un, dt);
    rep.mass_scale = std::max({1.0, integrate(old.rho), integrate(old.b)});
    rep.div_norm = max_abs(face_divergence(now.u, interior_faces(*p.grid), p.un).values());
    rep.rho = extrema(now.rho);
    rep.b = extrema(now.b);
    rep.energy = step_energy_budget(old, now, p, body_force);
}

// Advances by dt, halving up to 6 times if the Picard iteration fails. The
// returned state may therefore lie at t + dt / 2^h (reported in halvings).
inline std::pair<State, StepReport> advance_timestep(const State& s, double dt, const Problem& p,
                                                     const VectorField* body_force = nullptr) {
    std::string last;
    for (int h = 0; h <= 6; ++h) {
        const double d = dt / std::ldexp(1.0, h);
        try {
            auto [next, rep] = picard_step(s, d, p, body_force);
            rep.halvings = h;
            check_step(s, next, p, rep, body_force);
            return {std::move(next), rep};
        } catch (const StepFailure& e) {
            last = e.what();
        }
    }
    throw StepFailure("step at t=" + std::to_string(s.t) + " failed after 6 dt halvings: " + last);
}

// ------------------------------------------------------------------ trajectories

struct RunSettings {
    double T = 1.0;
    double dt = 1e-2;
    int out_every = 1;
    Tolerances tol;
    const VectorField* body_force = nullptr;
};

struct FluxTotals {
    double rho_in = 0.0;   // time integral of sum_in |s| u_B.n rho_B (negative: mass entering)
    double rho_out = 0.0;  // time integral of sum_out |s| u_B.n rho
    double b_in = 0.0;
    double b_out = 0.0;
};

struct Trajectory {
    std::vector<State> states;       // stored snapshots, first and last always included
    std::vector<int> state_step;     // step index of each snapshot
    std::vector<StepReport> reports; // one per step
    FluxTotals flux;
    double ledger_rho = 0.0;         // accumulated mass defect
    double ledger_b = 0.0;
    double div_sup = 0.0;
    double mp_m = 0.0, mp_M = 0.0;   // max principle constants of rho
    double mp_mb = 0.0, mp_Mb = 0.0; // and of b
    bool adaptive = false;
};

// Outcome of the invariant checks over the steps of a trajectory.
struct Verdicts {
    bool domination = true;
    bool max_principle = true;
    bool mass = true;
    bool energy = true;
    double worst_domination = 0.0;
    double worst_mp = 0.0;
    double worst_mass = 0.0;
    double worst_energy = -INFINITY;  // max over steps of residual / scale
    int domination_step = -1;
    int mp_step = -1;
    int mass_step = -1;
    int energy_step = -1;

    bool all() const { return domination && max_principle && mass && energy; }
};

inline Verdicts verdicts(const Trajectory& tr, const Tolerances& tol, double dom_scale) {
    Verdicts v;
    for (const auto& r : tr.reports) {
        double dom = r.domination.worst() / std::max(1.0, dom_scale);
        if (dom > v.worst_domination) { v.worst_domination = dom; v.domination_step = r.step; }
        if (r.mp_violation > v.worst_mp) { v.worst_mp = r.mp_violation; v.mp_step = r.step; }
        if (!r.mp_ok) v.max_principle = false;
        double m = std::max(std::abs(r.mass_defect_rho), std::abs(r.mass_defect_b)) / r.mass_scale;
        if (m > v.worst_mass) { v.worst_mass = m; v.mass_step = r.step; }
        double e = r.energy.inequality_residual / r.energy.scale;
        if (e > v.worst_energy) { v.worst_energy = e; v.energy_step = r.step; }
    }
    v.domination = v.worst_domination <= tol.dom;
    v.mass = v.worst_mass <= tol.mass;
    v.energy = tr.reports.empty() || v.worst_energy <= tol.energy;
    return v;
}

inline double boundary_flux(const Grid& g, const std::vector<double>& un, const std::vector<double>& c_B,
                            const ScalarField& c, FaceTag which) {
    double f = 0.0;
    for (const auto& bf : g.boundary_faces()) {
        if (bf.tag != which) continue;
        auto fi = static_cast<std::size_t>(bf.index);
        f += bf.length * un[fi] * (which == FaceTag::inflow ? c_B[fi] : c[bf.cell]);
    }
    return f;
}

// Marches from s0 to T. Every step is checked; snapshots are kept every out_every steps.
inline Trajectory run_simulation(const Problem& p, const State& s0, const RunSettings& rs) {
    p.phys.validate();
    p.reg.validate();
    if (!(rs.T > 0.0) || !(rs.dt > 0.0)) throw Error("run: T and dt must be positive");
    if (rs.out_every < 1) throw Error("run: out_every must be >= 1");
    Trajectory tr;
    tr.states.push_back(s0);
    tr.state_step.push_back(0);
    const double usup = p.u_B_sup();
    std::tie(tr.mp_m, tr.mp_M) = max_principle_constants(s0.rho, p.rho_B, usup);
    std::tie(tr.mp_mb, tr.mp_Mb) = max_principle_constants(s0.b, p.b_B, usup);
    State s = s0;
    int step = 0;
    const double t_end = s0.t + rs.T;
    while (s.t < t_end - 1e-12 * rs.dt) {
        const double dt = std::min(rs.dt, t_end - s.t);
        State next;
        StepReport rep;
        try {
            std::tie(next, rep) = advance_timestep(s, dt, p, rs.body_force);
        } catch (const StepFailure& e) {
            throw StepFailure(std::string(e.what()) + " (t=" + std::to_string(s.t) + ")");
        }
        if (rep.halvings > 0) tr.adaptive = true;
        rep.step = ++step;
        tr.div_sup = std::max(tr.div_sup, rep.div_norm);
        const double grow = std::exp(rs.T * tr.div_sup), tol = rs.tol.mp;
        auto check = [&](const Extrema& e, double m, double M) {
            const double t = tol * std::max(1.0, M);
            double viol = std::max(m / grow - t - e.min, e.max - (M * grow + t));
            if (viol > 0.0) {
                rep.mp_ok = false;
                rep.mp_violation = std::max(rep.mp_violation, viol);
            }
        };
        check(rep.rho, tr.mp_m, tr.mp_M);
        check(rep.b, tr.mp_mb, tr.mp_Mb);
        const Grid& g = *p.grid;
        const double d = next.t - s.t;
        tr.flux.rho_in += d * boundary_flux(g, p.un, p.rho_B, next.rho, FaceTag::inflow);
        tr.flux.rho_out += d * boundary_flux(g, p.un, p.rho_B, next.rho, FaceTag::outflow);
        tr.flux.b_in += d * boundary_flux(g, p.un, p.b_B, next.b, FaceTag::inflow);
        tr.flux.b_out += d * boundary_flux(g, p.un, p.b_B, next.b, FaceTag::outflow);
        tr.ledger_rho += rep.mass_defect_rho;
        tr.ledger_b += rep.mass_defect_b;
        tr.reports.push_back(rep);
        s = std::move(next);
        const bool last = !(s.t < t_end - 1e-12 * rs.dt);
        if (step % rs.out_every == 0 || last) {
            tr.states.push_back(s);
            tr.state_step.push_back(step);
        }
    }
    return tr;
}

// One implicit diffusion sweep (pseudo-time eps_init, no-flux boundary) of a cell field.
inline ScalarField mollify(const ScalarField& c, double eps_init) {
    if (eps_init <= 0.0) return c;
    const Grid& g = c.grid();
    Grid closed(g.nx(), g.ny(), g.lx(), g.ly());
    auto gp = std::make_shared<const Grid>(closed);
    std::vector<double> zero(static_cast<std::size_t>(g.boundary_face_count()), 0.0);
    TransportOperator op(VectorField(gp), zero, 1.0, eps_init);
    ScalarField out = op.solve(ScalarField(gp, c.values()), zero);
    return ScalarField(c.grid_ptr(), out.values());
}

// ------------------------------------------------------------------ continuation

struct ContinuationMember {
    double eps = 0.0;
    double delta = 0.0;
    std::optional<Trajectory> trajectory;
    std::string error;
};

struct ContinuationResult {
    std::vector<ContinuationMember> members;
    std::vector<double> distances;  // L2 distance of final states, consecutive members
    std::vector<double> zeta_gaps;  // zeta_gap of final states, consecutive members
};

// L2 distance over (rho, b, u) of two states on the same grid.
inline double state_distance(const State& a, const State& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.rho.size(); ++k) {
        const int i = static_cast<int>(k);
        Vec2 du = a.u[i] - b.u[i];
        s += (a.rho[i] - b.rho[i]) * (a.rho[i] - b.rho[i]) + (a.b[i] - b.b[i]) * (a.b[i] - b.b[i]) + dot(du, du);
    }
    return std::sqrt(s * a.rho.grid().cell_area());
}

// Runs the path (eps_i, delta_0), i = 0.., then (eps_last, delta_j), j = 1..
// Failures are recorded per member and the family continues.
inline ContinuationResult continuation(const Problem& base, const State& s0, const RunSettings& rs,
                                       const std::vector<double>& eps_list, const std::vector<double>& delta_list) {
    if (eps_list.empty() || delta_list.empty()) throw Error("continuation: parameter lists must be nonempty");
    auto descending = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (!(v[i] < v[i - 1])) return false;
        return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    };
    if (!descending(eps_list) || !descending(delta_list))
        throw Error("continuation: eps and delta lists must be descending and nonnegative");
    std::vector<std::pair<double, double>> path;
    for (double e : eps_list) path.emplace_back(e, delta_list.front());
    for (std::size_t j = 1; j < delta_list.size(); ++j) path.emplace_back(eps_list.back(), delta_list[j]);
    ContinuationResult out;
    for (auto [e, d] : path) {
        Problem p = base;
        p.reg.eps = e;
        p.reg.delta = d;
        ContinuationMember m;
        m.eps = e;
        m.delta = d;
        try {
            m.trajectory = run_simulation(p, s0, rs);
        } catch (const Error& ex) {
            m.error = ex.what();
        }
        out.members.push_back(std::move(m));
    }
    for (std::size_t i = 1; i < out.members.size(); ++i) {
        const auto& a = out.members[i - 1].trajectory;
        const auto& b = out.members[i].trajectory;
        if (!a || !b) {
            out.distances.push_back(NAN);
            out.zeta_gaps.push_back(NAN);
            continue;
        }
        out.distances.push_back(state_distance(b->states.back(), a->states.back()));
        out.zeta_gaps.push_back(zeta_gap(b->states.back(), a->states.back(), base));
    }
    return out;
}

} // namespace mhd
