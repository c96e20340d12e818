// One Picard-linearized backward-Euler step of the regularized momentum
// balance for the deviation v = u - u_B (v = 0 on the boundary).
//
// Cell K, component a (all terms multiplied by |K|):
//
// |K| (rho K u_K - rho_old_K u_old_K) / dt
// + sum_s F_s u_up(s)                          convection, upwinded mass flux
// + sum_s g_s (u_L - u_K) / 2                  eps grad rho . grad u
// + sum_s |s| n_s P_s                          total pressure, P_s = (P_K+P_L)/2, P_K on the boundary
// + d a(u, e_Ka)                               viscous form, see operators.hpp
// = |K| f_K                                    optional body force
//
// F_s is the upwind convective mass flux of the transport step (rho_B on
// inflow faces) and g_s = eps |s| (rho_L - rho_K)/d on interior faces. With
// this pairing, testing the momentum equation with v and the transport
// equations with the renormalizing functions gives a discrete energy
// identity whose remainder is a sum of nonnegative dissipation terms.
#pragma once

#include "transport.hpp"

namespace mhd {

struct PhysParams {
    double gamma = 2.0;
    double mu = 1.0;
    double lambda = 0.0;

    void validate() const {
        if (!(gamma > 1.0)) throw Error("physics: adiabatic exponent gamma must exceed 1");
        if (!(mu > 0.0)) throw Error("physics: shear viscosity mu must be positive");
        if (!(2.0 * mu + lambda > 0.0)) throw Error("physics: 2 mu + lambda must be positive");
    }
};

struct RegParams {
    double eps = 0.0;
    double delta = 0.0;
    double beta = 4.0;
    double picard_tol = 1e-11;
    int picard_max = 60;
    double tol_lin = 1e-12;
    int max_lin = 4;

    void validate() const {
        if (!(eps >= 0.0)) throw Error("regularization: eps must be nonnegative");
        if (!(delta >= 0.0)) throw Error("regularization: delta must be nonnegative");
        if (delta > 0.0 && !(beta > 1.0)) throw Error("regularization: beta must exceed 1 when delta > 0");
        if (!(picard_tol > 0.0) || picard_max < 1) throw Error("regularization: invalid Picard settings");
        if (!(tol_lin > 0.0) || max_lin < 0) throw Error("regularization: invalid linear solver settings");
    }

    LinearSettings linear() const { return {tol_lin, max_lin}; }
};

inline double pressure_value(double rho, double b, const PhysParams& phys, const RegParams& reg) {
    double p = std::pow(rho, phys.gamma) + 0.5 * b * b;
    if (reg.delta > 0.0) p += reg.delta * std::pow(rho + b, reg.beta);
    return p;
}

// rho^gamma + b^2/2 + delta (rho + b)^beta, cellwise.
inline ScalarField total_pressure(const ScalarField& rho, const ScalarField& b, const PhysParams& phys,
                                  const RegParams& reg) {
    ScalarField p(rho.grid_ptr());
    for (int k = 0; k < static_cast<int>(rho.size()); ++k) p[k] = pressure_value(rho[k], b[k], phys, reg);
    return p;
}

// Cellwise S(grad u) from the centred/one-sided cell gradients.
inline std::vector<Tensor2> viscous_stress(const VectorField& u, const PhysParams& phys) {
    auto grad = velocity_gradient(u);
    for (auto& t : grad) t = stress(t, phys.mu, phys.lambda);
    return grad;
}

// ------------------------------------------------------------------ mass fluxes

// Mass fluxes shared by the transport step and the momentum convection.
struct MassFluxes {
    std::vector<double> interior;  // upwind convective flux K -> L
    std::vector<double> boundary;  // outward convective flux per boundary face
    std::vector<double> gradient;  // eps |s| (rho_L - rho_K) / d on interior faces
    std::vector<double> w;         // interior face normal velocity
    std::vector<double> un;        // effective boundary normal velocity
};

inline MassFluxes mass_fluxes(const std::vector<InteriorFace>& faces, const ScalarField& rho, const VectorField& u,
                              const std::vector<double>& boundary_un, const std::vector<double>& rho_B, double eps) {
    const Grid& g = rho.grid();
    MassFluxes m;
    m.w = interior_normal_velocity(faces, u);
    m.un = boundary_flux_velocity(g, boundary_un);
    m.interior.resize(faces.size());
    m.gradient.resize(faces.size());
    for (std::size_t s = 0; s < faces.size(); ++s) {
        const auto& f = faces[s];
        const double up = m.w[s] > 0.0 ? rho[f.left] : rho[f.right];
        m.interior[s] = f.length * m.w[s] * up;
        m.gradient[s] = eps * f.length * (rho[f.right] - rho[f.left]) / f.distance;
    }
    m.boundary.assign(g.boundary_faces().size(), 0.0);
    for (const auto& bf : g.boundary_faces()) {
        auto fi = static_cast<std::size_t>(bf.index);
        if (bf.tag == FaceTag::inflow)
            m.boundary[fi] = bf.length * m.un[fi] * rho_B[fi];
        else if (bf.tag == FaceTag::outflow)
            m.boundary[fi] = bf.length * m.un[fi] * rho[bf.cell];
    }
    return m;
}

// ------------------------------------------------------------------ system

struct MomentumStep {
    ScalarField rho_old;   // density at the previous time level
    ScalarField rho;       // density at the new time level
    ScalarField b;         // magnetic field at the new time level
    VectorField u_old;     // full velocity at the previous time level
    VectorField u_guess;   // Picard iterate driving the mass flux
    BoundaryVelocity u_B;
    std::vector<double> rho_B;  // inflow density per boundary face
    double dt = 0.0;
    PhysParams phys;
    RegParams reg;
    std::optional<VectorField> body_force;
};

struct MomentumSystem {
    SparseMatrix matrix;  // acts on the interleaved deviation (v_x, v_y) per cell
    Eigen::VectorXd rhs;
    VectorField u_B_cells;
};

inline MomentumSystem assemble_momentum(const MomentumStep& st) {
    const Grid& g = st.rho.grid();
    const GridPtr gp = st.rho.grid_ptr();
    if (!(st.dt > 0.0)) throw Error("momentum: dt must be positive");
    if (extrema(st.rho).min < 0.0 || extrema(st.b).min < 0.0)
        throw Error("momentum: density and magnetic field must be nonnegative");
    const int N = g.cells();
    const double area = g.cell_area();
    const auto faces = interior_faces(g);
    const auto un = normal_velocity(g, st.u_B);
    const auto flux = mass_fluxes(faces, st.rho, st.u_guess, un, st.rho_B, st.reg.eps);
    const ViscousStencil visc(g);
    const auto data = visc.nodes().sample(st.u_B);
    const double mu = st.phys.mu, lambda = st.phys.lambda;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(N) * 60);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * N);
    auto add_both = [&](int row, int col, double v) {
        trip.emplace_back(2 * row, 2 * col, v);
        trip.emplace_back(2 * row + 1, 2 * col + 1, v);
    };
    auto add_rhs = [&](int k, Vec2 v) {
        rhs[2 * k] += v.x;
        rhs[2 * k + 1] += v.y;
    };

    // time derivative
    for (int k = 0; k < N; ++k) {
        add_both(k, k, area * st.rho[k] / st.dt);
        add_rhs(k, (area * st.rho_old[k] / st.dt) * st.u_old[k]);
    }
    // convection and eps grad rho . grad u
    for (std::size_t s = 0; s < faces.size(); ++s) {
        const auto& f = faces[s];
        const double F = flux.interior[s];
        // both upwind directions are always present so the sparsity pattern is fixed
        const double Fl = flux.w[s] > 0.0 ? F : 0.0, Fr = flux.w[s] > 0.0 ? 0.0 : F;
        const double h = 0.5 * flux.gradient[s];
        add_both(f.left, f.left, Fl - h);
        add_both(f.right, f.left, -Fl - h);
        add_both(f.left, f.right, Fr + h);
        add_both(f.right, f.right, -Fr + h);
    }
    for (const auto& bf : g.boundary_faces()) {
        auto fi = static_cast<std::size_t>(bf.index);
        if (bf.tag == FaceTag::outflow)
            add_both(bf.cell, bf.cell, flux.boundary[fi]);
        else if (bf.tag == FaceTag::inflow)
            add_rhs(bf.cell, (-flux.boundary[fi]) * st.u_B(bf.midpoint.x, bf.midpoint.y));
    }
    // pressure
    const ScalarField P = total_pressure(st.rho, st.b, st.phys, st.reg);
    for (const auto& f : faces) {
        const Vec2 force = (f.length * 0.5 * (P[f.left] + P[f.right])) * f.normal;
        add_rhs(f.left, -1.0 * force);
        add_rhs(f.right, force);
    }
    for (const auto& bf : g.boundary_faces()) add_rhs(bf.cell, (-bf.length * P[bf.cell]) * bf.normal);
    // viscous form
    for (std::size_t s = 0; s < visc.faces().size(); ++s) {
        const auto& st_face = visc.faces()[s];
        const double wgt = st_face.weight;
        // merge duplicate cell entries of this stencil
        std::vector<GradientTerm> cells;
        Tensor2 gdata;
        for (const auto& t : st_face.terms) {
            if (t.node < 0) {
                Vec2 v = data[static_cast<std::size_t>(data_index(t.node))];
                gdata.xx += t.cx * v.x;
                gdata.xy += t.cy * v.x;
                gdata.yx += t.cx * v.y;
                gdata.yy += t.cy * v.y;
                continue;
            }
            auto it = std::find_if(cells.begin(), cells.end(), [&](const GradientTerm& c) { return c.node == t.node; });
            if (it == cells.end())
                cells.push_back(t);
            else {
                it->cx += t.cx;
                it->cy += t.cy;
            }
        }
        const Tensor2 sdata = stress(gdata, mu, lambda);
        for (const auto& test : cells) {
            const double h[2] = {test.cx, test.cy};
            rhs[2 * test.node] -= wgt * (sdata.xx * h[0] + sdata.xy * h[1]);
            rhs[2 * test.node + 1] -= wgt * (sdata.yx * h[0] + sdata.yy * h[1]);
            for (const auto& trial : cells) {
                const double gg[2] = {trial.cx, trial.cy};
                const double same = gg[0] * h[0] + gg[1] * h[1];
                for (int a = 0; a < 2; ++a)
                    for (int c = 0; c < 2; ++c) {
                        double v = mu * ((a == c ? same : 0.0) + gg[a] * h[c]) + lambda * gg[c] * h[a];
                        if (v != 0.0) trip.emplace_back(2 * test.node + a, 2 * trial.node + c, wgt * v);
                    }
            }
        }
    }
    if (st.body_force)
        for (int k = 0; k < N; ++k) add_rhs(k, area * (*st.body_force)[k]);

    MomentumSystem sys;
    sys.matrix.resize(2 * N, 2 * N);
    sys.matrix.setFromTriplets(trip.begin(), trip.end());
    sys.u_B_cells = VectorField::sample(gp, st.u_B);
    Eigen::Map<const Eigen::VectorXd> ub(sys.u_B_cells.values().data(), 2 * N);
    sys.rhs = rhs - sys.matrix * ub;
    return sys;
}

// Solves the momentum step and returns the new full velocity u = v + u_B.
// A solver passed in `workspace` keeps its ordering across calls.
inline VectorField solve_momentum(const MomentumStep& st, LinearStats* stats = nullptr,
                                  LinearSolver* workspace = nullptr) {
    st.phys.validate();
    st.reg.validate();
    MomentumSystem sys = assemble_momentum(st);
    Eigen::VectorXd v;
    try {
        LinearSolver local;
        LinearSolver& solver = workspace ? *workspace : local;
        solver.set_settings(st.reg.linear());
        solver.factorize(sys.matrix);
        v = solver.solve(sys.rhs, stats);
    } catch (const LinearSolveFailure& e) {
        auto rho = extrema(st.rho);
        throw StepFailure(std::string("momentum: ") + e.what() + "; min rho " + std::to_string(rho.min) + ", dt " +
                          std::to_string(st.dt));
    }
    VectorField u(st.rho.grid_ptr());
    for (int k = 0; k < u.cells(); ++k) u.set(k, Vec2{v[2 * k], v[2 * k + 1]} + sys.u_B_cells[k]);
    return u;
}

} // namespace mhd
