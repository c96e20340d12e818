// Implicit upwind finite-volume step for  c_t + div(c u) = eps Lap c
// with the Robin inflow closure, plus the bound/renormalization checks.
//
// Boundary closure (total outward flux through a boundary face s):
// inflow           |s| (u_B.n) c_B
// outflow          |s| (u_B.n) c_K     (no diffusive flux)
// characteristic   0
// Interior convective fluxes are upwinded on the averaged face velocity and
// the diffusive flux is the two-point difference. Backward Euler in time.
// The resulting matrix is a column-diagonally-dominant Z-matrix, so the step
// is positivity preserving for any dt.
#pragma once

#include "linear_solver.hpp"
#include "operators.hpp"

#include <optional>
#include <tuple>

namespace mhd {

class StepFailure : public Error {
public:
    using Error::Error;
};

// u_B.n per boundary face with characteristic faces forced to exactly zero.
inline std::vector<double> boundary_flux_velocity(const Grid& g, const std::vector<double>& un) {
    std::vector<double> out(un);
    for (const auto& bf : g.boundary_faces())
        if (bf.tag == FaceTag::characteristic) out[static_cast<std::size_t>(bf.index)] = 0.0;
    return out;
}

struct TransportProblem {
    ScalarField c_old;
    VectorField u;                   // cell velocity driving the transport
    std::vector<double> boundary_un; // u_B.n per boundary face
    std::vector<double> c_B;         // boundary data per face; read on inflow faces only
    double eps = 0.0;
    double dt = 0.0;
};

// The implicit transport operator for one velocity field; factorized once and
// reused for every transported scalar (density, magnetic field, their combinations).
class TransportOperator {
public:
    TransportOperator(const VectorField& u, const std::vector<double>& boundary_un, double eps, double dt,
                      LinearSettings settings = {})
        : grid_(u.grid_ptr()), un_(boundary_flux_velocity(u.grid(), boundary_un)), dt_(dt) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("transport: dt must be positive");
        if (!(eps >= 0.0)) throw Error("transport: eps must be nonnegative");
        if (!u.finite()) throw StepFailure("transport: velocity field contains non-finite values");
        if (un_.size() != grid_->boundary_faces().size())
            throw Error("transport: boundary normal velocity size mismatch");
        const Grid& g = *grid_;
        const auto faces = interior_faces(g);
        const auto w = interior_normal_velocity(faces, u);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(g.cells()) * 5 + faces.size() * 4);
        const double mass = g.cell_area() / dt;
        for (int k = 0; k < g.cells(); ++k) trip.emplace_back(k, k, mass);
        for (std::size_t s = 0; s < faces.size(); ++s) {
            const auto& f = faces[s];
            const double a = f.length * w[s];
            if (a > 0.0) {
                trip.emplace_back(f.left, f.left, a);
                trip.emplace_back(f.right, f.left, -a);
            } else {
                trip.emplace_back(f.left, f.right, a);
                trip.emplace_back(f.right, f.right, -a);
            }
            const double e = eps * f.length / f.distance;
            if (e > 0.0) {
                trip.emplace_back(f.left, f.left, e);
                trip.emplace_back(f.right, f.right, e);
                trip.emplace_back(f.left, f.right, -e);
                trip.emplace_back(f.right, f.left, -e);
            }
        }
        for (const auto& bf : g.boundary_faces())
            if (bf.tag == FaceTag::outflow)
                trip.emplace_back(bf.cell, bf.cell, bf.length * un_[static_cast<std::size_t>(bf.index)]);
        matrix_.resize(g.cells(), g.cells());
        matrix_.setFromTriplets(trip.begin(), trip.end());
        solver_.emplace(matrix_, settings);
    }

    ScalarField solve(const ScalarField& c_old, const std::vector<double>& c_B, LinearStats* stats = nullptr) const {
        const Grid& g = *grid_;
        if (c_B.size() != g.boundary_faces().size()) throw Error("transport: boundary data size mismatch");
        Eigen::VectorXd rhs(g.cells());
        const double mass = g.cell_area() / dt_;
        for (int k = 0; k < g.cells(); ++k) rhs[k] = mass * c_old[k];
        for (const auto& bf : g.boundary_faces())
            if (bf.tag == FaceTag::inflow) {
                auto f = static_cast<std::size_t>(bf.index);
                rhs[bf.cell] -= bf.length * un_[f] * c_B[f];
            }
        Eigen::VectorXd x = solver_->solve(rhs, stats);
        return ScalarField(grid_, std::vector<double>(x.data(), x.data() + x.size()));
    }

    const SparseMatrix& matrix() const { return matrix_; }

private:
    GridPtr grid_;
    std::vector<double> un_;
    double dt_;
    SparseMatrix matrix_;
    std::optional<LinearSolver> solver_;
};

// Throws StepFailure if any value lies below -tol_neg * scale.
inline void check_positivity(const ScalarField& c, const char* what, double scale, double tol_neg = 1e-12) {
    auto e = extrema(c);
    if (e.min < -tol_neg * std::max(scale, 1.0))
        throw StepFailure(std::string("transport: negative ") + what + " " + std::to_string(e.min) + " in cell " +
                          std::to_string(e.argmin));
}

inline ScalarField advance_scalar(const TransportProblem& p, LinearSettings settings = {},
                                  LinearStats* stats = nullptr) {
    if (extrema(p.c_old).min < 0.0) throw Error("transport: c_old must be nonnegative");
    TransportOperator op(p.u, p.boundary_un, p.eps, p.dt, settings);
    ScalarField c = op.solve(p.c_old, p.c_B, stats);
    double scale = std::max(extrema(p.c_old).max, max_abs(p.c_B));
    check_positivity(c, "value", scale);
    return c;
}

// ---------------------------------------------------------------- trajectories

// Stored history of one transported scalar: c[0] is the initial field, c[n]
// the result of step n computed with velocity u[n-1] and step dt[n-1].
struct ScalarTrajectory {
    std::vector<ScalarField> c;
    std::vector<VectorField> u;
    std::vector<double> dt;
    std::vector<double> boundary_un;
    std::vector<double> c_B;
    double eps = 0.0;

    std::size_t steps() const { return u.size(); }
};

// ---------------------------------------------------------------- max principle

struct MaxPrincipleReport {
    double m = 0.0;
    double M = 0.0;
    double div_norm = 0.0;
    bool lower_ok = true;
    bool upper_ok = true;
    double worst_violation = 0.0;
    int worst_step = -1;
    int worst_cell = -1;
};

// m = min{min c0, min c_B on inflow}, M = max{max c0, max c_B on inflow, |u_B|_inf}.
inline std::pair<double, double> max_principle_constants(const ScalarField& c0, const std::vector<double>& c_B,
                                                         double u_B_sup) {
    auto e = extrema(c0);
    double m = e.min, M = std::max(e.max, u_B_sup);
    for (const auto& bf : c0.grid().boundary_faces())
        if (bf.tag == FaceTag::inflow) {
            double v = c_B[static_cast<std::size_t>(bf.index)];
            m = std::min(m, v);
            M = std::max(M, v);
        }
    return {m, M};
}

// Checks m exp(-T D) - tol <= c <= M exp(T D) + tol at every stored step, D the
// running sup of the face divergence of the transport velocity over the elapsed window.
inline MaxPrincipleReport check_max_principle(const ScalarTrajectory& tr, double u_B_sup, double horizon,
                                              double tol_mp = 1e-8) {
    if (tr.c.empty()) throw Error("check_max_principle: empty trajectory");
    MaxPrincipleReport r;
    std::tie(r.m, r.M) = max_principle_constants(tr.c.front(), tr.c_B, u_B_sup);
    const double tol = tol_mp * std::max(1.0, r.M);
    const auto faces = interior_faces(tr.c.front().grid());
    const auto un = boundary_flux_velocity(tr.c.front().grid(), tr.boundary_un);
    double D = 0.0;
    for (std::size_t n = 0; n < tr.c.size(); ++n) {
        if (n > 0) D = std::max(D, max_abs(face_divergence(tr.u[n - 1], faces, un).values()));
        auto e = extrema(tr.c[n]);
        double lo = r.m * std::exp(-horizon * D) - tol;
        double hi = r.M * std::exp(horizon * D) + tol;
        if (e.min < lo) {
            r.lower_ok = false;
            if (lo - e.min > r.worst_violation) {
                r.worst_violation = lo - e.min;
                r.worst_step = static_cast<int>(n);
                r.worst_cell = e.argmin;
            }
        }
        if (e.max > hi) {
            r.upper_ok = false;
            if (e.max - hi > r.worst_violation) {
                r.worst_violation = e.max - hi;
                r.worst_step = static_cast<int>(n);
                r.worst_cell = e.argmax;
            }
        }
    }
    r.div_norm = D;
    return r;
}

// ---------------------------------------------------------------- renormalization

struct Renormalizer {
    std::function<double(double)> phi;
    std::function<double(double)> dphi;
    std::function<double(double)> d2phi;
};

// |LHS - RHS| of the renormalized identity
//   eps int int Phi''(c)|grad c|^2 + int int div(c u) Phi'(c) + [int Phi(c)]_0^tau
//     = int int_{boundary} Phi'(c)(c - c_B)[u_B.n]^- ,
// over the first `steps` steps (all if negative). Time integrals use the
// implicit (new-level) rule; |grad c|^2 is a face quadrature, div(c u) uses
// central face values in the interior and the cell trace on the boundary.
inline double renormalized_residual(const ScalarTrajectory& tr, const Renormalizer& phi, int steps = -1) {
    if (tr.c.empty()) throw Error("renormalized_residual: empty trajectory");
    const Grid& g = tr.c.front().grid();
    const auto faces = interior_faces(g);
    const auto un = boundary_flux_velocity(g, tr.boundary_un);
    std::size_t N = steps < 0 ? tr.steps() : std::min<std::size_t>(static_cast<std::size_t>(steps), tr.steps());
    double diffusion = 0.0, convection = 0.0, boundary = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const ScalarField& c = tr.c[n + 1];
        const double dt = tr.dt[n];
        const auto w = interior_normal_velocity(faces, tr.u[n]);
        for (std::size_t s = 0; s < faces.size(); ++s) {
            const auto& f = faces[s];
            const double cK = c[f.left], cL = c[f.right];
            const double grad = (cL - cK) / f.distance;
            diffusion += dt * tr.eps * f.length * f.distance * phi.d2phi(0.5 * (cK + cL)) * grad * grad;
            const double flux = f.length * w[s] * 0.5 * (cK + cL);
            convection += dt * flux * (phi.dphi(cK) - phi.dphi(cL));
        }
        for (const auto& bf : g.boundary_faces()) {
            auto fi = static_cast<std::size_t>(bf.index);
            const double cK = c[bf.cell];
            convection += dt * bf.length * un[fi] * cK * phi.dphi(cK);
            const double neg = std::min(un[fi], 0.0);
            boundary += dt * bf.length * phi.dphi(cK) * (cK - tr.c_B[fi]) * neg;
        }
    }
    auto total = [&](const ScalarField& c) {
        double s = 0.0;
        for (double v : c.values()) s += phi.phi(v);
        return s * g.cell_area();
    };
    const double time = total(tr.c[N]) - total(tr.c.front());
    return std::abs(diffusion + convection + time - boundary);
}

// ---------------------------------------------------------------- domination

struct DominationReport {
    double lower_violation = 0.0;  // max over cells of C_lower rho - b (0 when satisfied)
    double upper_violation = 0.0;  // max over cells of b - C_upper rho
    int lower_cell = -1;
    int upper_cell = -1;
    double boundary_lower_violation = 0.0;  // same on outflow traces
    double boundary_upper_violation = 0.0;
    int boundary_lower_face = -1;
    int boundary_upper_face = -1;

    double worst() const {
        return std::max({lower_violation, upper_violation, boundary_lower_violation, boundary_upper_violation});
    }
    bool ok(double tol) const { return worst() <= tol; }
};

inline DominationReport domination_check(const ScalarField& rho, const ScalarField& b, double C_lower,
                                         double C_upper) {
    if (rho.size() != b.size())
        throw Error("domination_check: fields live on different grids");
    DominationReport r;
    for (int k = 0; k < static_cast<int>(rho.size()); ++k) {
        double lo = C_lower * rho[k] - b[k];
        double hi = b[k] - C_upper * rho[k];
        if (lo > r.lower_violation) { r.lower_violation = lo; r.lower_cell = k; }
        if (hi > r.upper_violation) { r.upper_violation = hi; r.upper_cell = k; }
    }
    auto tr_rho = boundary_trace(rho, TraceMode::cell);
    auto tr_b = boundary_trace(b, TraceMode::cell);
    for (const auto& bf : rho.grid().boundary_faces()) {
        if (bf.tag != FaceTag::outflow) continue;
        auto f = static_cast<std::size_t>(bf.index);
        double lo = C_lower * tr_rho[f] - tr_b[f];
        double hi = tr_b[f] - C_upper * tr_rho[f];
        if (lo > r.boundary_lower_violation) { r.boundary_lower_violation = lo; r.boundary_lower_face = bf.index; }
        if (hi > r.boundary_upper_violation) { r.boundary_upper_violation = hi; r.boundary_upper_face = bf.index; }
    }
    return r;
}

} // namespace mhd
