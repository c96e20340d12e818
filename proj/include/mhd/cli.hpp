// The run / verify / compare / sweep commands behind the mhd2d tool.
//
// Run directory:
// config.ini           copy of the configuration
// state_NNNNNN.tsv     snapshots (NNNNNN = step index), plus .vtk if requested
// steps.tsv            per-step diagnostics
// report.txt           key = value summary and verdicts
//
// Exit codes: 0 pass, 1 verdict failure, 2 usage or configuration error,
// 3 solver failure.
#pragma once

#include "io.hpp"

#include <iostream>
#include <regex>

namespace mhd {

enum ExitCode { exit_pass = 0, exit_verdict = 1, exit_usage = 2, exit_solver = 3 };

namespace fs = std::filesystem;

inline std::string state_file_name(int step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "state_%06d", step);
    return buf;
}

inline void write_steps(const Trajectory& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "step\tt\tdt\thalvings\tpicard_iters\tpicard_residual\tlinear_iters\tmass_defect_rho\tmass_defect_b"
           "\tenergy_residual\tenergy_scale\tnumerical_dissipation\tdomination_violation\tmp_violation\tdiv_norm"
           "\trho_min\trho_max\tb_min\tb_max\n";
    for (const auto& r : tr.reports) {
        out << r.step << '\t' << fmt17(r.t) << '\t' << fmt17(r.dt) << '\t' << r.halvings << '\t' << r.picard_iters
            << '\t' << fmt17(r.picard_residual) << '\t' << r.linear.iterations << '\t' << fmt17(r.mass_defect_rho)
            << '\t' << fmt17(r.mass_defect_b) << '\t' << fmt17(r.energy.inequality_residual) << '\t'
            << fmt17(r.energy.scale) << '\t' << fmt17(r.energy.numerical) << '\t' << fmt17(r.domination.worst())
            << '\t' << fmt17(r.mp_violation) << '\t' << fmt17(r.div_norm) << '\t' << fmt17(r.rho.min) << '\t'
            << fmt17(r.rho.max) << '\t' << fmt17(r.b.min) << '\t' << fmt17(r.b.max) << '\n';
    }
}

inline void add_verdicts(Report& rep, const Verdicts& v) {
    rep.add("verdict.domination", v.domination);
    rep.add("verdict.max_principle", v.max_principle);
    rep.add("verdict.mass_ledger", v.mass);
    rep.add("verdict.energy_inequality", v.energy);
    rep.add("worst.domination", v.worst_domination);
    rep.add("worst.domination_step", v.domination_step);
    rep.add("worst.max_principle", v.worst_mp);
    rep.add("worst.max_principle_step", v.mp_step);
    rep.add("worst.mass_ledger", v.worst_mass);
    rep.add("worst.mass_ledger_step", v.mass_step);
    rep.add("worst.energy_residual", v.worst_energy);
    rep.add("worst.energy_residual_step", v.energy_step);
}

inline Report trajectory_report(const Setup& s, const Trajectory& tr, const Verdicts& v) {
    Report rep;
    const Grid& g = *s.problem.grid;
    rep.add("grid.nx", g.nx());
    rep.add("grid.ny", g.ny());
    rep.add("steps", tr.reports.size());
    rep.add("t_final", tr.states.back().t);
    rep.add("adaptive", tr.adaptive ? std::string("yes") : std::string("no"));
    const EnergyReport e0 = energy(tr.states.front(), s.problem);
    const EnergyReport eb = energy_budget(tr, s.problem);
    rep.add("energy.initial", e0.total());
    rep.add("energy.final", eb.total());
    rep.add("energy.kinetic", eb.kinetic);
    rep.add("energy.pressure_potential", eb.pressure_potential);
    rep.add("energy.magnetic", eb.magnetic);
    rep.add("energy.artificial", eb.artificial);
    rep.add("energy.dissipation", eb.dissipation);
    rep.add("energy.eps_dissipation", eb.eps_dissipation);
    rep.add("energy.boundary_in", eb.boundary_in);
    rep.add("energy.boundary_out", eb.boundary_out);
    rep.add("energy.forcing", eb.forcing);
    rep.add("energy.numerical_dissipation", eb.numerical);
    rep.add("energy.inequality_residual", eb.inequality_residual);
    rep.add("mass.rho_initial", integrate(tr.states.front().rho));
    rep.add("mass.rho_final", integrate(tr.states.back().rho));
    rep.add("mass.b_initial", integrate(tr.states.front().b));
    rep.add("mass.b_final", integrate(tr.states.back().b));
    rep.add("flux.rho_in", tr.flux.rho_in);
    rep.add("flux.rho_out", tr.flux.rho_out);
    rep.add("flux.b_in", tr.flux.b_in);
    rep.add("flux.b_out", tr.flux.b_out);
    rep.add("ledger.rho_accumulated", tr.ledger_rho);
    rep.add("ledger.b_accumulated", tr.ledger_b);
    rep.add("max_principle.m_rho", tr.mp_m);
    rep.add("max_principle.M_rho", tr.mp_M);
    rep.add("max_principle.m_b", tr.mp_mb);
    rep.add("max_principle.M_b", tr.mp_Mb);
    rep.add("max_principle.div_sup", tr.div_sup);
    int picard_max = 0;
    for (const auto& r : tr.reports) picard_max = std::max(picard_max, r.picard_iters);
    rep.add("picard.max_iterations", picard_max);
    add_verdicts(rep, v);
    rep.add("verdict", v.all());
    return rep;
}

inline double domination_scale(const Setup& s) {
    return std::max({1.0, extrema(s.initial.b).max, max_abs(s.problem.b_B)});
}

struct RunOptions {
    bool vtk = false;
    bool quiet = false;
};

// run: config -> trajectory directory. Returns an exit code.
inline int run_command(const std::string& config_path, const std::string& out_dir, const RunOptions& opt,
                       std::ostream& log = std::cout) {
    Setup s;
    try {
        s = load_config(config_path);
    } catch (const ConfigError& e) {
        log << "configuration error(s):\n";
        for (const auto& p : e.problems()) log << "  " << p << "\n";
        return exit_usage;
    } catch (const Error& e) {
        log << "configuration error: " << e.what() << "\n";
        return exit_usage;
    }
    fs::create_directories(out_dir);
    {
        std::ofstream cfg(fs::path(out_dir) / "config.ini", std::ios::binary);
        cfg << s.config.text;
    }
    Trajectory tr;
    try {
        tr = run_simulation(s.problem, s.initial, s.run);
    } catch (const Error& e) {
        Report rep;
        rep.add("verdict", false);
        rep.add("solver_failure", std::string(e.what()));
        rep.write((fs::path(out_dir) / "report.txt").string());
        log << "solver failure: " << e.what() << "\n";
        return exit_solver;
    }
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const std::string base = (fs::path(out_dir) / state_file_name(tr.state_step[i])).string();
        write_fields(tr.states[i], base + ".tsv");
        if (opt.vtk || s.config.vtk) write_vtk(tr.states[i], base + ".vtk");
    }
    write_steps(tr, (fs::path(out_dir) / "steps.tsv").string());
    const Verdicts v = verdicts(tr, s.run.tol, domination_scale(s));
    Report rep = trajectory_report(s, tr, v);
    rep.write((fs::path(out_dir) / "report.txt").string());
    if (!opt.quiet) log << rep.str();
    return v.all() ? exit_pass : exit_verdict;
}

// ------------------------------------------------------------------ stored trajectories

struct StoredRun {
    Config config;
    Problem problem;
    std::vector<int> steps;
    std::vector<State> states;
};

inline StoredRun load_run(const std::string& dir) {
    StoredRun r;
    const fs::path cfg = fs::path(dir) / "config.ini";
    if (!fs::exists(cfg)) throw Error("'" + dir + "' is not a run directory (no config.ini)");
    r.config = parse_config(read_text(cfg.string()), cfg.string());
    r.problem = build_problem(r.config);
    const std::regex name(R"(state_(\d+)\.tsv)");
    std::vector<std::pair<int, std::string>> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string fn = e.path().filename().string();
        if (std::regex_match(fn, m, name)) files.emplace_back(std::stoi(m[1].str()), e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no state files in '" + dir + "'");
    for (const auto& [step, path] : files) {
        r.steps.push_back(step);
        State s = read_fields(path, r.problem.grid);
        r.states.push_back(std::move(s));
    }
    return r;
}

// verify: re-checks a stored trajectory. Ledgers and the energy balance are
// recomputed only when every step was stored.
inline int verify_command(const std::string& dir, std::ostream& log = std::cout) {
    StoredRun run;
    try {
        run = load_run(dir);
    } catch (const ConfigError& e) {
        log << "configuration error(s):\n";
        for (const auto& p : e.problems()) log << "  " << p << "\n";
        return exit_usage;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_usage;
    }
    const Problem& p = run.problem;
    const Grid& g = *p.grid;
    const Tolerances& tol = run.config.tol;
    Report rep;
    std::vector<std::string> failures;
    const auto& s0 = run.states.front();
    const double dom_scale = std::max({1.0, extrema(s0.b).max, max_abs(p.b_B)});
    const double usup = p.u_B_sup();
    auto [m, M] = max_principle_constants(s0.rho, p.rho_B, usup);
    auto [mb, Mb] = max_principle_constants(s0.b, p.b_B, usup);
    const auto faces = interior_faces(g);
    double D = 0.0;
    double worst_dom = 0.0, worst_mp = 0.0;
    for (std::size_t i = 0; i < run.states.size(); ++i) {
        const State& s = run.states[i];
        const int step = run.steps[i];
        auto er = extrema(s.rho), eb = extrema(s.b);
        if (er.min < 0.0 || eb.min < 0.0) {
            failures.push_back("positivity: step " + std::to_string(step) + ", " +
                               detail::cell_name(g, er.min < 0.0 ? er.argmin : eb.argmin));
        }
        auto d = domination_check(s.rho, s.b, p.C_lower, p.C_upper);
        const double dv = d.worst() / dom_scale;
        worst_dom = std::max(worst_dom, dv);
        if (dv > tol.dom) {
            std::string where;
            if (d.lower_violation == d.worst())
                where = "lower, " + detail::cell_name(g, d.lower_cell);
            else if (d.upper_violation == d.worst())
                where = "upper, " + detail::cell_name(g, d.upper_cell);
            else if (d.boundary_lower_violation == d.worst())
                where = "lower, outflow " + detail::face_name(g, d.boundary_lower_face) + " of " +
                        detail::cell_name(g, g.face(d.boundary_lower_face).cell);
            else
                where = "upper, outflow " + detail::face_name(g, d.boundary_upper_face) + " of " +
                        detail::cell_name(g, g.face(d.boundary_upper_face).cell);
            failures.push_back("domination: step " + std::to_string(step) + ", " + where + ", violation " +
                               fmt17(d.worst()));
        }
        if (i > 0) D = std::max(D, max_abs(face_divergence(s.u, faces, p.un).values()));
        const double grow = std::exp(run.config.T * D);
        auto check = [&](const Extrema& e, double lo, double hi, const char* what) {
            const double t = tol.mp * std::max(1.0, hi);
            const double viol = std::max(lo / grow - t - e.min, e.max - (hi * grow + t));
            worst_mp = std::max(worst_mp, viol);
            if (viol > 0.0)
                failures.push_back(std::string("max principle: ") + what + " at step " + std::to_string(step) + ", " +
                                   detail::cell_name(g, e.min < lo / grow - t ? e.argmin : e.argmax));
        };
        check(er, m, M, "rho");
        check(eb, mb, Mb, "b");
    }
    rep.add("snapshots", run.states.size());
    rep.add("worst.domination", worst_dom);
    rep.add("worst.max_principle", std::max(worst_mp, 0.0));
    bool consecutive = run.states.size() >= 2;
    for (std::size_t i = 1; i < run.steps.size(); ++i) consecutive = consecutive && run.steps[i] == run.steps[i - 1] + 1;
    if (consecutive) {
        double worst_mass = 0.0, worst_energy = -INFINITY;
        for (std::size_t i = 1; i < run.states.size(); ++i) {
            const State& a = run.states[i - 1];
            const State& b = run.states[i];
            const double dt = b.t - a.t;
            const double scale = std::max({1.0, integrate(a.rho), integrate(a.b)});
            const double md = std::max(std::abs(mass_ledger_defect(a.rho, b.rho, p.rho_B, p.un, dt)),
                                       std::abs(mass_ledger_defect(a.b, b.b, p.b_B, p.un, dt))) /
                              scale;
            worst_mass = std::max(worst_mass, md);
            if (md > tol.mass) failures.push_back("mass ledger: step " + std::to_string(run.steps[i]));
            const EnergyReport e = step_energy_budget(a, b, p);
            const double er = e.inequality_residual / e.scale;
            worst_energy = std::max(worst_energy, er);
            if (er > tol.energy) failures.push_back("energy inequality: step " + std::to_string(run.steps[i]));
        }
        rep.add("worst.mass_ledger", worst_mass);
        rep.add("worst.energy_residual", worst_energy);
    } else {
        rep.add("ledgers", "skipped (snapshots not consecutive)");
    }
    rep.add("failures", failures.size());
    for (std::size_t i = 0; i < failures.size(); ++i) rep.add("failure." + std::to_string(i + 1), failures[i]);
    rep.add("verdict", failures.empty());
    log << rep.str();
    return failures.empty() ? exit_pass : exit_verdict;
}

// Block average of a state onto a grid coarser by integer factors.
inline State restrict_state(const State& fine, const GridPtr& coarse) {
    const Grid& f = fine.rho.grid();
    const Grid& c = *coarse;
    if (f.nx() % c.nx() != 0 || f.ny() % c.ny() != 0)
        throw Error("cannot restrict " + std::to_string(f.nx()) + "x" + std::to_string(f.ny()) + " onto " +
                    std::to_string(c.nx()) + "x" + std::to_string(c.ny()) + " (ratio not an integer)");
    const int rx = f.nx() / c.nx(), ry = f.ny() / c.ny();
    const double w = 1.0 / (rx * ry);
    State s{fine.t, ScalarField(coarse), ScalarField(coarse), VectorField(coarse)};
    for (int k = 0; k < f.cells(); ++k) {
        const int K = c.index(f.col(k) / rx, f.row(k) / ry);
        s.rho[K] += w * fine.rho[k];
        s.b[K] += w * fine.b[k];
        s.u.set(K, s.u[K] + w * fine.u[k]);
    }
    return s;
}

struct ComparisonResult {
    std::vector<double> t;
    std::vector<RelativeEnergyReport> series;
    GronwallFit fit;
    double floor = 0.0;
};

// Relative energy of run `a` with respect to run `b` at common snapshot times;
// the finer run is restricted onto the coarser grid.
inline ComparisonResult compare_runs(const StoredRun& a, const StoredRun& b) {
    const Grid& ga = *a.problem.grid;
    const Grid& gb = *b.problem.grid;
    const bool a_coarse = ga.cells() <= gb.cells();
    const GridPtr coarse = a_coarse ? a.problem.grid : b.problem.grid;
    ComparisonResult out;
    const double tscale = std::max({1.0, a.config.T, b.config.T});
    std::size_t j = 0;
    for (const auto& sa : a.states) {
        while (j < b.states.size() && b.states[j].t < sa.t - 1e-9 * tscale) ++j;
        if (j == b.states.size()) break;
        const State& sb = b.states[j];
        if (std::abs(sb.t - sa.t) > 1e-9 * tscale) continue;
        const State ra = a_coarse ? sa : restrict_state(sa, coarse);
        const State rb = gb.cells() == coarse->cells() ? sb : restrict_state(sb, coarse);
        out.series.push_back(relative_energy(ra, rb, a.config.phys.gamma));
        out.t.push_back(sa.t);
    }
    if (out.t.size() < 3) throw Error("compare: fewer than 3 common snapshot times");
    const double h = std::max(coarse->dx(), coarse->dy());
    out.floor = a.config.C_f * (h * h + std::max(a.config.dt, b.config.dt));
    std::vector<double> E;
    for (const auto& r : out.series) E.push_back(r.value);
    out.fit = gronwall_fit(out.t, E, out.floor);
    return out;
}

inline int compare_command(const std::string& dir_a, const std::string& dir_b, std::ostream& log = std::cout) {
    StoredRun a, b;
    try {
        a = load_run(dir_a);
        b = load_run(dir_b);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_usage;
    }
    ComparisonResult c;
    try {
        c = compare_runs(a, b);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_usage;
    }
    Report rep;
    rep.add("samples", c.t.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < c.t.size(); ++i) {
        const std::string k = "sample." + std::to_string(i);
        rep.add(k + ".t", c.t[i]);
        rep.add(k + ".value", c.series[i].value);
        rep.add(k + ".kinetic_gap", c.series[i].kinetic_gap);
        rep.add(k + ".bregman_gap", c.series[i].bregman_gap);
        rep.add(k + ".magnetic_gap", c.series[i].magnetic_gap);
        sup = std::max(sup, c.series[i].value);
    }
    rep.add("relative_energy.sup", sup);
    rep.add("floor", c.floor);
    rep.add("fitted_gronwall_C", c.fit.C);
    rep.add("gronwall.worst_ratio", c.fit.worst_ratio);
    rep.add("gronwall.worst_sample", c.fit.worst_sample);
    rep.add("verdict", c.fit.pass);
    log << rep.str();
    return c.fit.pass ? exit_pass : exit_verdict;
}

// sweep: continuation family over eps then delta; member directories are not written.
inline int sweep_command(const std::string& config_path, const std::vector<double>& eps_list,
                         const std::vector<double>& delta_list, const std::string& out_dir,
                         std::ostream& log = std::cout) {
    Setup s;
    try {
        s = load_config(config_path);
    } catch (const ConfigError& e) {
        log << "configuration error(s):\n";
        for (const auto& p : e.problems()) log << "  " << p << "\n";
        return exit_usage;
    } catch (const Error& e) {
        log << "configuration error: " << e.what() << "\n";
        return exit_usage;
    }
    ContinuationResult res;
    try {
        res = continuation(s.problem, s.initial, s.run, eps_list, delta_list);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_usage;
    }
    Report rep;
    bool failed = false, verdict = true;
    for (std::size_t i = 0; i < res.members.size(); ++i) {
        const auto& m = res.members[i];
        const std::string k = "member." + std::to_string(i);
        rep.add(k + ".eps", m.eps);
        rep.add(k + ".delta", m.delta);
        if (!m.trajectory) {
            failed = true;
            rep.add(k + ".status", "solver failure: " + m.error);
            continue;
        }
        Problem p = s.problem;
        p.reg.eps = m.eps;
        p.reg.delta = m.delta;
        const Verdicts v = verdicts(*m.trajectory, s.run.tol, domination_scale(s));
        verdict = verdict && v.all();
        const EnergyReport e = energy(m.trajectory->states.back(), p);
        rep.add(k + ".status", v.all() ? "pass" : "fail");
        rep.add(k + ".energy", e.total());
        rep.add(k + ".energy_artificial", e.artificial);
    }
    for (std::size_t i = 0; i < res.distances.size(); ++i) {
        rep.add("distance." + std::to_string(i), res.distances[i]);
        rep.add("zeta_gap." + std::to_string(i), res.zeta_gaps[i]);
    }
    rep.add("verdict", verdict && !failed);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        rep.write((fs::path(out_dir) / "sweep.txt").string());
    }
    log << rep.str();
    if (failed) return exit_solver;
    return verdict ? exit_pass : exit_verdict;
}

} // namespace mhd
