// Field files (tabular text, legacy VTK), key = value reports and the
// validated setup built from a configuration.
//
// Field file layout:
//
// # mhd2d field file
// version 1
// nx 4
// ny 4
// lx 1
// ly 1
// time 0.5
// fields rho b u.x u.y
// 0 <rho> <b> <u.x> <u.y>
// ...                                 one row per cell, k = i + nx j
//
// Numbers are written with 17 significant digits, so a write/read cycle is
// bit-exact.
#pragma once

#include "config.hpp"
#include "weak_forms.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>

namespace mhd {

class FormatError : public Error {
public:
    using Error::Error;
};

inline constexpr int field_file_version = 1;

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_fields(const State& s, const std::string& path) {
    const Grid& g = s.rho.grid();
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "# mhd2d field file\n";
    out << "version " << field_file_version << "\n";
    out << "nx " << g.nx() << "\nny " << g.ny() << "\n";
    out << "lx " << fmt17(g.lx()) << "\nly " << fmt17(g.ly()) << "\n";
    out << "time " << fmt17(s.t) << "\n";
    out << "fields rho b u.x u.y\n";
    for (int k = 0; k < g.cells(); ++k) {
        Vec2 u = s.u[k];
        out << k << ' ' << fmt17(s.rho[k]) << ' ' << fmt17(s.b[k]) << ' ' << fmt17(u.x) << ' ' << fmt17(u.y) << '\n';
    }
    if (!out) throw Error("write to '" + path + "' failed");
}

struct FieldFileHeader {
    int version = 0;
    int nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    double time = 0.0;
    std::vector<std::string> fields;
};

namespace detail {

inline double to_double(const std::string& s, const std::string& path, int line) {
    double v;
    if (!parse_double(s, v))
        throw FormatError(path + ":" + std::to_string(line) + ": invalid number '" + s + "'");
    return v;
}

} // namespace detail

// Reads a field file. If `expected` is given its dimensions must match.
inline State read_fields(const std::string& path, GridPtr expected = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path + "'");
    FieldFileHeader h;
    std::string line;
    int ln = 0;
    bool have_fields = false;
    while (!have_fields && std::getline(in, line)) {
        ++ln;
        auto w = detail::split_ws(line);
        if (w.empty() || w[0][0] == '#') continue;
        if (w.size() < 2) throw FormatError(path + ":" + std::to_string(ln) + ": malformed header line");
        if (w[0] == "version") {
            h.version = static_cast<int>(detail::to_double(w[1], path, ln));
            if (h.version != field_file_version)
                throw FormatError(path + ": unsupported field file version " + w[1] + " (expected " +
                                  std::to_string(field_file_version) + ")");
        } else if (w[0] == "nx")
            h.nx = static_cast<int>(detail::to_double(w[1], path, ln));
        else if (w[0] == "ny")
            h.ny = static_cast<int>(detail::to_double(w[1], path, ln));
        else if (w[0] == "lx")
            h.lx = detail::to_double(w[1], path, ln);
        else if (w[0] == "ly")
            h.ly = detail::to_double(w[1], path, ln);
        else if (w[0] == "time")
            h.time = detail::to_double(w[1], path, ln);
        else if (w[0] == "fields") {
            h.fields.assign(w.begin() + 1, w.end());
            have_fields = true;
        } else
            throw FormatError(path + ":" + std::to_string(ln) + ": unknown header key '" + w[0] + "'");
    }
    if (h.version == 0) throw FormatError(path + ": missing version line");
    if (!have_fields) throw FormatError(path + ": missing fields line");
    if (h.fields != std::vector<std::string>{"rho", "b", "u.x", "u.y"})
        throw FormatError(path + ": expected fields 'rho b u.x u.y'");
    if (expected) {
        if (h.nx != expected->nx())
            throw FormatError(path + ": dimension mismatch: nx = " + std::to_string(h.nx) + " in file, expected " +
                              std::to_string(expected->nx()));
        if (h.ny != expected->ny())
            throw FormatError(path + ": dimension mismatch: ny = " + std::to_string(h.ny) + " in file, expected " +
                              std::to_string(expected->ny()));
    }
    GridPtr g = expected ? expected : build_grid(h.nx, h.ny, h.lx, h.ly);
    State s{h.time, ScalarField(g), ScalarField(g), VectorField(g)};
    int rows = 0;
    while (std::getline(in, line)) {
        ++ln;
        auto w = detail::split_ws(line);
        if (w.empty() || w[0][0] == '#') continue;
        if (w.size() != 5) throw FormatError(path + ":" + std::to_string(ln) + ": expected 5 columns");
        const int k = static_cast<int>(detail::to_double(w[0], path, ln));
        if (k != rows)
            throw FormatError(path + ":" + std::to_string(ln) + ": row index " + w[0] + ", expected " +
                              std::to_string(rows));
        if (rows >= g->cells())
            throw FormatError(path + ": dimension mismatch: more than nx*ny = " + std::to_string(g->cells()) + " rows");
        s.rho[k] = detail::to_double(w[1], path, ln);
        s.b[k] = detail::to_double(w[2], path, ln);
        s.u.set(k, {detail::to_double(w[3], path, ln), detail::to_double(w[4], path, ln)});
        ++rows;
    }
    if (rows != g->cells())
        throw FormatError(path + ": dimension mismatch: " + std::to_string(rows) + " rows, expected nx*ny = " +
                          std::to_string(g->cells()));
    return s;
}

// Legacy VTK ASCII structured points, one point per cell centre.
inline void write_vtk(const State& s, const std::string& path) {
    const Grid& g = s.rho.grid();
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << "# vtk DataFile Version 3.0\n";
    out << "mhd2d state t=" << fmt17(s.t) << "\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.nx() << ' ' << g.ny() << " 1\n";
    out << "ORIGIN " << fmt17(0.5 * g.dx()) << ' ' << fmt17(0.5 * g.dy()) << " 0\n";
    out << "SPACING " << fmt17(g.dx()) << ' ' << fmt17(g.dy()) << " 1\n";
    out << "POINT_DATA " << g.cells() << "\n";
    for (const auto* f : {&s.rho, &s.b}) {
        out << "SCALARS " << (f == &s.rho ? "rho" : "b") << " double 1\nLOOKUP_TABLE default\n";
        for (int k = 0; k < g.cells(); ++k) out << fmt17((*f)[k]) << '\n';
    }
    out << "VECTORS u double\n";
    for (int k = 0; k < g.cells(); ++k) out << fmt17(s.u[k].x) << ' ' << fmt17(s.u[k].y) << " 0\n";
    if (!out) throw Error("write to '" + path + "' failed");
}

// ------------------------------------------------------------------ reports

// Ordered key = value report.
class Report {
public:
    void add(const std::string& key, double v) { items_.emplace_back(key, fmt17(v)); }
    void add(const std::string& key, int v) { items_.emplace_back(key, std::to_string(v)); }
    void add(const std::string& key, std::size_t v) { items_.emplace_back(key, std::to_string(v)); }
    void add(const std::string& key, bool v) { items_.emplace_back(key, v ? "pass" : "fail"); }
    void add(const std::string& key, const std::string& v) { items_.emplace_back(key, v); }
    void add(const std::string& key, const char* v) { items_.emplace_back(key, v); }

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

    std::string str() const {
        std::string s;
        for (const auto& [k, v] : items_) s += k + " = " + v + "\n";
        return s;
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot write '" + path + "'");
        out << str();
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

inline std::map<std::string, std::string> read_report(const std::string& path) {
    std::map<std::string, std::string> m;
    std::istringstream is(read_text(path));
    std::string line;
    while (std::getline(is, line)) {
        auto eq = line.find(" = ");
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return m;
}

// ------------------------------------------------------------------ setup

struct Setup {
    Config config;
    Problem problem;
    State initial;
    RunSettings run;
};

namespace detail {

inline ScalarField initial_field(const Expression& e, const GridPtr& g, const std::string& base_dir, bool is_rho,
                                 std::vector<std::string>& errors) {
    if (e.file.empty()) return ScalarField::sample(g, e.function());
    std::filesystem::path p(e.file);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    try {
        State s = read_fields(p.string(), g);
        return is_rho ? s.rho : s.b;
    } catch (const Error& ex) {
        errors.push_back(std::string("initial data: ") + ex.what());
        return ScalarField(g);
    }
}

inline std::string cell_name(const Grid& g, int k) {
    return "cell " + std::to_string(k) + " (i=" + std::to_string(g.col(k)) + ", j=" + std::to_string(g.row(k)) + ")";
}

inline std::string face_name(const Grid& g, int f) {
    const auto& bf = g.face(f);
    static const char* sides[] = {"bottom", "right", "top", "left"};
    return "face " + std::to_string(f) + " (" + sides[static_cast<int>(bf.side)] + ", x=" + fmt17(bf.midpoint.x) +
           ", y=" + fmt17(bf.midpoint.y) + ")";
}

} // namespace detail

// Problem data of a configuration (no validation, no initial data).
inline Problem build_problem(const Config& c) {
    auto grid = build_grid(c.nx, c.ny, c.lx, c.ly);
    return make_problem(*grid, c.u_B.function(), c.rho_B.function(), c.b_B.function(), c.phys, c.reg, c.C_lower,
                        c.C_upper);
}

// Validates every hypothesis and builds the problem; all violations are
// collected into one ConfigError.
inline Setup make_setup(const Config& c, const std::string& base_dir = {}) {
    std::vector<std::string> v;
    auto need = [&](bool ok, const std::string& what) {
        if (!ok) v.push_back(what);
    };
    need(c.nx >= 2 && c.ny >= 2, "grid: nx and ny must be >= 2");
    need(c.lx > 0.0 && c.ly > 0.0, "grid: lx and ly must be positive");
    need(c.phys.gamma > 1.0, "adiabatic exponent: gamma > 1 required (got " + fmt17(c.phys.gamma) + ")");
    need(c.phys.mu > 0.0, "shear viscosity: mu > 0 required (got " + fmt17(c.phys.mu) + ")");
    need(2.0 * c.phys.mu + c.phys.lambda > 0.0, "bulk viscosity: 2 mu + lambda > 0 required");
    need(c.C_lower > 0.0 && c.C_lower < c.C_upper,
         "domination constants: 0 < C_lower < C_upper required (got " + fmt17(c.C_lower) + ", " + fmt17(c.C_upper) +
             ")");
    need(c.reg.eps >= 0.0, "regularization: eps >= 0 required");
    need(c.reg.delta >= 0.0, "regularization: delta >= 0 required");
    need(c.reg.delta == 0.0 || c.reg.beta > 1.0, "regularization: beta > 1 required when delta > 0");
    need(c.eps_init >= 0.0, "regularization: eps_init >= 0 required");
    need(c.T > 0.0, "time: T > 0 required");
    need(c.dt > 0.0, "time: dt > 0 required");
    need(c.out_every >= 1, "time: out_every >= 1 required");
    need(c.reg.picard_tol > 0.0 && c.reg.picard_max >= 1, "tolerances: picard_tol > 0 and picard_max >= 1 required");
    need(c.reg.tol_lin > 0.0 && c.reg.max_lin >= 0, "tolerances: tol_lin > 0 and max_lin >= 0 required");
    need(c.tol.energy > 0.0 && c.tol.dom > 0.0 && c.tol.mp > 0.0 && c.tol.mass > 0.0,
         "tolerances: verdict tolerances must be positive");
    need(c.C_f >= 0.0, "tolerances: C_f >= 0 required");
    if (c.nx < 2 || c.ny < 2 || !(c.lx > 0.0) || !(c.ly > 0.0)) throw ConfigError(v);

    Setup s;
    s.config = c;
    s.problem = build_problem(c);
    const Problem& p = s.problem;
    const Grid& g = *p.grid;

    // boundary data on inflow faces
    double worst_rho = INFINITY, worst_b = INFINITY, worst_lo = 0.0, worst_hi = 0.0;
    int f_rho = -1, f_b = -1, f_lo = -1, f_hi = -1;
    for (const auto& bf : g.boundary_faces()) {
        if (bf.tag != FaceTag::inflow) continue;
        auto fi = static_cast<std::size_t>(bf.index);
        const double r = p.rho_B[fi], b = p.b_B[fi];
        const double tol = 1e-12 * std::max(1.0, std::abs(b));
        if (r < worst_rho) { worst_rho = r; f_rho = bf.index; }
        if (b < worst_b) { worst_b = b; f_b = bf.index; }
        if (c.C_lower * r - b > std::max(worst_lo, tol)) { worst_lo = c.C_lower * r - b; f_lo = bf.index; }
        if (b - c.C_upper * r > std::max(worst_hi, tol)) { worst_hi = b - c.C_upper * r; f_hi = bf.index; }
    }
    if (f_rho >= 0 && !(worst_rho > 0.0))
        v.push_back("positive inflow density: rho_B = " + fmt17(worst_rho) + " at " + detail::face_name(g, f_rho));
    if (f_b >= 0 && !(worst_b > 0.0))
        v.push_back("positive inflow magnetic field: b_B = " + fmt17(worst_b) + " at " + detail::face_name(g, f_b));
    if (f_lo >= 0)
        v.push_back("lower domination on inflow boundary: C_lower rho_B - b_B = " + fmt17(worst_lo) + " at " +
                    detail::face_name(g, f_lo));
    if (f_hi >= 0)
        v.push_back("upper domination on inflow boundary: b_B - C_upper rho_B = " + fmt17(worst_hi) + " at " +
                    detail::face_name(g, f_hi));

    // initial data
    std::vector<std::string> file_errors;
    ScalarField rho0 = detail::initial_field(c.rho0, p.grid, base_dir, true, file_errors);
    ScalarField b0 = detail::initial_field(c.b0, p.grid, base_dir, false, file_errors);
    v.insert(v.end(), file_errors.begin(), file_errors.end());
    if (c.eps_init > 0.0) {
        rho0 = mollify(rho0, c.eps_init);
        b0 = mollify(b0, c.eps_init);
    }
    const VectorExpression& u0e = c.u0 ? *c.u0 : c.u_B;
    VectorField u0 = VectorField::sample(p.grid, u0e.function());
    auto er = extrema(rho0), eb = extrema(b0);
    if (er.min < 0.0)
        v.push_back("nonnegative initial density: rho0 = " + fmt17(er.min) + " at " + detail::cell_name(g, er.argmin));
    if (eb.min < 0.0)
        v.push_back("nonnegative initial magnetic field: b0 = " + fmt17(eb.min) + " at " +
                    detail::cell_name(g, eb.argmin));
    auto dom = domination_check(rho0, b0, c.C_lower, c.C_upper);
    const double dom_tol = 1e-12 * std::max(1.0, eb.max);
    if (dom.lower_violation > dom_tol)
        v.push_back("lower domination: C_lower rho0 - b0 = " + fmt17(dom.lower_violation) + " at worst " +
                    detail::cell_name(g, dom.lower_cell));
    if (dom.upper_violation > dom_tol)
        v.push_back("upper domination: b0 - C_upper rho0 = " + fmt17(dom.upper_violation) + " at worst " +
                    detail::cell_name(g, dom.upper_cell));
    s.initial = State{0.0, rho0, b0, u0};
    if (rho0.finite() && b0.finite() && u0.finite() && er.min >= 0.0 && eb.min >= 0.0 && c.phys.gamma > 1.0) {
        const double e = energy(s.initial, p).total();
        need(std::isfinite(e), "finite initial energy: energy evaluates to " + fmt17(e));
    } else if (!rho0.finite() || !b0.finite() || !u0.finite()) {
        v.push_back("finite initial energy: initial data contain non-finite values");
    }
    if (!v.empty()) throw ConfigError(v);
    s.run.T = c.T;
    s.run.dt = c.dt;
    s.run.out_every = c.out_every;
    s.run.tol = c.tol;
    return s;
}

inline Setup load_config(const std::string& path) {
    Config c = parse_config(read_text(path), path);
    return make_setup(c, std::filesystem::path(path).parent_path().string());
}

} // namespace mhd
