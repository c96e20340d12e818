// INI-style configuration, the closed-form expression catalogue and
// load-time validation of the problem hypotheses.
//
// Grammar: `[section]` headers, `key = value` lines, `#` or `;` comments.
// Expressions are sums of catalogue terms joined by " + ":
//
// constant c
// affine c0 cx cy                     c0 + cx x + cy y
// gaussian base amp x0 y0 sigma       base + amp exp(-|x-x0|^2 / (2 sigma^2))
// sinprod base amp kx ky [px py]      base + amp sin(pi kx x + px) sin(pi ky y + py)
// cosprod base amp kx ky [px py]      base + amp cos(pi kx x + px) cos(pi ky y + py)
//
// Vector entries (u_B, u0) are either `curl <expr>` (u = (d psi/dy, -d psi/dx),
// divergence free) or given per component as u_B.x / u_B.y. Initial scalars
// may also be `file <path>` naming a field file.
#pragma once

#include "solver.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace mhd {

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& p : v) s += (s.empty() ? "" : "\n") + p;
        return s;
    }
    std::vector<std::string> problems_;
};

// ------------------------------------------------------------------ expressions

// One catalogue term: value and gradient in closed form.
struct Term {
    std::string kind;
    std::vector<double> a;

    double value(double x, double y) const {
        if (kind == "constant") return a[0];
        if (kind == "affine") return a[0] + a[1] * x + a[2] * y;
        if (kind == "gaussian") {
            double r2 = (x - a[2]) * (x - a[2]) + (y - a[3]) * (y - a[3]);
            return a[0] + a[1] * std::exp(-r2 / (2.0 * a[4] * a[4]));
        }
        const double X = M_PI * a[2] * x + a[4], Y = M_PI * a[3] * y + a[5];
        if (kind == "sinprod") return a[0] + a[1] * std::sin(X) * std::sin(Y);
        return a[0] + a[1] * std::cos(X) * std::cos(Y);
    }

    Vec2 grad(double x, double y) const {
        if (kind == "constant") return {};
        if (kind == "affine") return {a[1], a[2]};
        if (kind == "gaussian") {
            double s2 = a[4] * a[4];
            double e = a[1] * std::exp(-((x - a[2]) * (x - a[2]) + (y - a[3]) * (y - a[3])) / (2.0 * s2));
            return {-e * (x - a[2]) / s2, -e * (y - a[3]) / s2};
        }
        const double X = M_PI * a[2] * x + a[4], Y = M_PI * a[3] * y + a[5];
        const double kx = M_PI * a[2], ky = M_PI * a[3];
        if (kind == "sinprod") return {a[1] * kx * std::cos(X) * std::sin(Y), a[1] * ky * std::sin(X) * std::cos(Y)};
        return {-a[1] * kx * std::sin(X) * std::cos(Y), -a[1] * ky * std::cos(X) * std::sin(Y)};
    }
};

struct Expression {
    std::vector<Term> terms;
    std::string file;  // set for `file <path>`
    std::string text;

    double operator()(double x, double y) const {
        double s = 0.0;
        for (const auto& t : terms) s += t.value(x, y);
        return s;
    }
    Vec2 grad(double x, double y) const {
        Vec2 g;
        for (const auto& t : terms) g = g + t.grad(x, y);
        return g;
    }
    ScalarFunction function() const {
        auto self = *this;
        return [self](double x, double y) { return self(x, y); };
    }
};

// Either curl of a streamfunction or two component expressions.
struct VectorExpression {
    bool curl = false;
    Expression psi, x, y;
    std::string text;

    Vec2 operator()(double px, double py) const {
        if (curl) {
            Vec2 g = psi.grad(px, py);
            return {g.y, -g.x};
        }
        return {x(px, py), y(px, py)};
    }
    BoundaryVelocity function() const {
        auto self = *this;
        return [self](double px, double py) { return self(px, py); };
    }
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

inline bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(v);
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace detail

// Parses an expression; throws Error describing the offending term.
inline Expression parse_expression(const std::string& text) {
    Expression e;
    e.text = detail::trim(text);
    auto words = detail::split_ws(e.text);
    if (words.empty()) throw Error("empty expression");
    if (words[0] == "file") {
        if (words.size() != 2) throw Error("'file' takes exactly one path");
        e.file = words[1];
        return e;
    }
    std::vector<std::vector<std::string>> groups(1);
    for (const auto& w : words) {
        if (w == "+")
            groups.emplace_back();
        else
            groups.back().push_back(w);
    }
    static const std::map<std::string, std::pair<std::size_t, std::size_t>> arity = {
        {"constant", {1, 1}}, {"affine", {3, 3}}, {"gaussian", {5, 5}}, {"sinprod", {4, 6}}, {"cosprod", {4, 6}}};
    for (const auto& g : groups) {
        if (g.empty()) throw Error("dangling '+' in expression '" + e.text + "'");
        auto it = arity.find(g[0]);
        if (it == arity.end())
            throw Error("unknown expression '" + g[0] + "' (expected constant, affine, gaussian, sinprod, cosprod)");
        const std::size_t n = g.size() - 1;
        if (n < it->second.first || n > it->second.second)
            throw Error("'" + g[0] + "' expects " + std::to_string(it->second.first) +
                        (it->second.first == it->second.second ? "" : "-" + std::to_string(it->second.second)) +
                        " parameters, got " + std::to_string(n));
        Term t{g[0], {}};
        for (std::size_t i = 1; i < g.size(); ++i) {
            double v;
            if (!detail::parse_double(g[i], v)) throw Error("invalid number '" + g[i] + "' in expression");
            t.a.push_back(v);
        }
        if (t.kind == "sinprod" || t.kind == "cosprod") t.a.resize(6, 0.0);
        if (t.kind == "gaussian" && !(t.a[4] > 0.0)) throw Error("gaussian width must be positive");
        e.terms.push_back(std::move(t));
    }
    return e;
}

// ------------------------------------------------------------------ INI

struct IniEntry {
    std::string value;
    int line = 0;
    int value_column = 0;
};

using IniData = std::map<std::string, std::map<std::string, IniEntry>>;

// Parses INI text; errors name the source, line and column.
inline IniData parse_ini(const std::string& text, const std::string& source = "<config>") {
    IniData data;
    std::istringstream is(text);
    std::string line, section;
    int ln = 0;
    auto fail = [&](int col, const std::string& what) {
        throw ConfigError({source + ":" + std::to_string(ln) + ":" + std::to_string(col) + ": " + what});
    };
    while (std::getline(is, line)) {
        ++ln;
        std::string body = line;
        auto hash = body.find_first_of("#;");
        if (hash != std::string::npos) body = body.substr(0, hash);
        if (detail::trim(body).empty()) continue;
        const int first = static_cast<int>(body.find_first_not_of(" \t")) + 1;
        if (body[static_cast<std::size_t>(first - 1)] == '[') {
            auto close = body.find(']');
            if (close == std::string::npos) fail(first, "missing ']' in section header");
            if (!detail::trim(body.substr(close + 1)).empty())
                fail(static_cast<int>(close) + 2, "unexpected text after section header");
            section = detail::trim(body.substr(static_cast<std::size_t>(first), close - static_cast<std::size_t>(first)));
            if (section.empty()) fail(first, "empty section name");
            data[section];
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string::npos) fail(first, "expected 'key = value'");
        std::string key = detail::trim(body.substr(0, eq));
        if (key.empty()) fail(first, "missing key before '='");
        if (section.empty()) fail(first, "key '" + key + "' outside of any section");
        std::string rest = body.substr(eq + 1);
        std::string value = detail::trim(rest);
        if (value.empty()) fail(static_cast<int>(eq) + 2, "missing value for '" + key + "'");
        const int vcol = static_cast<int>(eq + 1 + rest.find_first_not_of(" \t")) + 1;
        if (data[section].count(key)) fail(first, "duplicate key '" + key + "' in [" + section + "]");
        data[section][key] = {value, ln, vcol};
    }
    return data;
}

// ------------------------------------------------------------------ config

struct Config {
    std::string source;
    std::string text;  // verbatim file contents
    int nx = 32, ny = 32;
    double lx = 1.0, ly = 1.0;
    PhysParams phys;
    double C_lower = 0.5, C_upper = 2.0;
    RegParams reg;
    double eps_init = 0.0;
    double T = 1.0, dt = 1e-2;
    int out_every = 1;
    VectorExpression u_B;
    Expression rho_B, b_B;
    Expression rho0, b0;
    std::optional<VectorExpression> u0;  // defaults to u_B
    Tolerances tol;
    double C_f = 1.0;  // relative energy floor constant: C_f (dx^2 + dt)
    bool vtk = false;
};

namespace detail {

struct ConfigReader {
    const IniData& ini;
    const std::string& source;
    std::vector<std::string> errors;

    const IniEntry* find(const std::string& sec, const std::string& key) const {
        auto s = ini.find(sec);
        if (s == ini.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
    std::string where(const IniEntry& e) const {
        return source + ":" + std::to_string(e.line) + ":" + std::to_string(e.value_column) + ": ";
    }
    void number(const std::string& sec, const std::string& key, double& out) {
        if (auto e = find(sec, key)) {
            double v;
            if (!parse_double(e->value, v))
                errors.push_back(where(*e) + "invalid number '" + e->value + "' for " + sec + "." + key);
            else
                out = v;
        }
    }
    void integer(const std::string& sec, const std::string& key, int& out) {
        if (auto e = find(sec, key)) {
            char* end = nullptr;
            long v = std::strtol(e->value.c_str(), &end, 10);
            if (end != e->value.c_str() + e->value.size())
                errors.push_back(where(*e) + "invalid integer '" + e->value + "' for " + sec + "." + key);
            else
                out = static_cast<int>(v);
        }
    }
    void boolean(const std::string& sec, const std::string& key, bool& out) {
        if (auto e = find(sec, key)) {
            if (e->value == "true" || e->value == "1" || e->value == "yes")
                out = true;
            else if (e->value == "false" || e->value == "0" || e->value == "no")
                out = false;
            else
                errors.push_back(where(*e) + "invalid boolean '" + e->value + "' for " + sec + "." + key);
        }
    }
    bool expression(const std::string& sec, const std::string& key, Expression& out, bool required) {
        auto e = find(sec, key);
        if (!e) {
            if (required) errors.push_back(source + ": missing " + sec + "." + key);
            return false;
        }
        try {
            out = parse_expression(e->value);
        } catch (const Error& ex) {
            errors.push_back(where(*e) + sec + "." + key + ": " + ex.what());
            return false;
        }
        return true;
    }
    bool vector(const std::string& sec, const std::string& key, VectorExpression& out, bool required) {
        if (auto e = find(sec, key)) {
            auto w = split_ws(e->value);
            if (w.empty() || w[0] != "curl") {
                errors.push_back(where(*e) + sec + "." + key + ": expected 'curl <expression>' or ." + "x/.y components");
                return false;
            }
            try {
                out.curl = true;
                out.psi = parse_expression(trim(e->value.substr(e->value.find("curl") + 4)));
                out.text = e->value;
                if (!out.psi.file.empty()) throw Error("'file' is not allowed inside curl");
            } catch (const Error& ex) {
                errors.push_back(where(*e) + sec + "." + key + ": " + ex.what());
                return false;
            }
            return true;
        }
        const bool hx = find(sec, key + ".x") != nullptr, hy = find(sec, key + ".y") != nullptr;
        if (!hx && !hy) {
            if (required) errors.push_back(source + ": missing " + sec + "." + key);
            return false;
        }
        bool ok = expression(sec, key + ".x", out.x, true);
        ok = expression(sec, key + ".y", out.y, true) && ok;
        if (ok && (!out.x.file.empty() || !out.y.file.empty())) {
            errors.push_back(source + ": " + sec + "." + key + ": 'file' is not supported for velocities");
            return false;
        }
        out.curl = false;
        out.text = out.x.text + " ; " + out.y.text;
        return ok;
    }
};

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> k = {
        {"grid", {"nx", "ny", "lx", "ly"}},
        {"physics", {"gamma", "mu", "lambda", "C_lower", "C_upper"}},
        {"regularization", {"eps", "delta", "beta", "eps_init"}},
        {"time", {"T", "dt", "out_every"}},
        {"boundary", {"u_B", "u_B.x", "u_B.y", "rho_B", "b_B"}},
        {"initial", {"rho0", "b0", "u0", "u0.x", "u0.y"}},
        {"tolerances", {"picard_tol", "picard_max", "tol_lin", "max_lin", "tol_energy", "tol_dom", "tol_mp",
                        "tol_mass", "C_f"}},
        {"output", {"vtk"}}};
    return k;
}

} // namespace detail

// Parses (but does not validate) a configuration.
inline Config parse_config(const std::string& text, const std::string& source = "<config>") {
    IniData ini = parse_ini(text, source);
    detail::ConfigReader r{ini, source, {}};
    for (const auto& [sec, keys] : ini) {
        auto it = detail::known_keys().find(sec);
        if (it == detail::known_keys().end()) {
            int line = keys.empty() ? 0 : keys.begin()->second.line;
            r.errors.push_back(source + ":" + std::to_string(line) + ":1: unknown section [" + sec + "]");
            continue;
        }
        for (const auto& [key, e] : keys)
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
                r.errors.push_back(source + ":" + std::to_string(e.line) + ":1: unknown key '" + key + "' in [" + sec +
                                   "]");
    }
    Config c;
    c.source = source;
    c.text = text;
    r.integer("grid", "nx", c.nx);
    r.integer("grid", "ny", c.ny);
    r.number("grid", "lx", c.lx);
    r.number("grid", "ly", c.ly);
    r.number("physics", "gamma", c.phys.gamma);
    r.number("physics", "mu", c.phys.mu);
    r.number("physics", "lambda", c.phys.lambda);
    r.number("physics", "C_lower", c.C_lower);
    r.number("physics", "C_upper", c.C_upper);
    r.number("regularization", "eps", c.reg.eps);
    r.number("regularization", "delta", c.reg.delta);
    r.number("regularization", "beta", c.reg.beta);
    r.number("regularization", "eps_init", c.eps_init);
    r.number("time", "T", c.T);
    r.number("time", "dt", c.dt);
    r.integer("time", "out_every", c.out_every);
    r.vector("boundary", "u_B", c.u_B, true);
    r.expression("boundary", "rho_B", c.rho_B, true);
    r.expression("boundary", "b_B", c.b_B, true);
    for (auto* e : {&c.rho_B, &c.b_B})
        if (!e->file.empty()) r.errors.push_back(source + ": boundary data must be closed-form expressions");
    r.expression("initial", "rho0", c.rho0, true);
    r.expression("initial", "b0", c.b0, true);
    VectorExpression u0;
    if (r.vector("initial", "u0", u0, false)) c.u0 = u0;
    r.number("tolerances", "picard_tol", c.reg.picard_tol);
    r.integer("tolerances", "picard_max", c.reg.picard_max);
    r.number("tolerances", "tol_lin", c.reg.tol_lin);
    r.integer("tolerances", "max_lin", c.reg.max_lin);
    r.number("tolerances", "tol_energy", c.tol.energy);
    r.number("tolerances", "tol_dom", c.tol.dom);
    r.number("tolerances", "tol_mp", c.tol.mp);
    r.number("tolerances", "tol_mass", c.tol.mass);
    r.number("tolerances", "C_f", c.C_f);
    r.boolean("output", "vtk", c.vtk);
    if (!r.errors.empty()) throw ConfigError(r.errors);
    return c;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mhd
