// Randomized smooth problem data shared by the unit tests and the acceptance run.
#pragma once

#include "mhd/weak_forms.hpp"

#include <random>

namespace support {

using namespace mhd;

// psi = a x + c y + sum of sine modes; returns u = (d psi/dy, -d psi/dx), divergence free.
struct StreamFunction {
    double a = 0.0, c = 0.0;
    struct Mode { double amp, kx, ky, px, py; };
    std::vector<Mode> modes;

    Vec2 operator()(double x, double y) const {
        const double pi = std::acos(-1.0);
        Vec2 u{c, -a};
        for (const auto& m : modes) {
            const double sx = std::sin(pi * m.kx * x + m.px), cx = std::cos(pi * m.kx * x + m.px);
            const double sy = std::sin(pi * m.ky * y + m.py), cy = std::cos(pi * m.ky * y + m.py);
            u.x += m.amp * pi * m.ky * sx * cy;
            u.y -= m.amp * pi * m.kx * cx * sy;
        }
        return u;
    }
};

inline StreamFunction random_stream(std::mt19937& rng, double drift = 0.6, double swirl = 0.05) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    StreamFunction s;
    s.a = drift * U(rng) * 0.5;
    s.c = drift * (0.5 + 0.5 * std::abs(U(rng)));
    for (int m = 0; m < 2; ++m)
        s.modes.push_back({swirl * U(rng), 1.0 + m, 1.0 + (m + 1) % 2, U(rng), U(rng)});
    return s;
}

// Smooth positive scalar base + sum of cosine modes, bounded in [base - amp, base + amp].
struct SmoothScalar {
    double base = 1.0;
    struct Mode { double amp, kx, ky, px, py; };
    std::vector<Mode> modes;

    double operator()(double x, double y) const {
        const double pi = std::acos(-1.0);
        double v = base;
        for (const auto& m : modes) v += m.amp * std::cos(pi * m.kx * x + m.px) * std::cos(pi * m.ky * y + m.py);
        return v;
    }
};

inline SmoothScalar random_scalar(std::mt19937& rng, double base, double amp) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    SmoothScalar s{base, {}};
    for (int m = 0; m < 2; ++m) s.modes.push_back({0.5 * amp * U(rng), 1.0 + m, 2.0 - m, U(rng), U(rng)});
    return s;
}

// One member of the randomized suite: dominated data (b = zeta rho with zeta in [0.6, 1.8]).
struct RandomCase {
    Problem problem;
    State initial;
};

inline RandomCase random_case(unsigned seed, int n, double eps = 1e-3, double delta = 0.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto uB = random_stream(rng);
    auto rho0 = random_scalar(rng, 1.0, 0.5);
    auto rhoB = random_scalar(rng, 1.0, 0.4);
    auto z0 = random_scalar(rng, 1.2, 0.6);
    auto zB = random_scalar(rng, 1.2, 0.6);
    PhysParams phys{1.4 + 0.6 * U(rng), 0.2 + 0.3 * U(rng), 0.0};
    RegParams reg;
    reg.eps = eps;
    reg.delta = delta;
    ScalarFunction b0 = [=](double x, double y) { return z0(x, y) * rho0(x, y); };
    ScalarFunction bB = [=](double x, double y) { return zB(x, y) * rhoB(x, y); };
    Problem p = make_problem(Grid(n, n, 1.0, 1.0), uB, rhoB, bB, phys, reg, 0.5, 2.0);
    State s = sample_state(p, rho0, b0, uB);
    return {std::move(p), std::move(s)};
}

} // namespace support
