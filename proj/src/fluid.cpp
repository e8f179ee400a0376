#include "qnlab/fluid.hpp"

#include <algorithm>
#include <cmath>

namespace qn {

namespace {

double minmod(double a, double b) {
    if (a * b <= 0.0) return 0.0;
    return std::abs(a) < std::abs(b) ? a : b;
}

// (a - b)/(log a - log b), continuous at a = b
double logmean(double a, double b) {
    double r = a / b;
    if (std::abs(r - 1.0) < 1e-4) {
        double z = r - 1.0;
        return b * (1.0 + z / 2.0 - z * z / 12.0 + z * z * z / 24.0);
    }
    return (a - b) / std::log(r);
}

// minmod face values of q: left[i] = q_{i-1/2}^+, right[i] = q_{i+1/2}^-.
// Periodic wrap or zero-gradient ghosts.
void reconstruct(const Field& q, bool periodic, Field& left, Field& right) {
    std::size_t n = q.size();
    left.resize(n);
    right.resize(n);
    auto at = [&](long i) {
        long nn = static_cast<long>(n);
        if (periodic) return q[((i % nn) + nn) % nn];
        return q[std::clamp(i, 0L, nn - 1)];
    };
    for (std::size_t i = 0; i < n; ++i) {
        long k = static_cast<long>(i);
        double s = minmod(at(k) - at(k - 1), at(k + 1) - at(k));
        left[i] = q[i] - 0.5 * s;
        right[i] = q[i] + 0.5 * s;
    }
}

struct Conservative {
    Field rho;
    std::vector<Field> mom;  // same component layout as the velocity
};

struct Model {
    FluidSystem sys;
    int par = 0;          // index of the component carrying the pressure force
    const Field* H = nullptr;  // well-balanced background (isothermal and magnetized)
    double T = 0.0;
    double eps = 1.0;
    NewtonOptions newton;
    Field* potential = nullptr;
    const FluidForcing* forcing = nullptr;

    double pressure(double r) const {
        switch (sys) {
            case FluidSystem::shallow_water:
                return 0.5 * r * r;
            case FluidSystem::euler_poisson:
                return T * r;
            case FluidSystem::quasineutral:
                return (T + 1.0) * r;
            default:
                return r;
        }
    }
    double sound(double r) const {
        switch (sys) {
            case FluidSystem::shallow_water:
                return std::sqrt(std::max(r, 0.0));
            case FluidSystem::euler_poisson:
            case FluidSystem::quasineutral:
                // the Poisson coupling propagates at up to sqrt(T + 1)
                return std::sqrt(T + 1.0);
            default:
                return 1.0;
        }
    }
};

void rhs(const Model& M, const SpatialGrid& g, double t, const Conservative& U, Conservative& dU) {
    std::size_t n = U.rho.size();
    std::size_t nc = U.mom.size();
    bool periodic = g.is_periodic();
    double h = g.spacing(0);
    std::vector<Field> uc(nc, Field(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < nc; ++a) uc[a][i] = U.mom[a][i] / U.rho[i];

    // face states
    Field rl, rr, Hl, Hr;
    std::vector<Field> ul(nc), ur(nc);
    if (M.H) {
        Field ell(n);
        for (std::size_t i = 0; i < n; ++i) ell[i] = std::log(U.rho[i]) + (*M.H)[i];
        Field el, er;
        reconstruct(ell, periodic, el, er);
        reconstruct(*M.H, periodic, Hl, Hr);
        rl.resize(n);
        rr.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            rl[i] = std::exp(el[i] - Hl[i]);
            rr[i] = std::exp(er[i] - Hr[i]);
        }
    } else {
        reconstruct(U.rho, periodic, rl, rr);
        for (std::size_t i = 0; i < n; ++i) {
            // keep face densities positive; first order fallback
            if (rl[i] <= 0.0 || rr[i] <= 0.0) rl[i] = rr[i] = U.rho[i];
        }
    }
    for (std::size_t a = 0; a < nc; ++a) reconstruct(uc[a], periodic, ul[a], ur[a]);

    // interface k sits between cell k-1 and k, k = 0..n (periodic: 0..n-1 wraps)
    std::size_t nf = n + 1;
    Field Fr(nf), corrL(nf), corrR(nf);
    std::vector<Field> Fm(nc, Field(nf));
    auto cell = [&](long i) -> long {
        long nn = static_cast<long>(n);
        if (periodic) return ((i % nn) + nn) % nn;
        return std::clamp(i, 0L, nn - 1);
    };
    for (std::size_t k = 0; k < nf; ++k) {
        long L = cell(static_cast<long>(k) - 1), R = cell(static_cast<long>(k));
        bool ghostL = !periodic && k == 0, ghostR = !periodic && k == n;
        // boundary ghost: zero-gradient copy of the interior face state
        double rhoL = ghostL ? rl[R] : rr[L];
        double rhoR = ghostR ? rr[L] : rl[R];
        std::vector<double> vL(nc), vR(nc);
        for (std::size_t a = 0; a < nc; ++a) {
            vL[a] = ghostL ? ul[a][R] : ur[a][L];
            vR[a] = ghostR ? ur[a][L] : ul[a][R];
        }
        double sL = rhoL, sR = rhoR;
        if (M.H) {
            double HL = ghostL ? Hl[R] : Hr[L];
            double HR = ghostR ? Hr[L] : Hl[R];
            double Hs = std::max(HL, HR);
            sL = rhoL * std::exp(HL - Hs);
            sR = rhoR * std::exp(HR - Hs);
        }
        double a = std::max(std::abs(vL[M.par]) + M.sound(sL), std::abs(vR[M.par]) + M.sound(sR));
        double fL = sL * vL[M.par], fR = sR * vR[M.par];
        Fr[k] = 0.5 * (fL + fR) - 0.5 * a * (sR - sL);
        for (std::size_t c = 0; c < nc; ++c) {
            double gL = sL * vL[c] * vL[M.par], gR = sR * vR[c] * vR[M.par];
            if (static_cast<int>(c) == M.par) {
                gL += M.pressure(sL);
                gR += M.pressure(sR);
            }
            Fm[c][k] = 0.5 * (gL + gR) - 0.5 * a * (sR * vR[c] - sL * vL[c]);
        }
        corrL[k] = M.pressure(rhoL) - M.pressure(sL);
        corrR[k] = M.pressure(rhoR) - M.pressure(sR);
    }
    if (periodic) {
        Fr[n] = Fr[0];
        corrL[n] = corrL[0];
        corrR[n] = corrR[0];
        for (std::size_t c = 0; c < nc; ++c) Fm[c][n] = Fm[c][0];
    }

    dU.rho.assign(n, 0.0);
    dU.mom.assign(nc, Field(n, 0.0));
    Field force;
    if (M.sys == FluidSystem::euler_poisson) {
        auto bg = uniform_background(g);
        auto sol = solve_poisson_S(U.rho, bg, g, M.eps, M.newton, M.potential && !M.potential->empty() ? M.potential : nullptr);
        if (M.potential) *M.potential = sol.V;
        force = gradient(sol.V, g);
    }
    for (std::size_t i = 0; i < n; ++i) {
        dU.rho[i] = -(Fr[i + 1] - Fr[i]) / h;
        for (std::size_t c = 0; c < nc; ++c) {
            double fd = Fm[c][i + 1] - Fm[c][i];
            if (static_cast<int>(c) == M.par) {
                fd += corrL[i + 1] - corrR[i];
                double src = 0.0;
                if (M.H) src = -(Hr[i] - Hl[i]) * logmean(rr[i], rl[i]);
                dU.mom[c][i] = (-fd + src) / h;
                if (M.sys == FluidSystem::euler_poisson) dU.mom[c][i] -= U.rho[i] * force[i];
            } else {
                dU.mom[c][i] = -fd / h;
            }
        }
    }
    if (M.forcing && M.forcing->fn) {
        Field sr(n, 0.0), sm(n, 0.0);
        M.forcing->fn(t, g.coords(0), sr, sm);
        for (std::size_t i = 0; i < n; ++i) {
            dU.rho[i] += sr[i];
            dU.mom[M.par][i] += sm[i];
        }
    }
}

void check_state(const Conservative& U, double floor, const char* what) {
    for (double r : U.rho)
        if (!(r > floor) || !std::isfinite(r))
            throw StepRejected(std::string(what) + ": vacuum or non-finite density", -1.0);
}

FluidState advance(const FluidState& s, const Field& d, const Model& base, double dt, const FluidOptions& opt) {
    s.validate();
    if (!(dt > 0.0)) throw DomainError("fluid step: dt must be positive");
    double lim = fluid_max_dt(s, base.sys, opt.cfl);
    if (dt > lim * (1.0 + 1e-12)) throw StepRejected("fluid step: CFL violation", lim);
    Model M = base;
    FluidState out = s;
    M.potential = &out.potential;
    M.forcing = opt.forcing;
    M.newton = opt.newton;

    Conservative U;
    U.rho = s.density(d);
    for (const auto& u : s.velocity) {
        Field m(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) m[i] = U.rho[i] * u[i];
        U.mom.push_back(m);
    }
    check_state(U, opt.vacuum_floor, "fluid step");
    Conservative K, U1 = U;
    rhs(M, s.grid, s.time, U, K);
    for (std::size_t i = 0; i < U.rho.size(); ++i) {
        U1.rho[i] += dt * K.rho[i];
        for (std::size_t c = 0; c < U.mom.size(); ++c) U1.mom[c][i] += dt * K.mom[c][i];
    }
    check_state(U1, opt.vacuum_floor, "fluid step (stage 1)");
    rhs(M, s.grid, s.time + dt, U1, K);
    for (std::size_t i = 0; i < U.rho.size(); ++i) {
        U1.rho[i] = 0.5 * (U.rho[i] + U1.rho[i] + dt * K.rho[i]);
        for (std::size_t c = 0; c < U.mom.size(); ++c)
            U1.mom[c][i] = 0.5 * (U.mom[c][i] + U1.mom[c][i] + dt * K.mom[c][i]);
    }
    check_state(U1, opt.vacuum_floor, "fluid step (stage 2)");
    for (std::size_t i = 0; i < U.rho.size(); ++i) {
        out.log_ratio[i] = std::log(U1.rho[i] / d[i]);
        for (std::size_t c = 0; c < U.mom.size(); ++c) out.velocity[c][i] = U1.mom[c][i] / U1.rho[i];
    }
    out.time = s.time + dt;
    return out;
}

Field ones(const FluidState& s) { return Field(s.grid.size(), 1.0); }

}  // namespace

Field FluidState::density(const Field& d) const {
    if (d.size() != log_ratio.size()) throw ShapeError("fluid state: background does not match grid");
    Field r(log_ratio.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = d[i] * std::exp(log_ratio[i]);
    return r;
}

Field FluidState::density() const { return density(Field(log_ratio.size(), 1.0)); }

void FluidState::validate() const {
    grid.validate();
    if (grid.dim != 1) throw ShapeError("fluid solvers are one-dimensional");
    if (log_ratio.size() != grid.size()) throw ShapeError("fluid state: density does not match grid");
    if (velocity.empty()) throw ShapeError("fluid state: missing velocity");
    for (const auto& u : velocity)
        if (u.size() != grid.size()) throw ShapeError("fluid state: velocity does not match grid");
    if (T < 0.0) throw DomainError("fluid state: temperature must be non-negative");
}

FluidState make_fluid_state(const SpatialGrid& grid, const Field& rho, const std::vector<Field>& u, const Field& d) {
    FluidState s;
    s.grid = grid;
    s.velocity = u;
    if (rho.size() != grid.size() || d.size() != grid.size()) throw ShapeError("make_fluid_state: size mismatch");
    s.log_ratio.resize(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(rho[i] > 0.0) || !(d[i] > 0.0)) throw DomainError("make_fluid_state: density must be positive");
        s.log_ratio[i] = std::log(rho[i] / d[i]);
    }
    s.validate();
    return s;
}

FluidState euler_isothermal_step(const FluidState& s, const BackgroundProfile& bg, double dt, const FluidOptions& opt) {
    if (s.velocity.size() != 1) throw ShapeError("isothermal Euler: one velocity component");
    Model M;
    M.sys = FluidSystem::isothermal;
    M.H = &bg.H;
    return advance(s, bg.d, M, dt, opt);
}

FluidState shallow_water_step(const FluidState& s, double dt, const FluidOptions& opt) {
    if (s.velocity.size() != 1) throw ShapeError("shallow water: one velocity component");
    Model M;
    M.sys = FluidSystem::shallow_water;
    return advance(s, ones(s), M, dt, opt);
}

FluidState euler_magnetized_step(const FluidState& s, const BackgroundProfile& bg, double dt, const FluidOptions& opt) {
    if (s.velocity.size() != 3) throw ShapeError("magnetized Euler: three velocity components");
    Model M;
    M.sys = FluidSystem::magnetized;
    M.par = 2;
    M.H = &bg.H;
    return advance(s, bg.d, M, dt, opt);
}

FluidState euler_poisson_step(const FluidState& s, double dt, const FluidOptions& opt) {
    if (s.velocity.size() != 1) throw ShapeError("Euler-Poisson: one velocity component");
    Model M;
    M.sys = FluidSystem::euler_poisson;
    M.T = s.T;
    M.eps = s.epsilon;
    return advance(s, ones(s), M, dt, opt);
}

FluidState euler_quasineutral_step(const FluidState& s, double dt, const FluidOptions& opt) {
    if (s.velocity.size() != 1) throw ShapeError("quasineutral Euler: one velocity component");
    Model M;
    M.sys = FluidSystem::quasineutral;
    M.T = s.T;
    return advance(s, ones(s), M, dt, opt);
}

double fluid_max_dt(const FluidState& s, FluidSystem sys, double cfl) {
    int par = sys == FluidSystem::magnetized ? 2 : 0;
    double smax = 0.0;
    for (std::size_t i = 0; i < s.log_ratio.size(); ++i) {
        double c;
        switch (sys) {
            case FluidSystem::shallow_water:
                c = std::sqrt(std::exp(s.log_ratio[i]));
                break;
            case FluidSystem::euler_poisson:
            case FluidSystem::quasineutral:
                c = std::sqrt(s.T + 1.0);
                break;
            default:
                c = 1.0;
        }
        smax = std::max(smax, std::abs(s.velocity[par][i]) + c);
    }
    return cfl * s.grid.spacing(0) / smax;
}

double gradient_monitor(const FluidState& s) {
    int par = s.velocity.size() == 3 ? 2 : 0;
    Field du = centered_difference(s.velocity[par], s.grid);
    double m = 0.0;
    for (double v : du) m = std::max(m, std::abs(v));
    return m;
}

bool classical_solution_lost(const FluidState& s, double threshold) { return gradient_monitor(s) > threshold; }

}  // namespace qn
