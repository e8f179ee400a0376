#include "qnlab/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace qn {

namespace {

void require_finite(const Field& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string(what) + ": non-finite potential");
}

Field reference_density(EnergyKind kind, const FluidState& ref, const BackgroundProfile& bg) {
    return kind == EnergyKind::L ? ref.density() : ref.density(bg.d);
}

double kinetic_modulated(const MomentReport& mom, const std::vector<Field>& u, const SpatialGrid& g) {
    std::size_t d = mom.current.size();
    if (u.size() != d) throw ShapeError("modulated energy: velocity components do not match the velocity grid");
    Field w(mom.rho.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t a = 0; a < d; ++a)
            w[i] += mom.second[a][i] - 2.0 * mom.current[a][i] * u[a][i] + mom.rho[i] * u[a][i] * u[a][i];
    return 0.5 * quadrature(w, g);
}

double kinetic_plain(const MomentReport& mom, const SpatialGrid& g) {
    Field w(mom.rho.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t a = 0; a < mom.current.size(); ++a) w[i] += mom.second[a][i];
    return 0.5 * quadrature(w, g);
}

double field_weight(EnergyKind kind, double eps, double alpha) {
    return kind == EnergyKind::magnetized ? std::pow(eps, 2.0 * alpha) : eps;
}

void finish(EnergyLedger& e) { e.total = e.kinetic + e.field + e.entropy; }

// derivative in time of a sampled series at index k (uniform spacing assumed,
// second order where three samples exist)
Field time_derivative(const std::vector<const Field*>& X, const std::vector<double>& t, std::size_t k) {
    std::size_t n = X.size(), m = X[0]->size();
    Field d(m);
    if (n == 2) {
        double dt = t[1] - t[0];
        for (std::size_t i = 0; i < m; ++i) d[i] = ((*X[1])[i] - (*X[0])[i]) / dt;
        return d;
    }
    if (k == 0) {
        double dt = t[2] - t[0];
        for (std::size_t i = 0; i < m; ++i) d[i] = (-3.0 * (*X[0])[i] + 4.0 * (*X[1])[i] - (*X[2])[i]) / dt;
    } else if (k == n - 1) {
        double dt = t[n - 1] - t[n - 3];
        for (std::size_t i = 0; i < m; ++i)
            d[i] = (3.0 * (*X[n - 1])[i] - 4.0 * (*X[n - 2])[i] + (*X[n - 3])[i]) / dt;
    } else {
        double dt = t[k + 1] - t[k - 1];
        for (std::size_t i = 0; i < m; ++i) d[i] = ((*X[k + 1])[i] - (*X[k - 1])[i]) / dt;
    }
    return d;
}

}  // namespace

double relative_entropy_density(double x, double y) {
    if (x == 0.0) return y;
    if (x < 0.0 || !(y > 0.0)) throw DomainError("relative entropy needs x >= 0, y > 0");
    double r = x / y;
    // y (r log r - r + 1), written to keep accuracy near r = 1
    return y * (r * std::log1p(r - 1.0) - (r - 1.0));
}

double field_energy(const PotentialSolution& pot, const SpatialGrid& grid, double weight) {
    require_finite(pot.dV, "field energy");
    double s = 0.0;
    for (double v : pot.dV) s += v * v;
    return 0.5 * weight * s * grid.spacing(0);
}

EnergyLedger energy(EnergyKind kind, const PhaseDensity& f, const PotentialSolution& pot, const BackgroundProfile& bg,
                    double epsilon, double alpha) {
    if (kind == EnergyKind::euler_poisson) throw std::invalid_argument("energy: Euler-Poisson takes a fluid state");
    require_finite(pot.V, "energy");
    const auto& g = f.xgrid;
    if (pot.V.size() != g.size()) throw ShapeError("energy: potential does not match grid");
    auto mom = moments(f);
    EnergyLedger e;
    e.time = f.time;
    e.kinetic = kinetic_plain(mom, g);
    e.field = field_energy(pot, g, field_weight(kind, epsilon, alpha));
    Field w(g.size());
    switch (kind) {
        case EnergyKind::L:
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * pot.V[i] * pot.V[i];
            break;
        case EnergyKind::S:
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = bg.d[i] * (pot.V[i] - 1.0) * std::exp(pot.V[i]);
            break;
        default: {
            Field ev(g.size());
            for (std::size_t i = 0; i < w.size(); ++i) ev[i] = bg.d[i] * std::exp(pot.V[i]);
            double lam = quadrature(ev, g);
            double ll = std::log(lam);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = (pot.V[i] - ll) * ev[i] / lam;
        }
    }
    e.entropy = quadrature(w, g);
    finish(e);
    return e;
}

EnergyLedger energy(const FluidState& s, const PotentialSolution& pot) {
    require_finite(pot.V, "energy");
    const auto& g = s.grid;
    Field rho = s.density();
    Field k(g.size()), w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        k[i] = 0.5 * rho[i] * s.velocity[0][i] * s.velocity[0][i];
        w[i] = s.T * rho[i] * (std::log(rho[i]) - 1.0) + (pot.V[i] - 1.0) * std::exp(pot.V[i]);
    }
    EnergyLedger e;
    e.time = s.time;
    e.kinetic = quadrature(k, g);
    e.entropy = quadrature(w, g);
    e.field = field_energy(pot, g, s.epsilon);
    finish(e);
    return e;
}

EnergyLedger modulated_energy(EnergyKind kind, const MomentReport& mom, const PotentialSolution& pot,
                              const FluidState& reference, const BackgroundProfile& bg, double epsilon, double alpha,
                              const std::vector<Field>* modulating_velocity) {
    if (kind == EnergyKind::euler_poisson) throw std::invalid_argument("modulated_energy: Euler-Poisson takes fluid states");
    require_finite(pot.V, "modulated energy");
    const auto& g = reference.grid;
    if (mom.rho.size() != g.size() || pot.V.size() != g.size()) throw ShapeError("modulated energy: size mismatch");
    Field rho = reference_density(kind, reference, bg);
    for (double r : rho)
        if (!(r > 0.0)) throw DomainError("modulated energy: reference vacuum");
    EnergyLedger e;
    e.time = reference.time;
    e.kinetic = kinetic_modulated(mom, modulating_velocity ? *modulating_velocity : reference.velocity, g);
    e.field = field_energy(pot, g, field_weight(kind, epsilon, alpha));
    Field w(g.size());
    if (kind == EnergyKind::L) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            double W = pot.V[i] - (rho[i] - 1.0);
            w[i] = 0.5 * W * W;
        }
    } else {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = relative_entropy_density(pot.m[i], rho[i]);
    }
    e.entropy = quadrature(w, g);
    finish(e);
    return e;
}

EnergyLedger modulated_energy(EnergyKind kind, const PhaseDensity& f, const PotentialSolution& pot,
                              const FluidState& reference, const BackgroundProfile& bg, double epsilon, double alpha,
                              const std::vector<Field>* modulating_velocity) {
    if (!same_shape(f.xgrid, reference.grid)) throw ShapeError("modulated energy: kinetic and fluid grids differ");
    auto e = modulated_energy(kind, moments(f), pot, reference, bg, epsilon, alpha, modulating_velocity);
    e.time = f.time;
    return e;
}

EnergyLedger modulated_energy(const FluidState& s, const PotentialSolution& pot, const FluidState& reference) {
    require_finite(pot.V, "modulated energy");
    const auto& g = s.grid;
    if (!same_shape(g, reference.grid)) throw ShapeError("modulated energy: grids differ");
    Field re = s.density(), r = reference.density();
    Field k(g.size()), w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(r[i] > 0.0)) throw DomainError("modulated energy: reference vacuum");
        double du = s.velocity[0][i] - reference.velocity[0][i];
        k[i] = 0.5 * re[i] * du * du;
        w[i] = s.T * relative_entropy_density(re[i], r[i]) + relative_entropy_density(pot.m[i], r[i]);
    }
    EnergyLedger e;
    e.time = s.time;
    e.kinetic = quadrature(k, g);
    e.entropy = quadrature(w, g);
    e.field = field_energy(pot, g, s.epsilon);
    finish(e);
    return e;
}

std::pair<double, double> csiszar_kullback_gap(const Field& a, const Field& b, const SpatialGrid& grid) {
    if (a.size() != b.size() || a.size() != grid.size()) throw ShapeError("csiszar_kullback_gap: size mismatch");
    Field l(a.size()), r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] > 0.0) || !(b[i] > 0.0)) throw DomainError("csiszar_kullback_gap: inputs must be positive");
        double d = std::sqrt(a[i]) - std::sqrt(b[i]);
        l[i] = d * d;
        r[i] = relative_entropy_density(a[i], b[i]);
    }
    return {quadrature(l, grid), quadrature(r, grid)};
}

std::vector<StabilityBudget> stability_budget(EnergyKind kind, const std::vector<BudgetInput>& history,
                                              const BackgroundProfile& bg, double epsilon,
                                              const std::vector<double>& C) {
    if (history.size() < 2) throw InsufficientData("stability_budget: need at least two samples");
    if (kind != EnergyKind::L && kind != EnergyKind::S && kind != EnergyKind::Sprime)
        throw std::invalid_argument("stability_budget: only L, S and Sprime runs");
    const auto& g = history[0].reference.grid;
    std::size_t n = history.size(), m = g.size();
    bool lin = kind == EnergyKind::L;

    std::vector<double> t(n);
    std::vector<Field> rho(n), q(n);
    std::vector<const Field*> prho(n), pq(n), pu(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& h = history[k];
        if (h.reference.grid.size() != m || h.moments.rho.size() != m) throw ShapeError("stability_budget: size mismatch");
        if (h.reference.velocity.size() != 1) throw ShapeError("stability_budget: one velocity component");
        t[k] = h.time;
        if (k > 0 && !(t[k] > t[k - 1])) throw DomainError("stability_budget: times must increase");
        rho[k] = reference_density(kind, h.reference, bg);
        q[k] = lin ? rho[k] : h.reference.log_ratio;
    }
    for (std::size_t k = 0; k < n; ++k) {
        prho[k] = &rho[k];
        pq[k] = &q[k];
        pu[k] = &history[k].reference.velocity[0];
    }

    std::vector<double> Hs(n), P(n), Gr(n), Gb(n), du_inf(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& h = history[k];
        const Field& u = h.reference.velocity[0];
        const Field& J = h.moments.current[0];
        const Field& re = h.moments.rho;
        Hs[k] = modulated_energy(kind, h.moments, h.potential, h.reference, bg, epsilon).total;
        Field dtu = time_derivative(pu, t, k);
        Field dtq = time_derivative(pq, t, k);
        Field du = gradient(u, g), dq = gradient(q[k], g);
        Field dtdq = gradient(dtq, g);
        Field uq(m);
        for (std::size_t i = 0; i < m; ++i) uq[i] = u[i] * dq[i];
        Field duq = gradient(uq, g);
        Field A1(m), A2(m), pair(m), gr(m), gb(m);
        Field flux_d;
        if (lin) {
            Field ru(m);
            for (std::size_t i = 0; i < m; ++i) ru[i] = rho[k][i] * u[i];
            flux_d = gradient(ru, g);
        }
        double dmax = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double Vp = -h.potential.E[i];
            A2[i] = dtu[i] + u[i] * du[i] + dq[i];
            if (lin)
                A1[i] = dtq[i] + flux_d[i];
            else
                A1[i] = dtq[i] + du[i] + u[i] * (dq[i] - bg.gradH[i]);
            double w1 = lin ? (rho[k][i] - 1.0 - h.potential.V[i]) : (rho[k][i] - h.potential.m[i]);
            pair[i] = (re[i] * u[i] - J[i]) * A2[i] + w1 * A1[i];
            gr[i] = -epsilon * Vp * (duq[i] + dtdq[i]);
            gb[i] = epsilon * Vp * dq[i];
            dmax = std::max(dmax, std::abs(du[i]));
        }
        P[k] = quadrature(pair, g);
        Gr[k] = quadrature(gr, g);
        Gb[k] = quadrature(gb, g);
        du_inf[k] = dmax;
    }

    std::vector<StabilityBudget> out(n);
    double ip = 0.0, ig = 0.0, igr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            double dt = t[k] - t[k - 1];
            ip += 0.5 * dt * (P[k] + P[k - 1]);
            ig += 0.5 * dt * (Gr[k] + Gr[k - 1]);
            igr += 0.5 * dt * (du_inf[k] * Hs[k] + du_inf[k - 1] * Hs[k - 1]);
        }
        auto& b = out[k];
        b.time = t[k];
        b.H = Hs[k];
        b.H0 = Hs[0];
        b.pairing = ip;
        b.G = ig + Gb[k] - Gb[0];
        b.gronwall = igr;
        b.grad_u_inf = du_inf[k];
        b.C = C;
        for (double c : C) b.slack.push_back(b.H0 + b.pairing + b.G + c * b.gronwall - b.H);
    }
    return out;
}

}  // namespace qn
