#include "qnlab/runs.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "qnlab/checkpoint.hpp"
#include "qnlab/csv.hpp"
#include "qnlab/entropy.hpp"
#include "qnlab/fluid.hpp"
#include "qnlab/gyro.hpp"
#include "qnlab/kinetic.hpp"
#include "qnlab/poisson.hpp"

namespace qn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

SpatialGrid make_grid(const ExperimentConfig& c) {
    if (c.topology == "periodic") return SpatialGrid::periodic(c.extent, c.nx);
    return SpatialGrid::truncated_line(c.radius, c.nx, std::exp(-std::sqrt(1.0 + c.radius * c.radius)));
}

double wave_k(const ExperimentConfig& c) { return 2.0 * kPi * c.wave_mode / c.extent; }

// log(rho/d) profile, before normalisation
Field log_profile(const ExperimentConfig& c, const SpatialGrid& g) {
    Field x = g.coords(0), l(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (c.rho_profile == "gaussian_log")
            l[i] = c.rho_amplitude * std::exp(-x[i] * x[i] / (2.0 * c.rho_width * c.rho_width));
        else if (c.rho_profile == "cosine")
            l[i] = c.rho_amplitude * std::cos(wave_k(c) * x[i]);
        else
            throw ConfigError("unknown rho_profile " + c.rho_profile);
    }
    return l;
}

Field velocity_profile(const ExperimentConfig& c, const SpatialGrid& g) {
    Field x = g.coords(0), u(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (c.u_profile == "sine")
            u[i] = c.u_amplitude * std::sin(wave_k(c) * x[i]);
        else if (c.u_profile == "localized_sine")
            u[i] = c.u_amplitude * std::sin(x[i]) * std::exp(-x[i] * x[i] / (c.u_width * c.u_width));
        else if (c.u_profile != "zero")
            throw ConfigError("unknown u_profile " + c.u_profile);
    }
    return u;
}

double max_abs(const Field& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

double l2_diff(const Field& a, const Field& b, const SpatialGrid& g) {
    Field d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return l2_norm(d, g);
}

// confinement with the normalising constant folded into H so that
// rho0 = d e^{l0} has unit mass
BackgroundProfile normalised_background(const ExperimentConfig& c, const SpatialGrid& g, const Field& l0) {
    BackgroundProfile raw;
    if (g.is_periodic()) {
        double L = c.extent, h = c.h_amplitude;
        raw = periodic_background(g, [h, L](double x) { return h * std::cos(2.0 * kPi * x / L); });
    } else {
        raw = confining_background(g, 0.0);
    }
    Field w(g.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = raw.d[i] * std::exp(l0[i]);
    double shift = std::log(quadrature(w, g));
    Field H = raw.H;
    for (double& v : H) v += shift;
    return background_from_H(g, H, raw.gradH);
}

struct KineticRun {
    EnergyKind kind;
    SpatialGrid xg;
    VelocityGrid vg;
    BackgroundProfile bg;
    PhaseDensity f;
    FluidState fluid;
    FluidSystem fsys;
    double eps = 1.0;
    double eps_poisson = 1.0;
    double Ti = 0.0;
    bool magnetic = false;
    NewtonOptions newton;
    Field last_V;

    PotentialSolution solve(const Field& rho) {
        const Field* guess = last_V.empty() ? nullptr : &last_V;
        PotentialSolution p;
        switch (kind) {
            case EnergyKind::L:
                p = solve_poisson_L(rho, xg, eps_poisson);
                break;
            case EnergyKind::S:
                p = solve_poisson_S(rho, bg, xg, eps_poisson, newton, guess);
                break;
            default:
                p = solve_poisson_Sprime(rho, bg, xg, eps_poisson, newton, guess);
        }
        last_V = p.V;
        return p;
    }

    FluidState fluid_step(const FluidState& s, double dt, const FluidOptions& o) const {
        switch (fsys) {
            case FluidSystem::shallow_water:
                return shallow_water_step(s, dt, o);
            case FluidSystem::magnetized:
                return euler_magnetized_step(s, bg, dt, o);
            default:
                return euler_isothermal_step(s, bg, dt, o);
        }
    }

    Field fluid_density() const { return kind == EnergyKind::L ? fluid.density() : fluid.density(bg.d); }

    // modulating velocity for the magnetized run: R(-t/eps) w
    std::vector<Field> modulating() const { return filter_momentum(fluid.velocity, fluid.time, eps, FilterDirection::inverse); }
};

KineticRun setup_kinetic(const ExperimentConfig& c, double eps) {
    KineticRun r;
    r.eps = eps;
    r.xg = make_grid(c);
    r.newton.tol = c.newton_tol;
    r.newton.max_iter = c.newton_max_iter;
    switch (c.closure) {
        case ClosureKind::L:
            r.kind = EnergyKind::L;
            r.fsys = FluidSystem::shallow_water;
            break;
        case ClosureKind::S:
            r.kind = EnergyKind::S;
            r.fsys = FluidSystem::isothermal;
            break;
        case ClosureKind::Sprime:
            r.kind = EnergyKind::Sprime;
            r.fsys = FluidSystem::isothermal;
            break;
        case ClosureKind::magnetized_kinetic:
            r.kind = EnergyKind::magnetized;
            r.fsys = FluidSystem::magnetized;
            r.magnetic = true;
            break;
        default:
            throw ConfigError("not a kinetic closure");
    }
    r.eps_poisson = r.magnetic ? std::pow(eps, 2.0 * c.alpha) : eps;
    r.Ti = c.ti_rule == "sqrt_eps" ? std::sqrt(eps) : c.ti;

    Field rho0;
    Field u0 = velocity_profile(c, r.xg);
    if (r.kind == EnergyKind::L) {
        if (!r.xg.is_periodic()) throw ConfigError("the L closure runs on a torus");
        Field l = log_profile(c, r.xg);  // here: rho - 1
        rho0.resize(l.size());
        for (std::size_t i = 0; i < l.size(); ++i) rho0[i] = 1.0 + l[i];
        r.bg = uniform_background(r.xg);
    } else {
        Field l0 = log_profile(c, r.xg);
        r.bg = normalised_background(c, r.xg, l0);
        rho0.resize(l0.size());
        for (std::size_t i = 0; i < l0.size(); ++i) rho0[i] = r.bg.d[i] * std::exp(l0[i]);
    }
    std::vector<Field> uk, uf;
    if (c.vdim == 1) {
        uk = {u0};
        uf = {u0};
    } else {
        Field w1(u0.size(), c.w_perp.size() > 0 ? c.w_perp[0] : 0.0);
        Field w2(u0.size(), c.w_perp.size() > 1 ? c.w_perp[1] : 0.0);
        uk = {w1, w2, u0};
        uf = uk;
    }
    double umax = 0.0;
    for (const auto& u : uk) umax = std::max(umax, max_abs(u));
    r.vg.dim = c.vdim;
    r.vg.points = c.nv;
    r.vg.vmax = 8.0 * std::sqrt(r.Ti) + umax + c.vmax_margin;
    r.f = cold_ion_maxwellian(rho0, uk, r.Ti, r.xg, r.vg, eps);
    // the fluid gets exactly the discrete density the kinetic data carries
    for (double& v : rho0) v *= r.f.mass_scale;
    r.fluid = make_fluid_state(r.xg, rho0, uf, r.kind == EnergyKind::L ? Field(rho0.size(), 1.0) : r.bg.d);
    return r;
}

struct OutputState {
    std::vector<BudgetInput> history;
    std::vector<std::vector<double>> pending;  // rows awaiting the budget columns
    double maxH = 0.0;
};

enum Col {
    cTime, cEps, cKin, cField, cEnt, cTot, cSlack, cEnergy, cEK, cEF, cEE, cSqrt, cVel, cPot, cPair, cG, cGron, cGrad,
    cS1, cS2, cMass, cMinF, cClip, cTrunc, cCount
};

RunSummary run_kinetic(const ExperimentConfig& c, double eps, const RowSink& sink, const std::string& ckpt) {
    auto t_start = std::chrono::steady_clock::now();
    RunSummary S;
    S.epsilon = eps;
    KineticRun r = setup_kinetic(c, eps);
    S.values["Ti"] = r.Ti;
    S.values["vmax"] = r.vg.vmax;
    S.values["mass_scale"] = r.f.mass_scale;
    bool budget = !r.magnetic;
    int nout = static_cast<int>(std::lround(c.final_time / c.output_dt));
    OutputState out;
    double clipped_total = 0.0, trunc_last = 0.0, energy0 = kNaN, energy_prev = kNaN, rate_max = -kNaN;
    rate_max = -std::numeric_limits<double>::infinity();
    double mass_drift = 0.0, minf_rel = 0.0, speed_drift = 0.0, gmax = 0.0;
    int steps = 0, newton_max = 0;
    double slack_min_abs = std::numeric_limits<double>::infinity();
    std::vector<double> slack5;

    auto emit_budget_rows = [&](bool final_pass) {
        if (!budget) return;
        if (out.history.size() < 2) return;
        auto b = stability_budget(r.kind, out.history, r.bg, eps, {1.0, 2.0, 5.0});
        // rows are final once their centred difference exists
        std::size_t ready = final_pass ? b.size() : b.size() - 1;
        std::size_t first = b.size() - out.pending.size();
        while (!out.pending.empty() && first < ready) {
            auto row = out.pending.front();
            out.pending.erase(out.pending.begin());
            const auto& bb = b[first];
            row[cSlack] = bb.slack[2];
            row[cPair] = bb.pairing;
            row[cG] = bb.G;
            row[cGron] = bb.gronwall;
            row[cGrad] = bb.grad_u_inf;
            row[cS1] = bb.slack[0];
            row[cS2] = bb.slack[1];
            slack5.push_back(bb.slack[2]);
            S.values["G_final"] = bb.G;
            S.values["pairing_final"] = bb.pairing;
            sink(row);
            ++first;
        }
    };

    auto sample = [&](const PotentialSolution& pot, const MomentReport& mom) {
        std::vector<double> row(cCount, kNaN);
        row[cTime] = r.f.time;
        row[cEps] = eps;
        std::vector<Field> um;
        if (r.magnetic) um = r.modulating();
        auto H = modulated_energy(r.kind, mom, pot, r.fluid, r.bg, eps, c.alpha, r.magnetic ? &um : nullptr);
        auto E = energy(r.kind, r.f, pot, r.bg, eps, c.alpha);
        row[cKin] = H.kinetic;
        row[cField] = H.field;
        row[cEnt] = H.entropy;
        row[cTot] = H.total;
        row[cEnergy] = E.total;
        row[cEK] = E.kinetic;
        row[cEF] = E.field;
        row[cEE] = E.entropy;
        Field rho = r.fluid_density();
        Field sm(rho.size()), sr(rho.size()), vg(rho.size()), target(rho.size());
        for (std::size_t i = 0; i < rho.size(); ++i) {
            sm[i] = std::sqrt(std::max(pot.m[i], 0.0));
            sr[i] = std::sqrt(rho[i]);
            double dv = 0.0;
            if (mom.rho[i] > mom.floor && mom.rho[i] > 0.0) {
                for (std::size_t a = 0; a < mom.bulk.size(); ++a) {
                    const Field& ua = r.magnetic ? um[a] : r.fluid.velocity[0];
                    double d = mom.bulk[a][i] - ua[i];
                    dv += d * d;
                }
            }
            vg[i] = mom.rho[i] * dv;
            target[i] = r.kind == EnergyKind::L ? rho[i] - 1.0 : std::log(rho[i] / r.bg.d[i]);
        }
        row[cSqrt] = l2_diff(sm, sr, r.xg);
        row[cVel] = quadrature(vg, r.xg);
        if (r.kind == EnergyKind::L || r.kind == EnergyKind::S) {
            row[cPot] = l2_diff(pot.V, target, r.xg);
        } else {
            // gauge-free comparison: both sides shifted to vanish at the centre
            Field a = pot.V, b = target;
            int ic = r.xg.center_index();
            double sa = a[ic], sb = b[ic];
            for (auto& v : a) v -= sa;
            for (auto& v : b) v -= sb;
            row[cPot] = l2_diff(a, b, r.xg);
        }
        row[cMass] = r.f.mass();
        double fmax = *std::max_element(r.f.values.begin(), r.f.values.end());
        double fmin = *std::min_element(r.f.values.begin(), r.f.values.end());
        row[cMinF] = fmin;
        minf_rel = std::min(minf_rel, fmax > 0 ? fmin / fmax : 0.0);
        row[cClip] = clipped_total;
        row[cTrunc] = trunc_last;
        mass_drift = std::max(mass_drift, std::abs(row[cMass] - 1.0));
        out.maxH = std::max(out.maxH, H.total);
        if (std::isnan(energy0)) {
            energy0 = E.total;
            S.values["H0"] = H.total;
        } else {
            double rate = (E.total - energy_prev) / (c.output_dt * std::max(std::abs(energy0), 1e-300));
            rate_max = std::max(rate_max, rate);
        }
        energy_prev = E.total;
        S.values["H_final"] = H.total;
        S.values["sqrt_density_gap_final"] = row[cSqrt];
        S.values["velocity_gap_final"] = row[cVel];
        S.values["potential_gap_final"] = row[cPot];
        S.values["energy_final"] = E.total;
        newton_max = std::max(newton_max, pot.newton_iterations);
        if (budget) {
            BudgetInput bi;
            bi.time = r.f.time;
            bi.moments = mom;
            bi.potential = pot;
            bi.reference = r.fluid;
            out.history.push_back(std::move(bi));
            out.pending.push_back(row);
            emit_budget_rows(false);
        } else {
            sink(row);
        }
    };

    auto pot = r.solve(moments(r.f).rho);
    sample(pot, moments(r.f));
    StepOptions so;
    so.magnetic = r.magnetic;
    so.cfl_limit = std::max(c.kinetic_cfl, 1e-3) * 4.0;  // hard rejection limit above the target
    FluidOptions fo;
    fo.cfl = c.fluid_cfl;
    try {
        for (int k = 1; k <= nout; ++k) {
            double t_next = k * c.output_dt;
            double interval = t_next - r.f.time;
            // kinetic: uniform substeps from the target shift per substep
            double dt_lim = max_stable_dt(r.f, pot.E, c.kinetic_cfl);
            if (c.kinetic_dt > 0.0) dt_lim = std::min(dt_lim, c.kinetic_dt);
            int nsub = std::max(1, static_cast<int>(std::ceil(interval / (0.9 * dt_lim) - 1e-9)));
            PhaseDensity saved = r.f;
            Field savedV = r.last_V;
            for (int attempt = 0;; ++attempt) {
                try {
                    double dt = interval / nsub;
                    for (int j = 0; j < nsub; ++j) {
                        StepReport rep;
                        FieldSolver solver = [&r](const Field& rho) { return r.solve(rho).E; };
                        r.f = vlasov_step(r.f, solver, dt, so, &rep);
                        clipped_total += rep.clipped_mass;
                        trunc_last = rep.truncation_mass;
                        speed_drift = std::max(speed_drift, std::abs(rep.speed_drift));
                        ++steps;
                    }
                    break;
                } catch (const StepRejected& e) {
                    if (attempt >= 4) throw;
                    r.f = saved;
                    r.last_V = savedV;
                    nsub *= 2;
                    spdlog::info("eps {}: step rejected ({}), retrying with {} substeps", eps, e.what(), nsub);
                }
            }
            r.f.time = t_next;
            // fluid: its own stable steps, landing on the output time
            double fi = t_next - r.fluid.time;
            double fdt = 0.95 * fluid_max_dt(r.fluid, r.fsys, c.fluid_cfl);
            int nf = std::max(1, static_cast<int>(std::ceil(fi / fdt - 1e-9)));
            for (int j = 0; j < nf; ++j) r.fluid = r.fluid_step(r.fluid, fi / nf, fo);
            r.fluid.time = t_next;
            gmax = std::max(gmax, gradient_monitor(r.fluid));
            if (classical_solution_lost(r.fluid, c.blowup_threshold)) {
                S.ok = false;
                S.status = "classical solution lost";
                S.failed_at = t_next;
                spdlog::warn("eps {}: classical solution lost at t = {}", eps, t_next);
                break;
            }
            auto mom = moments(r.f);
            pot = r.solve(mom.rho);
            sample(pot, mom);
        }
    } catch (const std::exception& e) {
        S.ok = false;
        S.status = std::string("failed: ") + e.what();
        S.failed_at = r.f.time;
        spdlog::error("eps {} failed at t = {}: {}", eps, r.f.time, e.what());
    }
    emit_budget_rows(true);
    double smin = std::numeric_limits<double>::infinity();
    for (double s : slack5) smin = std::min(smin, s);
    S.values["H_max"] = out.maxH;
    S.values["slack_c5_min"] = budget ? smin : kNaN;
    S.values["slack_c5_min_rel"] = budget && out.maxH > 0 ? smin / out.maxH : kNaN;
    S.values["energy_rate_max"] = rate_max;
    S.values["mass_drift"] = mass_drift;
    S.values["min_f_rel"] = minf_rel;
    S.values["clipped_mass"] = clipped_total;
    S.values["speed_drift"] = speed_drift;
    S.values["grad_u_max"] = gmax;
    S.values["steps"] = steps;
    S.values["newton_max"] = newton_max;
    (void)slack_min_abs;
    S.final_time = r.f.time;
    if (!ckpt.empty()) save_checkpoint(ckpt, r.f);
    S.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return S;
}

double mode_amplitude(const Field& rho, const SpatialGrid& g, double k) {
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) s += (rho[i] - 1.0) * std::cos(k * g.coord(0, static_cast<int>(i)));
    return 2.0 * s / static_cast<double>(rho.size());
}

// angular frequency from zero crossings of a sampled signal
double crossing_frequency(const std::vector<double>& t, const std::vector<double>& a) {
    std::vector<double> zc;
    for (std::size_t j = 1; j < a.size(); ++j) {
        if ((a[j - 1] < 0.0) != (a[j] < 0.0)) {
            double s = a[j - 1] / (a[j - 1] - a[j]);
            zc.push_back(t[j - 1] + s * (t[j] - t[j - 1]));
        }
    }
    if (zc.size() < 2) return kNaN;
    double half = (zc.back() - zc.front()) / static_cast<double>(zc.size() - 1);
    return kPi / half;
}

RunSummary run_euler_poisson(const ExperimentConfig& c, double eps, const RowSink& sink) {
    auto t_start = std::chrono::steady_clock::now();
    RunSummary S;
    S.epsilon = eps;
    auto g = make_grid(c);
    if (!g.is_periodic()) throw ConfigError("the Euler-Poisson wave runs on a torus");
    double k = wave_k(c);
    Field x = g.coords(0), rho0(x.size()), u0 = velocity_profile(c, g);
    for (std::size_t i = 0; i < x.size(); ++i) rho0[i] = 1.0 + c.rho_amplitude * std::cos(k * x[i]);
    Field one(x.size(), 1.0);
    FluidState s = make_fluid_state(g, rho0, {u0}, one), ref = s;
    s.T = ref.T = c.temperature;
    s.epsilon = eps;
    FluidOptions fo;
    fo.cfl = c.fluid_cfl;
    fo.newton.tol = c.newton_tol;
    fo.newton.max_iter = c.newton_max_iter;
    auto bg = uniform_background(g);
    std::vector<double> ts{0.0}, amp{mode_amplitude(rho0, g, k)}, ramp{amp[0]};
    int nout = static_cast<int>(std::lround(c.final_time / c.output_dt));
    int newton_max = 0;
    auto emit = [&]() {
        auto pot = solve_poisson_S(s.density(), bg, g, eps, fo.newton, s.potential.empty() ? nullptr : &s.potential);
        newton_max = std::max(newton_max, pot.newton_iterations);
        auto h = modulated_energy(s, pot, ref);
        auto e = energy(s, pot);
        sink({s.time, eps, h.kinetic, h.field, h.entropy, h.total, kNaN, e.total, e.kinetic, e.field, e.entropy,
              mode_amplitude(s.density(), g, k), mode_amplitude(ref.density(), g, k), quadrature(s.density(), g)});
    };
    try {
        emit();
        for (int j = 1; j <= nout; ++j) {
            double t_next = j * c.output_dt;
            while (s.time < t_next - 1e-12) {
                double dt = std::min(0.95 * fluid_max_dt(s, FluidSystem::euler_poisson, c.fluid_cfl), t_next - s.time);
                s = euler_poisson_step(s, dt, fo);
                ts.push_back(s.time);
                amp.push_back(mode_amplitude(s.density(), g, k));
            }
            std::vector<double> rts;
            while (ref.time < t_next - 1e-12) {
                double dt = std::min(0.95 * fluid_max_dt(ref, FluidSystem::quasineutral, c.fluid_cfl), t_next - ref.time);
                ref = euler_quasineutral_step(ref, dt, fo);
            }
            ramp.push_back(mode_amplitude(ref.density(), g, k));
            emit();
        }
    } catch (const std::exception& e) {
        S.ok = false;
        S.status = std::string("failed: ") + e.what();
        S.failed_at = s.time;
    }
    double w = crossing_frequency(ts, amp);
    S.values["omega"] = w;
    S.values["phase_speed"] = w / k;
    S.values["expected_speed"] = std::sqrt(c.temperature + 1.0);
    S.values["phase_speed_rel_error"] = std::abs(w / k - std::sqrt(c.temperature + 1.0)) / std::sqrt(c.temperature + 1.0);
    S.values["linear_theory_speed"] = std::sqrt(c.temperature + 1.0 / (1.0 + eps * k * k));
    S.values["newton_max"] = newton_max;
    S.values["mass_final"] = quadrature(s.density(), g);
    S.final_time = s.time;
    S.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return S;
}

RunSummary run_gyro(const ExperimentConfig& c, double eps, const RowSink& sink) {
    auto t_start = std::chrono::steady_clock::now();
    RunSummary S;
    S.epsilon = eps;
    auto g = SpatialGrid::periodic(2.0 * kPi, c.gyro_n);
    Field x = g.coords(0);
    GyroReference ref;
    ref.grid = g;
    HsFieldOptions ho;
    ho.delta = c.gyro_delta;
    ho.max_mode = c.gyro_max_mode;
    SobolevIndex s(c.gyro_s);
    // smooth mode-one base plus a rough H^s tail
    std::array<Field, 4> base;
    for (auto& b : base) b.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        base[0][i] = 0.5 * std::cos(x[i] + 0.3);
        base[1][i] = 0.5 * std::sin(x[i]);
        base[2][i] = 0.4 * std::cos(x[i] + 1.0);
        base[3][i] = 0.3 * std::cos(x[i]);
    }
    std::array<Field, 4> fields;
    for (int j = 0; j < 4; ++j) {
        Field tail = synthesize_hs_field(s, c.seed + 1 + j, g, ho);
        fields[j] = base[j];
        for (std::size_t i = 0; i < x.size(); ++i) fields[j][i] += c.gyro_beta * tail[i];
    }
    ref.log_ratio = fields[0];
    ref.w = {fields[1], fields[2], fields[3]};
    double h = c.h_amplitude;
    auto bg = periodic_background(g, [h](double xx) { return h * std::cos(xx); });
    CorrectorOptions opt;
    opt.sign = c.corrector_sign == "literal" ? CorrectorSign::literal : CorrectorSign::derived;
    double q = c.gyro_q, s1 = c.gyro_s - 1.0;
    double bmax = 0, b0max = 0, zsmax = 0, zqmax = 0, t1max = 0, t2max = 0, amax = 0, zsmin = kNaN;
    for (int j = 0; j < c.gyro_thetas; ++j) {
        double theta = 2.0 * kPi * j / c.gyro_thetas + 0.1;
        double t = theta * eps;
        auto Bc = acceleration_B(ref, bg, eps, t, opt, true);
        auto B0 = acceleration_B(ref, bg, eps, t, opt, false);
        auto z = corrector(ref, bg, eps, t, opt);
        auto A = acceleration_A(ref, bg, eps, t);
        AccelerationField zf{z.z_rho, z.z_w};
        double b = Bc.total.hq_norm(g, q), b0 = B0.total.hq_norm(g, q);
        double zs = zf.hq_norm(g, s1), zq = zf.hq_norm(g, q + 1.0);
        double t1 = Bc.T1.hq_norm(g, q), t2 = Bc.T2.hq_norm(g, q), an = A.hq_norm(g, q);
        bmax = std::max(bmax, b);
        b0max = std::max(b0max, b0);
        zsmax = std::max(zsmax, zs);
        zqmax = std::max(zqmax, zq);
        t1max = std::max(t1max, t1);
        t2max = std::max(t2max, t2);
        amax = std::max(amax, an);
        sink({t, eps, kNaN, kNaN, kNaN, kNaN, kNaN, theta, b, b0, zs, zq, t1, t2, an});
    }
    (void)zsmin;
    S.values["b_norm"] = bmax;
    S.values["b_uncorrected_norm"] = b0max;
    S.values["z_s1_norm"] = zsmax;
    S.values["z_q1_norm"] = zqmax;
    S.values["t1_norm"] = t1max;
    S.values["t2_norm"] = t2max;
    S.values["a_norm"] = amax;
    S.final_time = eps * (2.0 * kPi + 0.1);
    S.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return S;
}

}  // namespace

double RunSummary::get(const std::string& k) const {
    auto it = values.find(k);
    return it == values.end() ? kNaN : it->second;
}

std::vector<std::string> run_header(ClosureKind k) {
    std::vector<std::string> head{"time", "epsilon", "kinetic_term", "field_term", "entropy_term", "total", "budget_slack"};
    switch (k) {
        case ClosureKind::euler_poisson:
            for (auto s : {"energy", "energy_kinetic", "energy_field", "energy_entropy", "mode_amplitude",
                           "reference_mode_amplitude", "mass"})
                head.push_back(s);
            return head;
        case ClosureKind::magnetized_spectral:
            for (auto s : {"theta", "b_norm", "b_uncorrected_norm", "z_s1_norm", "z_q1_norm", "t1_norm", "t2_norm", "a_norm"})
                head.push_back(s);
            return head;
        default:
            return kinetic_csv_header();
    }
}

RunSummary run_single(const ExperimentConfig& cfg, double epsilon, const RowSink& sink, const std::string& checkpoint_path) {
    switch (cfg.closure) {
        case ClosureKind::euler_poisson:
            return run_euler_poisson(cfg, epsilon, sink);
        case ClosureKind::magnetized_spectral:
            return run_gyro(cfg, epsilon, sink);
        default:
            return run_kinetic(cfg, epsilon, sink, checkpoint_path);
    }
}

double detect_blowup_time(const ExperimentConfig& c, double horizon) {
    if (c.closure == ClosureKind::magnetized_spectral) return std::numeric_limits<double>::infinity();
    FluidOptions fo;
    fo.cfl = c.fluid_cfl;
    if (c.closure == ClosureKind::euler_poisson) {
        auto g = make_grid(c);
        double k = wave_k(c);
        Field x = g.coords(0), rho0(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) rho0[i] = 1.0 + c.rho_amplitude * std::cos(k * x[i]);
        FluidState s = make_fluid_state(g, rho0, {velocity_profile(c, g)}, Field(x.size(), 1.0));
        s.T = c.temperature;
        while (s.time < horizon) {
            s = euler_quasineutral_step(s, 0.95 * fluid_max_dt(s, FluidSystem::quasineutral, c.fluid_cfl), fo);
            if (classical_solution_lost(s, c.blowup_threshold)) return s.time;
        }
        return std::numeric_limits<double>::infinity();
    }
    // the limit system is epsilon independent; any epsilon builds its data
    KineticRun r = setup_kinetic(c, c.epsilons.back());
    try {
        while (r.fluid.time < horizon) {
            r.fluid = r.fluid_step(r.fluid, 0.95 * fluid_max_dt(r.fluid, r.fsys, c.fluid_cfl), fo);
            if (classical_solution_lost(r.fluid, c.blowup_threshold)) return r.fluid.time;
        }
    } catch (const StepRejected&) {
        return r.fluid.time;
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace qn
