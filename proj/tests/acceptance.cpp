// One line per acceptance criterion; exit status is the number of failures.
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qnlab/config.hpp"
#include "qnlab/entropy.hpp"
#include "qnlab/fit.hpp"
#include "qnlab/gyro.hpp"
#include "qnlab/harness.hpp"
#include "qnlab/kinetic.hpp"
#include "qnlab/poisson.hpp"

using namespace qn;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string measured;
};

int failures = 0;

void report(int id, const std::string& what, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s : %s : %s\n", id, o.pass ? "PASS" : "FAIL", what.c_str(), o.measured.c_str());
    std::fflush(stdout);
}

std::string num(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

std::vector<double> collect(const SweepResult& r, const std::string& k) {
    std::vector<double> v;
    for (auto& s : r.summaries) v.push_back(s.get(k));
    return v;
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

std::string list(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + num(x);
    return s;
}

double slope(const SweepResult& r, const std::string& k) {
    std::vector<std::pair<double, double>> pts;
    for (auto& s : r.summaries) pts.emplace_back(s.epsilon, s.get(k));
    return fit_rate(pts, 4).exponent;
}

bool all_ok(const SweepResult& r) {
    return std::all_of(r.summaries.begin(), r.summaries.end(), [](const RunSummary& s) { return s.ok; });
}

// smooth (L) run at one resolution; max charge residual over the slices
double charge_residual(int n) {
    double eps = 0.1, Ti = std::sqrt(eps);
    auto xg = SpatialGrid::periodic(1.0, n);
    VelocityGrid vg;
    vg.dim = 1;
    vg.points = n;
    vg.vmax = 8.0 * std::sqrt(Ti) + 0.6;
    Field x = xg.coords(0), rho(n), u(n);
    for (int i = 0; i < n; ++i) {
        rho[i] = 1.0 + 0.05 * std::cos(2 * kPi * x[i]);
        u[i] = 0.05 * std::sin(2 * kPi * x[i]);
    }
    auto f = cold_ion_maxwellian(rho, {u}, Ti, xg, vg, eps);
    auto solve = [&](const Field& r) { return solve_poisson_L(r, xg, eps).E; };
    double dt = 0.4 * xg.spacing(0) / vg.vmax * (64.0 / 64.0);
    double T = 0.1;
    int steps = static_cast<int>(std::ceil(T / dt));
    dt = T / steps;
    std::vector<PhaseDensity> fs{f};
    std::vector<Field> E{solve(moments(f).rho)};
    StepOptions so;
    for (int k = 0; k < steps; ++k) {
        f = vlasov_step(f, FieldSolver(solve), dt, so);
        fs.push_back(f);
        E.push_back(solve(moments(f).rho));
    }
    auto res = conservation_residuals(fs, E);
    return *std::max_element(res.charge.begin(), res.charge.end());
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    SweepOptions opt;
    opt.out_dir = "acceptance_out";
    opt.workers = 1;

    auto L = builtin_preset("L-sweep");
    SweepResult rl = run_preset(L, opt);
    report(1, "(L) energy non-increasing within 1e-3 relative per unit time, <= 2 min per eps", [&]() -> Outcome {
        auto rate = collect(rl, "energy_rate_max");
        double worst = *std::max_element(rate.begin(), rate.end());
        double tmax = 0;
        for (auto& s : rl.summaries) tmax = std::max(tmax, s.elapsed_seconds);
        return {all_ok(rl) && worst <= 1e-3 && tmax <= 120.0,
                "max relative increase rate " + num(worst) + ", slowest eps " + num(tmax) + " s"};
    });

    report(2, "(L) max H decreasing in eps, H(T) exponent >= 0.4, ||V-(rho-1)||(T) decreasing", [&]() -> Outcome {
        auto hm = collect(rl, "H_max"), pg = collect(rl, "potential_gap_final");
        double e = slope(rl, "H_final");
        return {all_ok(rl) && strictly_decreasing(hm) && e >= 0.4 && strictly_decreasing(pg),
                "max H [" + list(hm) + "], exponent " + num(e) + ", potential gap [" + list(pg) + "]"};
    });

    auto S = builtin_preset("S-sweep");
    SweepResult rs = run_preset(S, opt);
    report(3, "(S) sqrt-density and velocity gaps decrease, >= 10x from 1e-1 to 1e-4, <= 10 min", [&]() -> Outcome {
        auto a = collect(rs, "sqrt_density_gap_final"), b = collect(rs, "velocity_gap_final");
        double total = 0;
        for (auto& s : rs.summaries) total += s.elapsed_seconds;
        bool ok = all_ok(rs) && strictly_decreasing(a) && strictly_decreasing(b) && a.front() >= 10 * a.back() &&
                  b.front() >= 10 * b.back() && total <= 600.0;
        return {ok, "sqrt gap [" + list(a) + "], velocity gap [" + list(b) + "], " + num(total) + " s"};
    });

    report(4, "Csiszar-Kullback on 1000 random positive pairs, slack >= -1e-12", []() -> Outcome {
        std::mt19937_64 rng(20240611);
        std::normal_distribution<double> nd(0.0, 1.0);
        std::uniform_real_distribution<double> ud(-6.0, 1.0);
        auto g = SpatialGrid::periodic(1.0, 64);
        double worst = std::numeric_limits<double>::infinity();
        for (int p = 0; p < 1000; ++p) {
            // log-normal fields over several decades of scale
            Field a(64), b(64);
            double sa = ud(rng), sb = ud(rng);
            for (int i = 0; i < 64; ++i) {
                a[i] = std::exp(sa + 1.5 * nd(rng));
                b[i] = std::exp(sb + 1.5 * nd(rng));
            }
            auto [lhs, rhs] = csiszar_kullback_gap(a, b, g);
            worst = std::min(worst, rhs - lhs);
        }
        return {worst >= -1e-12, "min slack " + num(worst)};
    });

    report(5, "Poisson: ||V-log(rho/d)|| order >= 0.8 over four decades, Newton <= 50 iterations", []() -> Outcome {
        auto g = SpatialGrid::truncated_line(28.0, 1024, std::exp(-std::sqrt(1.0 + 28.0 * 28.0)));
        // log(rho/d) and its curvature decay faster than d, so eps l''/rho stays
        // bounded out to the walls; the unit-mass constant sits in H
        Field x = g.coords(0), ell(x.size()), w(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            ell[i] = 0.3 * std::exp(-x[i] * x[i] / 2.0) + 0.1 * std::sin(2.0 * x[i]) * std::exp(-x[i] * x[i] / 4.0);
        auto raw = confining_background(g, 0.0);
        for (std::size_t i = 0; i < x.size(); ++i) w[i] = raw.d[i] * std::exp(ell[i]);
        auto bg = confining_background(g, std::log(quadrature(w, g)));
        Field rho(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) rho[i] = bg.d[i] * std::exp(ell[i]);
        auto unit_mass = [](Field& r, const SpatialGrid& gg) {
            double m = quadrature(r, gg);
            for (auto& v : r) v /= m;
        };
        Field target(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) target[i] = std::log(rho[i] / bg.d[i]);
        NewtonOptions no;
        no.tol = 1e-10;
        std::vector<std::pair<double, double>> pts;
        int worst_it = 0;
        for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
            auto p = solve_poisson_S(rho, bg, g, eps, no);
            worst_it = std::max(worst_it, p.newton_iterations);
            auto q = solve_poisson_Sprime(rho, bg, g, eps, no);
            worst_it = std::max(worst_it, q.newton_iterations);
            Field d(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) d[i] = p.V[i] - target[i];
            pts.emplace_back(eps, l2_norm(d, g));
        }
        // periodic reference problem with a background
        auto gp = SpatialGrid::periodic(2 * kPi, 256);
        auto bp = periodic_background(gp, [](double y) { return 0.3 * std::cos(y); });
        Field rp(256);
        for (int i = 0; i < 256; ++i) rp[i] = bp.d[i] * std::exp(0.2 * std::sin(gp.coord(0, i)));
        unit_mass(rp, gp);
        for (double eps : {1e-1, 1e-3, 1e-5}) {
            worst_it = std::max(worst_it, solve_poisson_S(rp, bp, gp, eps, no).newton_iterations);
            worst_it = std::max(worst_it, solve_poisson_Sprime(rp, bp, gp, eps, no).newton_iterations);
        }
        auto f = fit_rate(pts, 4);
        return {f.exponent >= 0.8 && worst_it <= 50,
                "order " + num(f.exponent) + ", most Newton iterations " + std::to_string(worst_it)};
    });

    report(6, "Euler-Poisson standing wave phase speed within 2% of sqrt(T+1), T in {0,1}", [&]() -> Outcome {
        std::string m;
        bool ok = true;
        for (double T : {0.0, 1.0}) {
            auto c = builtin_preset("euler-poisson-wave");
            c.temperature = T;
            c.preset = "euler-poisson-wave-T" + std::to_string(static_cast<int>(T));
            auto r = run_preset(c, opt);
            double e = r.summaries.back().get("phase_speed_rel_error");
            ok = ok && all_ok(r) && e <= 0.02;
            m += "T=" + num(T) + ": speed " + num(r.summaries.back().get("phase_speed")) + " rel error " + num(e) + "; ";
        }
        return {ok, m};
    });

    auto G = builtin_preset("gyro-decay");
    SweepResult rg = run_preset(G, opt);
    report(7, "corrected residual slope within 0.4 +- 0.3, uncorrected slope <= 0.1, <= 5 min", [&]() -> Outcome {
        double b = slope(rg, "b_norm"), b0 = slope(rg, "b_uncorrected_norm");
        double total = 0;
        for (auto& s : rg.summaries) total += s.elapsed_seconds;
        double target = G.gyro_s - G.gyro_q - 1.0;
        return {all_ok(rg) && std::abs(b - target) <= 0.3 && b0 <= 0.1 && total <= 300.0,
                "slope " + num(b) + ", uncorrected " + num(b0) + ", " + num(total) + " s"};
    });

    report(8, "corrector H^{s-1} norm varies <= 10%, H^{q+1} exponent within -0.6 +- 0.3", [&]() -> Outcome {
        auto z = collect(rg, "z_s1_norm");
        double lo = *std::min_element(z.begin(), z.end()), hi = *std::max_element(z.begin(), z.end());
        double var = (hi - lo) / hi;
        double e = slope(rg, "z_q1_norm"), target = -(G.gyro_q + 2.0 - G.gyro_s);
        return {all_ok(rg) && var <= 0.1 && std::abs(e - target) <= 0.3,
                "variation " + num(var) + ", exponent " + num(e)};
    });

    report(9, "rotation identities to 1e-12, filtered momentum round trip to 1e-14", []() -> Outcome {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ua(-50.0, 50.0), uw(-1.0, 1.0);
        double worst = 0.0;
        auto dist = [](const Mat3& a, const Mat3& b) {
            double m = 0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
            return m;
        };
        Mat3 I{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        Mat3 Jg{{{0, -1, 0}, {1, 0, 0}, {0, 0, 0}}};  // generator of counter-clockwise rotation
        for (int k = 0; k < 1000; ++k) {
            double a = ua(rng), b = ua(rng);
            worst = std::max(worst, dist(matmul(rotation(a), rotation(b)), rotation(a + b)));
            worst = std::max(worst, dist(matmul(transpose(rotation(a)), rotation(a)), I));
            worst = std::max(worst, dist(rotation(-a), transpose(rotation(a))));
            worst = std::max(worst, dist(rotation_derivative(a), matmul(rotation(a), Jg)));
        }
        double trip = 0.0;
        for (int k = 0; k < 100; ++k) {
            std::vector<Field> u(3, Field(32));
            for (auto& c : u)
                for (auto& v : c) v = uw(rng);
            double t = ua(rng), eps = std::pow(2.0, -1.0 - (k % 10));
            auto w = filter_momentum(u, t, eps, FilterDirection::forward);
            auto back = filter_momentum(w, t, eps, FilterDirection::inverse);
            for (int c = 0; c < 3; ++c)
                for (int i = 0; i < 32; ++i) trip = std::max(trip, std::abs(back[c][i] - u[c][i]));
        }
        return {worst <= 1e-12 && trip <= 1e-14, "identities " + num(worst) + ", round trip " + num(trip)};
    });

    report(10, "charge residual order >= 1.8 under space-time refinement on a smooth (L) run", []() -> Outcome {
        std::vector<std::pair<double, double>> pts;
        std::string m;
        for (int n : {64, 128, 256}) {
            double r = charge_residual(n);
            pts.emplace_back(1.0 / n, r);
            m += num(r) + " ";
        }
        auto f = fit_rate(pts, 3);
        return {f.exponent >= 1.8, "residuals " + m + "order " + num(f.exponent)};
    });

    report(11, "budget slack with C = 5 >= -1e-3 max H on every run with a budget", [&]() -> Outcome {
        double worst = std::numeric_limits<double>::infinity();
        bool ok = all_ok(rl) && all_ok(rs);
        for (auto* r : {&rl, &rs})
            for (double v : collect(*r, "slack_c5_min_rel")) {
                if (std::isnan(v)) ok = false;
                worst = std::min(worst, v);
            }
        return {ok && worst >= -1e-3, "min slack / max H " + num(worst)};
    });

    std::printf("%d criteria failed\n", failures);
    return failures;
}
