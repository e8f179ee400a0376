#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qnlab/fit.hpp"
#include "qnlab/poisson.hpp"

using namespace qn;

namespace {

constexpr double kPi = std::numbers::pi;

SpatialGrid line(int n = 512) { return SpatialGrid::truncated_line(28.0, n, std::exp(-std::sqrt(1.0 + 28.0 * 28.0))); }

// rho = d e^l with l decaying faster than d; mass one through the shift in H
struct Problem {
    SpatialGrid g;
    BackgroundProfile bg;
    Field rho, ell;
};

Problem smooth_problem(int n = 512) {
    Problem p;
    p.g = line(n);
    Field x = p.g.coords(0), w(x.size());
    p.ell.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        p.ell[i] = 0.3 * std::exp(-x[i] * x[i] / 2.0) + 0.1 * std::sin(2.0 * x[i]) * std::exp(-x[i] * x[i] / 4.0);
    auto raw = confining_background(p.g, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) w[i] = raw.d[i] * std::exp(p.ell[i]);
    p.bg = confining_background(p.g, std::log(quadrature(w, p.g)));
    p.rho.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) p.rho[i] = p.bg.d[i] * std::exp(p.ell[i]);
    return p;
}

double bisect(double rho, double d) {
    // d e^V = rho
    double lo = -50, hi = 50;
    for (int k = 0; k < 200; ++k) {
        double mid = 0.5 * (lo + hi);
        (d * std::exp(mid) > rho ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(Background, ProfileAndNormalisation) {
    auto g = line();
    auto bg = confining_background(g, 0.0);
    for (std::size_t i = 0; i < bg.d.size(); ++i) {
        double x = g.coord(0, static_cast<int>(i));
        EXPECT_NEAR(bg.H[i], std::sqrt(1 + x * x), 1e-12);
        EXPECT_NEAR(bg.d[i], std::exp(-bg.H[i]), 1e-12);
    }
    // int e^{-sqrt(1+x^2)} dx = 2 K_1(1)
    EXPECT_NEAR(quadrature(bg.d, g), 2.0 * std::cyl_bessel_k(1.0, 1.0), 1e-3);
}

TEST(PoissonS, RhoEqualsDGivesZero) {
    auto g = line();
    auto bg = confining_background(g, 0.0);
    auto s = solve_poisson_S(bg.d, bg, g, 0.01);
    for (double v : s.V) EXPECT_NEAR(v, 0.0, 1e-12);
    auto gp = SpatialGrid::periodic(2 * kPi, 64);
    auto bp = periodic_background(gp, [](double x) { return 0.4 * std::cos(x); });
    auto sp = solve_poisson_S(bp.d, bp, gp, 0.1);
    for (double v : sp.V) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(PoissonS, SingleCellMatchesBisection) {
    auto g = SpatialGrid::periodic(1.0, 1);
    BackgroundProfile bg = background_from_H(g, {0.7}, {0.0});
    for (double rho : {1e-3, 0.4, 2.0, 30.0}) {
        auto s = solve_poisson_S({rho}, bg, g, 0.5);
        EXPECT_NEAR(s.V[0], bisect(rho, bg.d[0]), 1e-12);
    }
}

TEST(PoissonS, ResidualAndFieldConsistency) {
    auto p = smooth_problem();
    auto s = solve_poisson_S(p.rho, p.bg, p.g, 1e-2);
    EXPECT_LE(s.residual, 1e-10);
    auto r = residual_S(s.V, p.rho, p.bg.d, p.g, 1e-2);
    EXPECT_LE(l2_norm(r, p.g), 1e-10);
    auto e = electric_field(s.V, p.g);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e[i], s.E[i], 1e-14);
}

TEST(PoissonS, QuasineutralLimitIsFirstOrder) {
    auto p = smooth_problem();
    std::vector<std::pair<double, double>> pts;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        auto s = solve_poisson_S(p.rho, p.bg, p.g, eps);
        Field d(s.V.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.V[i] - p.ell[i];
        pts.emplace_back(eps, l2_norm(d, p.g));
    }
    EXPECT_NEAR(fit_rate(pts).exponent, 1.0, 0.15);
}

TEST(PoissonS, NewtonFailureCarriesHistory) {
    auto p = smooth_problem();
    NewtonOptions o;
    o.max_iter = 1;
    o.tol = 1e-15;
    try {
        Field far(p.rho.size(), 30.0);
        solve_poisson_S(p.rho, p.bg, p.g, 1e-3, o, &far);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_FALSE(e.history.empty());
    }
}

TEST(PoissonSprime, NormalisedBackgroundGivesZeroInGauge) {
    auto g = line();
    auto bg = confining_background(g, 0.0);
    Field rho = bg.d;
    double m = quadrature(rho, g);
    for (auto& v : rho) v /= m;
    auto s = solve_poisson_Sprime(rho, bg, g, 0.05);
    EXPECT_NEAR(s.V[g.center_index()], 0.0, 1e-15);
    auto gp = SpatialGrid::periodic(2 * kPi, 64);
    auto bp = periodic_background(gp, [](double x) { return 0.4 * std::cos(x); });
    Field rp = bp.d;
    double mp = quadrature(rp, gp);
    for (auto& v : rp) v /= mp;
    auto sp = solve_poisson_Sprime(rp, bp, gp, 0.1);
    for (double v : sp.V) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(PoissonSprime, ElectronMassIsOne) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    auto g = SpatialGrid::periodic(2 * kPi, 128);
    auto bg = periodic_background(g, [](double x) { return 0.2 * std::sin(x); });
    for (int trial = 0; trial < 5; ++trial) {
        double a = u(rng), b = u(rng);
        Field rho(128);
        for (int i = 0; i < 128; ++i) {
            double x = g.coord(0, i);
            rho[i] = std::exp(a * std::cos(x) + b * std::sin(2 * x));
        }
        double m = quadrature(rho, g);
        for (auto& v : rho) v /= m;
        for (double eps : {1e-1, 1e-3}) {
            auto s = solve_poisson_Sprime(rho, bg, g, eps);
            EXPECT_NEAR(quadrature(s.m, g), 1.0, 1e-12);
        }
    }
}

TEST(PoissonSprime, ElectronDensityApproachesRho) {
    auto p = smooth_problem();
    std::vector<std::pair<double, double>> pts;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        auto s = solve_poisson_Sprime(p.rho, p.bg, p.g, eps);
        Field d(s.m.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = s.m[i] - p.rho[i];
        pts.emplace_back(eps, l2_norm(d, p.g));
    }
    EXPECT_NEAR(fit_rate(pts).exponent, 1.0, 0.2);
}

TEST(PoissonSprime, TorusNeedsUnitMass) {
    auto g = SpatialGrid::periodic(1.0, 16);
    auto bg = uniform_background(g);
    EXPECT_THROW(solve_poisson_Sprime(Field(16, 2.0), bg, g, 0.1), DomainError);
}

TEST(PoissonL, ClosedForms) {
    auto g = SpatialGrid::periodic(1.0, 64);
    auto z = solve_poisson_L(Field(64, 1.0), g, 0.3);
    for (double v : z.V) EXPECT_NEAR(v, 0.0, 1e-15);
    Field rho(64);
    double eps = 0.02;
    for (int i = 0; i < 64; ++i) rho[i] = 1 + std::cos(2 * kPi * g.coord(0, i));
    auto s = solve_poisson_L(rho, g, eps);
    for (int i = 0; i < 64; ++i)
        EXPECT_NEAR(s.V[i], std::cos(2 * kPi * g.coord(0, i)) / (1 + 4 * kPi * kPi * eps), 1e-14);
}

TEST(PoissonL, RandomResidual) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    auto g = SpatialGrid::periodic(1.0, 128);
    Field rho(128);
    for (auto& v : rho) v = 1.0 + 0.1 * nd(rng);
    auto s = solve_poisson_L(rho, g, 1e-3);
    EXPECT_LE(s.residual, 1e-12);
    EXPECT_THROW(solve_poisson_L(Field(8, 1.0), line(8), 0.1), UnsupportedTopology);
}

TEST(Quasineutral, ClosedFormsAndDerivative) {
    auto g = line(64);
    auto bg = confining_background(g, 0.0);
    for (double v : quasineutral_potential(bg.d, bg)) EXPECT_NEAR(v, 0.0, 1e-15);
    Field ed = bg.d;
    for (auto& v : ed) v *= std::exp(1.0);
    for (double v : quasineutral_potential(ed, bg)) EXPECT_NEAR(v, 1.0, 1e-14);
    // directional derivative: FD at step 1e-6 against delta/rho
    Field rho = ed, delta(64), pert(64);
    for (int i = 0; i < 64; ++i) delta[i] = rho[i] * std::sin(0.3 * i);
    double h = 1e-6;
    for (int i = 0; i < 64; ++i) pert[i] = rho[i] + h * delta[i];
    auto v0 = quasineutral_potential(rho, bg), v1 = quasineutral_potential(pert, bg);
    for (int i = 0; i < 64; ++i) EXPECT_NEAR((v1[i] - v0[i]) / h, delta[i] / rho[i], 1e-5);
}
