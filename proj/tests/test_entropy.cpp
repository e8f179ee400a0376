#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qnlab/entropy.hpp"

using namespace qn;

namespace {

constexpr double kPi = std::numbers::pi;

PotentialSolution zero_potential(std::size_t n, const Field& m) {
    PotentialSolution p;
    p.V.assign(n, 0.0);
    p.E.assign(n, 0.0);
    p.dV.assign(n, 0.0);
    p.m = m;
    return p;
}

BackgroundProfile unit_mass_line(const SpatialGrid& g) {
    auto raw = confining_background(g, 0.0);
    return confining_background(g, std::log(quadrature(raw.d, g)));
}

SpatialGrid line(int n = 256) { return SpatialGrid::truncated_line(20.0, n, std::exp(-std::sqrt(401.0))); }

}  // namespace

TEST(Energy, LinearClosureUniformMaxwellian) {
    auto g = SpatialGrid::periodic(1.0, 32);
    auto f = cold_ion_maxwellian(Field(32, 1.0), {Field(32, 0.0)}, 1.0, g, VelocityGrid{1, 12.0, 128});
    auto e = energy(EnergyKind::L, f, zero_potential(32, Field(32, 1.0)), uniform_background(g), 0.1);
    EXPECT_NEAR(e.kinetic, 0.5, 1e-10);
    EXPECT_EQ(e.field, 0.0);
    EXPECT_EQ(e.entropy, 0.0);
    EXPECT_DOUBLE_EQ(e.total, e.kinetic + e.field + e.entropy);
}

TEST(Energy, BoltzmannEntropyAtZeroPotential) {
    auto g = line();
    auto bg = unit_mass_line(g);
    auto f = cold_ion_maxwellian(bg.d, {Field(g.size(), 0.0)}, 0.2, g, VelocityGrid{1, 5.0, 64});
    auto e = energy(EnergyKind::S, f, zero_potential(g.size(), bg.d), bg, 0.1);
    EXPECT_NEAR(e.entropy, -quadrature(bg.d, g), 1e-14);
}

TEST(Energy, DriftingMaxwellianAgainstClosedForm) {
    // rho = 1 + 0.3 cos, u = 0.2, Ti = 0.5: kinetic = Ti/2 + 0.02
    auto g = SpatialGrid::periodic(1.0, 64);
    Field rho(64);
    for (int i = 0; i < 64; ++i) rho[i] = 1 + 0.3 * std::cos(2 * kPi * g.coord(0, i));
    auto f = cold_ion_maxwellian(rho, {Field(64, 0.2)}, 0.5, g, VelocityGrid{1, 8.0, 256});
    auto e = energy(EnergyKind::L, f, zero_potential(64, rho), uniform_background(g), 0.1);
    EXPECT_NEAR(e.kinetic, 0.25 + 0.02, 1e-8);
}

TEST(ModulatedEnergy, PointwiseSumOracle) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.5, 1.5);
    int nx = 16, nv = 32;
    PhaseDensity f;
    f.xgrid = SpatialGrid::periodic(1.0, nx);
    f.vgrid = VelocityGrid{1, 3.0, nv};
    f.values.resize(nx * nv);
    for (auto& v : f.values) v = U(rng);
    Field rho_ref(nx), u_ref(nx), m(nx);
    for (int i = 0; i < nx; ++i) {
        rho_ref[i] = U(rng);
        u_ref[i] = U(rng) - 1.0;
        m[i] = U(rng);
    }
    auto ref = make_fluid_state(f.xgrid, rho_ref, {u_ref}, Field(nx, 1.0));
    auto bg = uniform_background(f.xgrid);
    auto pot = zero_potential(nx, m);
    for (int i = 0; i < nx; ++i) {
        pot.V[i] = std::log(m[i]);
        pot.dV[i] = U(rng);
    }
    auto e = modulated_energy(EnergyKind::S, f, pot, ref, bg, 0.3);
    double h = f.xgrid.spacing(), dv = f.vgrid.spacing(), kin = 0, ent = 0, fld = 0;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nv; ++j) {
            double w = f.vgrid.node(j) - u_ref[i];
            kin += 0.5 * f.values[i * nv + j] * w * w * h * dv;
        }
        double r = ref.density()[i];
        ent += (m[i] * std::log(m[i] / r) - m[i] + r) * h;
        fld += 0.5 * 0.3 * pot.dV[i] * pot.dV[i] * h;
    }
    EXPECT_NEAR(e.kinetic, kin, 1e-12 * kin);
    EXPECT_NEAR(e.entropy, ent, 1e-12);
    EXPECT_NEAR(e.field, fld, 1e-12 * fld);
    EXPECT_DOUBLE_EQ(e.total, e.kinetic + e.field + e.entropy);
}

TEST(ModulatedEnergy, PreparedDataLeavesOnlyThermalPart) {
    auto g = line();
    auto bg = unit_mass_line(g);
    Field x = g.coords(0), rho(g.size()), u(g.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        rho[i] = bg.d[i];
        u[i] = 0.1 * std::sin(x[i]) * std::exp(-x[i] * x[i] / 8);
    }
    double Ti = 0.01;
    auto f = cold_ion_maxwellian(rho, {u}, Ti, g, VelocityGrid{1, 2.0, 128});
    auto ref = make_fluid_state(g, moments(f).rho, {u}, bg.d);
    auto pot = zero_potential(g.size(), ref.density(bg.d));
    for (auto kind : {EnergyKind::S, EnergyKind::Sprime}) {
        auto e = modulated_energy(kind, f, pot, ref, bg, 0.01);
        EXPECT_NEAR(e.entropy, 0.0, 1e-15);
        EXPECT_NEAR(e.kinetic, 0.5 * Ti, 1e-8);
    }
}

TEST(ModulatedEnergy, LinearEntropyVanishesOnCompatiblePotential) {
    auto g = SpatialGrid::periodic(1.0, 32);
    Field rho(32);
    for (int i = 0; i < 32; ++i) rho[i] = 1 + 0.2 * std::sin(2 * kPi * g.coord(0, i));
    auto ref = make_fluid_state(g, rho, {Field(32, 0.0)}, Field(32, 1.0));
    auto f = cold_ion_maxwellian(rho, {Field(32, 0.0)}, 0.1, g, VelocityGrid{1, 3.0, 64});
    auto pot = zero_potential(32, rho);
    for (int i = 0; i < 32; ++i) pot.V[i] = rho[i] - 1.0;
    EXPECT_NEAR(modulated_energy(EnergyKind::L, f, pot, ref, uniform_background(g), 0.1).entropy, 0.0, 1e-15);
}

TEST(RelativeEntropy, DensityValues) {
    EXPECT_EQ(relative_entropy_density(1.0, 1.0), 0.0);
    EXPECT_EQ(relative_entropy_density(0.0, 2.5), 2.5);
    EXPECT_NEAR(relative_entropy_density(2.0, 1.0), 2 * std::log(2.0) - 1, 1e-15);
    // near r = 1 the density is (x - y)^2 / (2y) to leading order
    EXPECT_NEAR(relative_entropy_density(1.0 + 1e-6, 1.0), 0.5e-12, 1e-18);
    EXPECT_THROW(relative_entropy_density(-1.0, 1.0), DomainError);
}

TEST(CsiszarKullback, ClosedFormsAndRandomPairs) {
    auto g = SpatialGrid::periodic(1.0, 8);
    auto [l0, r0] = csiszar_kullback_gap(Field(8, 0.7), Field(8, 0.7), g);
    EXPECT_EQ(l0, 0.0);
    EXPECT_EQ(r0, 0.0);
    double b = 0.4;
    auto [l1, r1] = csiszar_kullback_gap(Field(8, 2 * b), Field(8, b), g);
    EXPECT_NEAR(l1, b * std::pow(std::sqrt(2.0) - 1, 2), 1e-15);
    EXPECT_NEAR(r1, b * (2 * std::log(2.0) - 1), 1e-15);
    std::mt19937_64 rng(20240611);
    std::lognormal_distribution<double> ln(0.0, 1.0);
    auto g1 = SpatialGrid::periodic(1.0, 1);
    for (int k = 0; k < 1000; ++k) {
        auto [l, r] = csiszar_kullback_gap({ln(rng)}, {ln(rng)}, g1);
        EXPECT_LE(l, r + 1e-15);
    }
    EXPECT_THROW(csiszar_kullback_gap({0.0}, {1.0}, g1), DomainError);
}

TEST(Budget, SteadyStateHasZeroSlack) {
    auto g = line(128);
    auto bg = unit_mass_line(g);
    double eps = 0.01;
    auto f = cold_ion_maxwellian(bg.d, {Field(g.size(), 0.0)}, 0.1, g, VelocityGrid{1, 3.0, 64});
    auto mom = moments(f);
    auto pot = solve_poisson_S(mom.rho, bg, g, eps);
    auto ref = make_fluid_state(g, bg.d, {Field(g.size(), 0.0)}, bg.d);
    std::vector<BudgetInput> hist;
    for (int k = 0; k < 5; ++k) {
        ref.time = 0.1 * k;
        hist.push_back({0.1 * k, mom, pot, ref});
    }
    auto b = stability_budget(EnergyKind::S, hist, bg, eps);
    ASSERT_EQ(b.size(), 5u);
    for (const auto& s : b) {
        ASSERT_EQ(s.slack.size(), 3u);
        for (double v : s.slack) EXPECT_NEAR(v, 0.0, 1e-14);
        EXPECT_NEAR(s.H, s.H0, 1e-15);
    }
}

TEST(Budget, SlackIsTheSumOfItsParts) {
    auto g = SpatialGrid::periodic(1.0, 32);
    std::vector<BudgetInput> hist;
    for (int k = 0; k < 4; ++k) {
        double t = 0.05 * k;
        Field rho(32), u(32);
        for (int i = 0; i < 32; ++i) {
            double x = g.coord(0, i);
            rho[i] = 1 + 0.1 * std::cos(2 * kPi * (x - t));
            u[i] = 0.1 * std::cos(2 * kPi * (x - t));
        }
        auto f = cold_ion_maxwellian(rho, {u}, 0.05, g, VelocityGrid{1, 2.0, 64});
        auto ref = make_fluid_state(g, rho, {u}, Field(32, 1.0));
        ref.time = t;
        hist.push_back({t, moments(f), solve_poisson_L(moments(f).rho, g, 0.01), ref});
    }
    auto b = stability_budget(EnergyKind::L, hist, uniform_background(g), 0.01, {1.0, 3.0});
    for (const auto& s : b)
        for (std::size_t c = 0; c < s.C.size(); ++c)
            EXPECT_NEAR(s.slack[c], s.H0 + s.pairing + s.G + s.C[c] * s.gronwall - s.H, 1e-15);
    EXPECT_EQ(b[0].pairing, 0.0);
    EXPECT_EQ(b[0].gronwall, 0.0);
}

TEST(Budget, NeedsTwoSamples) {
    auto g = SpatialGrid::periodic(1.0, 8);
    auto f = cold_ion_maxwellian(Field(8, 1.0), {Field(8, 0.0)}, 0.1, g, VelocityGrid{1, 3.0, 32});
    auto ref = make_fluid_state(g, Field(8, 1.0), {Field(8, 0.0)}, Field(8, 1.0));
    std::vector<BudgetInput> one{{0.0, moments(f), solve_poisson_L(Field(8, 1.0), g, 0.1), ref}};
    EXPECT_THROW(stability_budget(EnergyKind::L, one, uniform_background(g), 0.1), InsufficientData);
    EXPECT_THROW(stability_budget(EnergyKind::L, {}, uniform_background(g), 0.1), InsufficientData);
}

TEST(Energy, NonFinitePotentialIsRejected) {
    auto g = SpatialGrid::periodic(1.0, 8);
    auto f = cold_ion_maxwellian(Field(8, 1.0), {Field(8, 0.0)}, 0.1, g, VelocityGrid{1, 3.0, 32});
    auto pot = zero_potential(8, Field(8, 1.0));
    pot.V[3] = std::nan("");
    EXPECT_THROW(energy(EnergyKind::L, f, pot, uniform_background(g), 0.1), NumericError);
}
