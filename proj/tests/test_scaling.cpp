#include <gtest/gtest.h>

#include <cmath>

#include "qnlab/grids.hpp"
#include "qnlab/scaling.hpp"

using namespace qn;

TEST(Scaling, UnitInputsGiveUnitDebyeLength) {
    PhysicalInputs p;
    p.eps0 = p.kB = p.Te = p.N = p.e = 1.0;
    auto c = derive_groups(p);
    EXPECT_NEAR(c.debye_length, 1.0, 1e-15);
}

TEST(Scaling, DebyeFormula) {
    PhysicalInputs p;
    p.Te = 2e4;
    p.N = 1e17;
    auto c = derive_groups(p);
    EXPECT_NEAR(c.debye_length, std::sqrt(p.eps0 * p.kB * p.Te / (p.N * p.e * p.e)), 1e-15 * c.debye_length);
}

TEST(Scaling, UnmagnetizedConventions) {
    PhysicalInputs p = physical_preset("glow-discharge");
    auto a = derive_groups(p, EpsilonConvention::squared);
    auto b = derive_groups(p, EpsilonConvention::linear);
    double r = a.debye_length / p.L;
    EXPECT_NEAR(a.epsilon, r * r, 1e-15);
    EXPECT_NEAR(b.epsilon, r, 1e-15);
    EXPECT_NEAR(a.vth_tau_over_L, 1.0, 1e-12);
}

TEST(Scaling, MagnetizedGroups) {
    PhysicalInputs p = physical_preset("tokamak-edge");
    auto c = derive_groups(p);
    ASSERT_TRUE(c.magnetized);
    EXPECT_NEAR(c.gyrofrequency, p.e * p.B / p.m, 1e-9 * c.gyrofrequency);
    EXPECT_NEAR(c.larmor_radius, p.m * p.vth / (p.e * p.B), 1e-12 * c.larmor_radius);
    EXPECT_NEAR(c.gyrofrequency * p.tau, 1.0 / c.epsilon, 1e-9 / c.epsilon);
    // lambda_D / r_L = eps^{alpha - 1}
    EXPECT_NEAR(c.debye_length / c.larmor_radius, std::pow(c.epsilon, c.alpha - 1.0), 1e-9);
}

TEST(Scaling, PresetsLandInTypicalDebyeRange) {
    for (auto& n : physical_preset_names()) {
        if (n == "unit") continue;
        auto c = derive_groups(physical_preset(n));
        EXPECT_GE(c.debye_length, 1e-8) << n;
        EXPECT_LE(c.debye_length, 1e-3) << n;
        EXPECT_TRUE(c.debye_in_typical_range) << n;
    }
}

TEST(Scaling, AlgebraicInversions) {
    EXPECT_NEAR(epsilon_from_gyro(100.0), 0.01, 1e-15);
    EXPECT_NEAR(alpha_from_ratio(0.01, 0.1), 1.5, 1e-14);
    EXPECT_THROW(epsilon_from_gyro(0.0), DomainError);
    EXPECT_THROW(alpha_from_ratio(1.0, 0.5), DomainError);
}

TEST(Scaling, GroupsAreUnitInvariant) {
    PhysicalInputs p = physical_preset("tokamak-edge");
    auto a = derive_groups(p);
    auto b = derive_groups(rescale_units(p, 100.0, 1e3, 1e27, 1e19, 1e-3));
    EXPECT_NEAR(a.epsilon, b.epsilon, 1e-10 * a.epsilon);
    EXPECT_NEAR(a.alpha, b.alpha, 1e-10);
}

TEST(Scaling, DescribeMentionsEpsilon) {
    auto s = describe(derive_groups(physical_preset("ionosphere")));
    EXPECT_NE(s.find("epsilon"), std::string::npos);
}

TEST(Scaling, UnknownPreset) { EXPECT_THROW(physical_preset("nope"), std::exception); }
