#pragma once
#include <string>
#include <vector>

namespace qn {

// Which ordering turns the Debye length into epsilon. squared: eps = (lambda_D/L)^2,
// so eps multiplies the Laplacian; linear: eps = lambda_D/L.
enum class EpsilonConvention { squared, linear };

struct PhysicalInputs {
    double eps0 = 8.8541878128e-12;   // F/m
    double kB = 1.380649e-23;         // J/K
    double Te = 1.0;                  // K
    double N = 1.0;                   // m^-3
    double e = 1.602176634e-19;       // C
    double m = 1.67262192e-27;        // kg
    double L = 1.0;                   // m
    double tau = 1.0;                 // s
    double vth = 1.0;                 // m/s
    double B = 0.0;                   // T, zero for unmagnetized presets
};

struct ScalingConfig {
    PhysicalInputs in;
    EpsilonConvention convention = EpsilonConvention::squared;
    bool magnetized = false;

    double debye_length = 0.0;
    double gyrofrequency = 0.0;
    double larmor_radius = 0.0;
    double epsilon = 0.0;
    double alpha = 0.0;

    // ordering checks: vth*tau/L is 1 and r_L/L - eps is 0 for consistent inputs
    double vth_tau_over_L = 0.0;
    double larmor_over_L_minus_eps = 0.0;

    bool epsilon_small = false;
    bool alpha_above_one = false;
    bool debye_in_typical_range = false;  // 1e-8 m .. 1e-3 m
};

ScalingConfig derive_groups(const PhysicalInputs& in,
                            EpsilonConvention convention = EpsilonConvention::squared);

// algebraic inversions of the magnetized orderings
double epsilon_from_gyro(double omega_tau);
double alpha_from_ratio(double epsilon, double debye_over_larmor);

// rescale every dimensional input by the unit factors (length, time, mass,
// charge, temperature); dimensionless groups must not change
PhysicalInputs rescale_units(const PhysicalInputs& in, double length, double time, double mass,
                             double charge, double temperature);

std::vector<std::string> physical_preset_names();
PhysicalInputs physical_preset(const std::string& name);
std::string describe(const ScalingConfig& c);

}  // namespace qn
