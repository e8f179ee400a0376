#include "qnlab/scaling.hpp"

#include "qnlab/grids.hpp"

#include <cmath>
#include <sstream>

namespace qn {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string("scaling input must be positive: ") + name);
}

}  // namespace

double epsilon_from_gyro(double omega_tau) {
    require_positive(omega_tau, "omega*tau");
    return 1.0 / omega_tau;
}

double alpha_from_ratio(double epsilon, double debye_over_larmor) {
    require_positive(epsilon, "epsilon");
    require_positive(debye_over_larmor, "lambda_D/r_L");
    if (epsilon == 1.0) throw DomainError("alpha undefined at epsilon = 1");
    return 1.0 + std::log(debye_over_larmor) / std::log(epsilon);
}

ScalingConfig derive_groups(const PhysicalInputs& in, EpsilonConvention convention) {
    require_positive(in.eps0, "eps0");
    require_positive(in.kB, "kB");
    require_positive(in.Te, "Te");
    require_positive(in.N, "N");
    require_positive(in.e, "e");
    require_positive(in.m, "m");
    require_positive(in.L, "L");
    require_positive(in.tau, "tau");
    require_positive(in.vth, "vth");
    if (in.B < 0.0 || !std::isfinite(in.B)) throw DomainError("magnetic field magnitude must be >= 0");

    ScalingConfig c;
    c.in = in;
    c.convention = convention;
    c.debye_length = std::sqrt(in.eps0 * in.kB * in.Te / (in.N * in.e * in.e));
    c.vth_tau_over_L = in.vth * in.tau / in.L;
    c.magnetized = in.B > 0.0;
    if (c.magnetized) {
        c.gyrofrequency = in.e * in.B / in.m;
        c.larmor_radius = in.m * in.vth / (in.e * in.B);
        c.epsilon = epsilon_from_gyro(c.gyrofrequency * in.tau);
        c.alpha = alpha_from_ratio(c.epsilon, c.debye_length / c.larmor_radius);
        c.larmor_over_L_minus_eps = c.larmor_radius / in.L - c.epsilon;
    } else {
        double r = c.debye_length / in.L;
        c.epsilon = convention == EpsilonConvention::squared ? r * r : r;
        c.alpha = 0.0;
    }
    c.epsilon_small = c.epsilon < 0.1;
    c.alpha_above_one = c.magnetized && c.alpha > 1.0;
    c.debye_in_typical_range = c.debye_length >= 1e-8 && c.debye_length <= 1e-3;
    return c;
}

PhysicalInputs rescale_units(const PhysicalInputs& in, double length, double time, double mass, double charge,
                             double temperature) {
    PhysicalInputs o = in;
    o.L = in.L / length;
    o.tau = in.tau / time;
    o.m = in.m / mass;
    o.e = in.e / charge;
    o.Te = in.Te / temperature;
    o.N = in.N * length * length * length;
    o.vth = in.vth * time / length;
    o.kB = in.kB * temperature * time * time / (mass * length * length);
    o.eps0 = in.eps0 * mass * length * length * length / (charge * charge * time * time);
    o.B = in.B * charge * time / mass;
    return o;
}

std::vector<std::string> physical_preset_names() { return {"glow-discharge", "tokamak-edge", "ionosphere", "unit"}; }

PhysicalInputs physical_preset(const std::string& name) {
    PhysicalInputs p;
    const double eV = 11604.518;  // K per eV
    if (name == "glow-discharge") {
        p.Te = 2.0 * eV;
        p.N = 1e16;
        p.m = 6.6335209e-26;  // argon
        p.L = 0.01;
        p.vth = std::sqrt(p.kB * p.Te / p.m);
        p.tau = p.L / p.vth;
    } else if (name == "tokamak-edge") {
        p.Te = 50.0 * eV;
        p.N = 1e19;
        p.m = 3.3435837724e-27;  // deuterium
        p.B = 2.0;
        p.L = 0.05;
        p.vth = std::sqrt(p.kB * p.Te / p.m);
        p.tau = p.L / p.vth;
    } else if (name == "ionosphere") {
        p.Te = 1000.0;
        p.N = 1e13;
        p.m = 2.6566962e-26;  // atomic oxygen
        p.L = 1.0;
        p.vth = std::sqrt(p.kB * p.Te / p.m);
        p.tau = p.L / p.vth;
    } else if (name == "unit") {
        p.eps0 = p.kB = p.Te = p.N = p.e = p.m = p.L = p.tau = p.vth = 1.0;
    } else {
        throw std::invalid_argument("unknown physical preset: " + name);
    }
    return p;
}

std::string describe(const ScalingConfig& c) {
    std::ostringstream os;
    os.precision(6);
    os << "debye_length = " << c.debye_length << " m\n";
    os << "epsilon = " << c.epsilon << (c.convention == EpsilonConvention::squared ? " (lambda_D^2/L^2)" : " (lambda_D/L)")
       << "\n";
    os << "vth*tau/L = " << c.vth_tau_over_L << "\n";
    if (c.magnetized) {
        os << "gyrofrequency = " << c.gyrofrequency << " 1/s\n";
        os << "larmor_radius = " << c.larmor_radius << " m\n";
        os << "alpha = " << c.alpha << "\n";
        os << "r_L/L - epsilon = " << c.larmor_over_L_minus_eps << "\n";
    }
    os << "epsilon_small = " << (c.epsilon_small ? "yes" : "no") << "\n";
    if (c.magnetized) os << "alpha_above_one = " << (c.alpha_above_one ? "yes" : "no") << "\n";
    os << "debye_in_typical_range = " << (c.debye_in_typical_range ? "yes" : "no") << "\n";
    // plasma parameter, informational only
    double lam = c.in.N * c.debye_length * c.debye_length * c.debye_length;
    os << "N*lambda_D^3 = " << lam << "\n";
    return os.str();
}

}  // namespace qn
