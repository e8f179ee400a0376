#pragma once
#include <stdexcept>
#include <utility>
#include <vector>

#include "qnlab/fluid.hpp"
#include "qnlab/grids.hpp"
#include "qnlab/kinetic.hpp"
#include "qnlab/poisson.hpp"

namespace qn {

enum class EnergyKind { L, S, Sprime, euler_poisson, magnetized };

struct EnergyLedger {
    double time = 0.0;
    double kinetic = 0.0;
    double field = 0.0;
    double entropy = 0.0;
    double total = 0.0;
};

struct InsufficientData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// x log(x/y) - x + y, extended by y at x = 0
double relative_entropy_density(double x, double y);

// (eps/2) int V'^2 from the solution's dV (faces on the truncated line)
double field_energy(const PotentialSolution& pot, const SpatialGrid& grid, double weight);

// kinetic closures: L, S, Sprime, magnetized (field weight eps^{2 alpha})
EnergyLedger energy(EnergyKind kind, const PhaseDensity& f, const PotentialSolution& pot, const BackgroundProfile& bg,
                    double epsilon, double alpha = 0.0);
// Euler-Poisson: 1/2 int rho u^2 + T int rho(log rho - 1) + int (V-1)e^V + eps/2 int V'^2
EnergyLedger energy(const FluidState& s, const PotentialSolution& pot);

// kinetic against a fluid reference; modulating_velocity overrides the reference
// velocity (one field per v component), e.g. R(-t/eps) w + eps z
EnergyLedger modulated_energy(EnergyKind kind, const PhaseDensity& f, const PotentialSolution& pot,
                              const FluidState& reference, const BackgroundProfile& bg, double epsilon,
                              double alpha = 0.0, const std::vector<Field>* modulating_velocity = nullptr);
EnergyLedger modulated_energy(EnergyKind kind, const MomentReport& mom, const PotentialSolution& pot,
                              const FluidState& reference, const BackgroundProfile& bg, double epsilon,
                              double alpha = 0.0, const std::vector<Field>* modulating_velocity = nullptr);
// Euler-Poisson state against the quasineutral Euler reference
EnergyLedger modulated_energy(const FluidState& s, const PotentialSolution& pot, const FluidState& reference);

// returns (int (sqrt a - sqrt b)^2, int a log(a/b) - a + b)
std::pair<double, double> csiszar_kullback_gap(const Field& a, const Field& b, const SpatialGrid& grid);

struct BudgetInput {
    double time = 0.0;
    MomentReport moments;
    PotentialSolution potential;
    FluidState reference;
};

struct StabilityBudget {
    double time = 0.0;
    double H = 0.0;
    double H0 = 0.0;
    double G = 0.0;          // remainder, time-integrated with its boundary term
    double pairing = 0.0;    // int_0^t of the acceleration pairings
    double gronwall = 0.0;   // int_0^t ||u'||_inf H ds (no constant)
    double grad_u_inf = 0.0;
    std::vector<double> C;
    std::vector<double> slack;  // H0 + pairing + G + C*gronwall - H, per C
};

// energy-identity budget for L, S and Sprime runs; time derivatives of the
// reference by differences across the (uniformly spaced) samples, trapezoid
// quadrature in time
std::vector<StabilityBudget> stability_budget(EnergyKind kind, const std::vector<BudgetInput>& history,
                                              const BackgroundProfile& bg, double epsilon,
                                              const std::vector<double>& C = {1.0, 2.0, 5.0});

}  // namespace qn
