#pragma once
#include <functional>
#include <vector>

#include "qnlab/grids.hpp"
#include "qnlab/poisson.hpp"

namespace qn {

// log_ratio = log(rho/d); d = 1 for shallow water and Euler-Poisson.
// velocity holds one field (u) or three (w1, w2, w_par) for the magnetized system.
struct FluidState {
    SpatialGrid grid;
    Field log_ratio;
    std::vector<Field> velocity;
    double T = 0.0;  // ion temperature, Euler-Poisson only
    double epsilon = 1.0;
    double time = 0.0;
    Field potential;  // last Poisson solution (Euler-Poisson), warm start

    Field density(const Field& d) const;
    Field density() const;  // d = 1
    void validate() const;
};

FluidState make_fluid_state(const SpatialGrid& grid, const Field& rho, const std::vector<Field>& u, const Field& d);

// manufactured forcing: adds (s_rho, s_mom) to the conservative right-hand side
struct FluidForcing {
    std::function<void(double t, const Field& x, Field& s_rho, Field& s_mom)> fn;
};

struct FluidOptions {
    double cfl = 0.4;
    double vacuum_floor = 0.0;  // rho <= floor rejects the step
    const FluidForcing* forcing = nullptr;
    NewtonOptions newton{};  // Euler-Poisson closure
};

// symmetrized isothermal Euler with confinement, p = rho, force -rho H'
FluidState euler_isothermal_step(const FluidState& s, const BackgroundProfile& bg, double dt,
                                 const FluidOptions& opt = {});
// p = rho^2 / 2, no background
FluidState shallow_water_step(const FluidState& s, double dt, const FluidOptions& opt = {});
// parallel isothermal Euler for (rho, w_par), w1 and w2 carried passively
FluidState euler_magnetized_step(const FluidState& s, const BackgroundProfile& bg, double dt,
                                 const FluidOptions& opt = {});
// p = T rho, force -rho V' with -eps V'' = rho - e^V solved at every stage
FluidState euler_poisson_step(const FluidState& s, double dt, const FluidOptions& opt = {});

// quasineutral limit of Euler-Poisson: isothermal Euler with p = (T + 1) rho
FluidState euler_quasineutral_step(const FluidState& s, double dt, const FluidOptions& opt = {});

enum class FluidSystem { isothermal, shallow_water, magnetized, euler_poisson, quasineutral };

// largest dt allowed by the CFL number for the system's wave speeds
double fluid_max_dt(const FluidState& s, FluidSystem sys, double cfl);

// max |d_x u_par|; the classical solution is considered lost above a threshold
double gradient_monitor(const FluidState& s);
bool classical_solution_lost(const FluidState& s, double threshold);

}  // namespace qn
