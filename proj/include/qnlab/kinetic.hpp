#pragma once
#include <functional>
#include <stdexcept>
#include <vector>

#include "qnlab/grids.hpp"

namespace qn {

// values[i * nv + j]: spatial index i, flat velocity index j. For a 3D
// velocity grid j = (a * n + b) * n + c with (a, b, c) the components
// (v1, v2, v_par); the 1D spatial axis is the field-aligned direction, so x
// transport uses v_par.
struct PhaseDensity {
    SpatialGrid xgrid;
    VelocityGrid vgrid;
    Field values;
    double time = 0.0;
    double epsilon = 1.0;
    double mass_scale = 1.0;  // factor applied when normalising to mass 1

    std::size_t nv() const { return vgrid.size(); }
    double mass() const;
    void validate() const;
};

struct MomentReport {
    Field rho;
    std::vector<Field> current;  // one field per velocity component
    std::vector<Field> bulk;     // current/rho above the floor, 0 below
    // second moments int f v_a v_b dv; 1D: {P}, 3D: {11,22,33,12,13,23}
    std::vector<Field> second;
    double Ti = 0.0;
    double mass = 0.0;
    double floor = 0.0;
};

struct StepOptions {
    bool magnetic = false;
    double cfl_limit = 4.0;  // max cells shifted per substep
};

struct StepReport {
    double mass_before = 0.0;
    double mass_after = 0.0;
    double clipped_mass = 0.0;
    double truncation_mass = 0.0;  // mass in the two outer cells of each v axis
    double speed_drift = 0.0;      // relative change of int f |v|^2 over the rotation
};

// rho -> E, evaluated at the mid-step density
using FieldSolver = std::function<Field(const Field& rho)>;

// Strang step: half x transport, kick, rotation (if magnetic), half x transport.
// The field is taken as given (frozen over the step).
PhaseDensity vlasov_step(const PhaseDensity& f, const Field& E, double dt, const StepOptions& opt = {},
                         StepReport* report = nullptr);
// self-consistent variant, E from the density after the first half transport
PhaseDensity vlasov_step(const PhaseDensity& f, const FieldSolver& solver, double dt, const StepOptions& opt = {},
                         StepReport* report = nullptr, Field* E_used = nullptr);

// largest dt with no substep shifting more than cfl_limit cells
double max_stable_dt(const PhaseDensity& f, const Field& E, double cfl_limit);

MomentReport moments(const PhaseDensity& f);

// u0 holds one field per velocity component (1D: the single one)
PhaseDensity cold_ion_maxwellian(const Field& rho0, const std::vector<Field>& u0, double Ti, const SpatialGrid& xg,
                                 const VelocityGrid& vg, double epsilon = 1.0);

struct ConservationResidual {
    std::vector<double> times;    // interior slice times
    std::vector<double> charge;   // ||d_t rho + d_x J||_{H^-1}
    std::vector<double> current;  // ||d_t J + d_x P - rho E||_{H^-1}, x component
};

// centred differences in time over >= 3 slices; E[k] is the field at slice k
ConservationResidual conservation_residuals(const std::vector<PhaseDensity>& fs, const std::vector<Field>& E);

// 1D line operations, exposed for testing
// periodic cubic-spline shift: out_i = S(i - s), S interpolating the input
void spline_shift_periodic(Field& line, double s);
// spectral rotation of a function on an n x n periodic plane: g(v) = f(R(-theta) v)
void rotate_plane(Field& plane, int n, double dv, double theta);

}  // namespace qn
