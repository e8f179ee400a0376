#pragma once
#include <functional>
#include <stdexcept>
#include <vector>

#include "qnlab/grids.hpp"

namespace qn {

struct BackgroundProfile {
    Field H;
    Field gradH;
    Field d;  // exp(-H)
};

BackgroundProfile background_from_H(const SpatialGrid& grid, const Field& H, const Field& gradH);
// H = sqrt(1+x^2) + shift; shift = -log(n0) carries the normalising constant
BackgroundProfile confining_background(const SpatialGrid& grid, double shift = 0.0);
BackgroundProfile uniform_background(const SpatialGrid& grid);
// periodic H given by a function; gradient taken spectrally
BackgroundProfile periodic_background(const SpatialGrid& grid, const std::function<double(double)>& H);

struct PotentialSolution {
    Field V;
    Field E;
    Field m;  // electron density for the closure
    // V' for field energies: spectral at nodes (periodic) or the n+1 face
    // differences of the boundary-consistent potential (truncated line)
    Field dV;
    int newton_iterations = 0;
    int outer_iterations = 0;
    double residual = 0.0;
    double lambda = 1.0;  // normalisation integral, (S') only
    std::vector<double> residual_history;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double armijo = 1e-4;
    int max_backtracks = 60;
};

struct SolverError : std::runtime_error {
    std::vector<double> history;
    SolverError(const std::string& what, std::vector<double> h) : std::runtime_error(what), history(std::move(h)) {}
};

// -eps V'' = rho - d e^V
PotentialSolution solve_poisson_S(const Field& rho, const BackgroundProfile& bg, const SpatialGrid& grid, double eps,
                                  const NewtonOptions& opt = {}, const Field* guess = nullptr);
// -eps V'' = rho - d e^V / int d e^V, gauge V(centre) = 0
PotentialSolution solve_poisson_Sprime(const Field& rho, const BackgroundProfile& bg, const SpatialGrid& grid,
                                       double eps, const NewtonOptions& opt = {}, const Field* guess = nullptr);
// V - eps V'' = rho - 1, exact in Fourier space
PotentialSolution solve_poisson_L(const Field& rho, const SpatialGrid& grid, double eps);

Field quasineutral_potential(const Field& rho, const BackgroundProfile& bg);

// -eps * Laplacian with the topology's discretisation
Field apply_neg_laplacian(const Field& V, const SpatialGrid& grid, double eps);
// residual of the (S) closure for a given potential
Field residual_S(const Field& V, const Field& rho, const Field& d, const SpatialGrid& grid, double eps);
// electric field -V' consistent with the Laplacian
Field electric_field(const Field& V, const SpatialGrid& grid);
// face differences (V_{i+1}-V_i)/h including Dirichlet boundary faces; for
// field energies consistent with the discrete Laplacian on the truncated line
Field face_gradient(const Field& V, const SpatialGrid& grid);

}  // namespace qn
