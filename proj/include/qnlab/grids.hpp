#pragma once
#include <mutex>
#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qn {

using cplx = std::complex<double>;
using Field = std::vector<double>;

struct UnsupportedTopology : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// a time step refused by a stepper; suggested_dt <= 0 when no smaller step helps
struct StepRejected : std::runtime_error {
    double suggested_dt;
    StepRejected(const std::string& w, double dt) : std::runtime_error(w), suggested_dt(dt) {}
};

enum class Topology { periodic, truncated_line };

// Uniform tensor grid. Periodic nodes sit at origin + i*h; truncated-line
// points are cell centres of [-R, R], so spacing*points == extent either way.
struct SpatialGrid {
    int dim = 1;
    Topology topology = Topology::periodic;
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<int, 3> points{1, 1, 1};
    double cutoff_radius = 0.0;    // truncated line only
    double far_field_decay = 0.0;  // declared bound on d = e^{-H} at +-R

    static SpatialGrid periodic(double length, int n, double origin = 0.0);
    static SpatialGrid periodic_nd(const std::vector<double>& lengths, const std::vector<int>& n);
    static SpatialGrid truncated_line(double radius, int n, double decay_bound);

    double spacing(int axis = 0) const { return extent[axis] / points[axis]; }
    std::size_t size() const;
    double coord(int axis, int i) const;
    Field coords(int axis = 0) const;
    double measure() const;
    double cell_volume() const;
    bool is_periodic() const { return topology == Topology::periodic; }
    int center_index() const { return points[0] / 2; }
    void validate() const;
};

bool same_shape(const SpatialGrid& a, const SpatialGrid& b);

// Symmetric velocity grid, nodes -vmax + j*dv with dv = 2 vmax / n. It holds
// v and -v up to the one-cell offset at -vmax.
struct VelocityGrid {
    int dim = 1;
    double vmax = 1.0;
    int points = 2;

    double spacing() const { return 2.0 * vmax / points; }
    double node(int j) const { return -vmax + j * spacing(); }
    std::size_t size() const;
    double cell_volume() const;
    void validate() const;
};

struct SobolevIndex {
    double order = 0.0;
    explicit SobolevIndex(double q);
};

struct SpectralField {
    std::vector<cplx> coeffs;
    SpatialGrid grid;

    // signed integer wave index for storage index i along an axis
    int wave_index(int axis, int i) const;
    // physical wave number 2*pi*xi/extent
    double wave_number(int axis, int i) const;
};

SpectralField transform_forward(const Field& values, const SpatialGrid& grid);
// complex input variant, used for convolutions and shifts
SpectralField transform_forward_complex(const std::vector<cplx>& values, const SpatialGrid& grid);
Field transform_inverse(const SpectralField& s);
std::vector<cplx> transform_inverse_complex(const SpectralField& s);

double sobolev_norm(const SpectralField& s, const SobolevIndex& index);
double sobolev_norm(const Field& values, const SpatialGrid& grid, double order);
// H^{-1} norm: spectral (1+|xi'|^2)^{-1} weights on periodic grids, the
// discrete (1 - Lap)^{-1} pairing on the truncated line
double negative_norm(const Field& values, const SpatialGrid& grid);

double quadrature(const Field& values, const SpatialGrid& grid);
double quadrature(const Field& values, const VelocityGrid& grid);
double l2_norm(const Field& values, const SpatialGrid& grid);

// physical wave numbers along an axis, storage order
std::vector<double> wave_numbers(const SpatialGrid& grid, int axis = 0);

// derivative along an axis: spectral on periodic grids, centred second order
// with zero-Dirichlet ghosts on the truncated line
Field gradient(const Field& values, const SpatialGrid& grid, int axis = 0);
Field spectral_derivative(const Field& values, const SpatialGrid& grid, int axis = 0, int order = 1);
Field centered_difference(const Field& values, const SpatialGrid& grid);

// 2/3-rule truncation of a spectral field in place
void dealias(SpectralField& s);
Field dealiased_product(const Field& a, const Field& b, const SpatialGrid& grid);
Field spectral_cutoff(const Field& values, const SpatialGrid& grid, double radius);

// number of FFTW plans currently cached (diagnostic)
std::size_t fft_plan_cache_size();
// every FFTW planner call in the library goes through this lock
std::mutex& fftw_planner_mutex();

}  // namespace qn
