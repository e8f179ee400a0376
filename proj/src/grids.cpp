#include "qnlab/grids.hpp"

#include <fftw3.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace qn {

std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

namespace {

// Plans are created under a lock (the FFTW planner is not reentrant) and then
// executed concurrently through the new-array interface.
class PlanCache {
  public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }
    fftw_plan get(int rank, const std::array<int, 3>& n, int sign) {
        auto key = std::make_tuple(rank, n[0], n[1], n[2], sign);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int a = 0; a < rank; ++a) total *= static_cast<std::size_t>(n[a]);
        auto* in = fftw_alloc_complex(total);
        auto* out = fftw_alloc_complex(total);
        fftw_plan p = fftw_plan_dft(rank, n.data(), in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(key, p);
        return p;
    }
    std::size_t size() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        return plans_.size();
    }

  private:
    PlanCache() = default;
    std::map<std::tuple<int, int, int, int, int>, fftw_plan> plans_;
};

void run_fft(const SpatialGrid& g, const std::vector<cplx>& in, std::vector<cplx>& out, int sign) {
    std::array<int, 3> n{g.points[0], g.dim > 1 ? g.points[1] : 1, g.dim > 2 ? g.points[2] : 1};
    fftw_plan p = PlanCache::instance().get(g.dim, n, sign);
    out.resize(in.size());
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

void require_periodic(const SpatialGrid& g) {
    if (!g.is_periodic()) throw UnsupportedTopology("spectral operation needs a periodic grid");
}

// unravel a flat (row-major, last axis fastest) index
std::array<int, 3> unravel(const SpatialGrid& g, std::size_t k) {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = g.dim - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(k % g.points[a]);
        k /= g.points[a];
    }
    return idx;
}

double wave_sq(const SpectralField& s, std::size_t k) {
    auto idx = unravel(s.grid, k);
    double w2 = 0.0;
    for (int a = 0; a < s.grid.dim; ++a) {
        double w = s.wave_number(a, idx[a]);
        w2 += w * w;
    }
    return w2;
}

}  // namespace

SpatialGrid SpatialGrid::periodic(double length, int n, double origin) {
    SpatialGrid g;
    g.dim = 1;
    g.topology = Topology::periodic;
    g.extent = {length, 1.0, 1.0};
    g.origin = {origin, 0.0, 0.0};
    g.points = {n, 1, 1};
    g.validate();
    return g;
}

SpatialGrid SpatialGrid::periodic_nd(const std::vector<double>& lengths, const std::vector<int>& n) {
    if (lengths.size() != n.size() || n.empty() || n.size() > 3) throw ShapeError("periodic_nd: bad axis lists");
    SpatialGrid g;
    g.dim = static_cast<int>(n.size());
    g.topology = Topology::periodic;
    for (std::size_t a = 0; a < n.size(); ++a) {
        g.extent[a] = lengths[a];
        g.points[a] = n[a];
    }
    g.validate();
    return g;
}

SpatialGrid SpatialGrid::truncated_line(double radius, int n, double decay_bound) {
    SpatialGrid g;
    g.dim = 1;
    g.topology = Topology::truncated_line;
    g.extent = {2.0 * radius, 1.0, 1.0};
    g.origin = {-radius, 0.0, 0.0};
    g.points = {n, 1, 1};
    g.cutoff_radius = radius;
    g.far_field_decay = decay_bound;
    g.validate();
    return g;
}

std::size_t SpatialGrid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points[a]);
    return s;
}

double SpatialGrid::coord(int axis, int i) const {
    double h = spacing(axis);
    if (topology == Topology::truncated_line) return origin[axis] + (i + 0.5) * h;
    return origin[axis] + i * h;
}

Field SpatialGrid::coords(int axis) const {
    Field x(points[axis]);
    for (int i = 0; i < points[axis]; ++i) x[i] = coord(axis, i);
    return x;
}

double SpatialGrid::measure() const {
    double m = 1.0;
    for (int a = 0; a < dim; ++a) m *= extent[a];
    return m;
}

double SpatialGrid::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing(a);
    return v;
}

void SpatialGrid::validate() const {
    if (dim < 1 || dim > 3) throw ShapeError("spatial grid dimension must be 1, 2 or 3");
    for (int a = 0; a < dim; ++a) {
        if (points[a] < 1) throw ShapeError("grid needs at least one point per axis");
        if (!(extent[a] > 0.0)) throw ShapeError("grid extent must be positive");
    }
    if (topology == Topology::truncated_line) {
        if (dim != 1) throw UnsupportedTopology("truncated topology is one-dimensional");
        if (!(cutoff_radius > 0.0)) throw ShapeError("truncated line needs a cutoff radius");
    }
}

bool same_shape(const SpatialGrid& a, const SpatialGrid& b) {
    if (a.dim != b.dim || a.topology != b.topology) return false;
    for (int k = 0; k < a.dim; ++k) {
        if (a.points[k] != b.points[k]) return false;
        if (std::abs(a.extent[k] - b.extent[k]) > 1e-12 * a.extent[k]) return false;
    }
    return true;
}

std::size_t VelocityGrid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points);
    return s;
}

double VelocityGrid::cell_volume() const { return std::pow(spacing(), dim); }

void VelocityGrid::validate() const {
    if (dim != 1 && dim != 3) throw ShapeError("velocity grid dimension must be 1 or 3");
    if (points < 2) throw ShapeError("velocity grid needs at least two points");
    if (!(vmax > 0.0)) throw ShapeError("velocity cutoff must be positive");
}

SobolevIndex::SobolevIndex(double q) : order(q) {
    if (!(q >= 0.0)) throw DomainError("Sobolev order must be non-negative");
}

int SpectralField::wave_index(int axis, int i) const {
    int n = grid.points[axis];
    return i <= n / 2 ? i : i - n;
}

double SpectralField::wave_number(int axis, int i) const {
    return 2.0 * std::numbers::pi * wave_index(axis, i) / grid.extent[axis];
}

SpectralField transform_forward_complex(const std::vector<cplx>& values, const SpatialGrid& grid) {
    require_periodic(grid);
    if (values.size() != grid.size()) throw ShapeError("transform: field size does not match grid");
    SpectralField s;
    s.grid = grid;
    run_fft(grid, values, s.coeffs, FFTW_FORWARD);
    double inv = 1.0 / static_cast<double>(grid.size());
    for (auto& c : s.coeffs) c *= inv;
    return s;
}

SpectralField transform_forward(const Field& values, const SpatialGrid& grid) {
    std::vector<cplx> c(values.begin(), values.end());
    return transform_forward_complex(c, grid);
}

std::vector<cplx> transform_inverse_complex(const SpectralField& s) {
    require_periodic(s.grid);
    std::vector<cplx> out;
    run_fft(s.grid, s.coeffs, out, FFTW_BACKWARD);
    return out;
}

Field transform_inverse(const SpectralField& s) {
    auto c = transform_inverse_complex(s);
    Field out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = c[k].real();
    return out;
}

double sobolev_norm(const SpectralField& s, const SobolevIndex& index) {
    double sum = 0.0;
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
        const cplx& c = s.coeffs[k];
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw NumericError("sobolev_norm: non-finite coefficient");
        double a2 = std::norm(c);
        if (a2 == 0.0) continue;
        sum += std::pow(1.0 + wave_sq(s, k), index.order) * a2;
    }
    return std::sqrt(sum);
}

double sobolev_norm(const Field& values, const SpatialGrid& grid, double order) {
    return sobolev_norm(transform_forward(values, grid), SobolevIndex(order));
}

double negative_norm(const Field& values, const SpatialGrid& grid) {
    if (!grid.is_periodic()) {
        // <r, (1 - Lap_h)^{-1} r> with the zero-Dirichlet three-point Laplacian
        std::size_t n = values.size();
        double h = grid.spacing(0), k = 1.0 / (h * h);
        Field c(n), d(n), y(n);
        auto diag = [&](std::size_t i) { return 1.0 + 2.0 * k + ((i == 0 || i + 1 == n) ? k : 0.0); };
        c[0] = -k / diag(0);
        d[0] = values[0] / diag(0);
        for (std::size_t i = 1; i < n; ++i) {
            double den = diag(i) + k * c[i - 1];
            c[i] = -k / den;
            d[i] = (values[i] + k * d[i - 1]) / den;
        }
        y[n - 1] = d[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) y[i] = d[i] - c[i] * y[i + 1];
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[i] * y[i];
        return std::sqrt(std::max(s * h, 0.0));
    }
    auto s = transform_forward(values, grid);
    double sum = 0.0;
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) sum += std::norm(s.coeffs[k]) / (1.0 + wave_sq(s, k));
    return std::sqrt(sum * grid.measure());
}

double quadrature(const Field& values, const SpatialGrid& grid) {
    if (values.size() != grid.size()) throw ShapeError("quadrature: values do not match spatial grid");
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
}

double quadrature(const Field& values, const VelocityGrid& grid) {
    if (values.size() != grid.size()) throw ShapeError("quadrature: values do not match velocity grid");
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_volume();
}

double l2_norm(const Field& values, const SpatialGrid& grid) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s * grid.cell_volume());
}

std::vector<double> wave_numbers(const SpatialGrid& grid, int axis) {
    SpectralField probe;
    probe.grid = grid;
    std::vector<double> k(grid.points[axis]);
    for (int i = 0; i < grid.points[axis]; ++i) k[i] = probe.wave_number(axis, i);
    return k;
}

Field spectral_derivative(const Field& values, const SpatialGrid& grid, int axis, int order) {
    auto s = transform_forward(values, grid);
    int n = grid.points[axis];
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
        auto idx = unravel(grid, k);
        int i = idx[axis];
        double w = s.wave_number(axis, i);
        // the Nyquist mode has no real odd derivative
        if (order % 2 == 1 && n % 2 == 0 && i == n / 2) {
            s.coeffs[k] = 0.0;
            continue;
        }
        cplx f = std::pow(cplx(0.0, w), order);
        s.coeffs[k] *= f;
    }
    return transform_inverse(s);
}

Field centered_difference(const Field& values, const SpatialGrid& grid) {
    int n = grid.points[0];
    if (static_cast<int>(values.size()) != n || grid.dim != 1) throw ShapeError("centered_difference: 1D field expected");
    double h = grid.spacing(0);
    Field d(n);
    for (int i = 0; i < n; ++i) {
        double l, r;
        if (grid.is_periodic()) {
            l = values[(i - 1 + n) % n];
            r = values[(i + 1) % n];
        } else {
            // odd reflection: zero value on the boundary face
            l = i > 0 ? values[i - 1] : -values[0];
            r = i < n - 1 ? values[i + 1] : -values[n - 1];
        }
        d[i] = (r - l) / (2.0 * h);
    }
    return d;
}

Field gradient(const Field& values, const SpatialGrid& grid, int axis) {
    if (grid.is_periodic()) return spectral_derivative(values, grid, axis, 1);
    return centered_difference(values, grid);
}

void dealias(SpectralField& s) {
    for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
        auto idx = unravel(s.grid, k);
        for (int a = 0; a < s.grid.dim; ++a) {
            if (3 * std::abs(s.wave_index(a, idx[a])) > s.grid.points[a]) {
                s.coeffs[k] = 0.0;
                break;
            }
        }
    }
}

Field dealiased_product(const Field& a, const Field& b, const SpatialGrid& grid) {
    auto sa = transform_forward(a, grid);
    auto sb = transform_forward(b, grid);
    dealias(sa);
    dealias(sb);
    Field fa = transform_inverse(sa), fb = transform_inverse(sb);
    Field p(fa.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = fa[k] * fb[k];
    auto sp = transform_forward(p, grid);
    dealias(sp);
    return transform_inverse(sp);
}

Field spectral_cutoff(const Field& values, const SpatialGrid& grid, double radius) {
    auto s = transform_forward(values, grid);
    for (std::size_t k = 0; k < s.coeffs.size(); ++k)
        if (std::sqrt(wave_sq(s, k)) > radius * (1.0 + 1e-12)) s.coeffs[k] = 0.0;
    return transform_inverse(s);
}

std::size_t fft_plan_cache_size() { return PlanCache::instance().size(); }

}  // namespace qn
