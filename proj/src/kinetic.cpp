#include "qnlab/kinetic.hpp"

#include <fftw3.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace qn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// batched r2c/c2r plans over contiguous lines
struct LinePlans {
    fftw_plan fwd;
    fftw_plan bwd;
};

LinePlans line_plans(int n, int howmany) {
    static std::map<std::pair<int, int>, LinePlans> cache;
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    auto key = std::make_pair(n, howmany);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    int nc = n / 2 + 1;
    double* r = fftw_alloc_real(static_cast<std::size_t>(n) * howmany);
    fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(nc) * howmany);
    LinePlans p;
    p.fwd = fftw_plan_many_dft_r2c(1, &n, howmany, r, nullptr, 1, n, c, nullptr, 1, nc,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.bwd = fftw_plan_many_dft_c2r(1, &n, howmany, c, nullptr, 1, nc, r, nullptr, 1, n,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
    fftw_free(r);
    fftw_free(c);
    cache.emplace(key, p);
    return p;
}

enum class ShiftKind { spline, spectral };

// Shift every line (contiguous, length n) by shifts[l] cells, periodically.
// Spline: transfer function b_s(k)/b_0(k) of the interpolating cubic B-spline.
// Spectral: exact band-limited translation exp(-2 pi i k s / n).
void shift_lines(Field& buf, int n, int lines, const std::vector<double>& shifts, ShiftKind kind) {
    if (lines == 0 || n < 2) return;
    int nc = n / 2 + 1;
    auto plans = line_plans(n, lines);
    std::vector<cplx> spec(static_cast<std::size_t>(nc) * lines);
    auto* cs = reinterpret_cast<fftw_complex*>(spec.data());
    fftw_execute_dft_r2c(plans.fwd, buf.data(), cs);

    std::vector<cplx> omega(n);  // exp(-2 pi i m / n)
    for (int m = 0; m < n; ++m) omega[m] = std::polar(1.0, -kTwoPi * m / n);
    std::vector<double> b0(nc);
    for (int k = 0; k < nc; ++k) b0[k] = (4.0 + 2.0 * std::cos(kTwoPi * k / n)) / 6.0;

    double inv = 1.0 / n;
    for (int l = 0; l < lines; ++l) {
        double s = shifts[l];
        cplx* L = spec.data() + static_cast<std::size_t>(l) * nc;
        if (s == 0.0) {
            for (int k = 0; k < nc; ++k) L[k] *= inv;
            continue;
        }
        if (kind == ShiftKind::spectral) {
            for (int k = 0; k < nc; ++k) L[k] *= std::polar(inv, -kTwoPi * k * s / n);
            continue;
        }
        double fl = std::floor(s);
        double t = s - fl;
        long ifl = static_cast<long>(fl);
        // weights of B3(m - s) at m = fl-1 .. fl+2
        double w0 = (1 - t) * (1 - t) * (1 - t) / 6.0;
        double w1 = 2.0 / 3.0 - t * t + 0.5 * t * t * t;
        double u = 1 - t;
        double w2 = 2.0 / 3.0 - u * u + 0.5 * u * u * u;
        double w3 = t * t * t / 6.0;
        for (int k = 0; k < nc; ++k) {
            auto idx = [&](long m) {
                long r = (static_cast<long>(k) * m) % n;
                if (r < 0) r += n;
                return omega[r];
            };
            cplx bs = idx(ifl) * (w0 * idx(-1) + w1 + w2 * omega[k] + w3 * idx(2));
            L[k] *= bs * (inv / b0[k]);
        }
    }
    fftw_execute_dft_c2r(plans.bwd, cs, buf.data());
}

void require_finite(const Field& E) {
    for (double e : E)
        if (!std::isfinite(e)) throw NumericError("vlasov_step: non-finite electric field");
}

int x_component(const VelocityGrid& vg) { return vg.dim == 1 ? 0 : 2; }

// node value of the transport velocity for flat velocity index j
double transport_velocity(const VelocityGrid& vg, std::size_t j) {
    int n = vg.points;
    return vg.node(static_cast<int>(vg.dim == 1 ? j : j % n));
}

// padding used on the truncated line so zero inflow never wraps around
int pad_for(double cfl) { return static_cast<int>(std::ceil(cfl)) + 8; }

void x_transport(Field& vals, const SpatialGrid& xg, const VelocityGrid& vg, double dt, double cfl) {
    int nx = xg.points[0];
    std::size_t nv = vg.size();
    bool periodic = xg.is_periodic();
    int pad = periodic ? 0 : pad_for(cfl);
    int n = nx + 2 * pad;
    double h = xg.spacing(0);
    Field buf(static_cast<std::size_t>(n) * nv, 0.0);
    for (int i = 0; i < nx; ++i) {
        const double* row = vals.data() + static_cast<std::size_t>(i) * nv;
        for (std::size_t j = 0; j < nv; ++j) buf[j * n + (i + pad)] = row[j];
    }
    std::vector<double> shifts(nv);
    for (std::size_t j = 0; j < nv; ++j) shifts[j] = transport_velocity(vg, j) * dt / h;
    shift_lines(buf, n, static_cast<int>(nv), shifts, ShiftKind::spline);
    for (int i = 0; i < nx; ++i) {
        double* row = vals.data() + static_cast<std::size_t>(i) * nv;
        for (std::size_t j = 0; j < nv; ++j) row[j] = buf[j * n + (i + pad)];
    }
}

void v_kick(Field& vals, const SpatialGrid& xg, const VelocityGrid& vg, const Field& E, double dt) {
    int nx = xg.points[0];
    int n = vg.points;
    double dv = vg.spacing();
    std::size_t nv = vg.size();
    int per_x = static_cast<int>(nv / n);  // lines along v_par per spatial point
    std::vector<double> shifts(static_cast<std::size_t>(nx) * per_x);
    for (int i = 0; i < nx; ++i)
        for (int l = 0; l < per_x; ++l) shifts[static_cast<std::size_t>(i) * per_x + l] = E[i] * dt / dv;
    // v_par is the fastest index, so lines are already contiguous
    shift_lines(vals, n, nx * per_x, shifts, ShiftKind::spline);
}

// g(v) = f(-v) on the (a, b) plane: index j -> (n - j) mod n
void flip_plane(Field& plane, int n) {
    Field out(plane.size());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out[a * n + b] = plane[((n - a) % n) * n + (n - b) % n];
    plane.swap(out);
}

double second_moment_total(const Field& vals, const VelocityGrid& vg, std::size_t nx, double vol) {
    std::size_t nv = vg.size();
    int n = vg.points;
    double s = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nv; ++j) {
            double v2 = 0.0;
            if (vg.dim == 1) {
                double v = vg.node(static_cast<int>(j));
                v2 = v * v;
            } else {
                double a = vg.node(static_cast<int>(j / (n * n))), b = vg.node(static_cast<int>(j / n % n)),
                       c = vg.node(static_cast<int>(j % n));
                v2 = a * a + b * b + c * c;
            }
            s += vals[i * nv + j] * v2;
        }
    return s * vol;
}

void magnetic_rotation(Field& vals, const SpatialGrid& xg, const VelocityGrid& vg, double angle) {
    int nx = xg.points[0];
    int n = vg.points;
    std::size_t nv = vg.size();
    Field plane(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < nx; ++i)
        for (int c = 0; c < n; ++c) {
            double* base = vals.data() + static_cast<std::size_t>(i) * nv;
            for (int ab = 0; ab < n * n; ++ab) plane[ab] = base[static_cast<std::size_t>(ab) * n + c];
            rotate_plane(plane, n, vg.spacing(), angle);
            for (int ab = 0; ab < n * n; ++ab) base[static_cast<std::size_t>(ab) * n + c] = plane[ab];
        }
}

double truncation_mass(const Field& vals, const VelocityGrid& vg, std::size_t nx, double vol) {
    std::size_t nv = vg.size();
    int n = vg.points;
    auto outer = [n](int j) { return j < 2 || j >= n - 2; };
    double s = 0.0;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < nv; ++j) {
            bool hit;
            if (vg.dim == 1)
                hit = outer(static_cast<int>(j));
            else
                hit = outer(static_cast<int>(j / (n * n))) || outer(static_cast<int>(j / n % n)) ||
                      outer(static_cast<int>(j % n));
            if (hit) s += std::abs(vals[i * nv + j]);
        }
    return s * vol;
}

void check_cfl(const PhaseDensity& f, const Field& E, double dt, double cfl) {
    double lim = max_stable_dt(f, E, cfl);
    if (dt > lim) {
        throw StepRejected("vlasov_step: dt " + std::to_string(dt) + " violates the shift limit", 0.9 * lim);
    }
}

PhaseDensity step_impl(const PhaseDensity& f, const Field* Efixed, const FieldSolver* solver, double dt,
                       const StepOptions& opt, StepReport* report, Field* E_used) {
    f.validate();
    if (!(dt > 0.0)) throw DomainError("vlasov_step: dt must be positive");
    if (opt.magnetic && f.vgrid.dim != 3) throw ShapeError("magnetic rotation needs a 3D velocity grid");
    std::size_t nx = f.xgrid.size();
    double vol = f.xgrid.cell_volume() * f.vgrid.cell_volume();
    StepReport rep;
    rep.mass_before = f.mass();

    PhaseDensity g = f;
    if (Efixed) {
        if (Efixed->size() != nx) throw ShapeError("vlasov_step: field size does not match grid");
        require_finite(*Efixed);
        check_cfl(f, *Efixed, dt, opt.cfl_limit);
    } else {
        check_cfl(f, Field(nx, 0.0), dt, opt.cfl_limit);
    }
    x_transport(g.values, g.xgrid, g.vgrid, 0.5 * dt, opt.cfl_limit);
    Field E;
    if (Efixed) {
        E = *Efixed;
    } else {
        E = (*solver)(moments(g).rho);
        if (E.size() != nx) throw ShapeError("field solver returned a field of the wrong size");
        require_finite(E);
        check_cfl(f, E, dt, opt.cfl_limit);
    }
    v_kick(g.values, g.xgrid, g.vgrid, E, dt);
    if (opt.magnetic) {
        double before = second_moment_total(g.values, g.vgrid, nx, vol);
        magnetic_rotation(g.values, g.xgrid, g.vgrid, -dt / f.epsilon);
        double after = second_moment_total(g.values, g.vgrid, nx, vol);
        rep.speed_drift = before != 0.0 ? (after - before) / before : 0.0;
        spdlog::debug("rotation: relative int f|v|^2 drift {:.3e}", rep.speed_drift);
    }
    x_transport(g.values, g.xgrid, g.vgrid, 0.5 * dt, opt.cfl_limit);

    // clip negatives, then rescale so the signed mass is kept
    double signed_mass = 0.0, clipped = 0.0;
    for (double& v : g.values) {
        signed_mass += v;
        if (v < 0.0) {
            clipped -= v;
            v = 0.0;
        }
    }
    if (clipped > 0.0) {
        double positive = signed_mass + clipped;
        double s = positive > 0.0 ? signed_mass / positive : 1.0;
        for (double& v : g.values) v *= s;
        rep.clipped_mass = clipped * vol;
        spdlog::debug("vlasov_step: clipped mass {:.3e}, rescaled by {:.15f}", rep.clipped_mass, s);
    }
    g.time = f.time + dt;
    rep.mass_after = g.mass();
    rep.truncation_mass = truncation_mass(g.values, g.vgrid, nx, vol);
    if (report) *report = rep;
    if (E_used) *E_used = E;
    return g;
}

}  // namespace

double PhaseDensity::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * xgrid.cell_volume() * vgrid.cell_volume();
}

void PhaseDensity::validate() const {
    xgrid.validate();
    vgrid.validate();
    if (xgrid.dim != 1) throw ShapeError("phase density: only 1D spatial grids are supported");
    if (values.size() != xgrid.size() * vgrid.size()) throw ShapeError("phase density: values do not match grids");
    if (!(epsilon > 0.0)) throw DomainError("phase density: epsilon must be positive");
}

void spline_shift_periodic(Field& line, double s) {
    shift_lines(line, static_cast<int>(line.size()), 1, {s}, ShiftKind::spline);
}

void rotate_plane(Field& plane, int n, double dv, double theta) {
    if (plane.size() != static_cast<std::size_t>(n) * n) throw ShapeError("rotate_plane: size mismatch");
    theta = std::remainder(theta, kTwoPi);
    if (std::abs(theta) > 0.5 * std::numbers::pi) {
        flip_plane(plane, n);
        theta -= std::copysign(std::numbers::pi, theta);
    }
    if (theta == 0.0) return;
    double t = std::tan(0.5 * theta), sn = std::sin(theta);
    double vmax = 0.5 * n * dv;
    auto node = [&](int j) { return -vmax + j * dv; };
    Field lines(plane.size());
    std::vector<double> shifts(n);
    // shear along v1 (index a): new(v1, v2) = old(v1 + t v2, v2)
    auto shear_a = [&]() {
        for (int b = 0; b < n; ++b) {
            for (int a = 0; a < n; ++a) lines[b * n + a] = plane[a * n + b];
            shifts[b] = -t * node(b) / dv;
        }
        shift_lines(lines, n, n, shifts, ShiftKind::spectral);
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a) plane[a * n + b] = lines[b * n + a];
    };
    shear_a();
    // shear along v2 (index b): new(v1, v2) = old(v1, v2 - sin(theta) v1)
    for (int a = 0; a < n; ++a) shifts[a] = sn * node(a) / dv;
    shift_lines(plane, n, n, shifts, ShiftKind::spectral);
    shear_a();
}

double max_stable_dt(const PhaseDensity& f, const Field& E, double cfl_limit) {
    double vx = f.vgrid.vmax;
    double emax = 0.0;
    for (double e : E) emax = std::max(emax, std::abs(e));
    // half steps move vx*dt/2; the kick moves |E| dt
    double lim = 2.0 * cfl_limit * f.xgrid.spacing(0) / vx;
    if (emax > 0.0) lim = std::min(lim, cfl_limit * f.vgrid.spacing() / emax);
    return lim;
}

PhaseDensity vlasov_step(const PhaseDensity& f, const Field& E, double dt, const StepOptions& opt,
                         StepReport* report) {
    return step_impl(f, &E, nullptr, dt, opt, report, nullptr);
}

PhaseDensity vlasov_step(const PhaseDensity& f, const FieldSolver& solver, double dt, const StepOptions& opt,
                         StepReport* report, Field* E_used) {
    return step_impl(f, nullptr, &solver, dt, opt, report, E_used);
}

MomentReport moments(const PhaseDensity& f) {
    f.validate();
    const auto& vg = f.vgrid;
    std::size_t nx = f.xgrid.size(), nv = vg.size();
    int n = vg.points, d = vg.dim;
    double dvol = vg.cell_volume();
    MomentReport r;
    r.rho.assign(nx, 0.0);
    r.current.assign(d, Field(nx, 0.0));
    r.bulk.assign(d, Field(nx, 0.0));
    r.second.assign(d == 1 ? 1 : 6, Field(nx, 0.0));
    std::vector<double> nodes(n);
    for (int j = 0; j < n; ++j) nodes[j] = vg.node(j);
    double trace_total = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double* row = f.values.data() + i * nv;
        double rho = 0.0, J[3] = {0, 0, 0}, P[6] = {0, 0, 0, 0, 0, 0};
        if (d == 1) {
            for (int j = 0; j < n; ++j) {
                double v = nodes[j], w = row[j];
                rho += w;
                J[0] += w * v;
                P[0] += w * v * v;
            }
        } else {
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c) {
                        double w = row[(a * n + b) * n + c];
                        double v1 = nodes[a], v2 = nodes[b], v3 = nodes[c];
                        rho += w;
                        J[0] += w * v1;
                        J[1] += w * v2;
                        J[2] += w * v3;
                        P[0] += w * v1 * v1;
                        P[1] += w * v2 * v2;
                        P[2] += w * v3 * v3;
                        P[3] += w * v1 * v2;
                        P[4] += w * v1 * v3;
                        P[5] += w * v2 * v3;
                    }
        }
        r.rho[i] = rho * dvol;
        for (int a = 0; a < d; ++a) r.current[a][i] = J[a] * dvol;
        for (std::size_t a = 0; a < r.second.size(); ++a) r.second[a][i] = P[a] * dvol;
    }
    double rmax = *std::max_element(r.rho.begin(), r.rho.end());
    r.floor = 1e-12 * std::max(rmax, 0.0);
    double h = f.xgrid.cell_volume();
    for (std::size_t i = 0; i < nx; ++i) {
        double tr = 0.0;
        for (int a = 0; a < d; ++a) tr += r.second[a][i];
        double rho = r.rho[i];
        if (rho > r.floor && rho > 0.0) {
            double j2 = 0.0;
            for (int a = 0; a < d; ++a) {
                r.bulk[a][i] = r.current[a][i] / rho;
                j2 += r.current[a][i] * r.current[a][i];
            }
            tr -= j2 / rho;
        }
        trace_total += tr * h;
        r.mass += rho * h;
    }
    r.Ti = r.mass > 0.0 ? std::max(trace_total, 0.0) / (d * r.mass) : 0.0;
    return r;
}

PhaseDensity cold_ion_maxwellian(const Field& rho0, const std::vector<Field>& u0, double Ti, const SpatialGrid& xg,
                                 const VelocityGrid& vg, double epsilon) {
    xg.validate();
    vg.validate();
    if (!(Ti > 0.0)) throw DomainError("cold_ion_maxwellian: Ti must be positive");
    std::size_t nx = xg.size();
    if (rho0.size() != nx) throw ShapeError("cold_ion_maxwellian: rho0 does not match grid");
    if (static_cast<int>(u0.size()) != vg.dim) throw ShapeError("cold_ion_maxwellian: need one u0 field per v component");
    for (const auto& u : u0)
        if (u.size() != nx) throw ShapeError("cold_ion_maxwellian: u0 does not match grid");
    for (double r : rho0)
        if (!(r > 0.0)) throw DomainError("cold_ion_maxwellian: rho0 must be positive");

    double sigma = std::sqrt(Ti);
    double dv = vg.spacing();
    double tail = 0.0, umax = 0.0;
    for (const auto& u : u0) {
        double m = 0.0;
        for (double x : u) m = std::max(m, std::abs(x));
        umax = std::max(umax, m);
        // mass beyond the outermost cell faces, worst point
        tail += std::erfc((vg.vmax - 0.5 * dv - m) / (std::sqrt(2.0) * sigma));
    }
    if (tail > 1e-8)
        throw DomainError("cold_ion_maxwellian: velocity cutoff too small, truncated mass " + std::to_string(tail));
    if (vg.vmax < 8.0 * sigma + umax)
        spdlog::warn("cold_ion_maxwellian: vmax {} below 8 sigma + max|u0| = {}", vg.vmax, 8.0 * sigma + umax);

    PhaseDensity f;
    f.xgrid = xg;
    f.vgrid = vg;
    f.epsilon = epsilon;
    std::size_t nv = vg.size();
    int n = vg.points;
    f.values.assign(nx * nv, 0.0);
    double norm = std::pow(kTwoPi * Ti, -0.5 * vg.dim);
    std::vector<double> nodes(n);
    for (int j = 0; j < n; ++j) nodes[j] = vg.node(j);
    for (std::size_t i = 0; i < nx; ++i) {
        double* row = f.values.data() + i * nv;
        if (vg.dim == 1) {
            for (int j = 0; j < n; ++j) {
                double w = nodes[j] - u0[0][i];
                row[j] = rho0[i] * norm * std::exp(-w * w / (2.0 * Ti));
            }
        } else {
            std::vector<double> g[3];
            for (int a = 0; a < 3; ++a) {
                g[a].resize(n);
                for (int j = 0; j < n; ++j) {
                    double w = nodes[j] - u0[a][i];
                    g[a][j] = std::exp(-w * w / (2.0 * Ti));
                }
            }
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c) row[(a * n + b) * n + c] = rho0[i] * norm * g[0][a] * g[1][b] * g[2][c];
        }
    }
    double M = f.mass();
    f.mass_scale = 1.0 / M;
    for (double& v : f.values) v *= f.mass_scale;
    return f;
}

ConservationResidual conservation_residuals(const std::vector<PhaseDensity>& fs, const std::vector<Field>& E) {
    if (fs.size() < 3) throw ShapeError("conservation_residuals: need at least three slices");
    if (E.size() != fs.size()) throw ShapeError("conservation_residuals: one field per slice");
    for (const auto& f : fs) {
        if (!same_shape(f.xgrid, fs[0].xgrid) || f.vgrid.points != fs[0].vgrid.points ||
            f.vgrid.dim != fs[0].vgrid.dim || std::abs(f.vgrid.vmax - fs[0].vgrid.vmax) > 1e-14 * fs[0].vgrid.vmax)
            throw ShapeError("conservation_residuals: mismatched grids");
    }
    const auto& xg = fs[0].xgrid;
    for (const auto& e : E)
        if (e.size() != xg.size()) throw ShapeError("conservation_residuals: field size mismatch");
    int ax = x_component(fs[0].vgrid);
    int pxx = fs[0].vgrid.dim == 1 ? 0 : 2;
    std::vector<MomentReport> m;
    m.reserve(fs.size());
    for (const auto& f : fs) m.push_back(moments(f));
    ConservationResidual out;
    for (std::size_t k = 1; k + 1 < fs.size(); ++k) {
        double dt2 = fs[k + 1].time - fs[k - 1].time;
        if (!(dt2 > 0.0)) throw DomainError("conservation_residuals: slice times must increase");
        Field dJ = gradient(m[k].current[ax], xg);
        Field dP = gradient(m[k].second[pxx], xg);
        Field rc(xg.size()), rj(xg.size());
        for (std::size_t i = 0; i < xg.size(); ++i) {
            rc[i] = (m[k + 1].rho[i] - m[k - 1].rho[i]) / dt2 + dJ[i];
            rj[i] = (m[k + 1].current[ax][i] - m[k - 1].current[ax][i]) / dt2 + dP[i] - m[k].rho[i] * E[k][i];
        }
        out.times.push_back(fs[k].time);
        out.charge.push_back(negative_norm(rc, xg));
        out.current.push_back(negative_norm(rj, xg));
    }
    return out;
}

}  // namespace qn
