#include "qnlab/gyro.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qn {

namespace {

Field zeros_like(const Field& a) { return Field(a.size(), 0.0); }

Field dx(const Field& a, const SpatialGrid& g) { return spectral_derivative(a, g, 0, 1); }

Field mul(const Field& a, const Field& b) {
    Field r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
}

void axpy(Field& y, double a, const Field& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Field sub(const Field& a, const Field& b) {
    Field r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

// the complement of a single-mode cutoff
Field above_cutoff(const Field& a, const SpatialGrid& g, double K) { return sub(a, spectral_cutoff(a, g, K)); }

// z-formulas for a given matrix M in place of Sigma and given (l, w) inputs:
//   zr  = -cut(d(Mw)_1 - H'(Mw)_1) - pair((Mw)_1, l')
//   zw_i = -cut((M grad l)_i) - pair((Mw)_1, w_i')
void z_formulas(const Field& l, const std::vector<Field>& w, const Field& dH, const SpatialGrid& g, const Mat3& M,
                double K, PairMode mode, Field& zr, std::vector<Field>& zw) {
    auto Mw = apply_matrix(M, w);
    Field dl = dx(l, g);
    zr = spectral_cutoff(sub(dx(Mw[0], g), mul(dH, Mw[0])), g, K);
    axpy(zr, 1.0, pair_product(Mw[0], dl, g, K, mode));
    for (double& v : zr) v = -v;
    zw.assign(3, Field());
    for (int i = 0; i < 3; ++i) {
        // grad l = (l', 0, 0)
        Field Mg = dl;
        for (double& v : Mg) v *= M[i][0];
        zw[i] = spectral_cutoff(Mg, g, K);
        axpy(zw[i], 1.0, pair_product(Mw[0], dx(w[i], g), g, K, mode));
        for (double& v : zw[i]) v = -v;
    }
}

Mat3 sigma(double theta, CorrectorSign sign) {
    return rotation_derivative(sign == CorrectorSign::derived ? -theta : theta);
}

AccelerationField zero_field(std::size_t n) {
    AccelerationField a;
    a.first.assign(n, 0.0);
    a.second.assign(3, Field(n, 0.0));
    return a;
}

}  // namespace

Mat3 rotation(double a) {
    double c = std::cos(a), s = std::sin(a);
    return Mat3{{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

Mat3 rotation_derivative(double a) {
    double c = std::cos(a), s = std::sin(a);
    return Mat3{{{-s, -c, 0.0}, {c, -s, 0.0}, {0.0, 0.0, 0.0}}};
}

Mat3 rotation_perp(double a) {
    Mat3 r = rotation(a);
    r[2][2] = 0.0;
    return r;
}

Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

Mat3 transpose(const Mat3& a) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
    return r;
}

std::vector<Field> apply_matrix(const Mat3& M, const std::vector<Field>& w) {
    if (w.size() != 3) throw ShapeError("apply_matrix: need three components");
    std::size_t n = w[0].size();
    std::vector<Field> r(3, Field(n, 0.0));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (M[i][j] == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) r[i][k] += M[i][j] * w[j][k];
        }
    return r;
}

std::vector<Field> filter_momentum(const std::vector<Field>& u, double t, double epsilon, FilterDirection dir) {
    if (!(epsilon > 0.0)) throw DomainError("filter_momentum: epsilon must be positive");
    double a = t / epsilon;
    return apply_matrix(rotation(dir == FilterDirection::forward ? a : -a), u);
}

void GyroReference::validate() const {
    grid.validate();
    if (!grid.is_periodic() || grid.dim != 1) throw UnsupportedTopology("gyro fields live on a periodic 1D grid");
    if (log_ratio.size() != grid.size() || w.size() != 3) throw ShapeError("gyro reference: bad field shapes");
    for (const auto& c : w)
        if (c.size() != grid.size()) throw ShapeError("gyro reference: bad w shape");
    if (!dt_log_ratio.empty() && dt_log_ratio.size() != grid.size()) throw ShapeError("gyro reference: bad d_t l");
    if (!dt_w.empty() && dt_w.size() != 3) throw ShapeError("gyro reference: bad d_t w");
}

Field pair_product(const Field& a, const Field& b, const SpatialGrid& grid, double K, PairMode mode) {
    if (!grid.is_periodic()) throw UnsupportedTopology("pair_product needs a periodic grid");
    if (a.size() != grid.size() || b.size() != grid.size()) throw ShapeError("pair_product: size mismatch");
    int n = grid.points[0];
    if (mode == PairMode::fast) {
        Field ah = spectral_cutoff(a, grid, 0.5 * K), bh = spectral_cutoff(b, grid, 0.5 * K);
        return mul(ah, bh);
    }
    // integer cutoff in index units
    int Ki = static_cast<int>(std::floor(K * grid.extent[0] / (2.0 * std::numbers::pi) * (1.0 + 1e-12)));
    if (2 * Ki >= n) throw DomainError("pair_product: cutoff exceeds the grid's resolvable band");
    auto A = transform_forward(a, grid), B = transform_forward(b, grid);
    auto at = [n](const SpectralField& s, int k) { return s.coeffs[((k % n) + n) % n]; };
    std::vector<cplx> Av(2 * Ki + 1), Bv(2 * Ki + 1);
    for (int k = -Ki; k <= Ki; ++k) {
        Av[k + Ki] = at(A, k);
        Bv[k + Ki] = at(B, k);
    }
    SpectralField out;
    out.grid = grid;
    out.coeffs.assign(n, cplx(0.0, 0.0));
    for (int xi = -Ki; xi <= Ki; ++xi) {
        // |eta| + |xi - eta| = max(|xi|, |2 eta - xi|)
        int lo = static_cast<int>(std::ceil((xi - Ki) / 2.0));
        int hi = static_cast<int>(std::floor((xi + Ki) / 2.0));
        cplx s(0.0, 0.0);
        for (int eta = lo; eta <= hi; ++eta) s += Av[eta + Ki] * Bv[xi - eta + Ki];
        out.coeffs[((xi % n) + n) % n] = s;
    }
    return transform_inverse(out);
}

CorrectorFields corrector_with_matrix(const GyroReference& ref, const BackgroundProfile& bg, double epsilon,
                                      const Mat3& M, PairMode mode) {
    ref.validate();
    if (!(epsilon > 0.0)) throw DomainError("corrector: epsilon must be positive");
    if (bg.gradH.size() != ref.grid.size()) throw ShapeError("corrector: background does not match grid");
    CorrectorFields z;
    z.epsilon = epsilon;
    z.cutoff = 1.0 / epsilon;
    z_formulas(ref.log_ratio, ref.w, bg.gradH, ref.grid, M, z.cutoff, mode, z.z_rho, z.z_w);
    z.z_rho_hat = transform_forward(z.z_rho, ref.grid);
    for (const auto& c : z.z_w) z.z_w_hat.push_back(transform_forward(c, ref.grid));
    return z;
}

CorrectorFields corrector(const GyroReference& ref, const BackgroundProfile& bg, double epsilon, double t,
                          const CorrectorOptions& opt) {
    return corrector_with_matrix(ref, bg, epsilon, sigma(t / epsilon, opt.sign), opt.pair);
}

double AccelerationField::hq_norm(const SpatialGrid& grid, double q) const {
    double s = std::pow(sobolev_norm(first, grid, q), 2);
    for (const auto& c : second) s += std::pow(sobolev_norm(c, grid, q), 2);
    return std::sqrt(s);
}

AccelerationField acceleration_A(const GyroReference& ref, const BackgroundProfile& bg, double epsilon, double t) {
    ref.validate();
    const auto& g = ref.grid;
    std::size_t n = g.size();
    double th = t / epsilon;
    auto u = apply_matrix(rotation(-th), ref.w);
    std::vector<Field> dtu(3, Field(n, 0.0));
    // d_t u = -(1/eps) S(-th) w + R(-th) d_t w
    auto Sw = apply_matrix(rotation_derivative(-th), ref.w);
    for (int i = 0; i < 3; ++i) axpy(dtu[i], -1.0 / epsilon, Sw[i]);
    if (!ref.dt_w.empty()) {
        auto Rdw = apply_matrix(rotation(-th), ref.dt_w);
        for (int i = 0; i < 3; ++i) axpy(dtu[i], 1.0, Rdw[i]);
    }
    Field dl = dx(ref.log_ratio, g);
    AccelerationField A;
    A.first = ref.dt_log_ratio.empty() ? Field(n, 0.0) : ref.dt_log_ratio;
    Field du1 = dx(u[0], g);
    for (std::size_t k = 0; k < n; ++k) A.first[k] += u[0][k] * dl[k] + du1[k] - bg.gradH[k] * u[0][k];
    // u_perp = (u2, -u1, 0)
    std::vector<Field> uperp{u[1], u[0], Field(n, 0.0)};
    for (double& v : uperp[1]) v = -v;
    A.second.assign(3, Field(n, 0.0));
    for (int i = 0; i < 3; ++i) {
        Field dui = dx(u[i], g);
        for (std::size_t k = 0; k < n; ++k)
            A.second[i][k] = dtu[i][k] + u[0][k] * dui[k] + (i == 0 ? dl[k] : 0.0) - uperp[i][k] / epsilon;
    }
    return A;
}

BParts acceleration_B(const GyroReference& ref, const BackgroundProfile& bg, double epsilon, double t,
                      const CorrectorOptions& opt, bool with_corrector) {
    ref.validate();
    const auto& g = ref.grid;
    std::size_t n = g.size();
    double th = t / epsilon, K = 1.0 / epsilon;
    const Field& l = ref.log_ratio;
    const auto& w = ref.w;
    const Field& dH = bg.gradH;
    Mat3 Rm = rotation(-th);

    Field zr(n, 0.0), dzr(n, 0.0);
    std::vector<Field> zw(3, Field(n, 0.0)), dzw(3, Field(n, 0.0));
    BParts P;
    P.D = zero_field(n);
    if (with_corrector) {
        Mat3 Sg = sigma(th, opt.sign);
        z_formulas(l, w, dH, g, Sg, K, opt.pair, zr, zw);
        // d/dtheta of Sigma: R(-th)_perp for the derived sign, -R(th)_perp literally
        Mat3 dS = opt.sign == CorrectorSign::derived ? rotation_perp(-th) : rotation_perp(th);
        if (opt.sign == CorrectorSign::literal)
            for (auto& row : dS)
                for (double& v : row) v = -v;
        z_formulas(l, w, dH, g, dS, K, opt.pair, dzr, dzw);
        if (!ref.is_static()) {
            // eps d_t z through the fields: linear in d_t w and d_t l
            Field dtl = ref.dt_log_ratio.empty() ? zeros_like(l) : ref.dt_log_ratio;
            std::vector<Field> dtw = ref.dt_w.empty() ? std::vector<Field>(3, zeros_like(l)) : ref.dt_w;
            auto Sw = apply_matrix(Sg, w), Sdw = apply_matrix(Sg, dtw);
            Field t1 = spectral_cutoff(sub(dx(Sdw[0], g), mul(dH, Sdw[0])), g, K);
            axpy(t1, 1.0, pair_product(Sdw[0], dx(l, g), g, K, opt.pair));
            axpy(t1, 1.0, pair_product(Sw[0], dx(dtl, g), g, K, opt.pair));
            for (std::size_t k = 0; k < n; ++k) P.D.first[k] = -epsilon * t1[k];
            Field ddl = dx(dtl, g);
            for (int i = 0; i < 3; ++i) {
                Field Mg = ddl;
                for (double& v : Mg) v *= Sg[i][0];
                Field t2 = spectral_cutoff(Mg, g, K);
                axpy(t2, 1.0, pair_product(Sdw[0], dx(w[i], g), g, K, opt.pair));
                axpy(t2, 1.0, pair_product(Sw[0], dx(dtw[i], g), g, K, opt.pair));
                for (std::size_t k = 0; k < n; ++k) P.D.second[i][k] = -epsilon * t2[k];
            }
        }
    }
    P.limit = zero_field(n);
    if (!ref.dt_log_ratio.empty()) P.limit.first = ref.dt_log_ratio;
    if (!ref.dt_w.empty()) P.limit.second = ref.dt_w;

    Field L = l;
    axpy(L, epsilon, zr);
    std::vector<Field> W = w;
    for (int i = 0; i < 3; ++i) axpy(W[i], epsilon, zw[i]);
    auto RW = apply_matrix(Rm, W);
    auto ub = apply_matrix(Rm, w);
    auto Rz = apply_matrix(Rm, zw);
    Field dL = dx(L, g), dl = dx(l, g), dzr_x = dx(zr, g);

    // total
    P.total.first = dzr;
    {
        Field d1 = dx(RW[0], g);
        for (std::size_t k = 0; k < n; ++k) P.total.first[k] += d1[k] + RW[0][k] * dL[k] - dH[k] * RW[0][k];
    }
    P.total.second.assign(3, Field(n, 0.0));
    for (int i = 0; i < 3; ++i) {
        Field dW = dx(W[i], g);
        for (std::size_t k = 0; k < n; ++k) P.total.second[i][k] = dzw[i][k] + RW[0][k] * dW[k] + Rm[i][0] * dL[k];
    }
    axpy(P.total.first, 1.0, P.D.first);
    axpy(P.total.first, 1.0, P.limit.first);
    for (int i = 0; i < 3; ++i) {
        axpy(P.total.second[i], 1.0, P.D.second[i]);
        axpy(P.total.second[i], 1.0, P.limit.second[i]);
    }

    // T1: what the two indicators leave out of the O(1) terms
    {
        Field lin = sub(dx(ub[0], g), mul(dH, ub[0]));
        Field prod = mul(ub[0], dl);
        if (with_corrector) {
            P.T1.first = above_cutoff(lin, g, K);
            axpy(P.T1.first, 1.0, sub(prod, pair_product(ub[0], dl, g, K, opt.pair)));
        } else {
            P.T1.first = lin;
            axpy(P.T1.first, 1.0, prod);
        }
        P.T1.second.assign(3, Field(n, 0.0));
        for (int i = 0; i < 3; ++i) {
            Field Rg = dl;
            for (double& v : Rg) v *= Rm[i][0];
            Field prodw = mul(ub[0], dx(w[i], g));
            if (with_corrector) {
                P.T1.second[i] = above_cutoff(Rg, g, K);
                axpy(P.T1.second[i], 1.0, sub(prodw, pair_product(ub[0], dx(w[i], g), g, K, opt.pair)));
            } else {
                P.T1.second[i] = Rg;
                axpy(P.T1.second[i], 1.0, prodw);
            }
        }
    }

    // T2: explicit eps terms
    P.T2.first.assign(n, 0.0);
    P.T2.second.assign(3, Field(n, 0.0));
    if (with_corrector) {
        Field d1 = dx(Rz[0], g);
        for (std::size_t k = 0; k < n; ++k)
            P.T2.first[k] = epsilon * (d1[k] - dH[k] * Rz[0][k] + Rz[0][k] * dl[k] + RW[0][k] * dzr_x[k]);
        for (int i = 0; i < 3; ++i) {
            Field dwi = dx(w[i], g), dzi = dx(zw[i], g);
            for (std::size_t k = 0; k < n; ++k)
                P.T2.second[i][k] = epsilon * (Rz[0][k] * dwi[k] + RW[0][k] * dzi[k] + Rm[i][0] * dzr_x[k]);
        }
    }
    return P;
}

Field synthesize_hs_field(const SobolevIndex& s, std::uint64_t seed, const SpatialGrid& grid,
                          const HsFieldOptions& opt) {
    if (!(s.order > 0.0)) throw DomainError("synthesize_hs_field: s must be positive");
    if (!grid.is_periodic() || grid.dim != 1) throw UnsupportedTopology("synthesize_hs_field: periodic 1D grid");
    int n = grid.points[0];
    int kmax = opt.max_mode > 0 ? opt.max_mode : n / 8;
    if (2 * kmax >= n) throw DomainError("synthesize_hs_field: max_mode beyond Nyquist");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    SpectralField c;
    c.grid = grid;
    c.coeffs.assign(n, cplx(0.0, 0.0));
    double L = grid.extent[0];
    for (int k = 1; k <= kmax; ++k) {
        double xi = 2.0 * std::numbers::pi * k / L;
        double a = opt.amplitude * std::pow(1.0 + xi * xi, -(s.order + 0.5 + opt.delta) / 2.0);
        cplx z = std::polar(0.5 * a, phase(rng));
        c.coeffs[k] = z;
        c.coeffs[n - k] = std::conj(z);
    }
    return transform_inverse(c);
}

}  // namespace qn
