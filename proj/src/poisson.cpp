#include "qnlab/poisson.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qn {

namespace {

double norm_l2(const Field& r, const SpatialGrid& g) { return l2_norm(r, g); }

// Thomas algorithm for a symmetric tridiagonal system
Field solve_tridiagonal(const Field& lower, const Field& diag, const Field& upper, const Field& rhs) {
    std::size_t n = diag.size();
    Field c(n), d(n), x(n);
    c[0] = n > 1 ? upper[0] / diag[0] : 0.0;
    d[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        double den = diag[i] - lower[i] * c[i - 1];
        c[i] = i + 1 < n ? upper[i] / den : 0.0;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

// (-eps Lap + diag(w)) x = b
Field solve_jacobian(const Field& w, const Field& b, const SpatialGrid& g, double eps) {
    std::size_t n = b.size();
    if (!g.is_periodic()) {
        double h = g.spacing(0);
        double k = eps / (h * h);
        Field lo(n, -k), up(n, -k), di(n);
        for (std::size_t i = 0; i < n; ++i) di[i] = 2.0 * k + w[i];
        di[0] += k;  // ghost value -V_0 on the Dirichlet face
        di[n - 1] += k;
        return solve_tridiagonal(lo, di, up, b);
    }
    // PCG with the constant-coefficient Fourier preconditioner
    double wbar = 0.0;
    for (double v : w) wbar += v;
    wbar /= static_cast<double>(n);
    auto wn = wave_numbers(g, 0);
    // only 1D closures are solved here
    std::vector<double> k2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) k2[i] = wn[i] * wn[i];
    auto precond = [&](const Field& r) {
        auto s = transform_forward(r, g);
        for (std::size_t i = 0; i < n; ++i) s.coeffs[i] /= (eps * k2[i] + wbar);
        return transform_inverse(s);
    };
    auto apply = [&](const Field& x) {
        Field y = apply_neg_laplacian(x, g, eps);
        for (std::size_t i = 0; i < n; ++i) y[i] += w[i] * x[i];
        return y;
    };
    Field x = precond(b);
    Field r = b, Ax = apply(x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= Ax[i];
    Field z = precond(r), p = z;
    double rz = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rz += r[i] * z[i];
        bn += b[i] * b[i];
    }
    bn = std::sqrt(bn);
    for (int it = 0; it < 1000; ++it) {
        double rn = 0.0;
        for (double v : r) rn += v * v;
        if (std::sqrt(rn) <= 1e-14 * bn || bn == 0.0) break;
        Field Ap = apply(p);
        double pAp = 0.0;
        for (std::size_t i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (pAp <= 0.0) break;
        double a = rz / pAp;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += a * p[i];
            r[i] -= a * Ap[i];
        }
        z = precond(r);
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return x;
}

void check_rho(const Field& rho, const SpatialGrid& g) {
    if (rho.size() != g.size()) throw ShapeError("poisson: rho does not match grid");
    for (double r : rho) {
        if (!std::isfinite(r)) throw NumericError("poisson: non-finite density");
        if (r < 0.0) throw DomainError("poisson: negative density");
    }
}

Field initial_guess(const Field& rho, const Field& d) {
    double rmax = *std::max_element(rho.begin(), rho.end());
    double floor = std::max(rmax * 1e-14, std::numeric_limits<double>::min());
    Field V(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) V[i] = std::log(std::max(rho[i], floor) / d[i]);
    return V;
}

}  // namespace

BackgroundProfile background_from_H(const SpatialGrid& grid, const Field& H, const Field& gradH) {
    if (H.size() != grid.size() || gradH.size() != grid.size()) throw ShapeError("background: H does not match grid");
    BackgroundProfile bg{H, gradH, Field(H.size())};
    for (std::size_t i = 0; i < H.size(); ++i) bg.d[i] = std::exp(-H[i]);
    return bg;
}

BackgroundProfile confining_background(const SpatialGrid& grid, double shift) {
    Field x = grid.coords(0), H(x.size()), dH(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = std::sqrt(1.0 + x[i] * x[i]);
        H[i] = s + shift;
        dH[i] = x[i] / s;
    }
    return background_from_H(grid, H, dH);
}

BackgroundProfile uniform_background(const SpatialGrid& grid) {
    Field z(grid.size(), 0.0);
    return background_from_H(grid, z, z);
}

BackgroundProfile periodic_background(const SpatialGrid& grid, const std::function<double(double)>& Hf) {
    Field x = grid.coords(0), H(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) H[i] = Hf(x[i]);
    return background_from_H(grid, H, spectral_derivative(H, grid));
}

Field apply_neg_laplacian(const Field& V, const SpatialGrid& grid, double eps) {
    if (grid.is_periodic()) {
        Field d2 = grid.size() > 1 ? spectral_derivative(V, grid, 0, 2) : Field(V.size(), 0.0);
        for (auto& v : d2) v *= -eps;
        return d2;
    }
    std::size_t n = V.size();
    double h = grid.spacing(0), k = eps / (h * h);
    Field out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double l = i > 0 ? V[i - 1] : -V[0];
        double r = i + 1 < n ? V[i + 1] : -V[n - 1];
        out[i] = -k * (l - 2.0 * V[i] + r);
    }
    return out;
}

Field residual_S(const Field& V, const Field& rho, const Field& d, const SpatialGrid& grid, double eps) {
    Field r = apply_neg_laplacian(V, grid, eps);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += d[i] * std::exp(V[i]) - rho[i];
    return r;
}

Field electric_field(const Field& V, const SpatialGrid& grid) {
    Field E = grid.size() > 1 ? gradient(V, grid) : Field(V.size(), 0.0);
    for (auto& e : E) e = -e;
    return E;
}

Field face_gradient(const Field& V, const SpatialGrid& grid) {
    std::size_t n = V.size();
    double h = grid.spacing(0);
    if (grid.is_periodic()) {
        Field g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = (V[(i + 1) % n] - V[i]) / h;
        return g;
    }
    // n+1 faces; boundary faces see the ghost -V
    Field g(n + 1);
    g[0] = 2.0 * V[0] / h;
    for (std::size_t i = 1; i < n; ++i) g[i] = (V[i] - V[i - 1]) / h;
    g[n] = -2.0 * V[n - 1] / h;
    return g;
}

PotentialSolution solve_poisson_S(const Field& rho, const BackgroundProfile& bg, const SpatialGrid& grid, double eps,
                                  const NewtonOptions& opt, const Field* guess) {
    check_rho(rho, grid);
    if (!(eps > 0.0)) throw DomainError("poisson: epsilon must be positive");
    PotentialSolution sol;
    Field V = guess ? *guess : initial_guess(rho, bg.d);
    Field r = residual_S(V, rho, bg.d, grid, eps);
    double rn = norm_l2(r, grid);
    sol.residual_history.push_back(rn);
    int it = 0;
    while (rn > opt.tol) {
        if (it >= opt.max_iter) throw SolverError("poisson (S): Newton did not converge", sol.residual_history);
        Field w(V.size()), b(V.size());
        for (std::size_t i = 0; i < V.size(); ++i) {
            w[i] = bg.d[i] * std::exp(V[i]);
            b[i] = -r[i];
        }
        Field dV = solve_jacobian(w, b, grid, eps);
        double a = 1.0;
        bool accepted = false;
        for (int k = 0; k < opt.max_backtracks; ++k) {
            Field Vt(V.size());
            for (std::size_t i = 0; i < V.size(); ++i) Vt[i] = V[i] + a * dV[i];
            Field rt = residual_S(Vt, rho, bg.d, grid, eps);
            double rtn = norm_l2(rt, grid);
            if (std::isfinite(rtn) && rtn <= (1.0 - opt.armijo * a) * rn) {
                V.swap(Vt);
                r.swap(rt);
                rn = rtn;
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        ++it;
        sol.residual_history.push_back(rn);
        if (!accepted) throw SolverError("poisson (S): line search stalled", sol.residual_history);
    }
    sol.newton_iterations = it;
    sol.residual = rn;
    sol.m.resize(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) sol.m[i] = bg.d[i] * std::exp(V[i]);
    sol.E = electric_field(V, grid);
    sol.dV = grid.is_periodic() ? gradient(V, grid) : face_gradient(V, grid);
    sol.V = std::move(V);
    return sol;
}

PotentialSolution solve_poisson_Sprime(const Field& rho, const BackgroundProfile& bg, const SpatialGrid& grid,
                                       double eps, const NewtonOptions& opt, const Field* guess) {
    check_rho(rho, grid);
    // integrating the closure over a torus forces int rho = 1
    if (grid.is_periodic() && std::abs(quadrature(rho, grid) - 1.0) > 1e-8)
        throw DomainError("poisson (S'): int rho must be 1 on a periodic grid");
    // g(lambda) = int d e^{V(lambda)} - lambda with V(lambda) the (S) solution
    // for the background d/lambda; secant steps on log(lambda)
    auto inner = [&](double lam, const Field* g0) {
        BackgroundProfile b = bg;
        for (auto& v : b.d) v /= lam;
        return solve_poisson_S(rho, b, grid, eps, opt, g0);
    };
    auto mass_e = [&](const PotentialSolution& s) {
        Field de(s.V.size());
        for (std::size_t i = 0; i < de.size(); ++i) de[i] = bg.d[i] * std::exp(s.V[i]);
        return quadrature(de, grid);
    };
    double lam0 = 1.0;
    PotentialSolution s0 = inner(lam0, guess);
    double g0 = std::log(mass_e(s0)) - std::log(lam0);
    int total_newton = s0.newton_iterations, outer = 1;
    double x0 = std::log(lam0);
    PotentialSolution best = s0;
    double best_g = g0;
    // a mismatch g perturbs the closure residual by about |g| ||m||, so the
    // Newton tolerance sets how far the fixed point is worth pushing
    double gtol = std::max(1e-13, 0.1 * opt.tol);
    if (std::abs(g0) > gtol) {
        double x1 = x0 + g0;
        for (; outer < 60; ++outer) {
            PotentialSolution s1 = inner(std::exp(x1), &best.V);
            total_newton += s1.newton_iterations;
            double g1 = std::log(mass_e(s1)) - x1;
            best = s1;
            best_g = g1;
            if (std::abs(g1) <= gtol) break;
            double slope = (g1 - g0) / (x1 - x0);
            double x2 = std::abs(slope) > 1e-300 ? x1 - g1 / slope : x1 + g1;
            x0 = x1;
            g0 = g1;
            x1 = x2;
        }
        if (std::abs(best_g) > 10.0 * gtol)
            spdlog::warn("poisson (S'): normalisation fixed point stopped at |g| = {:.3e}", std::abs(best_g));
    }
    PotentialSolution sol;
    sol.E = best.E;  // gauge invariant, taken before the shift
    sol.dV = best.dV;
    sol.V = best.V;
    double c = sol.V[grid.center_index()];
    for (auto& v : sol.V) v -= c;
    Field de(sol.V.size());
    for (std::size_t i = 0; i < de.size(); ++i) de[i] = bg.d[i] * std::exp(sol.V[i]);
    double lam = quadrature(de, grid);
    sol.m = de;
    for (auto& v : sol.m) v /= lam;
    Field r = apply_neg_laplacian(best.V, grid, eps);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += sol.m[i] - rho[i];
    sol.residual = l2_norm(r, grid);
    sol.residual_history = best.residual_history;
    sol.newton_iterations = total_newton;
    sol.outer_iterations = outer;
    sol.lambda = lam;
    return sol;
}

PotentialSolution solve_poisson_L(const Field& rho, const SpatialGrid& grid, double eps) {
    if (!grid.is_periodic()) throw UnsupportedTopology("linearized closure is solved on periodic grids");
    if (rho.size() != grid.size()) throw ShapeError("poisson (L): rho does not match grid");
    auto s = transform_forward(rho, grid);
    s.coeffs[0] -= 1.0;
    auto wn = wave_numbers(grid, 0);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] /= (1.0 + eps * wn[i] * wn[i]);
    PotentialSolution sol;
    sol.V = transform_inverse(s);
    sol.E = electric_field(sol.V, grid);
    sol.dV = gradient(sol.V, grid);
    sol.m.resize(sol.V.size());
    for (std::size_t i = 0; i < sol.V.size(); ++i) sol.m[i] = 1.0 + sol.V[i];
    Field r = apply_neg_laplacian(sol.V, grid, eps);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += sol.V[i] - (rho[i] - 1.0);
    sol.residual = l2_norm(r, grid);
    return sol;
}

Field quasineutral_potential(const Field& rho, const BackgroundProfile& bg) {
    if (rho.size() != bg.d.size()) throw ShapeError("quasineutral_potential: size mismatch");
    Field V(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (bg.d[i] > 0.0 && !(rho[i] > 0.0)) throw DomainError("quasineutral_potential: rho <= 0 on the support of d");
        V[i] = std::log(rho[i] / bg.d[i]);
    }
    return V;
}

}  // namespace qn
