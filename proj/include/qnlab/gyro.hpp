#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "qnlab/grids.hpp"
#include "qnlab/poisson.hpp"

namespace qn {

using Mat3 = std::array<std::array<double, 3>, 3>;

struct RotationAngle {
    double angle = 0.0;  // t / eps
};

// counter-clockwise rotation about e_par (third axis)
Mat3 rotation(double angle);
inline Mat3 rotation(RotationAngle a) { return rotation(a.angle); }
// dR/dangle
Mat3 rotation_derivative(double angle);
Mat3 matmul(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& a);
// R(angle) with the e_par entry zeroed
Mat3 rotation_perp(double angle);

std::vector<Field> apply_matrix(const Mat3& M, const std::vector<Field>& w);

enum class FilterDirection { forward, inverse };
// forward: w = R(t/eps) u; inverse: u = R(-t/eps) w
std::vector<Field> filter_momentum(const std::vector<Field>& u, double t, double epsilon, FilterDirection dir);

// Reference fields on a periodic 1D grid along x_perp1: log(rho/d), w (3
// components) and optional time derivatives (empty = static).
struct GyroReference {
    SpatialGrid grid;
    Field log_ratio;
    std::vector<Field> w;
    Field dt_log_ratio;
    std::vector<Field> dt_w;

    void validate() const;
    bool is_static() const { return dt_log_ratio.empty() && dt_w.empty(); }
};

enum class CorrectorSign {
    derived,  // Sigma = S(-t/eps), cancels the singular rotation terms
    literal   // Sigma = S(t/eps)
};
enum class PairMode { exact, fast };

struct CorrectorOptions {
    CorrectorSign sign = CorrectorSign::derived;
    PairMode pair = PairMode::exact;
};

struct CorrectorFields {
    Field z_rho;
    std::vector<Field> z_w;
    SpectralField z_rho_hat;
    std::vector<SpectralField> z_w_hat;
    double cutoff = 0.0;  // 1/eps, physical wave-number units
    double epsilon = 1.0;
};

// sum over eta with |eta| + |xi - eta| <= K of a_hat(eta) b_hat(xi - eta)
Field pair_product(const Field& a, const Field& b, const SpatialGrid& grid, double K, PairMode mode);

CorrectorFields corrector(const GyroReference& ref, const BackgroundProfile& bg, double epsilon, double t,
                          const CorrectorOptions& opt = {});
// same formulas with an explicit matrix in place of Sigma
CorrectorFields corrector_with_matrix(const GyroReference& ref, const BackgroundProfile& bg, double epsilon,
                                      const Mat3& M, PairMode mode = PairMode::exact);

struct AccelerationField {
    Field first;
    std::vector<Field> second;

    double hq_norm(const SpatialGrid& grid, double q) const;
};

// A(log rho_bar, u_bar) with u_bar = R(-t/eps) w; the -u_perp/eps term is
// included (it cancels the rotation derivative analytically)
AccelerationField acceleration_A(const GyroReference& ref, const BackgroundProfile& bg, double epsilon, double t);

// total = T1 + T2 + D + limit
//   T1: terms removed by the cutoffs (complement of both indicators)
//   T2: terms carrying an explicit eps
//   D: eps times the corrector's dependence on d_t w, d_t log(rho/d)
//   limit: d_t log(rho/d), d_t w
struct BParts {
    AccelerationField total, T1, T2, D, limit;
};

BParts acceleration_B(const GyroReference& ref, const BackgroundProfile& bg, double epsilon, double t,
                      const CorrectorOptions& opt = {}, bool with_corrector = true);

struct HsFieldOptions {
    double delta = 0.02;  // coefficient decay (1+k^2)^{-(s + 1/2 + delta)/2}
    double amplitude = 1.0;
    int max_mode = 0;  // 0: n/8
};

// random-phase field in H^{s + delta'} for delta' < delta, not in H^{s+delta}
Field synthesize_hs_field(const SobolevIndex& s, std::uint64_t seed, const SpatialGrid& grid,
                          const HsFieldOptions& opt = {});

}  // namespace qn
