#include "qnlab/fit.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>

#include "qnlab/grids.hpp"

namespace qn {

RateFit fit_rate(const std::vector<std::pair<double, double>>& series, int min_points) {
    int n = static_cast<int>(series.size());
    if (n < std::max(min_points, 2)) throw std::invalid_argument("fit_rate: not enough points");
    double sx = 0, sy = 0;
    std::vector<double> X(n), Y(n);
    for (int i = 0; i < n; ++i) {
        auto [e, v] = series[i];
        if (!(e > 0.0) || !(v > 0.0)) throw DomainError("fit_rate: values must be positive");
        X[i] = std::log(e);
        Y[i] = std::log(v);
        sx += X[i];
        sy += Y[i];
    }
    double mx = sx / n, my = sy / n, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_rate: all abscissae equal");
    RateFit f;
    f.points = n;
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        double r = Y[i] - (f.exponent * X[i] + f.intercept);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    if (n > 2) {
        f.std_error = std::sqrt(ss / (n - 2) / sxx);
        boost::math::students_t dist(n - 2);
        double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
        f.ci_low = f.exponent - tq * f.std_error;
        f.ci_high = f.exponent + tq * f.std_error;
    } else {
        f.std_error = std::numeric_limits<double>::quiet_NaN();
        f.ci_low = f.ci_high = f.exponent;
    }
    return f;
}

}  // namespace qn
