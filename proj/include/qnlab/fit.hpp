#pragma once
#include <utility>
#include <vector>

namespace qn {

// log value = exponent * log eps + intercept, least squares
struct RateFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // rms of log residuals
    double std_error = 0.0;
    double ci_low = 0.0;  // 95% interval on the exponent (Student t)
    double ci_high = 0.0;
    int points = 0;
};

RateFit fit_rate(const std::vector<std::pair<double, double>>& series, int min_points = 4);

}  // namespace qn
