#include "dts/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dts/error.hpp"

namespace dts {

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point,
                           std::span<const double> analytic_grad, double eps) {
    if (eps < 1e-7 || eps > 1e-3)
        throw ValueError("grad_check: eps must lie in [1e-7, 1e-3]");
    if (point.size() != analytic_grad.size())
        throw ShapeError("grad_check: gradient size does not match point size");

    std::vector<double> perturbed(point.begin(), point.end());
    GradCheckResult result;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double original = perturbed[i];
        perturbed[i] = original + eps;
        const double up = f(perturbed);
        perturbed[i] = original - eps;
        const double down = f(perturbed);
        perturbed[i] = original;

        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = analytic_grad[i];
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
        const double rel = std::fabs(analytic - numeric) / denom;
        if (rel > result.max_rel_error) {
            result.max_rel_error = rel;
            result.worst_index = i;
            result.analytic_at_worst = analytic;
            result.numeric_at_worst = numeric;
        }
    }
    return result;
}

}  // namespace dts
