#include "mvclust/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mvclust/errors.hpp"

namespace mvclust {

bool GradCheckReport::passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
    return worst;
}

GradCheckReport grad_check(const LossFn& loss, std::span<ParamTensor* const> params, double h,
                           double tol) {
    if (!(h > 0.0)) throw PreconditionError("grad_check: step h must be positive");

    const double f0 = loss(true);
    if (!std::isfinite(f0)) throw NumericalError("grad_check: loss is not finite");
    const double floor = 1e-6 * std::max(1.0, std::abs(f0));

    // Snapshot analytic gradients before the perturbed evaluations.
    std::vector<Tensor2D> analytic;
    analytic.reserve(params.size());
    for (const ParamTensor* p : params) analytic.push_back(p->grad);

    GradCheckReport report;
    report.tol = tol;
    for (std::size_t k = 0; k < params.size(); ++k) {
        ParamTensor& p = *params[k];
        GradCheckEntry entry{p.name};
        auto values = p.value.values();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double f_plus = loss(false);
            values[i] = saved - h;
            const double f_minus = loss(false);
            values[i] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw NumericalError("grad_check: loss is not finite when perturbing '" + p.name +
                                     "'");
            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double a = analytic[k].values()[i];
            const double abs_err = std::abs(a - numeric);
            const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
            entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        entry.passed = entry.max_rel_error <= tol;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace mvclust
