#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvclust/adam.hpp"

namespace mvclust {

// A scalar objective over a fixed parameter set. Called with `true` it must
// zero and then fill the `grad` buffer of every parameter it depends on;
// called with `false` it only returns the value.
using LossFn = std::function<double(bool compute_grad)>;

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tol = 0.0;

    bool passed() const;
    double max_rel_error() const;
};

// Compares analytic gradients against central differences
// (f(x+h) - f(x-h)) / 2h for every entry of every parameter.
//
// Relative error of an entry is |analytic - numeric| / max(|analytic|,
// |numeric|, 1e-6 * max(1, |f|)). The floor keeps entries whose true
// gradient is zero (or tiny compared with the loss) from turning
// cancellation noise into a relative error of order one.
GradCheckReport grad_check(const LossFn& loss, std::span<ParamTensor* const> params,
                           double h = 1e-5, double tol = 1e-4);

}  // namespace mvclust
