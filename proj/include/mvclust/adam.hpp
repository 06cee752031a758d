#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvclust/tensor.hpp"

namespace mvclust {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// A trainable tensor with its gradient buffer and Adam state. Moments start
// at zero with the same shape as the value.
struct ParamTensor {
    ParamTensor() = default;
    ParamTensor(std::string name, Tensor2D value);

    std::string name;
    Tensor2D value;
    Tensor2D grad;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step_count = 0;

    void zero_grad() { grad.fill(0.0); }
};

// One bias-corrected Adam update of p.value using `grad`. Throws
// NumericalError (naming the parameter) on a non-finite gradient entry and
// DimensionError if the sizes disagree.
void adam_step(ParamTensor& p, std::span<const double> grad, const AdamConfig& cfg);

// Convenience: step with p.grad.
inline void adam_step(ParamTensor& p, const AdamConfig& cfg) { adam_step(p, p.grad.values(), cfg); }

}  // namespace mvclust
