#include "mvclust/adam.hpp"

#include <cmath>

#include "mvclust/errors.hpp"

namespace mvclust {

ParamTensor::ParamTensor(std::string name_, Tensor2D value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(value.rows(), value.cols()),
      first_moment(value.size(), 0.0),
      second_moment(value.size(), 0.0) {}

void adam_step(ParamTensor& p, std::span<const double> grad, const AdamConfig& cfg) {
    if (grad.size() != p.value.size() || p.first_moment.size() != p.value.size() ||
        p.second_moment.size() != p.value.size())
        throw DimensionError("adam_step: gradient of size " + std::to_string(grad.size()) +
                             " for parameter '" + p.name + "' of shape " +
                             p.value.shape_string());
    for (double g : grad)
        if (!std::isfinite(g))
            throw NumericalError("adam_step: non-finite gradient for parameter '" + p.name + "'");

    ++p.step_count;
    const double t = static_cast<double>(p.step_count);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);
    auto v = p.value.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double g = grad[i];
        p.first_moment[i] = cfg.beta1 * p.first_moment[i] + (1.0 - cfg.beta1) * g;
        p.second_moment[i] = cfg.beta2 * p.second_moment[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = p.first_moment[i] / bias1;
        const double v_hat = p.second_moment[i] / bias2;
        v[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

}  // namespace mvclust
