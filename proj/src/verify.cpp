#include "mvclust/verify.hpp"

#include <algorithm>
#include <cmath>

#include "mvclust/errors.hpp"
#include "mvclust/objective.hpp"

namespace mvclust {
namespace {

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

}  // namespace

TinyInstance make_tiny_instance(Rng& rng) {
    const std::size_t n = between(rng, 2, 8);
    const std::size_t nv = between(rng, 2, 3);
    ModelConfig cfg;
    cfg.clusters = between(rng, 2, 4);
    for (std::size_t m = 0; m < nv; ++m) cfg.input_dims.push_back(between(rng, 2, 8));
    cfg.encoder_hidden = {between(rng, 2, 8)};
    cfg.latent_dim = between(rng, 2, 8);
    cfg.high_dim = between(rng, 2, 8);
    if (rng.below(2) == 1) cfg.label_hidden = {between(rng, 2, 8)};

    TinyInstance inst{init_model(cfg, rng), {}, {}};
    // Biases are drawn too: at zero, inactive samples sit exactly on a ReLU kink.
    for (ParamTensor* p : inst.model.all_params())
        if (p->name.ends_with(".bias"))
            for (double& v : p->value.values()) v = rng.uniform(-0.5, 0.5);
    for (std::size_t m = 0; m < nv; ++m) {
        Tensor2D x(n, cfg.input_dims[m]);
        for (double& v : x.values()) v = rng.normal();
        inst.views.push_back(std::move(x));
        Tensor2D t(n, cfg.clusters);
        for (std::size_t i = 0; i < n; ++i) t(i, rng.below(cfg.clusters)) = 1.0;
        inst.targets.push_back(std::move(t));
    }
    return inst;
}

const std::vector<std::string>& gradcheck_losses() {
    static const std::vector<std::string> names = {"L_Z", "L_H", "L_Q", "L_P", "total"};
    return names;
}

LossFn objective_closure(TinyInstance& inst, const std::string& loss) {
    const ContrastiveConfig cc;
    AblationFlags only_h{false, true, false, false};
    AblationFlags only_q{false, false, false, true};
    AblationFlags full;
    auto run = [&inst, cc](const AblationFlags& flags) {
        return [&inst, cc, flags](bool grad) {
            if (grad) inst.model.zero_grad();
            return contrastive_objective(inst.model, inst.views, cc, flags, grad).total;
        };
    };
    if (loss == "L_Z")
        return [&inst](bool grad) {
            if (grad) inst.model.zero_grad();
            return reconstruction_objective(inst.model, inst.views, grad);
        };
    if (loss == "L_H") return run(only_h);
    if (loss == "L_Q") return run(only_q);
    if (loss == "L_P")
        return [&inst](bool grad) {
            if (grad) inst.model.zero_grad();
            return finetune_objective(inst.model, inst.views, inst.targets, grad);
        };
    if (loss == "total") return run(full);
    throw PreconditionError("unknown objective '" + loss + "'");
}

std::vector<SuiteResult> run_gradcheck_suite(std::uint64_t seed, std::size_t instances,
                                             const std::optional<std::string>& corrupt) {
    const auto& names = gradcheck_losses();
    if (corrupt && std::find(names.begin(), names.end(), *corrupt) == names.end())
        throw PreconditionError("unknown objective '" + *corrupt + "'");

    Rng rng(seed);
    std::vector<SuiteResult> out;
    for (std::size_t k = 0; k < instances; ++k) {
        TinyInstance inst = make_tiny_instance(rng);
        auto params = inst.model.all_params();
        for (const std::string& name : names) {
            LossFn f = objective_closure(inst, name);
            if (corrupt && *corrupt == name) {
                // Shift every analytic entry of the first encoder weight.
                f = [f, p = params.front()](bool grad) {
                    const double v = f(grad);
                    if (grad)
                        for (double& g : p->grad.values()) g += 1e-2 * (1.0 + std::abs(g));
                    return v;
                };
            }
            out.push_back({name, k, grad_check(f, params)});
        }
    }
    return out;
}

}  // namespace mvclust
