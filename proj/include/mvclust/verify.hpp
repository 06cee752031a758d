#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mvclust/gradcheck.hpp"
#include "mvclust/model.hpp"

namespace mvclust {

// A tiny random problem: N <= 8 samples, M in {2, 3} views, K <= 4 clusters,
// every layer width <= 8, random biases, random one-hot fine-tuning targets.
struct TinyInstance {
    MflvcModel model;
    std::vector<Tensor2D> views;
    std::vector<Tensor2D> targets;
};

TinyInstance make_tiny_instance(Rng& rng);

// Objectives the suite checks: L_Z, L_H, L_Q, L_P and the combined loss.
const std::vector<std::string>& gradcheck_losses();

// Value-and-gradient closure for one named objective on an instance.
LossFn objective_closure(TinyInstance& inst, const std::string& loss);

struct SuiteResult {
    std::string loss;
    std::size_t instance = 0;
    GradCheckReport report;
};

// Checks every objective against central differences on `instances` tiny
// problems drawn from `seed`, over all model parameters. `corrupt` names one
// objective whose analytic gradient gets a deliberate error, as a negative
// control.
std::vector<SuiteResult> run_gradcheck_suite(std::uint64_t seed, std::size_t instances = 5,
                                             const std::optional<std::string>& corrupt = {});

}  // namespace mvclust
