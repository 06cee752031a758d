#pragma once

#include <span>

#include "mvclust/losses.hpp"
#include "mvclust/model.hpp"

namespace mvclust {

// Which objectives a run optimizes. The defaults are the full method; the
// ablation variants switch parts off (see trainer.hpp).
struct AblationFlags {
    bool use_reconstruction = true;  // L_Z, and the pretraining stage
    bool use_high_level = true;      // L_H on H, and the pseudo-label stage with L_P
    bool contrast_on_z = false;      // extra feature contrastive loss on the latent Z
    bool contrast_on_q = true;       // L_Q
};

void validate(const AblationFlags& flags);

struct ObjectiveValue {
    LossComponents parts;
    double latent_contrast = 0.0;  // only when contrast_on_z
    double total = 0.0;
};

// Model-level evaluation of the contrastive-stage objective on one aligned
// batch (one matrix per view). When `compute_grad` is set, gradients are
// accumulated into the parameters' grad buffers; the caller zeroes them.
//
// total = L_Z + lambda_feature * (L_H + latent_contrast) + lambda_label * L_Q
// with disabled terms contributing zero.
ObjectiveValue contrastive_objective(MflvcModel& model, std::span<const Tensor2D> views,
                                     const ContrastiveConfig& cfg, const AblationFlags& flags,
                                     bool compute_grad);

// L_Z alone (the pretraining objective). Touches encoders and decoders only.
double reconstruction_objective(MflvcModel& model, std::span<const Tensor2D> views,
                                bool compute_grad);

// L_P on a batch with its matched one-hot targets. Touches encoders and the
// label head only.
double finetune_objective(MflvcModel& model, std::span<const Tensor2D> views,
                          std::span<const Tensor2D> targets, bool compute_grad);

}  // namespace mvclust
