#include "mvclust/objective.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mvclust/errors.hpp"

namespace mvclust {

namespace {

void require_views_match(const MflvcModel& model, std::span<const Tensor2D> views) {
    if (views.size() != model.num_views())
        throw DimensionError("batch has " + std::to_string(views.size()) +
                             " views but the model has " + std::to_string(model.num_views()));
    for (std::size_t m = 1; m < views.size(); ++m)
        if (views[m].rows() != views[0].rows())
            throw DimensionError("batch views are not row-aligned: " +
                                 std::to_string(views[0].rows()) + " vs " +
                                 std::to_string(views[m].rows()) + " rows");
}

void check_finite(double v, const char* component) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite loss in ") + component);
}

}  // namespace

void validate(const AblationFlags& flags) {
    if (!flags.use_reconstruction && !flags.use_high_level && !flags.contrast_on_z &&
        !flags.contrast_on_q)
        throw PreconditionError("ablation flags disable every objective");
}

ObjectiveValue contrastive_objective(MflvcModel& model, std::span<const Tensor2D> views,
                                     const ContrastiveConfig& cfg, const AblationFlags& flags,
                                     bool compute_grad) {
    require_views_match(model, views);
    const std::size_t nv = views.size();
    SharedHeads& heads = model.heads();

    std::vector<MlpTrace> enc_tr(nv), dec_tr(nv), feat_tr(nv), label_tr(nv);
    std::vector<Tensor2D> z(nv), x_hat, h, q;
    for (std::size_t m = 0; m < nv; ++m) {
        ViewAutoencoder& ae = model.view(m);
        z[m] = mlp_forward(ae.encoder, views[m], compute_grad ? &enc_tr[m] : nullptr);
        if (flags.use_reconstruction)
            x_hat.push_back(mlp_forward(ae.decoder, z[m], compute_grad ? &dec_tr[m] : nullptr));
        if (flags.use_high_level)
            h.push_back(mlp_forward(heads.feature_head, z[m], compute_grad ? &feat_tr[m] : nullptr));
        if (flags.contrast_on_q)
            q.push_back(softmax_rows(
                mlp_forward(heads.label_head, z[m], compute_grad ? &label_tr[m] : nullptr)));
    }

    ObjectiveValue out;
    std::vector<Tensor2D> g_xhat, g_h, g_q, g_z;
    auto gp = [&](std::vector<Tensor2D>& g) { return compute_grad ? &g : nullptr; };
    if (flags.use_reconstruction) {
        out.parts.reconstruction = reconstruction_loss(views, x_hat, gp(g_xhat));
        check_finite(out.parts.reconstruction, "L_Z");
    }
    if (flags.use_high_level) {
        out.parts.feature = feature_contrastive_total(h, cfg.tau_feature, gp(g_h));
        check_finite(out.parts.feature, "L_H");
    }
    if (flags.contrast_on_z) {
        out.latent_contrast = feature_contrastive_total(z, cfg.tau_feature, gp(g_z));
        check_finite(out.latent_contrast, "latent contrast");
    }
    if (flags.contrast_on_q) {
        out.parts.label = label_consistency_loss(q, cfg.tau_label, gp(g_q));
        check_finite(out.parts.label, "L_Q");
    }
    out.total = out.parts.reconstruction +
                cfg.lambda_feature * (out.parts.feature + out.latent_contrast) +
                cfg.lambda_label * out.parts.label;

    if (!compute_grad) return out;

    for (std::size_t m = 0; m < nv; ++m) {
        ViewAutoencoder& ae = model.view(m);
        Tensor2D dz(z[m].rows(), z[m].cols());
        if (flags.use_reconstruction) axpy(1.0, mlp_backward(ae.decoder, dec_tr[m], g_xhat[m]), dz);
        if (flags.use_high_level)
            axpy(cfg.lambda_feature, mlp_backward(heads.feature_head, feat_tr[m], g_h[m]), dz);
        if (flags.contrast_on_z) axpy(cfg.lambda_feature, g_z[m], dz);
        if (flags.contrast_on_q) {
            Tensor2D g = g_q[m];
            for (double& v : g.values()) v *= cfg.lambda_label;
            const Tensor2D d_logits = softmax_rows_backward(q[m], g);
            axpy(1.0, mlp_backward(heads.label_head, label_tr[m], d_logits), dz);
        }
        mlp_backward(ae.encoder, enc_tr[m], dz, false);
    }
    return out;
}

double reconstruction_objective(MflvcModel& model, std::span<const Tensor2D> views,
                                bool compute_grad) {
    require_views_match(model, views);
    const std::size_t nv = views.size();
    std::vector<MlpTrace> enc_tr(nv), dec_tr(nv);
    std::vector<Tensor2D> z(nv), x_hat(nv);
    for (std::size_t m = 0; m < nv; ++m) {
        ViewAutoencoder& ae = model.view(m);
        z[m] = mlp_forward(ae.encoder, views[m], compute_grad ? &enc_tr[m] : nullptr);
        x_hat[m] = mlp_forward(ae.decoder, z[m], compute_grad ? &dec_tr[m] : nullptr);
    }
    std::vector<Tensor2D> g;
    const double loss = reconstruction_loss(views, x_hat, compute_grad ? &g : nullptr);
    check_finite(loss, "L_Z");
    if (!compute_grad) return loss;
    for (std::size_t m = 0; m < nv; ++m) {
        ViewAutoencoder& ae = model.view(m);
        const Tensor2D dz = mlp_backward(ae.decoder, dec_tr[m], g[m]);
        mlp_backward(ae.encoder, enc_tr[m], dz, false);
    }
    return loss;
}

double finetune_objective(MflvcModel& model, std::span<const Tensor2D> views,
                          std::span<const Tensor2D> targets, bool compute_grad) {
    require_views_match(model, views);
    const std::size_t nv = views.size();
    SharedHeads& heads = model.heads();
    std::vector<MlpTrace> enc_tr(nv), label_tr(nv);
    std::vector<Tensor2D> q(nv);
    for (std::size_t m = 0; m < nv; ++m) {
        ViewAutoencoder& ae = model.view(m);
        const Tensor2D z = mlp_forward(ae.encoder, views[m], compute_grad ? &enc_tr[m] : nullptr);
        q[m] = softmax_rows(mlp_forward(heads.label_head, z, compute_grad ? &label_tr[m] : nullptr));
    }
    std::vector<Tensor2D> g;
    const double loss = finetune_cross_entropy(targets, q, compute_grad ? &g : nullptr);
    check_finite(loss, "L_P");
    if (!compute_grad) return loss;
    for (std::size_t m = 0; m < nv; ++m) {
        const Tensor2D d_logits = softmax_rows_backward(q[m], g[m]);
        const Tensor2D dz = mlp_backward(heads.label_head, label_tr[m], d_logits);
        mlp_backward(model.view(m).encoder, enc_tr[m], dz, false);
    }
    return loss;
}

}  // namespace mvclust
