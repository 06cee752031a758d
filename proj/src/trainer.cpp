#include "mvclust/trainer.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "mvclust/errors.hpp"

namespace mvclust {

namespace {

struct StageGroups {
    bool encoders = false;
    bool decoders = false;
    bool feature_head = false;
    bool label_head = false;
};

std::vector<ParamTensor*> stage_params(MflvcModel& model, const StageGroups& g) {
    std::vector<ParamTensor*> out;
    auto add = [&](ParamGroup group) {
        for (ParamTensor* p : model.params(group)) out.push_back(p);
    };
    if (g.encoders) add(ParamGroup::encoders);
    if (g.decoders) add(ParamGroup::decoders);
    if (g.feature_head) add(ParamGroup::feature_head);
    if (g.label_head) add(ParamGroup::label_head);
    return out;
}

std::size_t effective_batch(const TrainConfig& cfg, std::size_t n) {
    return cfg.full_batch ? n : std::min(cfg.batch_size, n);
}

// Runs `epochs` passes of mini-batch Adam. `step_loss` evaluates the batch
// loss with gradients accumulated into the model; only `params` are updated.
void run_epochs(const std::string& stage, MflvcModel& model, const MultiViewDataset& ds,
                const TrainConfig& cfg, Rng& rng, std::size_t epochs,
                const std::vector<ParamTensor*>& params,
                const std::function<double(std::span<const Tensor2D>,
                                           std::span<const std::size_t>)>& step_loss,
                const std::function<void(std::size_t)>& after_epoch) {
    const AdamConfig adam{cfg.lr};
    const std::size_t n = ds.num_samples();
    for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
        for (const auto& batch : minibatch_iter(n, effective_batch(cfg, n), rng)) {
            const auto views = gather_batch(ds.views, batch);
            model.zero_grad();
            double loss = 0.0;
            try {
                loss = step_loss(views, batch);
            } catch (const NumericalError& e) {
                throw NumericalError(stage + " epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(loss))
                throw NumericalError(stage + " epoch " + std::to_string(epoch) +
                                     ": non-finite loss");
            for (ParamTensor* p : params) adam_step(*p, adam);
        }
        after_epoch(epoch);
    }
}

bool should_log(const TrainConfig& cfg, std::size_t epoch, std::size_t epochs) {
    if (epoch == epochs) return true;
    return cfg.eval_every > 0 && epoch % cfg.eval_every == 0;
}

void log_state(TrainLog* log, const std::string& stage, std::size_t epoch, MflvcModel& model,
               const MultiViewDataset& ds, const TrainConfig& cfg,
               const std::vector<Tensor2D>* targets) {
    if (!log) return;
    EpochRecord rec;
    try {
        rec = evaluate_state(model, ds, cfg, stage, targets);
    } catch (const NumericalError& e) {
        throw NumericalError(stage + " epoch " + std::to_string(epoch) + ": " + e.what());
    }
    rec.epoch = epoch;
    log->records.push_back(std::move(rec));
}

void require_trainable(const MultiViewDataset& ds, const MflvcModel& model) {
    validate(ds);
    if (ds.num_views() < 2)
        throw PreconditionError("training needs at least 2 views, dataset has " +
                                std::to_string(ds.num_views()));
    if (ds.num_views() != model.num_views())
        throw DimensionError("dataset has " + std::to_string(ds.num_views()) +
                             " views but the model has " + std::to_string(model.num_views()));
    for (std::size_t m = 0; m < ds.num_views(); ++m)
        if (ds.views[m].cols() != model.view(m).input_dim)
            throw DimensionError("view " + std::to_string(m) + " has " +
                                 std::to_string(ds.views[m].cols()) +
                                 " features but the model expects " +
                                 std::to_string(model.view(m).input_dim));
    if (model.clusters() > ds.num_samples())
        throw PreconditionError("K = " + std::to_string(model.clusters()) + " exceeds N = " +
                                std::to_string(ds.num_samples()));
}

std::vector<Tensor2D> gather_targets(const std::vector<Tensor2D>& targets,
                                     std::span<const std::size_t> batch) {
    return gather_batch(targets, batch);
}

}  // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw PreconditionError("batch_size must be >= 1");
    if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) throw PreconditionError("lr must be > 0");
    if (cfg.latent_dim == 0) throw PreconditionError("latent_dim must be >= 1");
    if (cfg.high_dim == 0) throw PreconditionError("high_dim must be >= 1");
    validate(cfg.contrastive);
    validate(cfg.ablation);
}

std::vector<const EpochRecord*> TrainLog::stage(const std::string& name) const {
    std::vector<const EpochRecord*> out;
    for (const auto& r : records)
        if (r.stage == name) out.push_back(&r);
    return out;
}

void write_log_csv(const TrainLog& log, std::ostream& out) {
    out << "stage,epoch,stage_loss,loss_z,loss_h,loss_q,loss_p,pos_cos,neg_cos,acc,nmi,pur\n";
    auto opt = [&](const std::optional<double>& v) {
        if (v) out << format_double(*v);
        out << ',';
    };
    for (const auto& r : log.records) {
        out << r.stage << ',' << r.epoch << ',' << format_double(r.stage_loss) << ',';
        opt(r.loss_z);
        opt(r.loss_h);
        opt(r.loss_q);
        opt(r.loss_p);
        out << format_double(r.pos_cos) << ',' << format_double(r.neg_cos) << ',';
        if (r.metrics)
            out << format_double(r.metrics->acc) << ',' << format_double(r.metrics->nmi) << ','
                << format_double(r.metrics->pur);
        else
            out << ",,";
        out << '\n';
    }
}

std::vector<Tensor2D> view_assignments(const MflvcModel& model, std::span<const Tensor2D> views) {
    std::vector<Tensor2D> q;
    for (std::size_t m = 0; m < views.size(); ++m)
        q.push_back(model.cluster_assignments(model.encode(m, views[m])));
    return q;
}

std::vector<Tensor2D> view_high_level(const MflvcModel& model, std::span<const Tensor2D> views) {
    std::vector<Tensor2D> h;
    for (std::size_t m = 0; m < views.size(); ++m)
        h.push_back(model.high_level(model.encode(m, views[m])));
    return h;
}

Labels predict(const MflvcModel& model, std::span<const Tensor2D> views) {
    return final_labels(view_assignments(model, views));
}

EpochRecord evaluate_state(MflvcModel& model, const MultiViewDataset& ds, const TrainConfig& cfg,
                           const std::string& stage, const std::vector<Tensor2D>* targets) {
    EpochRecord rec;
    rec.stage = stage;
    if (stage == "pretrain") {
        rec.loss_z = reconstruction_objective(model, ds.views, false);
        rec.stage_loss = *rec.loss_z;
    } else if (stage == "contrastive") {
        const AblationFlags& f = cfg.ablation;
        const ObjectiveValue ov = contrastive_objective(model, ds.views, cfg.contrastive, f, false);
        if (f.use_reconstruction) rec.loss_z = ov.parts.reconstruction;
        if (f.use_high_level) rec.loss_h = ov.parts.feature;
        if (f.contrast_on_q) rec.loss_q = ov.parts.label;
        rec.stage_loss = ov.total;
    } else if (stage == "finetune") {
        if (!targets) throw PreconditionError("evaluate_state: finetune needs targets");
        rec.loss_p = finetune_objective(model, ds.views, *targets, false);
        rec.stage_loss = *rec.loss_p;
    } else {
        throw PreconditionError("evaluate_state: unknown stage '" + stage + "'");
    }

    // Mean positive and negative cross-view cosine over unordered view pairs.
    // The negative mean uses sum_{i != j} u_i . v_j = (sum u) . (sum v) - sum u_i . v_i.
    const auto h = view_high_level(model, ds.views);
    const std::size_t nv = ds.num_views();
    const std::size_t n = ds.num_samples();
    std::vector<Tensor2D> unit;
    for (const Tensor2D& t : h) {
        Tensor2D u = t;
        for (std::size_t i = 0; i < n; ++i) {
            auto row = u.row(i);
            double s = 0.0;
            for (double x : row) s += x * x;
            const double c = std::sqrt(s) + kNormEps;
            for (double& x : row) x /= c;
        }
        unit.push_back(std::move(u));
    }
    double pos = 0.0, neg = 0.0;
    std::size_t pairs = 0;
    for (std::size_t m = 0; m < nv; ++m) {
        for (std::size_t v = m + 1; v < nv; ++v) {
            const Tensor2D sm = column_sums(unit[m]);
            const Tensor2D sv = column_sums(unit[v]);
            double diag = 0.0, all = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto a = unit[m].row(i);
                const auto b = unit[v].row(i);
                for (std::size_t k = 0; k < a.size(); ++k) diag += a[k] * b[k];
            }
            for (std::size_t k = 0; k < sm.cols(); ++k) all += sm(0, k) * sv(0, k);
            pos += diag / static_cast<double>(n);
            if (n > 1) neg += (all - diag) / static_cast<double>(n * (n - 1));
            ++pairs;
        }
    }
    if (pairs) {
        rec.pos_cos = pos / static_cast<double>(pairs);
        rec.neg_cos = neg / static_cast<double>(pairs);
    }
    if (ds.labels) rec.metrics = evaluate(predict(model, ds.views), *ds.labels);
    return rec;
}

void pretrain(MflvcModel& model, const MultiViewDataset& ds, const TrainConfig& cfg, Rng& rng,
              TrainLog* log) {
    require_trainable(ds, model);
    const std::string stage = "pretrain";
    if (cfg.pretrain_epochs == 0) return;
    log_state(log, stage, 0, model, ds, cfg, nullptr);
    const auto params = stage_params(model, {.encoders = true, .decoders = true});
    run_epochs(
        stage, model, ds, cfg, rng, cfg.pretrain_epochs, params,
        [&](std::span<const Tensor2D> views, std::span<const std::size_t>) {
            return reconstruction_objective(model, views, true);
        },
        [&](std::size_t epoch) {
            if (should_log(cfg, epoch, cfg.pretrain_epochs))
                log_state(log, stage, epoch, model, ds, cfg, nullptr);
        });
}

void contrastive_train(MflvcModel& model, const MultiViewDataset& ds, const TrainConfig& cfg,
                       Rng& rng, TrainLog* log) {
    require_trainable(ds, model);
    const std::string stage = "contrastive";
    if (cfg.contrastive_epochs == 0) return;
    const AblationFlags& f = cfg.ablation;
    log_state(log, stage, 0, model, ds, cfg, nullptr);
    const auto params = stage_params(model, {.encoders = true,
                                             .decoders = f.use_reconstruction,
                                             .feature_head = f.use_high_level,
                                             .label_head = f.contrast_on_q});
    run_epochs(
        stage, model, ds, cfg, rng, cfg.contrastive_epochs, params,
        [&](std::span<const Tensor2D> views, std::span<const std::size_t>) {
            return contrastive_objective(model, views, cfg.contrastive, f, true).total;
        },
        [&](std::size_t epoch) {
            if (should_log(cfg, epoch, cfg.contrastive_epochs))
                log_state(log, stage, epoch, model, ds, cfg, nullptr);
        });
}

std::vector<MatchResult> pseudo_label_stage(MflvcModel& model, const MultiViewDataset& ds,
                                            const TrainConfig& cfg, Rng& rng, TrainLog* log) {
    require_trainable(ds, model);
    const std::string stage = "finetune";
    Rng kmeans_rng = rng.fork();

    std::vector<MatchResult> matches;
    std::vector<Tensor2D> targets;
    auto rematch = [&] {
        const auto h = view_high_level(model, ds.views);
        const auto q = view_assignments(model, ds.views);
        matches.clear();
        targets.clear();
        for (std::size_t m = 0; m < ds.num_views(); ++m) {
            matches.push_back(match_view(h[m], q[m], kmeans_rng, cfg.kmeans));
            targets.push_back(matches.back().targets);
        }
    };
    rematch();
    if (cfg.finetune_epochs == 0) return matches;

    log_state(log, stage, 0, model, ds, cfg, &targets);
    const auto params = stage_params(model, {.encoders = true, .label_head = true});
    run_epochs(
        stage, model, ds, cfg, rng, cfg.finetune_epochs, params,
        [&](std::span<const Tensor2D> views, std::span<const std::size_t> batch) {
            const auto batch_targets = gather_targets(targets, batch);
            return finetune_objective(model, views, batch_targets, true);
        },
        [&](std::size_t epoch) {
            if (should_log(cfg, epoch, cfg.finetune_epochs))
                log_state(log, stage, epoch, model, ds, cfg, &targets);
            if (cfg.refresh_every > 0 && epoch % cfg.refresh_every == 0 &&
                epoch < cfg.finetune_epochs)
                rematch();
        });
    return matches;
}

MflvcModel build_model(const MultiViewDataset& ds, const TrainConfig& cfg, Rng& rng) {
    ModelConfig mc;
    mc.input_dims = ds.dims();
    mc.encoder_hidden = cfg.encoder_hidden;
    mc.latent_dim = cfg.latent_dim;
    mc.high_dim = cfg.high_dim;
    mc.label_hidden = cfg.label_hidden;
    mc.clusters = ds.clusters;
    return init_model(mc, rng);
}

PipelineResult run_pipeline(const MultiViewDataset& ds, const TrainConfig& cfg) {
    validate(cfg);
    validate(ds);
    Rng root(cfg.seed);
    Rng init_rng = root.fork();
    Rng pretrain_rng = root.fork();
    Rng contrastive_rng = root.fork();
    Rng finetune_rng = root.fork();

    PipelineResult r;
    r.model = build_model(ds, cfg, init_rng);
    require_trainable(ds, r.model);
    if (cfg.ablation.use_reconstruction) pretrain(r.model, ds, cfg, pretrain_rng, &r.log);
    contrastive_train(r.model, ds, cfg, contrastive_rng, &r.log);
    if (cfg.ablation.use_high_level)
        r.matches = pseudo_label_stage(r.model, ds, cfg, finetune_rng, &r.log);
    r.labels = predict(r.model, ds.views);
    if (ds.labels) r.metrics = evaluate(r.labels, *ds.labels);
    return r;
}

bool is_variant(const std::string& v) {
    return v.size() == 1 && std::string("ABCDabcd").find(v[0]) != std::string::npos;
}

AblationFlags ablation_flags(const std::string& variant) {
    if (!is_variant(variant)) throw PreconditionError("unknown ablation variant '" + variant + "'");
    AblationFlags f;  // D / d
    switch (variant[0]) {
        case 'A':
        case 'a':
            f.use_reconstruction = false;
            f.use_high_level = false;
            break;
        case 'B':
            f.use_high_level = false;
            break;
        case 'C':
            f.use_reconstruction = false;
            break;
        case 'b':
            f.use_high_level = false;
            f.contrast_on_z = true;
            break;
        case 'c':
            f.contrast_on_z = true;
            break;
        default:
            break;
    }
    return f;
}

AblationResult run_ablation(const MultiViewDataset& ds, const TrainConfig& base,
                            const std::string& variant) {
    if (!ds.labels) throw PreconditionError("ablation needs ground-truth labels");
    TrainConfig cfg = base;
    cfg.ablation = ablation_flags(variant);
    const PipelineResult r = run_pipeline(ds, cfg);
    return {variant, cfg.seed, *r.metrics};
}

}  // namespace mvclust
