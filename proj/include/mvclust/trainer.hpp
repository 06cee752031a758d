#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mvclust/adam.hpp"
#include "mvclust/clustering.hpp"
#include "mvclust/data.hpp"
#include "mvclust/losses.hpp"
#include "mvclust/metrics.hpp"
#include "mvclust/model.hpp"
#include "mvclust/objective.hpp"

namespace mvclust {

struct TrainConfig {
    std::size_t pretrain_epochs = 100;
    std::size_t contrastive_epochs = 50;
    std::size_t finetune_epochs = 50;
    std::size_t batch_size = 256;
    // Every stage uses the whole dataset as one batch; overrides batch_size.
    bool full_batch = false;
    double lr = 1e-3;
    ContrastiveConfig contrastive;
    AblationFlags ablation;

    std::vector<std::size_t> encoder_hidden{256, 128};
    std::size_t latent_dim = 64;
    std::size_t high_dim = 32;
    std::vector<std::size_t> label_hidden;

    KmeansOptions kmeans;
    // Re-run K-means and matching every this many fine-tuning epochs; 0 = once.
    std::size_t refresh_every = 0;
    // Full-dataset evaluation for the log every this many epochs (stage start
    // and end are always logged); 0 logs only stage start and end.
    std::size_t eval_every = 1;

    std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
    std::string stage;  // pretrain | contrastive | finetune
    std::size_t epoch = 0;  // 0 = state before the stage's first update
    double stage_loss = 0.0;  // the objective this stage minimizes
    // Objective terms the stage optimizes; the rest stay empty.
    std::optional<double> loss_z;
    std::optional<double> loss_h;
    std::optional<double> loss_q;
    std::optional<double> loss_p;
    double pos_cos = 0.0;              // mean cosine of positive pairs of H
    double neg_cos = 0.0;              // mean cosine of negative cross-view pairs of H
    std::optional<MetricSet> metrics;  // when ground truth is known
};

// Per-stage convergence record, all values evaluated on the full dataset.
struct TrainLog {
    std::vector<EpochRecord> records;

    std::vector<const EpochRecord*> stage(const std::string& name) const;
};

// Column order:
// stage,epoch,stage_loss,loss_z,loss_h,loss_q,loss_p,pos_cos,neg_cos,acc,nmi,pur
// Optional values are written as empty fields.
void write_log_csv(const TrainLog& log, std::ostream& out);

// Full-dataset evaluation of `stage`'s objective, the H cosines and the
// metrics. The finetune stage needs its one-hot targets.
EpochRecord evaluate_state(MflvcModel& model, const MultiViewDataset& ds, const TrainConfig& cfg,
                           const std::string& stage,
                           const std::vector<Tensor2D>* targets = nullptr);

// Stage 1: mini-batch Adam on L_Z; only encoders and decoders move.
void pretrain(MflvcModel& model, const MultiViewDataset& ds, const TrainConfig& cfg, Rng& rng,
              TrainLog* log = nullptr);

// Stage 2: mini-batch Adam on the combined contrastive objective.
void contrastive_train(MflvcModel& model, const MultiViewDataset& ds, const TrainConfig& cfg,
                       Rng& rng, TrainLog* log = nullptr);

// Stages 3-5: K-means on every view's high-level features, matching against
// the label head, then mini-batch Adam on L_P moving only the encoders and
// the label head. Returns the matches used last.
std::vector<MatchResult> pseudo_label_stage(MflvcModel& model, const MultiViewDataset& ds,
                                            const TrainConfig& cfg, Rng& rng,
                                            TrainLog* log = nullptr);

// Soft assignments of every view on the full dataset.
std::vector<Tensor2D> view_assignments(const MflvcModel& model, std::span<const Tensor2D> views);
std::vector<Tensor2D> view_high_level(const MflvcModel& model, std::span<const Tensor2D> views);

// argmax of the view-averaged assignments.
Labels predict(const MflvcModel& model, std::span<const Tensor2D> views);

struct PipelineResult {
    MflvcModel model;
    TrainLog log;
    Labels labels;
    std::vector<MatchResult> matches;
    std::optional<MetricSet> metrics;
};

MflvcModel build_model(const MultiViewDataset& ds, const TrainConfig& cfg, Rng& rng);

// All stages in order, then the final labels. Deterministic in (ds, cfg).
PipelineResult run_pipeline(const MultiViewDataset& ds, const TrainConfig& cfg);

// Ablation variants. Loss components: A = L_Q only, B = L_Q + L_Z,
// C = L_Q + L_H + L_P, D = everything. Contrastive structures: a = Q only
// (same as A), b = reconstruction + contrast on Z and Q, c = reconstruction +
// contrast on Z, H and Q, d = the method (same as D).
bool is_variant(const std::string& v);
AblationFlags ablation_flags(const std::string& variant);

struct AblationResult {
    std::string variant;
    std::uint64_t seed = 0;
    MetricSet metrics;
};

AblationResult run_ablation(const MultiViewDataset& ds, const TrainConfig& base,
                            const std::string& variant);

}  // namespace mvclust
