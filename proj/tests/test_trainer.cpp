#include <doctest.h>

#include <sstream>

#include "mvclust/errors.hpp"
#include "mvclust/trainer.hpp"
#include "oracles.hpp"

using namespace mvclust;

namespace {

MultiViewDataset small_dataset(std::size_t n = 60) {
    SyntheticConfig c;
    c.samples = n;
    c.views = 2;
    c.view_dims = {6, 5};
    c.clusters = 3;
    c.common_dim = 2;
    c.private_dim = 2;
    return generate_synthetic(c);
}

TrainConfig small_train() {
    TrainConfig t;
    t.pretrain_epochs = 3;
    t.contrastive_epochs = 3;
    t.finetune_epochs = 3;
    t.batch_size = 16;
    t.encoder_hidden = {8};
    t.latent_dim = 4;
    t.high_dim = 3;
    t.kmeans.n_restarts = 2;
    t.seed = 5;
    return t;
}

std::vector<Tensor2D> snapshot(MflvcModel& m, ParamGroup g) {
    std::vector<Tensor2D> out;
    for (const ParamTensor* p : m.params(g)) out.push_back(p->value);
    return out;
}

bool same(MflvcModel& m, ParamGroup g, const std::vector<Tensor2D>& before) {
    return snapshot(m, g) == before;
}

struct Snapshots {
    std::vector<Tensor2D> enc, dec, wh, wq;
    explicit Snapshots(MflvcModel& m)
        : enc(snapshot(m, ParamGroup::encoders)),
          dec(snapshot(m, ParamGroup::decoders)),
          wh(snapshot(m, ParamGroup::feature_head)),
          wq(snapshot(m, ParamGroup::label_head)) {}
};

}  // namespace

TEST_CASE("stages with zero epochs leave the model unchanged") {
    const auto ds = small_dataset();
    TrainConfig cfg = small_train();
    cfg.pretrain_epochs = cfg.contrastive_epochs = cfg.finetune_epochs = 0;
    Rng rng(1);
    MflvcModel m = build_model(ds, cfg, rng);
    const Snapshots s(m);
    TrainLog log;
    pretrain(m, ds, cfg, rng, &log);
    contrastive_train(m, ds, cfg, rng, &log);
    const auto matches = pseudo_label_stage(m, ds, cfg, rng, &log);
    CHECK(matches.size() == 2);
    CHECK(same(m, ParamGroup::encoders, s.enc));
    CHECK(same(m, ParamGroup::decoders, s.dec));
    CHECK(same(m, ParamGroup::feature_head, s.wh));
    CHECK(same(m, ParamGroup::label_head, s.wq));
    CHECK(log.records.empty());
}

TEST_CASE("each stage moves only its parameter groups") {
    const auto ds = small_dataset();
    const TrainConfig cfg = small_train();
    Rng rng(2);
    MflvcModel m = build_model(ds, cfg, rng);

    Snapshots s0(m);
    pretrain(m, ds, cfg, rng);
    CHECK_FALSE(same(m, ParamGroup::encoders, s0.enc));
    CHECK_FALSE(same(m, ParamGroup::decoders, s0.dec));
    CHECK(same(m, ParamGroup::feature_head, s0.wh));
    CHECK(same(m, ParamGroup::label_head, s0.wq));

    Snapshots s1(m);
    contrastive_train(m, ds, cfg, rng);
    CHECK_FALSE(same(m, ParamGroup::encoders, s1.enc));
    CHECK_FALSE(same(m, ParamGroup::decoders, s1.dec));
    CHECK_FALSE(same(m, ParamGroup::feature_head, s1.wh));
    CHECK_FALSE(same(m, ParamGroup::label_head, s1.wq));

    Snapshots s2(m);
    pseudo_label_stage(m, ds, cfg, rng);
    CHECK_FALSE(same(m, ParamGroup::encoders, s2.enc));
    CHECK(same(m, ParamGroup::decoders, s2.dec));
    CHECK(same(m, ParamGroup::feature_head, s2.wh));
    CHECK_FALSE(same(m, ParamGroup::label_head, s2.wq));
}

TEST_CASE("variant A trains neither decoders nor the feature head") {
    const auto ds = small_dataset();
    TrainConfig cfg = small_train();
    cfg.ablation = ablation_flags("A");
    Rng rng(3);
    MflvcModel m = build_model(ds, cfg, rng);
    Snapshots s(m);
    contrastive_train(m, ds, cfg, rng);
    CHECK(same(m, ParamGroup::decoders, s.dec));
    CHECK(same(m, ParamGroup::feature_head, s.wh));
    CHECK_FALSE(same(m, ParamGroup::label_head, s.wq));
}

TEST_CASE("run_pipeline is deterministic and logs every epoch") {
    const auto ds = small_dataset();
    const TrainConfig cfg = small_train();
    const auto a = run_pipeline(ds, cfg);
    const auto b = run_pipeline(ds, cfg);
    CHECK(a.labels == b.labels);
    std::ostringstream la, lb;
    write_log_csv(a.log, la);
    write_log_csv(b.log, lb);
    CHECK(la.str() == lb.str());
    REQUIRE(a.metrics.has_value());

    for (const char* stage : {"pretrain", "contrastive", "finetune"}) {
        const auto recs = a.log.stage(stage);
        REQUIRE(recs.size() == 4);
        for (std::size_t e = 0; e < recs.size(); ++e) {
            CHECK(recs[e]->epoch == e);
            CHECK(recs[e]->metrics.has_value());
        }
    }
    const auto pre = a.log.stage("pretrain");
    CHECK(pre[0]->loss_z.has_value());
    CHECK_FALSE(pre[0]->loss_h.has_value());
    CHECK(pre[0]->stage_loss == *pre[0]->loss_z);
    const auto con = a.log.stage("contrastive");
    CHECK(con[0]->loss_h.has_value());
    CHECK(con[0]->loss_q.has_value());
    const auto fin = a.log.stage("finetune");
    CHECK(fin[0]->loss_p.has_value());
    CHECK(fin[0]->stage_loss == *fin[0]->loss_p);

    std::istringstream csv(la.str());
    std::string header, line;
    std::getline(csv, header);
    CHECK(header == "stage,epoch,stage_loss,loss_z,loss_h,loss_q,loss_p,pos_cos,neg_cos,acc,nmi,pur");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 11);
        ++rows;
    }
    CHECK(rows == a.log.records.size());

    TrainConfig other = cfg;
    other.seed = 6;
    const auto c = run_pipeline(ds, other);
    std::ostringstream lc;
    write_log_csv(c.log, lc);
    CHECK(lc.str() != la.str());
}

TEST_CASE("eval_every thins the log but keeps stage ends") {
    const auto ds = small_dataset();
    TrainConfig cfg = small_train();
    cfg.pretrain_epochs = 5;
    cfg.eval_every = 2;
    const auto r = run_pipeline(ds, cfg);
    std::vector<std::size_t> epochs;
    for (const auto* rec : r.log.stage("pretrain")) epochs.push_back(rec->epoch);
    CHECK(epochs == std::vector<std::size_t>{0, 2, 4, 5});
}

TEST_CASE("an untrained model scores near chance") {
    SyntheticConfig sc;
    sc.samples = 400;
    const auto ds = generate_synthetic(sc);
    TrainConfig cfg;
    cfg.pretrain_epochs = cfg.contrastive_epochs = cfg.finetune_epochs = 0;
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.seed = seed;
        const auto r = run_pipeline(ds, cfg);
        CHECK(r.labels.size() == 400);
        mean += r.metrics->acc / 5.0;
    }
    CHECK(mean >= 0.25);
    CHECK(mean < 0.6);
}

TEST_CASE("training preconditions") {
    const TrainConfig cfg = small_train();
    MultiViewDataset one = small_dataset();
    one.views.resize(1);
    CHECK_THROWS_AS(run_pipeline(one, cfg), PreconditionError);

    MultiViewDataset few = small_dataset(60);
    few.clusters = 3;
    few.views[0] = Tensor2D(2, 6, 1.0);
    few.views[1] = Tensor2D(2, 5, 1.0);
    few.labels = Labels{0, 1};
    CHECK_THROWS_AS(run_pipeline(few, cfg), PreconditionError);

    const auto ds = small_dataset();
    Rng rng(1);
    MflvcModel m = build_model(ds, cfg, rng);
    MultiViewDataset wide = ds;
    wide.views[1] = Tensor2D(60, 9, 0.5);
    CHECK_THROWS_AS(pretrain(m, wide, cfg, rng), DimensionError);

    TrainConfig bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(run_pipeline(ds, bad), PreconditionError);
    bad = cfg;
    bad.lr = -1.0;
    CHECK_THROWS_AS(run_pipeline(ds, bad), PreconditionError);
}

TEST_CASE("a non-finite loss aborts with the stage named") {
    MultiViewDataset ds = small_dataset();
    for (double& v : ds.views[0].values()) v = 1e200;
    try {
        run_pipeline(ds, small_train());
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("pretrain") != std::string::npos);
        CHECK(std::string(e.what()).find("L_Z") != std::string::npos);
    }
}

TEST_CASE("ablation variants") {
    for (const char* v : {"A", "B", "C", "D", "a", "b", "c", "d"}) CHECK(is_variant(v));
    for (const char* v : {"E", "", "AB", "x"}) CHECK_FALSE(is_variant(v));
    CHECK_THROWS_AS(ablation_flags("E"), PreconditionError);

    const auto a = ablation_flags("A");
    CHECK_FALSE(a.use_reconstruction);
    CHECK_FALSE(a.use_high_level);
    CHECK(a.contrast_on_q);
    const auto b = ablation_flags("B");
    CHECK(b.use_reconstruction);
    CHECK_FALSE(b.use_high_level);
    const auto c = ablation_flags("C");
    CHECK_FALSE(c.use_reconstruction);
    CHECK(c.use_high_level);
    const auto d = ablation_flags("D");
    CHECK(d.use_reconstruction);
    CHECK(d.use_high_level);
    CHECK_FALSE(d.contrast_on_z);
    CHECK(ablation_flags("b").contrast_on_z);
    CHECK_FALSE(ablation_flags("b").use_high_level);
    CHECK(ablation_flags("c").contrast_on_z);
    CHECK(ablation_flags("c").use_high_level);

    const auto ds = small_dataset();
    const TrainConfig cfg = small_train();
    const auto rd = run_ablation(ds, cfg, "D");
    const auto rp = run_pipeline(ds, cfg);
    CHECK(rd.metrics.acc == rp.metrics->acc);
    CHECK(rd.metrics.nmi == rp.metrics->nmi);

    const auto ra = run_ablation(ds, cfg, "A");
    CHECK(ra.metrics.acc > 0.0);
    MultiViewDataset unlabeled = ds;
    unlabeled.labels.reset();
    CHECK_THROWS_AS(run_ablation(unlabeled, cfg, "D"), PreconditionError);
}

TEST_CASE("unlabeled data trains without metrics") {
    MultiViewDataset ds = small_dataset();
    ds.labels.reset();
    const auto r = run_pipeline(ds, small_train());
    CHECK_FALSE(r.metrics.has_value());
    CHECK(r.labels.size() == 60);
    for (const auto& rec : r.log.records) CHECK_FALSE(rec.metrics.has_value());
}
