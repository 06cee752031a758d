#include <doctest.h>

#include "mvclust/errors.hpp"
#include "mvclust/objective.hpp"
#include "mvclust/verify.hpp"
#include "oracles.hpp"

using namespace mvclust;

namespace {

bool all_zero(const std::vector<ParamTensor*>& ps) {
    for (const ParamTensor* p : ps)
        for (double g : p->grad.values())
            if (g != 0.0) return false;
    return true;
}

bool any_nonzero(const std::vector<ParamTensor*>& ps) { return !all_zero(ps); }

}  // namespace

TEST_CASE("every objective passes the finite-difference check") {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const auto results = run_gradcheck_suite(seed, 5);
        CHECK(results.size() == 5 * gradcheck_losses().size());
        for (const auto& r : results) {
            INFO(r.loss << " instance " << r.instance << " seed " << seed);
            CHECK(r.report.passed());
            CHECK(r.report.max_rel_error() <= 1e-4);
        }
    }
}

TEST_CASE("a corrupted gradient is caught and named") {
    const auto results = run_gradcheck_suite(0, 1, std::string("L_H"));
    for (const auto& r : results) {
        if (r.loss == "L_H")
            CHECK_FALSE(r.report.passed());
        else
            CHECK(r.report.passed());
    }
    CHECK_THROWS_AS(run_gradcheck_suite(0, 1, std::string("L_X")), PreconditionError);
}

TEST_CASE("gradient isolation between objectives") {
    Rng rng(31);
    for (int rep = 0; rep < 5; ++rep) {
        TinyInstance inst = make_tiny_instance(rng);
        MflvcModel& m = inst.model;
        const auto enc = m.params(ParamGroup::encoders);
        const auto dec = m.params(ParamGroup::decoders);
        const auto wh = m.params(ParamGroup::feature_head);
        const auto wq = m.params(ParamGroup::label_head);

        objective_closure(inst, "L_Z")(true);
        CHECK(all_zero(wh));
        CHECK(all_zero(wq));
        CHECK(any_nonzero(dec));

        objective_closure(inst, "L_H")(true);
        CHECK(all_zero(wq));
        CHECK(all_zero(dec));
        CHECK(any_nonzero(wh));

        objective_closure(inst, "L_Q")(true);
        CHECK(all_zero(wh));
        CHECK(all_zero(dec));
        CHECK(any_nonzero(wq));

        objective_closure(inst, "L_P")(true);
        CHECK(all_zero(wh));
        CHECK(all_zero(dec));
        CHECK(any_nonzero(wq));
        CHECK(any_nonzero(enc));
    }
}

TEST_CASE("model objective equals the loss functions applied to forward outputs") {
    Rng rng(32);
    for (int rep = 0; rep < 5; ++rep) {
        TinyInstance inst = make_tiny_instance(rng);
        MflvcModel& m = inst.model;
        std::vector<Tensor2D> xh, h, q, z;
        for (std::size_t v = 0; v < m.num_views(); ++v) {
            z.push_back(m.encode(v, inst.views[v]));
            xh.push_back(m.decode(v, z.back()));
            h.push_back(m.high_level(z.back()));
            q.push_back(m.cluster_assignments(z.back()));
        }
        ContrastiveConfig cfg;
        cfg.lambda_feature = 0.7;
        cfg.lambda_label = 1.3;
        const double lz = reconstruction_loss(inst.views, xh);
        const double lh = feature_contrastive_total(h, cfg.tau_feature);
        const double lq = label_consistency_loss(q, cfg.tau_label);
        const ObjectiveValue ov = contrastive_objective(m, inst.views, cfg, {}, false);
        CHECK(ov.parts.reconstruction == doctest::Approx(lz).epsilon(1e-13));
        CHECK(ov.parts.feature == doctest::Approx(lh).epsilon(1e-13));
        CHECK(ov.parts.label == doctest::Approx(lq).epsilon(1e-13));
        CHECK(ov.total == doctest::Approx(lz + 0.7 * lh + 1.3 * lq).epsilon(1e-13));

        AblationFlags with_z;
        with_z.contrast_on_z = true;
        const ObjectiveValue oz = contrastive_objective(m, inst.views, cfg, with_z, false);
        const double lzc = feature_contrastive_total(z, cfg.tau_feature);
        CHECK(oz.latent_contrast == doctest::Approx(lzc).epsilon(1e-13));
        CHECK(oz.total == doctest::Approx(lz + 0.7 * (lh + lzc) + 1.3 * lq).epsilon(1e-13));

        CHECK(reconstruction_objective(m, inst.views, false) == doctest::Approx(lz).epsilon(1e-13));
        CHECK(finetune_objective(m, inst.views, inst.targets, false) ==
              doctest::Approx(finetune_cross_entropy(inst.targets, q)).epsilon(1e-13));
    }
}

TEST_CASE("objective preconditions") {
    Rng rng(33);
    TinyInstance inst = make_tiny_instance(rng);
    CHECK_THROWS_AS(validate(AblationFlags{false, false, false, false}), PreconditionError);
    std::vector<Tensor2D> short_views(inst.views.begin(), inst.views.begin() + 1);
    CHECK_THROWS(contrastive_objective(inst.model, short_views, {}, {}, false));
}
