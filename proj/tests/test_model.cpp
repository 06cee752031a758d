#include <doctest.h>

#include <cmath>

#include "mvclust/errors.hpp"
#include "mvclust/model.hpp"
#include "oracles.hpp"

using namespace mvclust;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.input_dims = {4, 6};
    c.encoder_hidden = {};
    c.latent_dim = 3;
    c.high_dim = 2;
    c.clusters = 2;
    return c;
}

void zero_all(MflvcModel& m) {
    for (ParamTensor* p : m.all_params()) p->value.fill(0.0);
}

}  // namespace

TEST_CASE("init_model shapes follow the configuration") {
    Rng rng(1);
    MflvcModel m = init_model(small_config(), rng);
    CHECK(m.num_views() == 2);
    CHECK(m.view(0).encoder.in_dim() == 4);
    CHECK(m.view(0).encoder.out_dim() == 3);
    CHECK(m.view(1).encoder.in_dim() == 6);
    CHECK(m.view(1).encoder.out_dim() == 3);
    CHECK(m.view(1).decoder.in_dim() == 3);
    CHECK(m.view(1).decoder.out_dim() == 6);
    CHECK(m.heads().feature_head.layers.size() == 1);
    CHECK(m.heads().feature_head.out_dim() == 2);
    CHECK(m.heads().label_head.out_dim() == 2);

    ModelConfig deep = small_config();
    deep.encoder_hidden = {8, 5};
    MflvcModel d = init_model(deep, rng);
    const auto& enc = d.view(0).encoder.layers;
    REQUIRE(enc.size() == 3);
    CHECK(enc[0].weight.value.rows() == 8);
    CHECK(enc[0].weight.value.cols() == 4);
    CHECK(enc[1].weight.value.rows() == 5);
    CHECK(enc[2].weight.value.rows() == 3);
    const auto& dec = d.view(0).decoder.layers;
    REQUIRE(dec.size() == 3);
    CHECK(dec[0].weight.value.rows() == 5);
    CHECK(dec[1].weight.value.rows() == 8);
    CHECK(dec[2].weight.value.rows() == 4);
}

TEST_CASE("initialization is seeded and bounded by 1/sqrt(fan_in)") {
    Rng a(7), b(7);
    MflvcModel ma = init_model(small_config(), a);
    MflvcModel mb = init_model(small_config(), b);
    const auto pa = ma.all_params();
    const auto pb = mb.all_params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->value == pb[i]->value);
        const bool is_bias = pa[i]->name.ends_with("bias");
        const double bound = 1.0 / std::sqrt(static_cast<double>(pa[i]->value.cols()));
        for (double v : pa[i]->value.values()) {
            if (is_bias)
                CHECK(v == 0.0);
            else
                CHECK(std::abs(v) <= bound);
        }
    }
}

TEST_CASE("init_model rejects degenerate configurations") {
    Rng rng(1);
    ModelConfig c = small_config();
    c.latent_dim = 0;
    CHECK_THROWS_AS(init_model(c, rng), PreconditionError);
    c = small_config();
    c.clusters = 1;
    CHECK_THROWS_AS(init_model(c, rng), PreconditionError);
    c = small_config();
    c.input_dims = {};
    CHECK_THROWS_AS(init_model(c, rng), PreconditionError);
    c = small_config();
    c.input_dims = {4, 0};
    CHECK_THROWS_AS(init_model(c, rng), PreconditionError);
}

TEST_CASE("encode edge cases") {
    Rng rng(2);
    MflvcModel m = init_model(small_config(), rng);
    const Tensor2D empty = m.encode(0, Tensor2D(0, 4));
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 3);
    CHECK_THROWS_AS(m.encode(0, Tensor2D(2, 5)), DimensionError);

    zero_all(m);
    const auto x = oracle::random_matrix(5, 4, rng);
    CHECK(m.encode(0, x) == Tensor2D(5, 3));

    ModelConfig id = small_config();
    id.input_dims = {3, 3};
    MflvcModel mi = init_model(id, rng);
    mi.view(0).encoder.layers[0].weight.value = Tensor2D::identity(3);
    mi.view(0).encoder.layers[0].bias.value.fill(0.0);
    const auto x3 = oracle::random_matrix(4, 3, rng);
    CHECK(mi.encode(0, x3) == x3);
}

TEST_CASE("high_level examples") {
    Rng rng(3);
    ModelConfig c = small_config();
    c.high_dim = 3;
    MflvcModel m = init_model(c, rng);
    Linear& w = m.heads().feature_head.layers[0];
    w.weight.value = Tensor2D::identity(3);
    w.bias.value.fill(0.0);
    const auto z = oracle::random_matrix(5, 3, rng);
    CHECK(m.high_level(z) == z);

    w.bias.value = Tensor2D{{0.5, -1.0, 2.0}};
    const auto h = m.high_level(Tensor2D(2, 3));
    for (std::size_t i = 0; i < 2; ++i) CHECK(h.row(i)[2] == 2.0);
    CHECK(h(1, 0) == 0.5);
}

TEST_CASE("cluster_assignments examples") {
    Rng rng(4);
    ModelConfig c = small_config();
    c.clusters = 3;
    MflvcModel m = init_model(c, rng);
    zero_all(m);
    const auto q = m.cluster_assignments(oracle::random_matrix(4, 3, rng));
    for (double v : q.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    ModelConfig c2 = small_config();
    c2.latent_dim = 1;
    MflvcModel m2 = init_model(c2, rng);
    Linear& head = m2.heads().label_head.layers[0];
    head.weight.value.fill(0.0);
    head.bias.value = Tensor2D{{std::log(3.0), 0.0}};
    const auto q2 = m2.cluster_assignments(Tensor2D(1, 1));
    CHECK(q2(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(q2(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("cluster_assignments rows are distributions") {
    Rng rng(5);
    ModelConfig c = small_config();
    c.clusters = 4;
    c.label_hidden = {5};
    MflvcModel m = init_model(c, rng);
    for (int rep = 0; rep < 20; ++rep) {
        const auto q = m.cluster_assignments(oracle::random_matrix(6, 3, rng, 100.0));
        for (std::size_t i = 0; i < q.rows(); ++i) {
            double s = 0.0;
            for (double v : q.row(i)) {
                CHECK(v >= 0.0);
                s += v;
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("heads are shared: one update is seen through every view") {
    Rng rng(6);
    MflvcModel m = init_model(small_config(), rng);
    const auto x0 = oracle::random_matrix(3, 4, rng);
    const auto x1 = oracle::random_matrix(3, 6, rng);
    const auto h1_before = m.high_level(m.encode(1, x1));
    const auto q1_before = m.cluster_assignments(m.encode(1, x1));

    // Perturb the heads as if view 0's gradient path had updated them.
    for (ParamTensor* p : m.params(ParamGroup::feature_head))
        for (double& v : p->value.values()) v += 0.25;
    // A uniform shift of every logit would cancel in the softmax.
    for (ParamTensor* p : m.params(ParamGroup::label_head)) {
        double step = 0.1;
        for (double& v : p->value.values()) v -= (step += 0.1);
    }
    (void)x0;
    CHECK_FALSE(m.high_level(m.encode(1, x1)) == h1_before);
    CHECK_FALSE(m.cluster_assignments(m.encode(1, x1)) == q1_before);
}

TEST_CASE("parameter groups partition the parameters") {
    Rng rng(7);
    ModelConfig c = small_config();
    c.encoder_hidden = {5};
    c.label_hidden = {4};
    MflvcModel m = init_model(c, rng);
    std::size_t total = 0;
    for (auto g : {ParamGroup::encoders, ParamGroup::decoders, ParamGroup::feature_head,
                   ParamGroup::label_head})
        total += m.params(g).size();
    CHECK(total == m.all_params().size());
    CHECK(m.params(ParamGroup::encoders).size() == 2 * 2 * 2);
    CHECK(m.params(ParamGroup::feature_head).size() == 2);
    CHECK(m.params(ParamGroup::label_head).size() == 4);
}
