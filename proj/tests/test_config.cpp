#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvclust/checkpoint.hpp"
#include "mvclust/config.hpp"
#include "mvclust/errors.hpp"
#include "oracles.hpp"

using namespace mvclust;

TEST_CASE("config text round-trips losslessly") {
    const RunConfig def;
    CHECK(parse_config(to_text(def)) == def);

    RunConfig c;
    apply_setting(c, "seed=18446744073709551615");
    apply_setting(c, "lr=0.00031415926535897931");
    apply_setting(c, "tau_feature=0.3");
    apply_setting(c, "encoder_hidden=32, 16,8");
    apply_setting(c, "label_hidden=");
    apply_setting(c, "view_dims=10,20,30");
    apply_setting(c, "views=3");
    apply_setting(c, "full_batch=true");
    apply_setting(c, "contrast_on_z=1");
    const std::string text = to_text(c);
    const RunConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(to_text(back) == text);
    CHECK(back.train.seed == 18446744073709551615ull);
    CHECK(back.train.lr == 0.00031415926535897931);
    CHECK(back.train.encoder_hidden == std::vector<std::size_t>{32, 16, 8});
    CHECK(back.train.label_hidden.empty());
    CHECK(back.synthetic.view_dims == std::vector<std::size_t>{10, 20, 30});
    CHECK(back.train.full_batch);
    CHECK(back.train.ablation.contrast_on_z);
}

TEST_CASE("every field is covered by a key") {
    const auto keys = config_keys();
    CHECK(keys.size() == 34);
    for (const auto& k : keys) CHECK(to_text(RunConfig{}).find(k + "=") != std::string::npos);

    RunConfig c;
    Rng rng(1);
    // Changing any single key changes the echo.
    const std::string base = to_text(c);
    for (const auto& k : keys) {
        RunConfig d = c;
        std::string value = "7";
        if (k == "full_batch" || k.starts_with("use_") || k.starts_with("contrast_on"))
            value = (to_text(c).find(k + "=true") != std::string::npos) ? "false" : "true";
        if (k == "encoder_hidden" || k == "label_hidden" || k == "view_dims") value = "3,3";
        apply_setting(d, k + "=" + value);
        CHECK_MESSAGE(to_text(d) != base, k);
    }
}

TEST_CASE("parsing comments, blanks and errors") {
    const RunConfig c = parse_config("# comment\n\n  seed = 9  # trailing\nsamples=12\n");
    CHECK(c.train.seed == 9);
    CHECK(c.synthetic.samples == 12);
    CHECK_THROWS_AS(parse_config("nonsense=1\n"), PreconditionError);
    CHECK_THROWS_AS(parse_config("seed\n"), PreconditionError);
    CHECK_THROWS_AS(parse_config("seed=-1\n"), PreconditionError);
    CHECK_THROWS_AS(parse_config("lr=fast\n"), PreconditionError);
    CHECK_THROWS_AS(parse_config("full_batch=maybe\n"), PreconditionError);
    CHECK_THROWS_AS(parse_config("encoder_hidden=3,x\n"), PreconditionError);
    CHECK_THROWS_AS(load_config("/nonexistent/mvclust.cfg"), IoError);
}

TEST_CASE("checkpoint round-trips every parameter bit for bit") {
    ModelConfig mc;
    mc.input_dims = {5, 3, 4};
    mc.encoder_hidden = {6};
    mc.latent_dim = 4;
    mc.high_dim = 2;
    mc.label_hidden = {3};
    mc.clusters = 3;
    Rng rng(2);
    MflvcModel m = init_model(mc, rng);
    for (ParamTensor* p : m.all_params())
        for (double& v : p->value.values()) v = rng.normal() * 1e3;
    m.all_params().front()->value(0, 0) = -0.0;
    m.all_params().back()->value(0, 0) = 5e-324;

    std::stringstream buf;
    save_checkpoint(m, buf);
    const MflvcModel back = load_checkpoint(buf);
    CHECK(back.config().input_dims == mc.input_dims);
    CHECK(back.config().encoder_hidden == mc.encoder_hidden);
    CHECK(back.config().label_hidden == mc.label_hidden);
    CHECK(back.clusters() == 3);
    const auto pa = m.all_params();
    const auto pb = back.all_params();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->name == pb[i]->name);
        const auto va = pa[i]->value.values();
        const auto vb = pb[i]->value.values();
        REQUIRE(va.size() == vb.size());
        CHECK(std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("checkpoint layout") {
    ModelConfig mc;
    mc.input_dims = {2, 2};
    mc.encoder_hidden = {};
    mc.latent_dim = 1;
    mc.high_dim = 1;
    mc.clusters = 2;
    Rng rng(3);
    MflvcModel m = init_model(mc, rng);
    std::stringstream buf;
    save_checkpoint(m, buf);
    const std::string s = buf.str();
    const auto end = s.find("end\n");
    REQUIRE(end != std::string::npos);
    CHECK(s.starts_with("mvclust-checkpoint 1\ninput_dims 2,2\nencoder_hidden \nlatent_dim 1\n"));
    std::size_t values = 0;
    for (const ParamTensor* p : m.all_params()) values += p->value.size();
    CHECK(s.size() - (end + 4) == values * 8);
    // First payload double is the first weight, little-endian.
    double first = 0.0;
    std::memcpy(&first, s.data() + end + 4, 8);
    CHECK(first == m.all_params().front()->value(0, 0));
}

TEST_CASE("corrupt checkpoints are rejected") {
    ModelConfig mc;
    mc.input_dims = {2, 2};
    mc.latent_dim = 2;
    mc.high_dim = 2;
    mc.encoder_hidden = {};
    Rng rng(4);
    MflvcModel m = init_model(mc, rng);
    std::stringstream buf;
    save_checkpoint(m, buf);
    const std::string good = buf.str();

    std::stringstream truncated(good.substr(0, good.size() - 3));
    CHECK_THROWS_AS(load_checkpoint(truncated), IoError);
    std::stringstream magic("not-a-checkpoint\n");
    CHECK_THROWS_AS(load_checkpoint(magic), IoError);
    std::string renamed = good;
    renamed.replace(renamed.find("view0"), 5, "viewX");
    std::stringstream wrong_name(renamed);
    CHECK_THROWS_AS(load_checkpoint(wrong_name), IoError);
    CHECK_THROWS_AS(load_checkpoint(std::filesystem::path("/nonexistent/model.ckpt")), IoError);
}
