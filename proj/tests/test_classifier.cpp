#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "taac/checkpoint.hpp"
#include "taac/classifier.hpp"
#include "taac/errors.hpp"
#include "taac/rng.hpp"

namespace cls = taac::cls;
namespace sdae = taac::sdae;
namespace nn = taac::nn;
using taac::TensorF;

namespace {

cls::VpmConfig small_cfg() {
    cls::VpmConfig cfg;
    cfg.input_len = 64;
    cfg.c1 = 4;
    cfg.c2 = 6;
    cfg.kernel = 5;
    cfg.pool = 2;
    cfg.dropout = 0.2;
    return cfg;
}

TensorF rand_input(std::size_t n, std::size_t len, std::uint64_t seed) {
    TensorF x({n, len});
    taac::Rng rng(seed);
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return x;
}

}  // namespace

TEST_CASE("gate routes components by mode") {
    sdae::FeaturePair<float> pair;
    pair.v_d = TensorF({1, 3}, {1.0f, 2.0f, 3.0f});
    pair.v_nd = TensorF({1, 3}, {10.0f, 20.0f, 30.0f});

    SUBCASE("Full fuses both components") {
        const auto g = cls::gate(pair, cls::GateMode::Full);
        REQUIRE(g.has_value());
        CHECK(g->data == std::vector<float>{11.0f, 22.0f, 33.0f});
    }
    SUBCASE("Partial passes the condition component only") {
        const auto g = cls::gate(pair, cls::GateMode::Partial);
        REQUIRE(g.has_value());
        CHECK(g->data == pair.v_d.data);
        // and ignores v_nd entirely
        pair.v_nd.fill(-999.0f);
        const auto g2 = cls::gate(pair, cls::GateMode::Partial);
        CHECK(g2->data == pair.v_d.data);
    }
    SUBCASE("Blocked yields nothing to classify") {
        CHECK_FALSE(cls::gate(pair, cls::GateMode::Blocked).has_value());
    }
}

TEST_CASE("decide applies a strict threshold to the depressed-class score") {
    TensorF logits({1, 2}, {0.0f, 0.0f});  // softmax -> [0.5, 0.5]
    SUBCASE("0.5 beats the 0.4 default") {
        const auto d = cls::decide(logits, 0.4);
        REQUIRE(d.size() == 1);
        CHECK(d[0].score == doctest::Approx(0.5).epsilon(1e-7));
        CHECK(d[0].label == 1);
    }
    SUBCASE("0.5 does not beat 0.5: strict inequality") {
        CHECK(cls::decide(logits, 0.5)[0].label == 0);
    }
    SUBCASE("score is the class-1 softmax probability") {
        TensorF skewed({2, 2}, {3.0f, 0.0f, 0.0f, 3.0f});
        const auto d = cls::decide(skewed, 0.4);
        const double p = 1.0 / (1.0 + std::exp(3.0));
        CHECK(d[0].score == doctest::Approx(p).epsilon(1e-6));
        CHECK(d[0].label == 0);
        CHECK(d[1].score == doctest::Approx(1.0 - p).epsilon(1e-6));
        CHECK(d[1].label == 1);
    }
}

TEST_CASE("classifier maps [N,L] to binary logits") {
    cls::Vpm<float> model(small_cfg());
    taac::Rng rng(1);
    model.init(rng);
    const auto x = rand_input(3, 64, 2);
    const auto logits = model.forward(x, nn::eval_ctx());
    CHECK(logits.shape == std::vector<std::size_t>{3, 2});
    CHECK(model.feature_len() > 0);

    SUBCASE("wrong length is rejected") {
        CHECK_THROWS_AS(model.forward(rand_input(2, 65, 3), nn::eval_ctx()),
                        taac::DimensionError);
    }
    SUBCASE("training forward needs a batch of at least two for batchnorm") {
        nn::DropCtx ctx;
        ctx.train = true;
        ctx.sample_ids = {1};
        CHECK_THROWS_AS(model.forward(rand_input(1, 64, 4), ctx), taac::NumericError);
    }
}

TEST_CASE("eval forward is deterministic and batching-invariant") {
    cls::Vpm<float> model(small_cfg());
    taac::Rng rng(5);
    model.init(rng);
    const auto x = rand_input(4, 64, 6);

    const auto a = model.forward(x, nn::eval_ctx());
    const auto b = model.forward(x, nn::eval_ctx());
    CHECK(a.data == b.data);

    // row 2 scored alone must match row 2 scored in the batch: eval-mode
    // batchnorm uses running statistics, so rows never interact
    TensorF row({1, 64});
    for (std::size_t i = 0; i < 64; ++i) row.data[i] = x.at2(2, i);
    const auto alone = model.forward(row, nn::eval_ctx());
    CHECK(alone.data[0] == a.at2(2, 0));
    CHECK(alone.data[1] == a.at2(2, 1));
}

TEST_CASE("backward reaches the input and every trainable parameter") {
    cls::Vpm<float> model(small_cfg());
    taac::Rng rng(7);
    model.init(rng);
    auto params = model.params();
    nn::zero_grads(params);

    nn::DropCtx ctx;
    ctx.train = true;
    ctx.run_seed = 3;
    ctx.step = 1;
    ctx.sample_ids = {20, 21};
    const auto x = rand_input(2, 64, 8);
    const auto logits = model.forward(x, ctx);
    const auto ce = nn::cross_entropy(logits, {0, 1}, 0.1);
    const auto dx = model.backward(ce.dlogits);
    CHECK(dx.shape == x.shape);

    double dx_sum = 0;
    for (float v : dx.data) dx_sum += std::fabs(double(v));
    CHECK(dx_sum > 0.0);
    for (auto* p : params) {
        double sum = 0;
        for (float g : p->grad.data) sum += std::fabs(double(g));
        INFO(p->name);
        CHECK(sum > 0.0);
    }
}

TEST_CASE("checkpoint round trip includes batchnorm running statistics") {
    const auto path =
        (std::filesystem::temp_directory_path() / "taac_test_vpm.ckpt").string();
    cls::Vpm<float> model(small_cfg());
    taac::Rng rng(9);
    model.init(rng);

    // a train-mode pass moves the running statistics away from init
    nn::DropCtx ctx;
    ctx.train = true;
    ctx.run_seed = 1;
    ctx.step = 1;
    ctx.sample_ids = {1, 2};
    model.forward(rand_input(2, 64, 10), ctx);

    const auto x = rand_input(2, 64, 11);
    const auto before = model.forward(x, nn::eval_ctx());
    taac::ckpt::save(path, cls::checkpoint_views(model));

    ctx.step = 2;
    model.forward(rand_input(2, 64, 12), ctx);  // drift the stats further
    for (auto* p : model.params())
        for (auto& v : p->value.data) v += 0.5f;
    CHECK(model.forward(x, nn::eval_ctx()).data != before.data);

    taac::ckpt::load_into(path, cls::checkpoint_slots(model));
    CHECK(model.forward(x, nn::eval_ctx()).data == before.data);
    std::remove(path.c_str());
}

TEST_CASE("state() exposes running statistics beyond params()") {
    cls::Vpm<float> model(small_cfg());
    CHECK(model.state().size() == model.params().size() + 4);  // 2 stats x 2 bn layers

    model.set_trainable(false);
    for (auto* p : model.params()) CHECK_FALSE(p->trainable);
    model.set_trainable(true);
    for (auto* p : model.params()) CHECK(p->trainable);
}
