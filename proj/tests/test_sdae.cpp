#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "taac/checkpoint.hpp"
#include "taac/errors.hpp"
#include "taac/rng.hpp"
#include "taac/sdae.hpp"

namespace sdae = taac::sdae;
namespace nn = taac::nn;
using taac::TensorF;

namespace {

sdae::SdaeConfig small_cfg() {
    sdae::SdaeConfig cfg;
    cfg.input_len = 32;
    cfg.h1 = 16;
    cfg.h2 = 12;
    cfg.latent = 8;
    cfg.resblocks = 1;
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

TEST_CASE("forward emits latent and two signal-space components") {
    sdae::Sdae<float> model(small_cfg());
    taac::Rng rng(1);
    model.init(rng);
    const auto x = rand_input(3, 32, 2);
    const auto out = model.forward(x, nn::eval_ctx());
    CHECK(out.z.shape == std::vector<std::size_t>{3, 8});
    CHECK(out.pair.v_d.shape == std::vector<std::size_t>{3, 32});
    CHECK(out.pair.v_nd.shape == std::vector<std::size_t>{3, 32});

    SUBCASE("wrong input length is rejected") {
        CHECK_THROWS_AS(model.forward(rand_input(2, 33, 3), nn::eval_ctx()),
                        taac::DimensionError);
    }
}

TEST_CASE("zero input maps to zero everywhere right after init") {
    // biases start at zero, so every linear stage and residual block
    // propagates the zero vector unchanged
    sdae::Sdae<float> model(small_cfg());
    taac::Rng rng(4);
    model.init(rng);
    TensorF x({2, 32});
    const auto out = model.forward(x, nn::eval_ctx());
    for (float v : out.z.data) CHECK(v == 0.0f);
    for (float v : out.pair.v_d.data) CHECK(v == 0.0f);
    for (float v : out.pair.v_nd.data) CHECK(v == 0.0f);
}

TEST_CASE("eval mode is deterministic, train mode drops units") {
    sdae::Sdae<float> model(small_cfg());
    taac::Rng rng(5);
    model.init(rng);
    const auto x = rand_input(2, 32, 6);

    const auto a = model.forward(x, nn::eval_ctx());
    const auto b = model.forward(x, nn::eval_ctx());
    CHECK(a.z.data == b.z.data);
    CHECK(a.pair.v_d.data == b.pair.v_d.data);

    nn::DropCtx train;
    train.train = true;
    train.run_seed = 7;
    train.step = 1;
    train.sample_ids = {10, 11};
    const auto c = model.forward(x, train);
    CHECK(c.pair.v_d.data != a.pair.v_d.data);  // dropout perturbs the encoder

    const auto c2 = model.forward(x, train);
    CHECK(c2.pair.v_d.data == c.pair.v_d.data);  // same ctx, same masks
}

TEST_CASE("backward skips a decoder whose upstream gradient is null") {
    sdae::Sdae<float> model(small_cfg());
    taac::Rng rng(8);
    model.init(rng);
    const auto x = rand_input(2, 32, 9);
    const auto out = model.forward(x, nn::eval_ctx());

    auto params = model.params();
    nn::zero_grads(params);
    TensorF dvd(out.pair.v_d.shape);
    dvd.fill(1.0f);
    model.backward(&dvd, nullptr);

    // the non-condition decoder holds parameters named decoder_nd.*; its
    // gradients must stay exactly zero when only dv_d flows back
    bool saw_nd = false, saw_d_nonzero = false;
    for (auto* p : params) {
        const bool is_nd = p->name.rfind("decoder_nd.", 0) == 0;
        const bool is_d = p->name.rfind("decoder_d.", 0) == 0;
        double sum = 0;
        for (float g : p->grad.data) sum += std::fabs(double(g));
        if (is_nd) {
            saw_nd = true;
            CHECK(sum == 0.0);
        }
        if (is_d) saw_d_nonzero = saw_d_nonzero || sum > 0.0;
    }
    CHECK(saw_nd);
    CHECK(saw_d_nonzero);
}

TEST_CASE("orthogonality loss oracles") {
    SUBCASE("single pair [3,4]x[4,3]") {
        TensorF vd({1, 2}, {3.0f, 4.0f});
        TensorF vnd({1, 2}, {4.0f, 3.0f});
        const auto lg = sdae::loss_ortho(vd, vnd);
        CHECK(lg.loss == doctest::Approx(24.0).epsilon(1e-12));
        // d|dot|/dv_d = sign(dot) * v_nd / N
        CHECK(lg.dv_d.data[0] == doctest::Approx(4.0));
        CHECK(lg.dv_d.data[1] == doctest::Approx(3.0));
        CHECK(lg.dv_nd.data[0] == doctest::Approx(3.0));
        CHECK(lg.dv_nd.data[1] == doctest::Approx(4.0));
    }
    SUBCASE("batch mean over {24, 0} is 12") {
        TensorF vd({2, 2}, {3.0f, 4.0f, 0.0f, 0.0f});
        TensorF vnd({2, 2}, {4.0f, 3.0f, 1.0f, 1.0f});
        CHECK(sdae::loss_ortho(vd, vnd).loss == doctest::Approx(12.0).epsilon(1e-12));
    }
    SUBCASE("all-pairs variant averages every cross product") {
        TensorF vd({2, 2}, {1.0f, 0.0f, 0.0f, 1.0f});
        TensorF vnd({2, 2}, {2.0f, 0.0f, 0.0f, 3.0f});
        // |<[1,0],[2,0]>| = 2, |<[1,0],[0,3]>| = 0, |<[0,1],[2,0]>| = 0,
        // |<[0,1],[0,3]>| = 3; mean over 4 pairs = 1.25
        CHECK(sdae::loss_ortho(vd, vnd, true).loss == doctest::Approx(1.25).epsilon(1e-12));
    }
}

TEST_CASE("reconstruction loss oracle") {
    TensorF vd({1, 2}, {1.0f, 0.0f});
    TensorF vnd({1, 2}, {0.0f, 0.0f});
    TensorF x({1, 2}, {1.0f, 1.0f});
    const auto lg = sdae::loss_recon(vd, vnd, x);
    CHECK(lg.loss == doctest::Approx(1.0).epsilon(1e-12));  // ||[0,-1]||^2
    // d/dv = 2 (v_d + v_nd - x) / N, identical for both components
    CHECK(lg.dv_d.data[0] == doctest::Approx(0.0));
    CHECK(lg.dv_d.data[1] == doctest::Approx(-2.0));
    CHECK(lg.dv_nd.data[1] == doctest::Approx(-2.0));

    SUBCASE("the squared norm is summed per sample, averaged over the batch only") {
        // two identical rows: the mean must equal the single-row loss, not
        // shrink with the feature dimension
        TensorF vd2({2, 2}, {1.0f, 0.0f, 1.0f, 0.0f});
        TensorF vnd2({2, 2}, {0.0f, 0.0f, 0.0f, 0.0f});
        TensorF x2({2, 2}, {1.0f, 1.0f, 1.0f, 1.0f});
        CHECK(sdae::loss_recon(vd2, vnd2, x2).loss == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fuse is the elementwise sum") {
    TensorF a({1, 3}, {1.0f, 2.0f, 3.0f});
    TensorF b({1, 3}, {0.5f, -2.0f, 1.0f});
    const auto f = sdae::fuse(a, b);
    CHECK(f.data[0] == 1.5f);
    CHECK(f.data[1] == 0.0f);
    CHECK(f.data[2] == 4.0f);
    TensorF wrong({1, 2});
    CHECK_THROWS_AS(sdae::fuse(a, wrong), taac::DimensionError);
}

TEST_CASE("checkpoint round trip restores parameters bitwise") {
    const auto path =
        (std::filesystem::temp_directory_path() / "taac_test_sdae.ckpt").string();
    sdae::Sdae<float> model(small_cfg());
    taac::Rng rng(10);
    model.init(rng);
    const auto x = rand_input(2, 32, 11);
    const auto before = model.forward(x, nn::eval_ctx());

    taac::ckpt::save(path, sdae::checkpoint_views(model));

    // scramble, then restore
    for (auto* p : model.params())
        for (auto& v : p->value.data) v += 1.0f;
    const auto scrambled = model.forward(x, nn::eval_ctx());
    CHECK(scrambled.pair.v_d.data != before.pair.v_d.data);

    taac::ckpt::load_into(path, sdae::checkpoint_slots(model));
    const auto after = model.forward(x, nn::eval_ctx());
    CHECK(after.z.data == before.z.data);
    CHECK(after.pair.v_d.data == before.pair.v_d.data);
    CHECK(after.pair.v_nd.data == before.pair.v_nd.data);
    std::remove(path.c_str());
}

TEST_CASE("set_trainable freezes every parameter") {
    sdae::Sdae<float> model(small_cfg());
    model.set_trainable(false);
    for (auto* p : model.params()) CHECK_FALSE(p->trainable);
    model.set_trainable(true);
    for (auto* p : model.params()) CHECK(p->trainable);
}
