#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "taac/errors.hpp"
#include "taac/rng.hpp"
#include "taac/trainer.hpp"

namespace train = taac::train;
namespace nn = taac::nn;
using taac::TensorF;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

taac::sdae::SdaeConfig tiny_sdae() {
    taac::sdae::SdaeConfig s;
    s.input_len = 32;
    s.h1 = 16;
    s.h2 = 12;
    s.latent = 8;
    s.resblocks = 1;
    s.dropout = 0.2;
    return s;
}

taac::cls::VpmConfig tiny_vpm() {
    taac::cls::VpmConfig v;
    v.input_len = 32;
    v.c1 = 3;
    v.c2 = 4;
    v.kernel = 3;
    v.pool = 2;
    v.dropout = 0.2;
    return v;
}

train::DataSet tiny_data(std::size_t n, std::uint64_t seed) {
    train::DataSet d;
    d.clip_len = 32;
    taac::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> clip(32);
        for (auto& v : clip) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        d.clips.push_back(std::move(clip));
        d.labels.push_back(int(i % 2));
        d.ids.push_back(i);
    }
    return d;
}

train::PhaseConfig fast_cfg(int phase) {
    train::PhaseConfig cfg;
    cfg.phase = phase;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.seed = 5;
    cfg.lambda_cls = phase == 1 ? 0.0 : 1.0;
    return cfg;
}

std::string temp_ckpt(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<float> flatten(const nn::ParamRefs<float>& params) {
    std::vector<float> out;
    for (auto* p : params)
        out.insert(out.end(), p->value.data.begin(), p->value.data.end());
    return out;
}

}  // namespace

TEST_CASE("pipeline init is seed-deterministic") {
    train::Pipeline a(tiny_sdae(), tiny_vpm()), b(tiny_sdae(), tiny_vpm()),
        c(tiny_sdae(), tiny_vpm());
    a.init(7);
    b.init(7);
    c.init(8);
    CHECK(flatten(a.sdae.params()) == flatten(b.sdae.params()));
    CHECK(flatten(a.vpm.params()) == flatten(b.vpm.params()));
    CHECK(flatten(a.sdae.params()) != flatten(c.sdae.params()));

    SUBCASE("mismatched input lengths are rejected at construction") {
        auto v = tiny_vpm();
        v.input_len = 48;
        CHECK_THROWS_AS(train::Pipeline(tiny_sdae(), v), taac::ConfigError);
    }
}

TEST_CASE("pipeline save/load round trip with sidecar") {
    const auto path = temp_ckpt("taac_test_pipe.ckpt");
    train::Pipeline pl(tiny_sdae(), tiny_vpm());
    pl.init(3);
    pl.save(path, 1, 3);
    CHECK(std::filesystem::exists(path + ".json"));

    const auto want_sdae = flatten(pl.sdae.params());
    const auto want_vpm = flatten(pl.vpm.params());
    for (auto* p : pl.sdae.params())
        for (auto& v : p->value.data) v = -1.0f;
    pl.load(path);
    CHECK(flatten(pl.sdae.params()) == want_sdae);
    CHECK(flatten(pl.vpm.params()) == want_vpm);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("phase one with lambda_cls 0 never touches the classifier") {
    train::Pipeline pl(tiny_sdae(), tiny_vpm());
    pl.init(9);
    const auto before = flatten(pl.vpm.state());
    const auto sdae_before = flatten(pl.sdae.params());

    const auto data = tiny_data(8, 1);
    const auto path = temp_ckpt("taac_test_p1.ckpt");
    const auto rep = train::train_phase1(pl, data, fast_cfg(1), {}, path);

    CHECK(flatten(pl.vpm.state()) == before);        // bitwise untouched
    CHECK(flatten(pl.sdae.params()) != sdae_before);  // but the autoencoder moved
    CHECK(rep.steps == 2);                            // 8 clips / batch 4
    CHECK(rep.ortho_trace.size() == rep.steps);
    CHECK(rep.recon_trace.size() == rep.steps);
    CHECK(rep.total_trace.size() == rep.steps);
    for (std::size_t i = 0; i < rep.steps; ++i) {
        CHECK(rep.total_trace[i] ==
              doctest::Approx(10.0 * rep.ortho_trace[i] + 10.0 * rep.recon_trace[i])
                  .epsilon(1e-12));
    }
    CHECK(rep.epoch_wall_ms.size() == 1);
    CHECK(rep.dp_clip_checks == 0);
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("phase two trains the classifier on a frozen autoencoder") {
    train::Pipeline pl(tiny_sdae(), tiny_vpm());
    pl.init(10);
    const auto data = tiny_data(8, 2);
    const auto p1 = temp_ckpt("taac_test_p2a.ckpt");
    train::train_phase1(pl, data, fast_cfg(1), {}, p1);

    const auto sdae_frozen = flatten(pl.sdae.params());
    const auto vpm_before = flatten(pl.vpm.params());
    const auto p2 = temp_ckpt("taac_test_p2b.ckpt");
    const auto rep = train::train_phase2(pl, data, fast_cfg(2), p2);

    CHECK(flatten(pl.sdae.params()) == sdae_frozen);  // exact freeze
    CHECK(flatten(pl.vpm.params()) != vpm_before);
    CHECK(rep.cls_trace.size() == rep.steps);
    for (std::size_t i = 0; i < rep.steps; ++i) {
        CHECK(rep.total_trace[i] == doctest::Approx(1.0 * rep.cls_trace[i]).epsilon(1e-12));
        CHECK(std::isfinite(rep.ortho_trace[i]));  // frozen-autoencoder diagnostics
        CHECK(rep.recon_trace[i] >= 0.0);
    }
    for (const char* f : {p1.c_str(), p2.c_str()}) {
        std::remove(f);
        std::remove((std::string(f) + ".json").c_str());
    }
}

TEST_CASE("phase three at strength 1 reproduces phase two bitwise") {
    const auto data = tiny_data(8, 3);
    const auto run_phase = [&](bool use_cipher) {
        train::Pipeline pl(tiny_sdae(), tiny_vpm());
        pl.init(11);
        const auto p1 = temp_ckpt("taac_test_p3a.ckpt");
        train::train_phase1(pl, data, fast_cfg(1), {}, p1);
        std::remove(p1.c_str());
        std::remove((p1 + ".json").c_str());
        const auto pn = temp_ckpt("taac_test_p3b.ckpt");
        if (use_cipher) {
            train::EncryptionRun enc;
            enc.cipher = train::Cipher::Taac;
            enc.key = taac::crypt::keygen(50);
            enc.strength = 1;  // the identity strength
            train::train_phase3(pl, data, fast_cfg(3), enc, pn);
        } else {
            train::train_phase2(pl, data, fast_cfg(2), pn);
        }
        std::remove(pn.c_str());
        std::remove((pn + ".json").c_str());
        return flatten(pl.vpm.params());
    };
    CHECK(run_phase(true) == run_phase(false));
}

TEST_CASE("dp_clip scales to the bound and reports the pre-clip norm") {
    std::vector<float> g{3.0f, 4.0f};
    const double nrm = train::dp_clip(g, 1.0);
    CHECK(nrm == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx(0.8).epsilon(1e-6));

    SUBCASE("no scaling below the bound, or at an infinite bound") {
        std::vector<float> h{0.3f, 0.4f};
        CHECK(train::dp_clip(h, 1.0) == doctest::Approx(0.5));
        CHECK(h[0] == 0.3f);
        std::vector<float> k{30.0f, 40.0f};
        CHECK(train::dp_clip(k, kInf) == doctest::Approx(50.0));
        CHECK(k[0] == 30.0f);
    }
    SUBCASE("the bound must be positive") {
        std::vector<float> h{1.0f};
        CHECK_THROWS_AS(train::dp_clip(h, 0.0), taac::ConfigError);
        CHECK_THROWS_AS(train::dp_clip(h, -1.0), taac::ConfigError);
    }
}

TEST_CASE("dp_aggregate averages and draws calibrated noise") {
    SUBCASE("sigma 0 is the exact mean, no rng consumption") {
        std::vector<float> g{8.0f, -4.0f};
        taac::Rng rng(1);
        const auto before = taac::Rng(1).next_u64();
        train::dp_aggregate(g, 1.0, 0.0, 4, rng);
        CHECK(g[0] == 2.0f);
        CHECK(g[1] == -1.0f);
        CHECK(rng.next_u64() == before);  // untouched stream
    }
    SUBCASE("noise standard deviation tracks sigma * C") {
        const double sigma = 0.5, C = 2.0;
        const std::size_t n = 100000;
        std::vector<float> g(n, 0.0f);
        taac::Rng rng(2);
        train::dp_aggregate(g, C, sigma, 1, rng);
        double sq = 0;
        for (float v : g) sq += double(v) * double(v);
        const double sd = std::sqrt(sq / double(n));
        CHECK(std::fabs(sd - sigma * C) < 0.02 * sigma * C);
    }
    SUBCASE("validation") {
        std::vector<float> g{1.0f};
        taac::Rng rng(3);
        CHECK_THROWS_AS(train::dp_aggregate(g, 1.0, 0.0, 0, rng), taac::ConfigError);
        CHECK_THROWS_AS(train::dp_aggregate(g, 1.0, -0.5, 1, rng), taac::ConfigError);
        CHECK_THROWS_AS(train::dp_aggregate(g, kInf, 0.5, 1, rng), taac::ConfigError);
    }
}

TEST_CASE("dp with sigma 0 and infinite bound is bit-identical to plain training") {
    const auto data = tiny_data(8, 4);
    const auto run = [&](bool dp_on) {
        train::Pipeline pl(tiny_sdae(), tiny_vpm());
        pl.init(12);
        train::DpConfig dp;
        dp.enabled = dp_on;  // defaults: clip_norm = inf, noise_mult = 0
        const auto path = temp_ckpt("taac_test_dp.ckpt");
        const auto rep = train::train_phase1(pl, data, fast_cfg(1), dp, path);
        std::remove(path.c_str());
        std::remove((path + ".json").c_str());
        return std::pair{flatten(pl.sdae.params()), rep};
    };
    const auto [plain, rep_plain] = run(false);
    const auto [dp, rep_dp] = run(true);
    CHECK(plain == dp);  // bitwise
    CHECK(rep_plain.total_trace == rep_dp.total_trace);
    CHECK(rep_plain.dp_clip_checks == 0);
    CHECK(rep_dp.dp_clip_checks > 0);  // the norm assertions did run
}

TEST_CASE("dp training rejects an active classification loss") {
    train::Pipeline pl(tiny_sdae(), tiny_vpm());
    pl.init(13);
    auto cfg = fast_cfg(1);
    cfg.lambda_cls = 1.0;  // batchnorm couples examples: incompatible with DP
    train::DpConfig dp;
    dp.enabled = true;
    CHECK_THROWS_AS(
        train::train_phase1(pl, tiny_data(8, 5), cfg, dp, temp_ckpt("taac_test_x.ckpt")),
        taac::ConfigError);

    SUBCASE("noise without a finite clip bound is rejected") {
        train::DpConfig bad;
        bad.enabled = true;
        bad.noise_mult = 0.5;  // clip_norm still infinite
        CHECK_THROWS_AS(train::train_phase1(pl, tiny_data(8, 5), fast_cfg(1), bad,
                                            temp_ckpt("taac_test_x.ckpt")),
                        taac::ConfigError);
    }
}

TEST_CASE("apply_cipher dispatches by cipher kind") {
    std::vector<float> x{0.5f, -0.25f, 0.75f};
    SUBCASE("none copies") {
        CHECK(train::apply_cipher({}, x, 1) == x);
    }
    SUBCASE("taac respects key-hash collisions") {
        train::EncryptionRun a, b;
        a.cipher = b.cipher = train::Cipher::Taac;
        a.key = {2};
        b.key = {0, 1};  // same weighted sum
        a.strength = b.strength = 25;
        const auto ya = train::apply_cipher(a, x, 1);
        CHECK(ya == train::apply_cipher(b, x, 1));
        CHECK(ya != x);
    }
    SUBCASE("chaos derives a distinct keystream per clip id") {
        train::EncryptionRun enc;
        enc.cipher = train::Cipher::Chaos;
        const auto y1 = train::apply_cipher(enc, x, 1);
        const auto y2 = train::apply_cipher(enc, x, 2);
        CHECK(y1 == train::apply_cipher(enc, x, 1));  // deterministic
        CHECK(y1 != y2);
        CHECK(y1 != x);
    }
}

TEST_CASE("diverging training aborts with the last finite parameters saved") {
    train::Pipeline pl(tiny_sdae(), tiny_vpm());
    pl.init(14);
    auto cfg = fast_cfg(1);
    cfg.lr = 1e12;  // one step throws the weights past float range
    cfg.epochs = 2;
    cfg.batch_size = 2;
    const auto path = temp_ckpt("taac_test_div.ckpt");
    CHECK_THROWS_WITH_AS(train::train_phase1(pl, tiny_data(8, 6), cfg, {}, path),
                         doctest::Contains("diverged"), taac::NumericError);
    CHECK(std::filesystem::exists(path));  // parameters preserved for a debugging session
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("training is reproducible from the seed alone") {
    const auto data = tiny_data(8, 7);
    const auto run = [&] {
        train::Pipeline pl(tiny_sdae(), tiny_vpm());
        pl.init(15);
        const auto path = temp_ckpt("taac_test_rep.ckpt");
        auto cfg = fast_cfg(1);
        cfg.epochs = 2;
        train::train_phase1(pl, data, cfg, {}, path);
        std::remove(path.c_str());
        std::remove((path + ".json").c_str());
        return flatten(pl.sdae.params());
    };
    CHECK(run() == run());
}

TEST_CASE("direct training bypasses the autoencoder") {
    train::Pipeline pl(tiny_sdae(), tiny_vpm());
    pl.init(16);
    const auto sdae_before = flatten(pl.sdae.params());
    const auto path = temp_ckpt("taac_test_dir.ckpt");
    train::EncryptionRun enc;
    enc.cipher = train::Cipher::Chaos;
    const auto rep = train::train_direct(pl, tiny_data(8, 8), fast_cfg(2), enc, path);
    CHECK(flatten(pl.sdae.params()) == sdae_before);
    CHECK(rep.cls_trace.size() == rep.steps);
    for (double v : rep.ortho_trace) CHECK(v == 0.0);  // no autoencoder diagnostics
    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}
