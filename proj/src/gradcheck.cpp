#include "taac/gradcheck.hpp"

#include <cmath>

#include "taac/classifier.hpp"
#include "taac/errors.hpp"
#include "taac/sdae.hpp"

namespace taac::gradcheck {

namespace {

using TensorD = Tensor<double>;

void fill_uniform(TensorD& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
    for (auto& v : t.data) v = rng.uniform(lo, hi);
}

nn::Param<double> pseudo_input(const std::string& name, std::vector<std::size_t> shape, Rng& rng) {
    nn::Param<double> p(name, std::move(shape));
    fill_uniform(p.value, rng);
    return p;
}

// Scalar projection <c, y> turns any tensor output into a checkable loss.
double project(const TensorD& y, const TensorD& c, TensorD* dy) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data[i] * c.data[i];
    if (dy) *dy = c;
    return s;
}

CheckResult run_one(const std::string& name, const nn::ParamRefs<double>& params,
                    const ComputeFn& compute, std::size_t points, Rng& rng, double threshold) {
    CheckResult r;
    r.name = name;
    r.points = points;
    r.threshold = threshold;
    r.max_rel_err = max_rel_err_over_points(params, compute, points, rng);
    r.pass = r.max_rel_err < threshold;
    return r;
}

}  // namespace

double max_rel_err_over_points(const nn::ParamRefs<double>& params, const ComputeFn& compute,
                               std::size_t points, Rng& rng) {
    std::size_t total = 0;
    for (const auto* p : params) total += p->value.size();
    if (total == 0) throw ConfigError("gradient check needs at least one parameter");

    double worst = 0;
    for (std::size_t pt = 0; pt < points; ++pt) {
        std::size_t c = rng.randint(total);
        nn::Param<double>* p = nullptr;
        for (auto* q : params) {
            if (c < q->value.size()) {
                p = q;
                break;
            }
            c -= q->value.size();
        }
        if (p == nullptr) throw NumericError("coordinate selection out of range");

        compute(true);
        const double analytic = p->grad.data[c];

        const double w = p->value.data[c];
        const double h = 6e-6 * std::max(1.0, std::abs(w));
        p->value.data[c] = w + h;
        const double lp = compute(false);
        p->value.data[c] = w - h;
        const double lm = compute(false);
        p->value.data[c] = w;

        const double numeric = (lp - lm) / (2.0 * h);
        const double rel =
            std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

bool all_pass(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

std::vector<CheckResult> run_suite(std::uint64_t seed, std::size_t points) {
    std::vector<CheckResult> out;
    Rng rng = sub_rng(seed, 0x6c4d);

    // --- linear map: y = x W^T + b, projection loss (linear => tight) ---
    {
        nn::Linear<double> fc("fc", 5, 4);
        fc.init(rng);
        auto x = pseudo_input("x", {3, 5}, rng);
        TensorD c({3, 4});
        fill_uniform(c, rng);
        nn::ParamRefs<double> params;
        fc.collect(params);
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto y = fc.forward(x.value);
            TensorD dy;
            const double loss = project(y, c, g ? &dy : nullptr);
            if (g) x.grad = fc.backward(dy);
            return loss;
        };
        out.push_back(run_one("linear", params, compute, points, rng, 1e-7));
    }

    // --- 1-d convolution, projection loss (linear => tight) ---
    {
        nn::Conv1d<double> conv("conv", 2, 3, 3, 1, 1);
        conv.init(rng);
        auto x = pseudo_input("x", {2, 2, 7}, rng);
        TensorD c({2, 3, 7});
        fill_uniform(c, rng);
        nn::ParamRefs<double> params;
        conv.collect(params);
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto y = conv.forward(x.value);
            TensorD dy;
            const double loss = project(y, c, g ? &dy : nullptr);
            if (g) x.grad = conv.backward(dy);
            return loss;
        };
        out.push_back(run_one("conv1d", params, compute, points, rng, 1e-7));
    }

    // --- batch norm in training mode (batch statistics couple the rows) ---
    {
        nn::BatchNorm1d<double> bn("bn", 4);
        auto x = pseudo_input("x", {3, 4, 5}, rng);
        TensorD c({3, 4, 5});
        fill_uniform(c, rng);
        nn::ParamRefs<double> params;
        bn.collect(params);
        for (auto* p : params) fill_uniform(p->value, rng, 0.5, 1.5);  // generic scale/shift
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            // training mode uses batch statistics, so the running-stat
            // updates across repeated calls do not touch the loss
            auto y = bn.forward(x.value, true);
            TensorD dy;
            const double loss = project(y, c, g ? &dy : nullptr);
            if (g) x.grad = bn.backward(dy);
            return loss;
        };
        out.push_back(run_one("batchnorm", params, compute, points, rng, 1e-4));
    }

    // --- two-layer perceptron with relu (first nonlinear composite) ---
    {
        nn::Linear<double> fc1("fc1", 6, 5), fc2("fc2", 5, 3);
        fc1.init(rng);
        fc2.init(rng);
        nn::ReLU<double> relu;
        auto x = pseudo_input("x", {4, 6}, rng);
        TensorD c({4, 3});
        fill_uniform(c, rng);
        nn::ParamRefs<double> params;
        fc1.collect(params);
        fc2.collect(params);
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto y = fc2.forward(relu.forward(fc1.forward(x.value)));
            TensorD dy;
            const double loss = project(y, c, g ? &dy : nullptr);
            if (g) x.grad = fc1.backward(relu.backward(fc2.backward(dy)));
            return loss;
        };
        out.push_back(run_one("relu-mlp", params, compute, points, rng, 1e-4));
    }

    // --- smoothed cross-entropy on raw logits ---
    {
        auto logits = pseudo_input("logits", {4, 2}, rng);
        const std::vector<int> labels = {0, 1, 1, 0};
        nn::ParamRefs<double> params = {&logits};
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto ce = nn::cross_entropy(logits.value, labels, 0.1);
            if (g) logits.grad = ce.dlogits;
            return ce.loss;
        };
        out.push_back(run_one("cross-entropy", params, compute, points, rng, 1e-4));
    }

    // --- decomposition losses ---
    {
        auto vd = pseudo_input("v_d", {3, 8}, rng);
        auto vnd = pseudo_input("v_nd", {3, 8}, rng);
        nn::ParamRefs<double> params = {&vd, &vnd};
        ComputeFn compute = [&](bool g) {
            auto l = sdae::loss_ortho(vd.value, vnd.value, false);
            if (g) {
                vd.grad = l.dv_d;
                vnd.grad = l.dv_nd;
            }
            return l.loss;
        };
        out.push_back(run_one("ortho-loss", params, compute, points, rng, 1e-4));
        ComputeFn compute_all = [&](bool g) {
            auto l = sdae::loss_ortho(vd.value, vnd.value, true);
            if (g) {
                vd.grad = l.dv_d;
                vnd.grad = l.dv_nd;
            }
            return l.loss;
        };
        out.push_back(run_one("ortho-loss-allpairs", params, compute_all, points, rng, 1e-4));

        TensorD x({3, 8});
        fill_uniform(x, rng);
        ComputeFn compute_rec = [&](bool g) {
            auto l = sdae::loss_recon(vd.value, vnd.value, x);
            if (g) {
                vd.grad = l.dv_d;
                vnd.grad = l.dv_nd;
            }
            return l.loss;
        };
        out.push_back(run_one("recon-loss", params, compute_rec, points, rng, 1e-4));
    }

    // --- end-to-end autoencoder objective, dropout active ---
    {
        sdae::SdaeConfig cfg;
        cfg.input_len = 24;
        cfg.h1 = 12;
        cfg.h2 = 8;
        cfg.latent = 6;
        cfg.resblocks = 1;
        cfg.dropout = 0.25;
        sdae::Sdae<double> model(cfg);
        Rng init = sub_rng(seed, 0x3d01);
        model.init(init);
        auto x = pseudo_input("x", {2, cfg.input_len}, rng);
        nn::DropCtx ctx;
        ctx.train = true;
        ctx.run_seed = seed;
        ctx.step = 3;
        ctx.sample_ids = {11, 12};
        auto params = model.params();
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto o = model.forward(x.value, ctx);
            auto lo = sdae::loss_ortho(o.pair.v_d, o.pair.v_nd, false);
            auto lr = sdae::loss_recon(o.pair.v_d, o.pair.v_nd, x.value);
            if (g) {
                TensorD dvd(lo.dv_d.shape), dvnd(lo.dv_nd.shape);
                for (std::size_t i = 0; i < dvd.size(); ++i) {
                    dvd.data[i] = lo.dv_d.data[i] + lr.dv_d.data[i];
                    dvnd.data[i] = lo.dv_nd.data[i] + lr.dv_nd.data[i];
                }
                x.grad = model.backward(&dvd, &dvnd);
            }
            return lo.loss + lr.loss;
        };
        out.push_back(run_one("autoencoder", params, compute, points, rng, 1e-4));
    }

    // --- end-to-end classifier: conv/bn/relu/dropout/pool/fc into CE ---
    {
        cls::VpmConfig cfg;
        cfg.input_len = 24;
        cfg.c1 = 3;
        cfg.c2 = 4;
        cfg.kernel = 3;
        cfg.pool = 2;
        cfg.dropout = 0.2;
        cls::Vpm<double> model(cfg);
        Rng init = sub_rng(seed, 0x3d02);
        model.init(init);
        auto x = pseudo_input("x", {3, cfg.input_len}, rng);
        const std::vector<int> labels = {1, 0, 1};
        nn::DropCtx ctx;
        ctx.train = true;
        ctx.run_seed = seed;
        ctx.step = 5;
        ctx.sample_ids = {21, 22, 23};
        auto params = model.params();
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto logits = model.forward(x.value, ctx);
            auto ce = nn::cross_entropy(logits, labels, 0.1);
            if (g) x.grad = model.backward(ce.dlogits);
            return ce.loss;
        };
        out.push_back(run_one("classifier", params, compute, points, rng, 1e-4));
    }

    // --- complete phase-I classification path through both networks ---
    {
        sdae::SdaeConfig scfg;
        scfg.input_len = 24;
        scfg.h1 = 10;
        scfg.h2 = 8;
        scfg.latent = 6;
        scfg.resblocks = 1;
        scfg.dropout = 0.2;
        cls::VpmConfig vcfg;
        vcfg.input_len = 24;
        vcfg.c1 = 3;
        vcfg.c2 = 4;
        vcfg.kernel = 3;
        vcfg.pool = 2;
        vcfg.dropout = 0.2;
        sdae::Sdae<double> enc(scfg);
        cls::Vpm<double> head(vcfg);
        Rng init = sub_rng(seed, 0x3d03);
        enc.init(init);
        head.init(init);
        auto x = pseudo_input("x", {2, scfg.input_len}, rng);
        const std::vector<int> labels = {1, 0};
        nn::DropCtx ctx;
        ctx.train = true;
        ctx.run_seed = seed;
        ctx.step = 9;
        ctx.sample_ids = {31, 32};
        auto params = enc.params();
        auto hp = head.params();
        params.insert(params.end(), hp.begin(), hp.end());
        params.push_back(&x);
        ComputeFn compute = [&](bool g) {
            if (g) nn::zero_grads(params);
            auto o = enc.forward(x.value, ctx);
            auto gated = cls::gate(o.pair, cls::GateMode::Partial);
            auto logits = head.forward(*gated, ctx);
            auto ce = nn::cross_entropy(logits, labels, 0.1);
            if (g) {
                auto dvd = head.backward(ce.dlogits);
                x.grad = enc.backward(&dvd, nullptr);
            }
            return ce.loss;
        };
        out.push_back(run_one("pipeline", params, compute, points, rng, 1e-4));
    }

    return out;
}

}  // namespace taac::gradcheck
