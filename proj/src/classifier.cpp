#include "taac/classifier.hpp"

#include "taac/errors.hpp"
#include "taac/kernels.hpp"

namespace taac::cls {

template <class T>
std::optional<Tensor<T>> gate(const sdae::FeaturePair<T>& pair, GateMode mode) {
    switch (mode) {
        case GateMode::Full:
            return sdae::fuse(pair.v_d, pair.v_nd);
        case GateMode::Partial:
            return pair.v_d;
        case GateMode::Blocked:
            return std::nullopt;
    }
    throw ConfigError("gate: unknown mode");
}

namespace {

// length after one tier: same-pad conv then non-overlapping pool
std::size_t tier_len(std::size_t len, std::size_t k, std::size_t pool) {
    return kernels::conv_out_len(len, k, 1, k / 2) / pool;
}

std::size_t flat_features(const VpmConfig& cfg) {
    const auto l1 = tier_len(cfg.input_len, cfg.kernel, cfg.pool);
    if (l1 == 0) {
        throw ConfigError("classifier input length " + std::to_string(cfg.input_len) +
                          " too short for two pool-" + std::to_string(cfg.pool) + " tiers");
    }
    const auto l2 = tier_len(l1, cfg.kernel, cfg.pool);
    if (l2 == 0) {
        throw ConfigError("classifier input length " + std::to_string(cfg.input_len) +
                          " too short for two pool-" + std::to_string(cfg.pool) + " tiers");
    }
    return cfg.c2 * l2;
}

}  // namespace

template <class T>
Vpm<T>::Vpm(const VpmConfig& cfg)
    : cfg_(cfg),
      feat_(flat_features(cfg)),
      conv1_("vpm.t1.conv", 1, cfg.c1, cfg.kernel, 1, cfg.kernel / 2),
      conv2_("vpm.t2.conv", cfg.c1, cfg.c2, cfg.kernel, 1, cfg.kernel / 2),
      bn1_("vpm.t1.bn", cfg.c1),
      bn2_("vpm.t2.bn", cfg.c2),
      drop1_(cfg.dropout, 11),
      drop2_(cfg.dropout, 12),
      fc_("vpm.fc", feat_, 2) {
    if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0) {
        throw ConfigError("decision threshold must lie in (0, 1)");
    }
}

template <class T>
void Vpm<T>::init(Rng& rng) {
    conv1_.init(rng);
    bn1_.init(rng);
    conv2_.init(rng);
    bn2_.init(rng);
    fc_.init(rng);
}

template <class T>
Tensor<T> Vpm<T>::forward(const Tensor<T>& x, const nn::DropCtx& ctx) {
    if (x.shape.size() != 2 || x.shape[1] != cfg_.input_len) {
        throw DimensionError("classifier input " + x.shape_str() + " expects [N," +
                             std::to_string(cfg_.input_len) + "]");
    }
    n_ = x.shape[0];
    Tensor<T> h({n_, 1, cfg_.input_len}, x.data);

    h = conv1_.forward(h);
    h = bn1_.forward(h, ctx.train);
    h = relu1_.forward(h);
    h = drop1_.forward(h, ctx);
    l1_ = h.shape[2];
    Tensor<T> p1;
    kernels::avgpool1d_forward(h, cfg_.pool, p1);

    h = conv2_.forward(p1);
    h = bn2_.forward(h, ctx.train);
    h = relu2_.forward(h);
    h = drop2_.forward(h, ctx);
    l2_ = h.shape[2];
    Tensor<T> p2;
    kernels::avgpool1d_forward(h, cfg_.pool, p2);

    Tensor<T> flat({n_, feat_}, std::move(p2.data));
    return fc_.forward(flat);
}

template <class T>
Tensor<T> Vpm<T>::backward(const Tensor<T>& dlogits) {
    Tensor<T> d = fc_.backward(dlogits);
    Tensor<T> d3({n_, cfg_.c2, feat_ / cfg_.c2}, std::move(d.data));

    Tensor<T> du;
    kernels::avgpool1d_backward(d3, cfg_.pool, l2_, du);
    du = drop2_.backward(du);
    du = relu2_.backward(du);
    du = bn2_.backward(du);
    du = conv2_.backward(du);

    Tensor<T> dp;
    kernels::avgpool1d_backward(du, cfg_.pool, l1_, dp);
    dp = drop1_.backward(dp);
    dp = relu1_.backward(dp);
    dp = bn1_.backward(dp);
    dp = conv1_.backward(dp);

    return Tensor<T>({n_, cfg_.input_len}, std::move(dp.data));
}

template <class T>
nn::ParamRefs<T> Vpm<T>::params() {
    nn::ParamRefs<T> out;
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    fc_.collect(out);
    return out;
}

template <class T>
nn::ParamRefs<T> Vpm<T>::state() {
    auto out = params();
    bn1_.collect_state(out);
    bn2_.collect_state(out);
    return out;
}

template <class T>
void Vpm<T>::set_trainable(bool trainable) {
    for (auto* p : params()) p->trainable = trainable;
}

std::vector<Decision> decide(const TensorF& logits, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw ConfigError("decision threshold must lie in (0, 1)");
    }
    if (logits.shape.size() != 2 || logits.shape[1] != 2) {
        throw DimensionError("decide: logits " + logits.shape_str() + " expect [N,2]");
    }
    const auto probs = nn::softmax(logits);
    std::vector<Decision> out(logits.shape[0]);
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r].score = double(probs.at2(r, 1));
        out[r].label = out[r].score > threshold ? 1 : 0;
    }
    return out;
}

ckpt::NamedViews checkpoint_views(Vpm<float>& model) {
    ckpt::NamedViews out;
    for (auto* p : model.state()) out.emplace_back(p->name, &p->value);
    return out;
}

ckpt::NamedSlots checkpoint_slots(Vpm<float>& model) {
    ckpt::NamedSlots out;
    for (auto* p : model.state()) out.emplace_back(p->name, &p->value);
    return out;
}

template std::optional<TensorF> gate(const sdae::FeaturePair<float>&, GateMode);
template std::optional<TensorD> gate(const sdae::FeaturePair<double>&, GateMode);
template class Vpm<float>;
template class Vpm<double>;

}  // namespace taac::cls
