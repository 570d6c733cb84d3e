#include "taac/sdae.hpp"

#include <cmath>

#include "taac/errors.hpp"

namespace taac::sdae {

namespace {

template <class T>
double sgn(T v) {
    if (v > T(0)) return 1.0;
    if (v < T(0)) return -1.0;
    return 0.0;
}

}  // namespace

template <class T>
Sdae<T>::Sdae(const SdaeConfig& cfg) : cfg_(cfg) {
    if (cfg.input_len == 0 || cfg.h1 == 0 || cfg.h2 == 0 || cfg.latent == 0) {
        throw ConfigError("autoencoder widths must be positive");
    }
    auto make_stage = [&](const std::string& prefix, std::size_t in, std::size_t out, double rate,
                          std::uint64_t drop_tag, std::size_t n_blocks, bool use_relu) {
        Stage st{nn::Linear<T>(prefix + ".fc", in, out), nn::ReLU<T>(),
                 nn::Dropout<T>(rate, drop_tag), {}, use_relu};
        for (std::size_t b = 0; b < n_blocks; ++b) {
            st.blocks.emplace_back(prefix + ".rb" + std::to_string(b), out);
        }
        return st;
    };
    const auto nb = cfg.resblocks;
    encoder_.push_back(make_stage("encoder.s1", cfg.input_len, cfg.h1, cfg.dropout, 1, nb, true));
    encoder_.push_back(make_stage("encoder.s2", cfg.h1, cfg.h2, cfg.dropout, 2, nb, true));
    encoder_.push_back(make_stage("encoder.s3", cfg.h2, cfg.latent, 0.0, 3, 0, true));
    int tag = 4;
    for (auto* dec : {&dec_d_, &dec_nd_}) {
        const std::string name = (dec == &dec_d_) ? "decoder_d" : "decoder_nd";
        dec->push_back(make_stage(name + ".s1", cfg.latent, cfg.h2, 0.0, tag++, nb, true));
        dec->push_back(make_stage(name + ".s2", cfg.h2, cfg.h1, 0.0, tag++, nb, true));
        // final stage is linear: components carry signed signal values
        dec->push_back(make_stage(name + ".s3", cfg.h1, cfg.input_len, 0.0, tag++, 0, false));
    }
}

template <class T>
void Sdae<T>::init(Rng& rng) {
    for (auto* stack : {&encoder_, &dec_d_, &dec_nd_}) {
        for (auto& st : *stack) {
            st.fc.init(rng);
            for (auto& b : st.blocks) b.init(rng);
        }
    }
}

template <class T>
Tensor<T> Sdae<T>::run_stack(std::vector<Stage>& stages, const Tensor<T>& x,
                             const nn::DropCtx& ctx) {
    Tensor<T> h = x;
    for (auto& st : stages) {
        h = st.fc.forward(h);
        if (st.use_relu) h = st.relu.forward(h);
        h = st.drop.forward(h, ctx);
        for (auto& b : st.blocks) h = b.forward(h);
    }
    return h;
}

template <class T>
Tensor<T> Sdae<T>::back_stack(std::vector<Stage>& stages, const Tensor<T>& dy) {
    Tensor<T> d = dy;
    for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
        auto& st = *it;
        for (auto b = st.blocks.rbegin(); b != st.blocks.rend(); ++b) d = b->backward(d);
        d = st.drop.backward(d);
        if (st.use_relu) d = st.relu.backward(d);
        d = st.fc.backward(d);
    }
    return d;
}

template <class T>
void Sdae<T>::collect_stack(std::vector<Stage>& stages, nn::ParamRefs<T>& out) {
    for (auto& st : stages) {
        st.fc.collect(out);
        for (auto& b : st.blocks) b.collect(out);
    }
}

template <class T>
SdaeOut<T> Sdae<T>::forward(const Tensor<T>& x, const nn::DropCtx& ctx) {
    if (x.shape.size() != 2 || x.shape[1] != cfg_.input_len) {
        throw DimensionError("autoencoder input " + x.shape_str() + " expects [N," +
                             std::to_string(cfg_.input_len) + "]");
    }
    SdaeOut<T> out;
    out.z = run_stack(encoder_, x, ctx);
    out.pair.v_d = run_stack(dec_d_, out.z, ctx);
    out.pair.v_nd = run_stack(dec_nd_, out.z, ctx);
    return out;
}

template <class T>
Tensor<T> Sdae<T>::backward(const Tensor<T>* dv_d, const Tensor<T>* dv_nd) {
    if (!dv_d && !dv_nd) {
        throw ConfigError("autoencoder backward: both upstream gradients are null");
    }
    Tensor<T> dz;
    if (dv_d) dz = back_stack(dec_d_, *dv_d);
    if (dv_nd) {
        Tensor<T> dz_nd = back_stack(dec_nd_, *dv_nd);
        if (dz.size() == 0) {
            dz = std::move(dz_nd);
        } else {
            for (std::size_t i = 0; i < dz.size(); ++i) dz.data[i] += dz_nd.data[i];
        }
    }
    return back_stack(encoder_, dz);
}

template <class T>
nn::ParamRefs<T> Sdae<T>::params() {
    nn::ParamRefs<T> out;
    collect_stack(encoder_, out);
    collect_stack(dec_d_, out);
    collect_stack(dec_nd_, out);
    return out;
}

template <class T>
void Sdae<T>::set_trainable(bool trainable) {
    for (auto* p : params()) p->trainable = trainable;
}

template <class T>
LossGrad<T> loss_ortho(const Tensor<T>& v_d, const Tensor<T>& v_nd, bool all_pairs) {
    check_same_shape(v_d, v_nd, "loss_ortho");
    const std::size_t n = v_d.shape[0], dim = v_d.shape[1];
    if (n == 0) throw DimensionError("loss_ortho: empty batch");
    LossGrad<T> res;
    res.dv_d = Tensor<T>(v_d.shape);
    res.dv_nd = Tensor<T>(v_d.shape);
    if (!all_pairs) {
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0;
            for (std::size_t k = 0; k < dim; ++k) {
                s += double(v_d.at2(r, k)) * double(v_nd.at2(r, k));
            }
            res.loss += std::fabs(s) / double(n);
            const double g = sgn(s) / double(n);
            for (std::size_t k = 0; k < dim; ++k) {
                res.dv_d.at2(r, k) = static_cast<T>(g * double(v_nd.at2(r, k)));
                res.dv_nd.at2(r, k) = static_cast<T>(g * double(v_d.at2(r, k)));
            }
        }
        return res;
    }
    const double inv = 1.0 / (double(n) * double(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t k = 0; k < dim; ++k) {
                s += double(v_d.at2(i, k)) * double(v_nd.at2(j, k));
            }
            res.loss += std::fabs(s) * inv;
            const double g = sgn(s) * inv;
            for (std::size_t k = 0; k < dim; ++k) {
                res.dv_d.at2(i, k) += static_cast<T>(g * double(v_nd.at2(j, k)));
                res.dv_nd.at2(j, k) += static_cast<T>(g * double(v_d.at2(i, k)));
            }
        }
    }
    return res;
}

template <class T>
LossGrad<T> loss_recon(const Tensor<T>& v_d, const Tensor<T>& v_nd, const Tensor<T>& x) {
    check_same_shape(v_d, v_nd, "loss_recon");
    check_same_shape(v_d, x, "loss_recon");
    const std::size_t n = v_d.shape[0];
    if (n == 0) throw DimensionError("loss_recon: empty batch");
    LossGrad<T> res;
    res.dv_d = Tensor<T>(v_d.shape);
    res.dv_nd = Tensor<T>(v_d.shape);
    const double inv_n = 1.0 / double(n);
    for (std::size_t i = 0; i < v_d.size(); ++i) {
        const double r = double(v_d.data[i]) + double(v_nd.data[i]) - double(x.data[i]);
        res.loss += r * r * inv_n;
        const T g = static_cast<T>(2.0 * r * inv_n);
        res.dv_d.data[i] = g;
        res.dv_nd.data[i] = g;
    }
    return res;
}

template <class T>
Tensor<T> fuse(const Tensor<T>& v_d, const Tensor<T>& v_nd) {
    check_same_shape(v_d, v_nd, "fuse");
    Tensor<T> out(v_d.shape);
    for (std::size_t i = 0; i < v_d.size(); ++i) out.data[i] = v_d.data[i] + v_nd.data[i];
    return out;
}

ckpt::NamedViews checkpoint_views(Sdae<float>& model) {
    ckpt::NamedViews out;
    for (auto* p : model.params()) out.emplace_back(p->name, &p->value);
    return out;
}

ckpt::NamedSlots checkpoint_slots(Sdae<float>& model) {
    ckpt::NamedSlots out;
    for (auto* p : model.params()) out.emplace_back(p->name, &p->value);
    return out;
}

template class Sdae<float>;
template class Sdae<double>;
template LossGrad<float> loss_ortho(const TensorF&, const TensorF&, bool);
template LossGrad<double> loss_ortho(const TensorD&, const TensorD&, bool);
template LossGrad<float> loss_recon(const TensorF&, const TensorF&, const TensorF&);
template LossGrad<double> loss_recon(const TensorD&, const TensorD&, const TensorD&);
template Tensor<float> fuse(const TensorF&, const TensorF&);
template Tensor<double> fuse(const TensorD&, const TensorD&);

}  // namespace taac::sdae
