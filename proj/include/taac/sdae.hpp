#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taac/checkpoint.hpp"
#include "taac/nn.hpp"

namespace taac::sdae {

// Dual-decoder split autoencoder: a shared encoder feeds a bottleneck, and
// two structurally identical decoders emit the condition component v_d and
// the non-condition component v_nd in signal space. The residual
// x - v_d - v_nd is implicit; it is never predicted or stored.
struct SdaeConfig {
    std::size_t input_len = 2000;
    std::size_t h1 = 512;
    std::size_t h2 = 128;
    std::size_t latent = 128;
    std::size_t resblocks = 1;   // residual blocks after each hidden stage
    double dropout = 0.2;        // encoder stages only
};

template <class T>
struct FeaturePair {
    Tensor<T> v_d;   // condition-related component [N, L]
    Tensor<T> v_nd;  // identity/non-condition component [N, L]
};

template <class T>
struct SdaeOut {
    Tensor<T> z;  // latent code [N, latent]
    FeaturePair<T> pair;
};

// Identity-skip block: x + fc2(relu(fc1(x))).
template <class T>
class ResBlock {
  public:
    ResBlock(const std::string& prefix, std::size_t dim)
        : fc1_(prefix + ".fc1", dim, dim), fc2_(prefix + ".fc2", dim, dim) {}

    void init(Rng& rng) {
        fc1_.init(rng);
        fc2_.init(rng);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        auto y = fc2_.forward(relu_.forward(fc1_.forward(x)));
        check_same_shape(x, y, "resblock");
        for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += x.data[i];
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        auto dx = fc1_.backward(relu_.backward(fc2_.backward(dy)));
        for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dy.data[i];
        return dx;
    }

    void collect(nn::ParamRefs<T>& out) {
        fc1_.collect(out);
        fc2_.collect(out);
    }

  private:
    nn::Linear<T> fc1_, fc2_;
    nn::ReLU<T> relu_;
};

template <class T>
class Sdae {
  public:
    explicit Sdae(const SdaeConfig& cfg);

    void init(Rng& rng);

    SdaeOut<T> forward(const Tensor<T>& x, const nn::DropCtx& ctx);

    // Backpropagate from the decoder outputs; null pointer = zero upstream
    // gradient, and the corresponding decoder is skipped entirely (its
    // parameter gradients stay untouched). Returns d loss / d x.
    Tensor<T> backward(const Tensor<T>* dv_d, const Tensor<T>* dv_nd);

    nn::ParamRefs<T> params();
    void set_trainable(bool trainable);

    const SdaeConfig& config() const { return cfg_; }

  private:
    struct Stage {
        nn::Linear<T> fc;
        nn::ReLU<T> relu;
        nn::Dropout<T> drop;
        std::vector<ResBlock<T>> blocks;
        bool use_relu = true;
    };

    static Tensor<T> run_stack(std::vector<Stage>& stages, const Tensor<T>& x,
                               const nn::DropCtx& ctx);
    static Tensor<T> back_stack(std::vector<Stage>& stages, const Tensor<T>& dy);
    static void collect_stack(std::vector<Stage>& stages, nn::ParamRefs<T>& out);

    SdaeConfig cfg_;
    std::vector<Stage> encoder_, dec_d_, dec_nd_;
};

template <class T>
struct LossGrad {
    double loss = 0;
    Tensor<T> dv_d, dv_nd;
};

// Mean over the batch of |<v_d_i, v_nd_i>| (same-index pairing). The
// all_pairs variant averages |<v_d_i, v_nd_j>| over every (i, j).
template <class T>
LossGrad<T> loss_ortho(const Tensor<T>& v_d, const Tensor<T>& v_nd, bool all_pairs = false);

// Mean over the batch of the squared L2 reconstruction residual
// ||v_d_i + v_nd_i - x_i||^2 (per-sample sum of squares, batch mean only).
template <class T>
LossGrad<T> loss_recon(const Tensor<T>& v_d, const Tensor<T>& v_nd, const Tensor<T>& x);

// Elementwise sum of the two components.
template <class T>
Tensor<T> fuse(const Tensor<T>& v_d, const Tensor<T>& v_nd);

// Checkpoint views under the parameter prefixes encoder.* / decoder_d.* /
// decoder_nd.* (names are carried by the params themselves).
ckpt::NamedViews checkpoint_views(Sdae<float>& model);
ckpt::NamedSlots checkpoint_slots(Sdae<float>& model);

}  // namespace taac::sdae
