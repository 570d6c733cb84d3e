#pragma once

#include <optional>
#include <vector>

#include "taac/checkpoint.hpp"
#include "taac/nn.hpp"
#include "taac/sdae.hpp"

namespace taac::cls {

// Which decomposed components reach the classifier. Phase I trains on the
// condition component alone (Partial); phases II/III classify the fused
// signal (Full); Blocked short-circuits classification entirely.
enum class GateMode { Full, Partial, Blocked };

template <class T>
std::optional<Tensor<T>> gate(const sdae::FeaturePair<T>& pair, GateMode mode);

struct VpmConfig {
    std::size_t input_len = 2000;
    std::size_t c1 = 16;        // first-tier conv channels
    std::size_t c2 = 32;        // second-tier conv channels
    std::size_t kernel = 9;
    std::size_t pool = 4;       // average-pool window per tier
    double dropout = 0.2;
    double threshold = 0.4;     // decision threshold on the depressed-class score
};

struct Decision {
    double score = 0;  // softmax probability of class 1 (depressed)
    int label = 0;     // 1 iff score > threshold (strict)
};

// Two conv tiers (conv -> batchnorm -> relu -> dropout -> average pool),
// then a fully-connected projection to binary logits. Class order:
// 0 = non-depressed, 1 = depressed.
template <class T>
class Vpm {
  public:
    explicit Vpm(const VpmConfig& cfg);

    void init(Rng& rng);

    Tensor<T> forward(const Tensor<T>& x, const nn::DropCtx& ctx);  // x [N,L] -> logits [N,2]
    Tensor<T> backward(const Tensor<T>& dlogits);                   // -> dx [N,L]

    nn::ParamRefs<T> params();          // trainable parameters (vpm.* prefix)
    nn::ParamRefs<T> state();           // params + batchnorm running statistics
    void set_trainable(bool trainable);

    const VpmConfig& config() const { return cfg_; }
    std::size_t feature_len() const { return feat_; }

  private:
    VpmConfig cfg_;
    std::size_t feat_;
    nn::Conv1d<T> conv1_, conv2_;
    nn::BatchNorm1d<T> bn1_, bn2_;
    nn::ReLU<T> relu1_, relu2_;
    nn::Dropout<T> drop1_, drop2_;
    nn::Linear<T> fc_;
    std::size_t n_ = 0, l1_ = 0, l2_ = 0;  // cached lengths for backward
};

std::vector<Decision> decide(const TensorF& logits, double threshold);

ckpt::NamedViews checkpoint_views(Vpm<float>& model);
ckpt::NamedSlots checkpoint_slots(Vpm<float>& model);

}  // namespace taac::cls
