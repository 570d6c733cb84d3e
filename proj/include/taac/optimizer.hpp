#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "taac/errors.hpp"
#include "taac/nn.hpp"

namespace taac::nn {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Moment state is keyed by parameter name,
// so a parameter only advances when it is passed to step(); phases that
// freeze a sub-model simply leave its parameters out and they stay
// bit-identical.
template <class T>
class AdamW {
  public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {
        if (cfg.lr <= 0) throw ConfigError("adamw: learning rate must be positive");
        if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1) {
            throw ConfigError("adamw: betas must lie in [0, 1)");
        }
    }

    void step(const ParamRefs<T>& params) {
        for (auto* p : params) {
            if (!p->trainable) continue;  // frozen: no moments advance, no update
            auto& st = state_[p->name];
            if (st.m.size() != p->value.size()) {
                st.m.assign(p->value.size(), 0.0);
                st.v.assign(p->value.size(), 0.0);
                st.t = 0;
            }
            st.t += 1;
            const double bc1 = 1.0 - std::pow(cfg_.beta1, double(st.t));
            const double bc2 = 1.0 - std::pow(cfg_.beta2, double(st.t));
            for (std::size_t i = 0; i < p->value.size(); ++i) {
                const double g = double(p->grad.data[i]);
                st.m[i] = cfg_.beta1 * st.m[i] + (1.0 - cfg_.beta1) * g;
                st.v[i] = cfg_.beta2 * st.v[i] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = st.m[i] / bc1;
                const double vhat = st.v[i] / bc2;
                const double upd =
                    mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * double(p->value.data[i]);
                p->value.data[i] = static_cast<T>(double(p->value.data[i]) - cfg_.lr * upd);
            }
        }
    }

    const AdamWConfig& config() const { return cfg_; }

  private:
    struct MomentState {
        std::vector<double> m, v;
        std::uint64_t t = 0;
    };
    AdamWConfig cfg_;
    std::map<std::string, MomentState> state_;
};

}  // namespace taac::nn
