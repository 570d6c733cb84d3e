#include "taac/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "taac/errors.hpp"
#include "taac/io.hpp"
#include "taac/optimizer.hpp"
#include "taac/version.hpp"

namespace taac::train {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kInitSdaeTag = 0x11a1;
constexpr std::uint64_t kInitVpmTag = 0x11a2;
constexpr std::uint64_t kShuffleTag = 0x5481a;
constexpr std::uint64_t kDpNoiseTag = 0xd96e;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

std::size_t param_count(const nn::ParamRefs<float>& params) {
    std::size_t total = 0;
    for (const auto* p : params) total += p->value.size();
    return total;
}

void validate_common(const DataSet& data, const PhaseConfig& cfg) {
    if (data.clips.empty()) throw ConfigError("training set is empty");
    if (data.clips.size() != data.labels.size() || data.clips.size() != data.ids.size())
        throw DimensionError("dataset clips, labels, and ids must align");
    if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
    if (cfg.epochs == 0) throw ConfigError("epoch count must be positive");
    if (cfg.lambda_ortho < 0 || cfg.lambda_recon < 0 || cfg.lambda_cls < 0)
        throw ConfigError("loss weights must be non-negative");
}

void fill_batch(TensorF& xb, const std::vector<std::vector<float>>& clips,
                const std::vector<std::size_t>& order, std::size_t start, std::size_t bsz) {
    const std::size_t L = xb.shape[1];
    for (std::size_t e = 0; e < bsz; ++e) {
        const auto& c = clips[order[start + e]];
        std::copy(c.begin(), c.end(), xb.data.begin() + e * L);
    }
}

void write_sidecar(const std::string& path, const Pipeline& pl, int phase, std::uint64_t seed) {
    json j;
    j["phase"] = phase;
    j["seed"] = seed;
    j["tool_version"] = kVersion;
    j["sdae"] = {{"input_len", pl.sdae_cfg.input_len}, {"h1", pl.sdae_cfg.h1},
                 {"h2", pl.sdae_cfg.h2},               {"latent", pl.sdae_cfg.latent},
                 {"resblocks", pl.sdae_cfg.resblocks}, {"dropout", pl.sdae_cfg.dropout}};
    j["vpm"] = {{"input_len", pl.vpm_cfg.input_len}, {"c1", pl.vpm_cfg.c1},
                {"c2", pl.vpm_cfg.c2},               {"kernel", pl.vpm_cfg.kernel},
                {"pool", pl.vpm_cfg.pool},           {"dropout", pl.vpm_cfg.dropout},
                {"threshold", pl.vpm_cfg.threshold}};
    io::write_text(path + ".json", j.dump(2) + "\n");
}

// Frozen-autoencoder component maps for every clip, eval mode, batched for
// throughput (rows are independent, so batching does not change values).
struct Features {
    std::vector<std::vector<float>> v_d, v_nd;
};

Features compute_features(Pipeline& pl, const DataSet& data) {
    const std::size_t n = data.clips.size();
    const std::size_t L = data.clip_len;
    Features f;
    f.v_d.resize(n);
    f.v_nd.resize(n);
    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t b = std::min(chunk, n - start);
        TensorF xb({b, L});
        for (std::size_t e = 0; e < b; ++e)
            std::copy(data.clips[start + e].begin(), data.clips[start + e].end(),
                      xb.data.begin() + e * L);
        auto out = pl.sdae.forward(xb, nn::eval_ctx());
        for (std::size_t e = 0; e < b; ++e) {
            f.v_d[start + e].assign(out.pair.v_d.data.begin() + e * L,
                                    out.pair.v_d.data.begin() + (e + 1) * L);
            f.v_nd[start + e].assign(out.pair.v_nd.data.begin() + e * L,
                                     out.pair.v_nd.data.begin() + (e + 1) * L);
        }
    }
    return f;
}

// Per-clip values of the decomposition losses under the frozen autoencoder,
// recorded as diagnostics in the phase II/III traces.
void frozen_loss_values(const Features& f, const DataSet& data, std::vector<double>& lo,
                        std::vector<double>& lr) {
    const std::size_t n = data.clips.size();
    lo.resize(n);
    lr.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0, res = 0;
        const auto& vd = f.v_d[i];
        const auto& vnd = f.v_nd[i];
        const auto& x = data.clips[i];
        for (std::size_t k = 0; k < vd.size(); ++k) {
            dot += static_cast<double>(vd[k]) * static_cast<double>(vnd[k]);
            const double r = static_cast<double>(vd[k]) + static_cast<double>(vnd[k]) -
                             static_cast<double>(x[k]);
            res += r * r;
        }
        lo[i] = std::abs(dot);
        lr[i] = res;
    }
}

// Shared loop for every run that trains only the classifier (phases II and
// III and the direct baseline): AdamW on the classifier parameters, batch
// shuffling, per-batch traces, divergence guard.
TrainReport classifier_training(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                                const std::vector<std::vector<float>>& inputs,
                                const std::vector<double>& lo_clip,
                                const std::vector<double>& lr_clip, int phase_no,
                                const std::string& save_path) {
    validate_common(data, cfg);
    if (cfg.lambda_cls <= 0) throw ConfigError("classifier training requires lambda_cls > 0");
    const std::size_t L = data.clip_len;
    if (L != pl.vpm_cfg.input_len)
        throw DimensionError("clip length " + std::to_string(L) +
                             " does not match classifier input length " +
                             std::to_string(pl.vpm_cfg.input_len));

    auto vparams = pl.vpm.params();
    nn::AdamWConfig ocfg;
    ocfg.lr = cfg.lr;
    ocfg.weight_decay = cfg.weight_decay;
    nn::AdamW<float> opt(ocfg);

    const std::size_t n = inputs.size();
    std::vector<std::size_t> order(n);
    TrainReport rep;
    std::uint64_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng sh = sub_rng(hash_combine(cfg.seed, kShuffleTag), epoch);
        sh.shuffle(order);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n - start);
            if (bsz < 2) break;  // batch norm needs two examples; remainder dropped

            TensorF xb({bsz, L});
            fill_batch(xb, inputs, order, start, bsz);
            std::vector<int> blabels(bsz);
            nn::DropCtx ctx;
            ctx.train = true;
            ctx.run_seed = cfg.seed;
            ctx.step = step;
            ctx.sample_ids.resize(bsz);
            double lo_mean = 0, lr_mean = 0;
            for (std::size_t e = 0; e < bsz; ++e) {
                const std::size_t idx = order[start + e];
                blabels[e] = data.labels[idx];
                ctx.sample_ids[e] = data.ids[idx];
                if (!lo_clip.empty()) lo_mean += lo_clip[idx];
                if (!lr_clip.empty()) lr_mean += lr_clip[idx];
            }
            lo_mean /= static_cast<double>(bsz);
            lr_mean /= static_cast<double>(bsz);

            nn::zero_grads(vparams);
            auto logits = pl.vpm.forward(xb, ctx);
            auto ce = nn::cross_entropy(logits, blabels, cfg.label_smoothing);
            const float lcf = static_cast<float>(cfg.lambda_cls);
            for (auto& v : ce.dlogits.data) v *= lcf;
            pl.vpm.backward(ce.dlogits);

            const double total = cfg.lambda_cls * ce.loss;
            rep.ortho_trace.push_back(lo_mean);
            rep.recon_trace.push_back(lr_mean);
            rep.cls_trace.push_back(ce.loss);
            rep.total_trace.push_back(total);
            if (!std::isfinite(total)) {
                if (!save_path.empty()) {
                    pl.save(save_path, phase_no, cfg.seed);
                    rep.checkpoint_path = save_path;
                }
                throw NumericError("training diverged (non-finite loss) at step " +
                                   std::to_string(step) + "; last finite parameters saved");
            }
            opt.step(vparams);
            ++step;
        }
        rep.epoch_wall_ms.push_back(elapsed_ms(t0));
    }
    rep.steps = step;
    if (!save_path.empty()) {
        pl.save(save_path, phase_no, cfg.seed);
        rep.checkpoint_path = save_path;
    }
    return rep;
}

}  // namespace

DataSet load_dataset(const synth::CorpusManifest& m, const std::vector<int>& speakers) {
    const std::set<int> wanted(speakers.begin(), speakers.end());
    DataSet d;
    d.clip_len = m.config.clip_len;
    for (std::size_t i = 0; i < m.clips.size(); ++i) {
        if (!wanted.count(m.clips[i].speaker_id)) continue;
        d.clips.push_back(synth::load_clip(m, i));
        d.labels.push_back(m.clips[i].label);
        d.ids.push_back(static_cast<std::uint64_t>(i));
        if (d.clips.back().size() != d.clip_len)
            throw DimensionError("clip " + std::to_string(i) + " has length " +
                                 std::to_string(d.clips.back().size()) + ", manifest says " +
                                 std::to_string(d.clip_len));
    }
    return d;
}

Pipeline::Pipeline(const sdae::SdaeConfig& s, const cls::VpmConfig& v)
    : sdae_cfg(s), vpm_cfg(v), sdae(s), vpm(v) {
    if (s.input_len != v.input_len)
        throw ConfigError("autoencoder and classifier input lengths must match");
}

void Pipeline::init(std::uint64_t seed) {
    Rng rs = sub_rng(seed, kInitSdaeTag);
    sdae.init(rs);
    Rng rv = sub_rng(seed, kInitVpmTag);
    vpm.init(rv);
}

void Pipeline::save(const std::string& path, int phase, std::uint64_t seed) const {
    auto& self = const_cast<Pipeline&>(*this);  // views are read-only
    ckpt::NamedViews views = sdae::checkpoint_views(self.sdae);
    ckpt::NamedViews vv = cls::checkpoint_views(self.vpm);
    views.insert(views.end(), vv.begin(), vv.end());
    ckpt::save(path, views);
    write_sidecar(path, *this, phase, seed);
}

void Pipeline::load(const std::string& path) {
    ckpt::NamedSlots slots = sdae::checkpoint_slots(sdae);
    ckpt::NamedSlots vs = cls::checkpoint_slots(vpm);
    slots.insert(slots.end(), vs.begin(), vs.end());
    ckpt::load_into(path, slots);
}

std::vector<float> apply_cipher(const EncryptionRun& enc, const std::vector<float>& x,
                                std::uint64_t clip_id) {
    switch (enc.cipher) {
        case Cipher::None:
            return x;
        case Cipher::Taac:
            return crypt::encrypt_f32(x, enc.key, enc.strength);
        case Cipher::Chaos: {
            // per-clip logistic seed, derived so every clip gets its own
            // keystream while the whole run stays reproducible
            const double u = u64_to_unit(hash_combine(enc.chaos_seed_base, clip_id));
            const double seed = 0.001 + 0.998 * u;
            return crypt::chaos_encrypt(x, seed, enc.chaos_r);
        }
    }
    throw ConfigError("unknown cipher");
}

double dp_clip(std::vector<float>& g, double clip_norm) {
    if (!(clip_norm > 0)) throw ConfigError("clip norm must be positive");
    double nrm2 = 0;
    for (float v : g) nrm2 += static_cast<double>(v) * static_cast<double>(v);
    const double nrm = std::sqrt(nrm2);
    if (std::isfinite(clip_norm) && nrm > clip_norm) {
        const float s = static_cast<float>(clip_norm / nrm);
        for (auto& v : g) v *= s;
    }
    return nrm;
}

void dp_aggregate(std::vector<float>& grad_sum, double clip_norm, double sigma, std::size_t batch,
                  Rng& noise_rng) {
    if (batch == 0) throw ConfigError("batch must be positive");
    if (sigma < 0) throw ConfigError("noise multiplier must be non-negative");
    if (sigma > 0 && !std::isfinite(clip_norm))
        throw ConfigError("noise requires a finite clip norm");
    if (sigma > 0) {
        const double sc = sigma * clip_norm;
        for (auto& v : grad_sum) v += static_cast<float>(sc * noise_rng.normal());
    }
    const float bf = static_cast<float>(batch);
    for (auto& v : grad_sum) v /= bf;
}

TrainReport train_phase1(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const DpConfig& dp, const std::string& save_path) {
    validate_common(data, cfg);
    if (dp.enabled && cfg.lambda_cls != 0.0)
        throw ConfigError(
            "DP-SGD requires lambda_cls = 0: the classification path batch-normalizes across "
            "examples, so its per-example gradients are not separable");
    if (dp.enabled && !(dp.clip_norm > 0)) throw ConfigError("clip norm must be positive");
    if (dp.enabled && dp.noise_mult < 0) throw ConfigError("noise multiplier must be non-negative");
    if (dp.enabled && dp.noise_mult > 0 && !std::isfinite(dp.clip_norm))
        throw ConfigError("noise requires a finite clip norm");
    const std::size_t L = data.clip_len;
    if (L != pl.sdae_cfg.input_len)
        throw DimensionError("clip length " + std::to_string(L) +
                             " does not match autoencoder input length " +
                             std::to_string(pl.sdae_cfg.input_len));

    auto sd_params = pl.sdae.params();
    auto vparams = pl.vpm.params();
    nn::ParamRefs<float> active = sd_params;
    if (cfg.lambda_cls > 0) active.insert(active.end(), vparams.begin(), vparams.end());
    nn::AdamWConfig ocfg;
    ocfg.lr = cfg.lr;
    ocfg.weight_decay = cfg.weight_decay;
    nn::AdamW<float> opt(ocfg);

    std::vector<float> acc(param_count(sd_params));
    const std::size_t n = data.clips.size();
    std::vector<std::size_t> order(n);
    TrainReport rep;
    std::uint64_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng sh = sub_rng(hash_combine(cfg.seed, kShuffleTag), epoch);
        sh.shuffle(order);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n - start);
            if (bsz < 2) break;  // keep the batch rule uniform across phases

            // --- decomposition losses, one example at a time ---
            // Micro-batching keeps per-example gradients available so DP
            // clipping can bound each example's contribution; the non-DP
            // run takes the same path (scale 1, no noise), which is what
            // makes sigma=0, C=inf bit-identical to DP-off.
            std::fill(acc.begin(), acc.end(), 0.0f);
            double lo_sum = 0, lr_sum = 0;
            TensorF xe({1, L});
            TensorF dvd({1, L}), dvnd({1, L});
            for (std::size_t e = 0; e < bsz; ++e) {
                const std::size_t idx = order[start + e];
                std::copy(data.clips[idx].begin(), data.clips[idx].end(), xe.data.begin());
                nn::DropCtx ctx;
                ctx.train = true;
                ctx.run_seed = cfg.seed;
                ctx.step = step;
                ctx.sample_ids = {data.ids[idx]};
                nn::zero_grads(sd_params);
                auto out = pl.sdae.forward(xe, ctx);
                auto lo = sdae::loss_ortho(out.pair.v_d, out.pair.v_nd, cfg.all_pairs_ortho);
                auto lr = sdae::loss_recon(out.pair.v_d, out.pair.v_nd, xe);
                lo_sum += lo.loss;
                lr_sum += lr.loss;
                for (std::size_t k = 0; k < L; ++k) {
                    dvd.data[k] = static_cast<float>(cfg.lambda_ortho * lo.dv_d.data[k] +
                                                     cfg.lambda_recon * lr.dv_d.data[k]);
                    dvnd.data[k] = static_cast<float>(cfg.lambda_ortho * lo.dv_nd.data[k] +
                                                      cfg.lambda_recon * lr.dv_nd.data[k]);
                }
                pl.sdae.backward(&dvd, &dvnd);

                double scale = 1.0;
                if (dp.enabled) {
                    double nrm2 = 0;
                    for (const auto* p : sd_params)
                        for (float g : p->grad.data)
                            nrm2 += static_cast<double>(g) * static_cast<double>(g);
                    const double nrm = std::sqrt(nrm2);
                    if (std::isfinite(dp.clip_norm) && nrm > dp.clip_norm)
                        scale = dp.clip_norm / nrm;
                    ++rep.dp_clip_checks;
                    if (nrm * scale > dp.clip_norm * (1.0 + 1e-5))
                        throw NumericError("clipped per-example gradient norm " +
                                           std::to_string(nrm * scale) + " exceeds bound " +
                                           std::to_string(dp.clip_norm));
                }
                const float fs = static_cast<float>(scale);
                std::size_t off = 0;
                for (const auto* p : sd_params) {
                    const auto& g = p->grad.data;
                    for (std::size_t i = 0; i < g.size(); ++i) acc[off + i] += fs * g[i];
                    off += g.size();
                }
            }
            Rng nrng = sub_rng(hash_combine(cfg.seed, kDpNoiseTag), step);
            dp_aggregate(acc, dp.clip_norm, dp.enabled ? dp.noise_mult : 0.0, bsz, nrng);
            {
                std::size_t off = 0;
                for (auto* p : sd_params) {
                    auto& g = p->grad.data;
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] = acc[off + i];
                    off += g.size();
                }
            }

            // --- classification path, whole batch, Partial gate ---
            double lc = 0;
            if (cfg.lambda_cls > 0) {
                TensorF xb({bsz, L});
                fill_batch(xb, data.clips, order, start, bsz);
                nn::DropCtx bctx;
                bctx.train = true;
                bctx.run_seed = cfg.seed;
                bctx.step = step;
                bctx.sample_ids.resize(bsz);
                std::vector<int> blabels(bsz);
                for (std::size_t e = 0; e < bsz; ++e) {
                    const std::size_t idx = order[start + e];
                    bctx.sample_ids[e] = data.ids[idx];
                    blabels[e] = data.labels[idx];
                }
                nn::zero_grads(vparams);
                auto out = pl.sdae.forward(xb, bctx);
                auto gated = cls::gate(out.pair, cls::GateMode::Partial);
                auto logits = pl.vpm.forward(*gated, bctx);
                auto ce = nn::cross_entropy(logits, blabels, cfg.label_smoothing);
                lc = ce.loss;
                const float lcf = static_cast<float>(cfg.lambda_cls);
                for (auto& v : ce.dlogits.data) v *= lcf;
                auto dvd_c = pl.vpm.backward(ce.dlogits);
                // the condition decoder and the encoder both learn from the
                // classification signal; the residual decoder is untouched
                pl.sdae.backward(&dvd_c, nullptr);
            }

            const double lo_mean = lo_sum / static_cast<double>(bsz);
            const double lr_mean = lr_sum / static_cast<double>(bsz);
            const double total =
                cfg.lambda_ortho * lo_mean + cfg.lambda_recon * lr_mean + cfg.lambda_cls * lc;
            rep.ortho_trace.push_back(lo_mean);
            rep.recon_trace.push_back(lr_mean);
            rep.cls_trace.push_back(lc);
            rep.total_trace.push_back(total);
            if (!std::isfinite(total)) {
                if (!save_path.empty()) {
                    pl.save(save_path, 1, cfg.seed);
                    rep.checkpoint_path = save_path;
                }
                throw NumericError("training diverged (non-finite loss) at step " +
                                   std::to_string(step) + "; last finite parameters saved");
            }
            opt.step(active);
            ++step;
        }
        rep.epoch_wall_ms.push_back(elapsed_ms(t0));
    }
    rep.steps = step;
    if (!save_path.empty()) {
        pl.save(save_path, 1, cfg.seed);
        rep.checkpoint_path = save_path;
    }
    return rep;
}

TrainReport train_phase2(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const std::string& save_path) {
    pl.sdae.set_trainable(false);
    auto f = compute_features(pl, data);
    std::vector<double> lo_clip, lr_clip;
    frozen_loss_values(f, data, lo_clip, lr_clip);
    std::vector<std::vector<float>> inputs(data.clips.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        inputs[i].resize(data.clip_len);
        for (std::size_t k = 0; k < data.clip_len; ++k)
            inputs[i][k] = f.v_d[i][k] + f.v_nd[i][k];
    }
    return classifier_training(pl, data, cfg, inputs, lo_clip, lr_clip, 2, save_path);
}

TrainReport train_phase3(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const EncryptionRun& enc, const std::string& save_path) {
    pl.sdae.set_trainable(false);
    auto f = compute_features(pl, data);
    std::vector<double> lo_clip, lr_clip;
    frozen_loss_values(f, data, lo_clip, lr_clip);
    std::vector<std::vector<float>> inputs(data.clips.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto enc_nd = apply_cipher(enc, f.v_nd[i], data.ids[i]);
        inputs[i].resize(data.clip_len);
        for (std::size_t k = 0; k < data.clip_len; ++k) inputs[i][k] = f.v_d[i][k] + enc_nd[k];
    }
    return classifier_training(pl, data, cfg, inputs, lo_clip, lr_clip, 3, save_path);
}

TrainReport train_direct(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const EncryptionRun& enc, const std::string& save_path) {
    std::vector<std::vector<float>> inputs(data.clips.size());
    for (std::size_t i = 0; i < inputs.size(); ++i)
        inputs[i] = apply_cipher(enc, data.clips[i], data.ids[i]);
    return classifier_training(pl, data, cfg, inputs, {}, {}, 0, save_path);
}

}  // namespace taac::train
