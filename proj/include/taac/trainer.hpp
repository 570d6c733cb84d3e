#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "taac/classifier.hpp"
#include "taac/encryptor.hpp"
#include "taac/rng.hpp"
#include "taac/sdae.hpp"
#include "taac/synthdata.hpp"

namespace taac::train {

struct PhaseConfig {
    int phase = 1;
    double lambda_ortho = 10.0;
    double lambda_recon = 10.0;
    double lambda_cls = 1.0;
    double lr = 1e-4;
    double weight_decay = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    double label_smoothing = 0.1;
    std::uint64_t seed = 7;
    bool all_pairs_ortho = false;
};

struct DpConfig {
    bool enabled = false;
    double clip_norm = std::numeric_limits<double>::infinity();  // C
    double noise_mult = 0.0;                                     // sigma
    // configured privacy intent, recorded in reports; no accountant computes them
    double eps_target = 0.0;
    double delta_target = 0.0;
};

enum class Cipher { None, Taac, Chaos };

struct EncryptionRun {
    Cipher cipher = Cipher::None;
    crypt::Key key;                     // Taac
    std::size_t strength = 1;           // T
    double chaos_r = 3.99;
    std::uint64_t chaos_seed_base = 1;  // per-clip logistic seeds derive from this
};

struct TrainReport {
    // one entry per training batch (length = epochs x batches per epoch)
    std::vector<double> ortho_trace, recon_trace, cls_trace, total_trace;
    std::vector<double> epoch_wall_ms;
    std::size_t steps = 0;
    std::uint64_t dp_clip_checks = 0;  // per-example norm assertions performed
    std::string checkpoint_path;
};

// Training views of the corpus: clips resident in memory, labels, and stable
// per-clip ids (manifest indices) that key the dropout masks.
struct DataSet {
    std::vector<std::vector<float>> clips;
    std::vector<int> labels;
    std::vector<std::uint64_t> ids;
    std::size_t clip_len = 0;
};

DataSet load_dataset(const synth::CorpusManifest& m, const std::vector<int>& speakers);

// The two networks trained and shipped together. Checkpoints hold the
// autoencoder parameters plus the classifier parameters and running
// statistics; the sidecar JSON records config, seed, and phase.
struct Pipeline {
    sdae::SdaeConfig sdae_cfg;
    cls::VpmConfig vpm_cfg;
    sdae::Sdae<float> sdae;
    cls::Vpm<float> vpm;

    Pipeline(const sdae::SdaeConfig& s, const cls::VpmConfig& v);

    void init(std::uint64_t seed);
    void save(const std::string& path, int phase, std::uint64_t seed) const;
    void load(const std::string& path);
};

// Phase I: the autoencoder trains on lambda_o * L_ortho + lambda_r * L_recon
// (per-example micro-batches), and when lambda_cls > 0 the classification
// loss on the Partial-gated component backpropagates through classifier and
// autoencoder alike. DP-SGD applies to the per-example path; it requires
// lambda_cls = 0 because batch normalization couples examples in the
// classification path.
TrainReport train_phase1(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const DpConfig& dp, const std::string& save_path);

// Phase II: autoencoder frozen, classifier trains on fuse(v_d, v_nd).
TrainReport train_phase2(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const std::string& save_path);

// Phase III: like phase II with v_nd passed through the cipher before
// fusion. strength 1 reproduces phase II bit-exactly.
TrainReport train_phase3(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const EncryptionRun& enc, const std::string& save_path);

// Baseline: classifier trains directly on (optionally encrypted) clips,
// bypassing the autoencoder. Used for the chaos-masking comparison.
TrainReport train_direct(Pipeline& pl, const DataSet& data, const PhaseConfig& cfg,
                         const EncryptionRun& enc, const std::string& save_path);

// Apply the run's cipher to one clip (identity for Cipher::None).
std::vector<float> apply_cipher(const EncryptionRun& enc, const std::vector<float>& x,
                                std::uint64_t clip_id);

// g <- g * min(1, C / ||g||_2); returns the pre-clip norm (computed in double).
double dp_clip(std::vector<float>& g, double clip_norm);

// (sum of clipped per-example gradients + N(0, sigma^2 C^2 I)) / batch.
// sigma = 0 adds nothing and performs no draws.
void dp_aggregate(std::vector<float>& grad_sum, double clip_norm, double sigma, std::size_t batch,
                  Rng& noise_rng);

}  // namespace taac::train
