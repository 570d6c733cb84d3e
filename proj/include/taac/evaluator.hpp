#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "taac/trainer.hpp"

namespace taac::eval {

// ---------------------------------------------------------------- metrics

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::uint64_t total() const { return tp + fp + fn + tn; }
};

// Metrics with an undefined denominator come back empty, never as a silent 0.
struct Metrics {
    std::optional<double> accuracy, precision, recall, f1;
};

Metrics classification_metrics(const ConfusionCounts& cc);

// FAR = FP/(FP+TN), FRR = FN/(FN+TP); positives are same-speaker pairs.
std::pair<std::optional<double>, std::optional<double>> far_frr(const ConfusionCounts& cc);

ConfusionCounts count_confusion(const std::vector<int>& labels, const std::vector<int>& preds);

// Threshold sweep over sorted unique scores plus midpoints. FAR(t) is
// nonincreasing and FRR(t) nondecreasing in t (accept means score > t);
// the crossing is linearly interpolated between bracketing candidates.
struct EerResult {
    double eer = 0;
    double threshold = 0;  // where FAR and FRR cross; also the calibration point
};

EerResult eer_sweep(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

// Fractions of negatives accepted / positives rejected at a fixed threshold.
double far_at(const std::vector<double>& neg_scores, double threshold);
double frr_at(const std::vector<double>& pos_scores, double threshold);

struct ReconStats {
    double mse = 0, mae = 0;
    double psnr_db = 0;  // +infinity when mse == 0
    double peak = 1.0;
};

ReconStats recon_stats(const std::vector<float>& a, const std::vector<float>& b, double peak = 1.0);

// ------------------------------------------------------------------- FFT

// In-place radix-2 FFT; length must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a);

// Quadratic-time reference used to validate the FFT.
std::vector<std::complex<double>> dft_naive(const std::vector<std::complex<double>>& a);

// ------------------------------------------------------------- linkage

// Log-spectral-envelope embedding: the whole clip is Hann-windowed as one
// frame, zero-padded to a power of two (at least 2048), and the power
// spectrum above DC is averaged into 64 equal bands; the log-band vector is
// mean-centered so overall level does not carry identity.
std::vector<double> spectral_embedding(const std::vector<float>& clip);

double cosine_score(const std::vector<double>& a, const std::vector<double>& b);

// Deterministic pair sampling: n_pos same-speaker pairs and n_neg
// cross-speaker pairs drawn from the seed. The balanced 189/189 default and
// the 189/611 ratio are both expressible.
struct PairPlan {
    std::size_t n_pos = 189;
    std::size_t n_neg = 189;
    std::uint64_t seed = 7;
};

struct PairScore {
    std::size_t clip_a = 0, clip_b = 0;
    bool same_speaker = false;
    double score = 0;
};

using Embedder = std::function<std::vector<double>(const std::vector<float>&)>;

std::vector<PairScore> pair_scores(const std::vector<std::vector<float>>& clips,
                                   const std::vector<int>& speakers, const PairPlan& plan,
                                   const Embedder& embed = spectral_embedding);

// Threshold where FAR and FRR cross (used on an unencrypted calibration
// split before attacking encrypted clips).
double calibrate_threshold(const std::vector<double>& pos_scores,
                           const std::vector<double>& neg_scores);

struct LinkageReport {
    double threshold = 0;
    double accuracy = 0, far = 0, frr = 0, eer = 0;
    std::size_t n_pos = 0, n_neg = 0;
    std::vector<PairScore> scores;
};

// Same-speaker decision at `threshold` (accept when score > threshold) over
// the sampled pairs; EER comes from the score lists themselves.
LinkageReport linkage_attack(const std::vector<std::vector<float>>& clips,
                             const std::vector<int>& speakers, const PairPlan& plan,
                             double threshold, const Embedder& embed = spectral_embedding);

// --------------------------------------------------- pipeline evaluation

struct DetectionReport {
    ConfusionCounts cc;
    Metrics metrics;
    std::vector<double> scores;  // depressed-class probability per clip
    std::vector<int> labels, predictions;
};

// through_sdae: classify fuse(v_d, cipher(v_nd)) with the frozen
// autoencoder; otherwise classify cipher(x) directly (baselines).
DetectionReport detection_eval(train::Pipeline& pl, const train::DataSet& data,
                               const train::EncryptionRun& enc, bool through_sdae,
                               double threshold);

// Mean over clips of ||v_d + v_nd - x|| / ||x|| under the frozen autoencoder.
double recon_relative_error(train::Pipeline& pl, const train::DataSet& data);

// ----------------------------------------------------------------- output

void write_decisions_csv(const std::string& path, const std::vector<std::uint64_t>& clip_ids,
                         const std::vector<double>& scores, const std::vector<int>& predictions);

// One confusion row per threshold in {0.3, 0.4, 0.5, 0.6}.
void write_confusion_csv(const std::string& path, const std::vector<int>& labels,
                         const std::vector<double>& scores);

void write_pair_scores_csv(const std::string& path, const std::vector<PairScore>& scores);

}  // namespace taac::eval
