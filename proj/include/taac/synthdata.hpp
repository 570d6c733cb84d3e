#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace taac::synth {

// Planted-signal corpus. Identity lives in (f0, harmonic gains, tilt); the
// condition plants a 0.5 Hz amplitude modulation of depth 0.3 plus an extra
// -6 dB/octave spectral tilt. Label 1 = depressed.
struct SpeakerProfile {
    int speaker_id = 0;
    double f0 = 0;                              // Hz, grid keeps pairwise gaps >= 2 Hz
    std::array<double, 4> harmonic_gains{};     // relative amplitudes in [0.2, 1.0]
    double base_tilt_db = 0;                    // dB/octave, in [-12, -3]
};

struct CorpusConfig {
    std::uint64_t corpus_seed = 7;
    std::size_t n_speakers = 40;
    std::size_t clips_per_speaker = 30;
    double depression_rate = 0.4;   // depressed speakers = floor(rate * n)
    double sample_rate = 8000.0;
    std::size_t clip_len = 2000;
};

struct ClipRecord {
    std::string file;
    int speaker_id = 0;
    int label = 0;
    int clip_index = 0;
};

struct CorpusManifest {
    CorpusConfig config;
    std::vector<ClipRecord> clips;
    std::string dir;
};

inline constexpr double kConditionModHz = 0.5;
inline constexpr double kConditionModDepth = 0.3;
inline constexpr double kConditionTiltDb = -6.0;
inline constexpr double kNoiseAmp = 0.02;   // generation noise, capped well under 0.05

SpeakerProfile make_speaker(std::uint64_t corpus_seed, int speaker_id);

// Harmonic stack -> condition modulation -> noise -> peak normalization ->
// per-clip level in [0.7, 1]. Deterministic in every argument.
std::vector<float> synth_clip(const SpeakerProfile& p, int label, std::uint64_t clip_seed,
                              std::size_t L, double sample_rate);

// Seeded choice of floor(rate * n) depressed speakers.
std::vector<int> depressed_speakers(std::uint64_t corpus_seed, std::size_t n_speakers, double rate);

CorpusManifest gen_corpus(const CorpusConfig& cfg, const std::string& out_dir);

void save_manifest(const CorpusManifest& m, const std::string& path);
CorpusManifest load_manifest(const std::string& path);

std::vector<float> load_clip(const CorpusManifest& m, std::size_t idx);

struct Split {
    std::vector<int> train_speakers;
    std::vector<int> test_speakers;
};

// Speaker-disjoint splits, 20% of speakers on the test side, stratified by
// label so both classes appear in test whenever the corpus has both.
std::vector<Split> split_corpus(const CorpusManifest& m, std::size_t n_splits,
                                std::uint64_t split_seed);

// Canonical split seed for a corpus, derived from the corpus seed so every
// tool that partitions the same corpus agrees on the partitions.
std::uint64_t default_split_seed(const CorpusManifest& m);

// Sorted unique speaker ids present in the manifest.
std::vector<int> all_speakers(const CorpusManifest& m);

}  // namespace taac::synth
