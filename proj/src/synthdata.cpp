#include "taac/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "taac/errors.hpp"
#include "taac/io.hpp"
#include "taac/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace taac::synth {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

char label_of(const std::vector<int>& depressed, int speaker_id) {
    return std::find(depressed.begin(), depressed.end(), speaker_id) != depressed.end() ? 1 : 0;
}
}  // namespace

SpeakerProfile make_speaker(std::uint64_t corpus_seed, int speaker_id) {
    if (speaker_id < 0) throw ConfigError("speaker_id must be >= 0");
    Rng rng(hash_combine(hash_combine(corpus_seed, 0x5eedULL),
                         static_cast<std::uint64_t>(speaker_id)));
    SpeakerProfile p;
    p.speaker_id = speaker_id;
    // 2.5 Hz grid with jitter in [0, 0.5) keeps every pairwise gap >= 2 Hz.
    p.f0 = 100.0 + 2.5 * speaker_id + rng.uniform(0.0, 0.5);
    for (auto& g : p.harmonic_gains) g = rng.uniform(0.2, 1.0);
    p.base_tilt_db = rng.uniform(-12.0, -3.0);
    return p;
}

std::vector<float> synth_clip(const SpeakerProfile& p, int label, std::uint64_t clip_seed,
                              std::size_t L, double sample_rate) {
    if (L < 64) throw ConfigError("clip length must be at least 64 samples");
    // 4 harmonics; highest partial must sit well below Nyquist
    if (sample_rate < 4.0 * (4.0 * p.f0)) {
        throw ConfigError("sample rate " + std::to_string(sample_rate) +
                          " too low for f0 " + std::to_string(p.f0));
    }
    Rng rng(hash_combine(clip_seed, 0xc11fULL));
    std::vector<double> x(L, 0.0);
    const double tilt = p.base_tilt_db + (label ? kConditionTiltDb : 0.0);
    for (int h = 1; h <= 4; ++h) {
        const double amp = p.harmonic_gains[h - 1] * std::pow(10.0, tilt * std::log2(double(h)) / 20.0);
        const double phase = rng.uniform(0.0, kTwoPi);
        const double w = kTwoPi * h * p.f0 / sample_rate;
        for (std::size_t i = 0; i < L; ++i) x[i] += amp * std::sin(w * double(i) + phase);
    }
    if (label) {
        const double wm = kTwoPi * kConditionModHz / sample_rate;
        for (std::size_t i = 0; i < L; ++i) x[i] *= 1.0 + kConditionModDepth * std::sin(wm * double(i));
    }
    for (std::size_t i = 0; i < L; ++i) x[i] += rng.uniform(-kNoiseAmp, kNoiseAmp);

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::fabs(v));
    // gains >= 0.2 make a zero peak impossible; guard anyway
    if (peak <= 0.0) throw NumericError("synthesized clip is identically zero");
    // per-clip playback level: recordings differ in loudness, embeddings must cope
    const double level = rng.uniform(0.7, 1.0);
    std::vector<float> out(L);
    for (std::size_t i = 0; i < L; ++i) out[i] = static_cast<float>(x[i] / peak * level);
    return out;
}

std::vector<int> depressed_speakers(std::uint64_t corpus_seed, std::size_t n_speakers, double rate) {
    if (rate < 0.0 || rate > 1.0) throw ConfigError("depression rate must lie in [0, 1]");
    std::vector<int> ids(n_speakers);
    for (std::size_t i = 0; i < n_speakers; ++i) ids[i] = static_cast<int>(i);
    Rng rng(hash_combine(corpus_seed, 0xdeb5ULL));
    rng.shuffle(ids);
    const auto k = static_cast<std::size_t>(std::floor(rate * double(n_speakers)));
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

CorpusManifest gen_corpus(const CorpusConfig& cfg, const std::string& out_dir) {
    if (cfg.n_speakers < 2) throw ConfigError("corpus needs at least 2 speakers");
    if (cfg.clips_per_speaker < 1) throw ConfigError("corpus needs at least 1 clip per speaker");
    fs::create_directories(out_dir);

    CorpusManifest m;
    m.config = cfg;
    m.dir = out_dir;
    const auto depressed = depressed_speakers(cfg.corpus_seed, cfg.n_speakers, cfg.depression_rate);

    char name[64];
    for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
        const auto profile = make_speaker(cfg.corpus_seed, static_cast<int>(s));
        const int label = label_of(depressed, static_cast<int>(s));
        for (std::size_t c = 0; c < cfg.clips_per_speaker; ++c) {
            const auto clip_seed = hash_combine(hash_combine(cfg.corpus_seed, s), 0x9000ULL + c);
            const auto clip = synth_clip(profile, label, clip_seed, cfg.clip_len, cfg.sample_rate);
            std::snprintf(name, sizeof(name), "clip_%04zu_%04zu.f32", s, c);
            io::write_f32((fs::path(out_dir) / name).string(), clip);
            m.clips.push_back({name, static_cast<int>(s), label, static_cast<int>(c)});
        }
    }
    save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
    return m;
}

void save_manifest(const CorpusManifest& m, const std::string& path) {
    json j;
    j["corpus_seed"] = m.config.corpus_seed;
    j["n_speakers"] = m.config.n_speakers;
    j["clips_per_speaker"] = m.config.clips_per_speaker;
    j["depression_rate"] = m.config.depression_rate;
    j["sample_rate"] = m.config.sample_rate;
    j["clip_len"] = m.config.clip_len;
    json rows = json::array();
    for (const auto& c : m.clips) {
        rows.push_back({{"file", c.file}, {"speaker_id", c.speaker_id}, {"label", c.label},
                        {"clip_index", c.clip_index}});
    }
    j["clips"] = rows;
    io::write_text(path, j.dump(2) + "\n");
}

CorpusManifest load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    CorpusManifest m;
    try {
        m.config.corpus_seed = j.at("corpus_seed").get<std::uint64_t>();
        m.config.n_speakers = j.at("n_speakers").get<std::size_t>();
        m.config.clips_per_speaker = j.at("clips_per_speaker").get<std::size_t>();
        m.config.depression_rate = j.at("depression_rate").get<double>();
        m.config.sample_rate = j.at("sample_rate").get<double>();
        m.config.clip_len = j.at("clip_len").get<std::size_t>();
        for (const auto& r : j.at("clips")) {
            m.clips.push_back({r.at("file").get<std::string>(), r.at("speaker_id").get<int>(),
                               r.at("label").get<int>(), r.at("clip_index").get<int>()});
        }
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    m.dir = fs::path(path).parent_path().string();
    return m;
}

std::vector<float> load_clip(const CorpusManifest& m, std::size_t idx) {
    const auto& rec = m.clips.at(idx);
    auto x = io::read_f32((fs::path(m.dir) / rec.file).string());
    if (x.size() != m.config.clip_len) {
        throw IoError(rec.file + ": expected " + std::to_string(m.config.clip_len) + " samples, got " +
                      std::to_string(x.size()));
    }
    return x;
}

std::vector<Split> split_corpus(const CorpusManifest& m, std::size_t n_splits,
                                std::uint64_t split_seed) {
    if (n_splits < 1) throw ConfigError("n_splits must be >= 1");
    const std::size_t n = m.config.n_speakers;
    if (n < 5) throw ConfigError("cannot form a 20% test split with fewer than 5 speakers");

    std::set<int> dep_set;
    for (const auto& c : m.clips)
        if (c.label) dep_set.insert(c.speaker_id);

    std::vector<int> dep(dep_set.begin(), dep_set.end()), ctl;
    for (std::size_t s = 0; s < n; ++s)
        if (!dep_set.count(static_cast<int>(s))) ctl.push_back(static_cast<int>(s));

    const std::size_t n_test = n / 5;
    std::vector<Split> splits;
    for (std::size_t k = 0; k < n_splits; ++k) {
        Rng rng(hash_combine(hash_combine(split_seed, 0x517ULL), k));
        auto d = dep, c = ctl;
        rng.shuffle(d);
        rng.shuffle(c);
        std::size_t k_dep = (n_test * d.size()) / n;
        if (!d.empty() && k_dep == 0) k_dep = 1;
        if (k_dep > d.size()) k_dep = d.size();
        std::size_t k_ctl = n_test - std::min(n_test, k_dep);
        if (k_ctl > c.size()) k_ctl = c.size();

        Split sp;
        sp.test_speakers.assign(d.begin(), d.begin() + k_dep);
        sp.test_speakers.insert(sp.test_speakers.end(), c.begin(), c.begin() + k_ctl);
        std::sort(sp.test_speakers.begin(), sp.test_speakers.end());
        for (std::size_t s = 0; s < n; ++s) {
            const int sid = static_cast<int>(s);
            if (!std::binary_search(sp.test_speakers.begin(), sp.test_speakers.end(), sid))
                sp.train_speakers.push_back(sid);
        }
        splits.push_back(std::move(sp));
    }
    return splits;
}

std::uint64_t default_split_seed(const CorpusManifest& m) {
    return hash_combine(m.config.corpus_seed, 0x5713ULL);
}

std::vector<int> all_speakers(const CorpusManifest& m) {
    std::set<int> ids;
    for (const auto& c : m.clips) ids.insert(c.speaker_id);
    return {ids.begin(), ids.end()};
}

}  // namespace taac::synth
