#include "taac/config.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "taac/errors.hpp"
#include "taac/io.hpp"
#include "taac/version.hpp"

namespace taac::config {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError(key + ": expected a number, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long u = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(u);
    } catch (const std::exception&) {
        throw ParseError(key + ": expected a non-negative integer, got '" + v + "'");
    }
}

std::size_t to_size(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(to_u64(key, v));
}

int to_int(const std::string& key, const std::string& v) {
    return static_cast<int>(to_u64(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ParseError(key + ": expected a boolean, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::map<std::string, std::string> out;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ParseError("malformed section header '" + t + "'", line_no);
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) throw ParseError("empty section name", line_no);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected 'key = value', got '" + t + "'", line_no);
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        if (section.empty()) throw ParseError("key '" + key + "' outside any section", line_no);
        const std::string full = section + "." + key;
        if (out.count(full))
            std::cerr << "warning: duplicate key '" << full << "' at line " << line_no
                      << ", later value wins\n";
        out[full] = val;
    }
    return out;
}

RunConfig defaults() { return RunConfig{}; }

void apply_values(RunConfig& cfg, const std::map<std::string, std::string>& values) {
    for (const auto& [key, v] : values) {
        if (key == "phase.phase") cfg.phase.phase = to_int(key, v);
        else if (key == "phase.epochs") cfg.phase.epochs = to_size(key, v);
        else if (key == "phase.batch") cfg.phase.batch_size = to_size(key, v);
        else if (key == "phase.lambda_ortho") cfg.phase.lambda_ortho = to_double(key, v);
        else if (key == "phase.lambda_recon") cfg.phase.lambda_recon = to_double(key, v);
        else if (key == "phase.lambda_cls") cfg.phase.lambda_cls = to_double(key, v);
        else if (key == "phase.label_smoothing") cfg.phase.label_smoothing = to_double(key, v);
        else if (key == "phase.seed") cfg.phase.seed = to_u64(key, v);
        else if (key == "phase.all_pairs_ortho") cfg.phase.all_pairs_ortho = to_bool(key, v);
        else if (key == "optimizer.lr") cfg.phase.lr = to_double(key, v);
        else if (key == "optimizer.weight_decay") cfg.phase.weight_decay = to_double(key, v);
        else if (key == "dp.enabled") cfg.dp.enabled = to_bool(key, v);
        else if (key == "dp.clip_norm") cfg.dp.clip_norm = to_double(key, v);
        else if (key == "dp.noise_mult") cfg.dp.noise_mult = to_double(key, v);
        else if (key == "dp.eps_target") cfg.dp.eps_target = to_double(key, v);
        else if (key == "dp.delta_target") cfg.dp.delta_target = to_double(key, v);
        else if (key == "encryption.key") cfg.key_path = v;
        else if (key == "encryption.strength") cfg.strength = to_size(key, v);
        else if (key == "encryption.cipher") {
            if (v != "taac" && v != "chaos" && v != "none")
                throw ParseError(key + ": expected taac|chaos|none, got '" + v + "'");
            cfg.cipher = v;
        } else if (key == "encryption.chaos_r") cfg.chaos_r = to_double(key, v);
        else if (key == "encryption.chaos_seed") cfg.chaos_seed_base = to_u64(key, v);
        else if (key == "model.input_len") {
            cfg.sdae.input_len = to_size(key, v);
            cfg.vpm.input_len = cfg.sdae.input_len;
            cfg.corpus.clip_len = cfg.sdae.input_len;
        } else if (key == "model.h1") cfg.sdae.h1 = to_size(key, v);
        else if (key == "model.h2") cfg.sdae.h2 = to_size(key, v);
        else if (key == "model.latent") cfg.sdae.latent = to_size(key, v);
        else if (key == "model.resblocks") cfg.sdae.resblocks = to_size(key, v);
        else if (key == "model.sdae_dropout") cfg.sdae.dropout = to_double(key, v);
        else if (key == "model.c1") cfg.vpm.c1 = to_size(key, v);
        else if (key == "model.c2") cfg.vpm.c2 = to_size(key, v);
        else if (key == "model.kernel") cfg.vpm.kernel = to_size(key, v);
        else if (key == "model.pool") cfg.vpm.pool = to_size(key, v);
        else if (key == "model.vpm_dropout") cfg.vpm.dropout = to_double(key, v);
        else if (key == "model.threshold") cfg.vpm.threshold = to_double(key, v);
        else if (key == "data.dir") cfg.data_dir = v;
        else if (key == "data.speakers") cfg.corpus.n_speakers = to_size(key, v);
        else if (key == "data.clips_per_speaker") cfg.corpus.clips_per_speaker = to_size(key, v);
        else if (key == "data.depression_rate") cfg.corpus.depression_rate = to_double(key, v);
        else if (key == "data.sample_rate") cfg.corpus.sample_rate = to_double(key, v);
        else if (key == "data.corpus_seed") cfg.corpus.corpus_seed = to_u64(key, v);
        else if (key == "paths.out") cfg.out_dir = v;
        else if (key == "paths.init") cfg.init_checkpoint = v;
        else if (key == "eval.splits") cfg.n_splits = to_size(key, v);
        else if (key == "eval.pairs_pos") cfg.pairs_pos = to_size(key, v);
        else if (key == "eval.pairs_neg") cfg.pairs_neg = to_size(key, v);
        else throw ParseError("unknown config key '" + key + "'");
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg = defaults();
    apply_values(cfg, parse_kv_file(path));
    return cfg;
}

void apply_env_seed(RunConfig& cfg) {
    const char* env = std::getenv("TAAC_SEED");
    if (env == nullptr || *env == '\0') return;
    const std::uint64_t seed = to_u64("TAAC_SEED", env);
    cfg.phase.seed = seed;
    cfg.corpus.corpus_seed = seed;
}

std::string resolved_text(const RunConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "# taac " << kVersion << " resolved configuration\n";
    os << "[phase]\n";
    os << "phase = " << cfg.phase.phase << "\n";
    os << "epochs = " << cfg.phase.epochs << "\n";
    os << "batch = " << cfg.phase.batch_size << "\n";
    os << "lambda_ortho = " << cfg.phase.lambda_ortho << "\n";
    os << "lambda_recon = " << cfg.phase.lambda_recon << "\n";
    os << "lambda_cls = " << cfg.phase.lambda_cls << "\n";
    os << "label_smoothing = " << cfg.phase.label_smoothing << "\n";
    os << "seed = " << cfg.phase.seed << "\n";
    os << "all_pairs_ortho = " << (cfg.phase.all_pairs_ortho ? 1 : 0) << "\n";
    os << "[optimizer]\n";
    os << "lr = " << cfg.phase.lr << "\n";
    os << "weight_decay = " << cfg.phase.weight_decay << "\n";
    os << "[dp]\n";
    os << "enabled = " << (cfg.dp.enabled ? 1 : 0) << "\n";
    if (std::isfinite(cfg.dp.clip_norm)) os << "clip_norm = " << cfg.dp.clip_norm << "\n";
    else os << "clip_norm = inf\n";
    os << "noise_mult = " << cfg.dp.noise_mult << "\n";
    os << "eps_target = " << cfg.dp.eps_target << "\n";
    os << "delta_target = " << cfg.dp.delta_target << "\n";
    os << "[encryption]\n";
    if (!cfg.key_path.empty()) os << "key = " << cfg.key_path << "\n";
    os << "strength = " << cfg.strength << "\n";
    os << "cipher = " << cfg.cipher << "\n";
    os << "chaos_r = " << cfg.chaos_r << "\n";
    os << "chaos_seed = " << cfg.chaos_seed_base << "\n";
    os << "[model]\n";
    os << "input_len = " << cfg.sdae.input_len << "\n";
    os << "h1 = " << cfg.sdae.h1 << "\n";
    os << "h2 = " << cfg.sdae.h2 << "\n";
    os << "latent = " << cfg.sdae.latent << "\n";
    os << "resblocks = " << cfg.sdae.resblocks << "\n";
    os << "sdae_dropout = " << cfg.sdae.dropout << "\n";
    os << "c1 = " << cfg.vpm.c1 << "\n";
    os << "c2 = " << cfg.vpm.c2 << "\n";
    os << "kernel = " << cfg.vpm.kernel << "\n";
    os << "pool = " << cfg.vpm.pool << "\n";
    os << "vpm_dropout = " << cfg.vpm.dropout << "\n";
    os << "threshold = " << cfg.vpm.threshold << "\n";
    os << "[data]\n";
    if (!cfg.data_dir.empty()) os << "dir = " << cfg.data_dir << "\n";
    os << "speakers = " << cfg.corpus.n_speakers << "\n";
    os << "clips_per_speaker = " << cfg.corpus.clips_per_speaker << "\n";
    os << "depression_rate = " << cfg.corpus.depression_rate << "\n";
    os << "sample_rate = " << cfg.corpus.sample_rate << "\n";
    os << "corpus_seed = " << cfg.corpus.corpus_seed << "\n";
    os << "[paths]\n";
    if (!cfg.out_dir.empty()) os << "out = " << cfg.out_dir << "\n";
    if (!cfg.init_checkpoint.empty()) os << "init = " << cfg.init_checkpoint << "\n";
    os << "[eval]\n";
    os << "splits = " << cfg.n_splits << "\n";
    os << "pairs_pos = " << cfg.pairs_pos << "\n";
    os << "pairs_neg = " << cfg.pairs_neg << "\n";
    return os.str();
}

void write_run_stamp(const std::string& out_dir, const RunConfig& cfg) {
    std::filesystem::create_directories(out_dir);
    io::write_text(out_dir + "/run_config.txt", resolved_text(cfg));
}

train::EncryptionRun encryption_from(const RunConfig& cfg) {
    train::EncryptionRun enc;
    enc.strength = cfg.strength;
    enc.chaos_r = cfg.chaos_r;
    enc.chaos_seed_base = cfg.chaos_seed_base;
    if (cfg.cipher == "none") {
        enc.cipher = train::Cipher::None;
    } else if (cfg.cipher == "chaos") {
        enc.cipher = train::Cipher::Chaos;
    } else if (cfg.cipher == "taac") {
        enc.cipher = train::Cipher::Taac;
        if (cfg.key_path.empty())
            throw ConfigError("the taac cipher needs a key file (encryption.key or --key)");
        enc.key = crypt::load_key(cfg.key_path);
    } else {
        throw ConfigError("unknown cipher '" + cfg.cipher + "'");
    }
    return enc;
}

}  // namespace taac::config
