#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "taac/classifier.hpp"
#include "taac/sdae.hpp"
#include "taac/synthdata.hpp"
#include "taac/trainer.hpp"

namespace taac::config {

// Everything a run needs, resolved from (in increasing precedence)
// built-in defaults, the config file, TAAC_SEED, and command-line flags.
// The defaults match the published presets: batch 32, epochs 10, lr 1e-4,
// weight decay 0.01, loss weights 10, decision threshold 0.4.
struct RunConfig {
    train::PhaseConfig phase;
    train::DpConfig dp;
    sdae::SdaeConfig sdae;
    cls::VpmConfig vpm;
    synth::CorpusConfig corpus;

    // [encryption]
    std::string key_path;
    std::string cipher = "taac";  // taac | chaos | none
    std::size_t strength = 1;
    double chaos_r = 3.99;
    std::uint64_t chaos_seed_base = 1;

    // [paths]
    std::string data_dir;
    std::string out_dir;
    std::string init_checkpoint;

    // [eval]
    std::size_t n_splits = 3;
    std::size_t pairs_pos = 189;
    std::size_t pairs_neg = 189;
};

// Flat section.key -> value view of a config file. Lines are `key = value`
// under [section] headers; blank lines and # comments are skipped; a
// malformed line raises ParseError with its 1-based line number; a
// duplicate key warns on stderr and keeps the later value.
std::map<std::string, std::string> parse_kv_file(const std::string& path);

RunConfig defaults();

// defaults + file. Unknown sections or keys are parse errors.
RunConfig load_config(const std::string& path);

// Apply each entry onto cfg; shared with the flag-override path.
void apply_values(RunConfig& cfg, const std::map<std::string, std::string>& values);

// TAAC_SEED, when set, overrides both the run seed and the corpus seed.
void apply_env_seed(RunConfig& cfg);

// Full resolved dump in the same file format load_config reads.
std::string resolved_text(const RunConfig& cfg);

// Write resolved config, seed, and tool version into out_dir/run_config.txt.
void write_run_stamp(const std::string& out_dir, const RunConfig& cfg);

// Build the cipher description a command should run with (loads the key
// file when the cipher needs one).
train::EncryptionRun encryption_from(const RunConfig& cfg);

}  // namespace taac::config
