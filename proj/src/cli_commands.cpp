#include "taac/cli_commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "taac/config.hpp"
#include "taac/errors.hpp"
#include "taac/evaluator.hpp"
#include "taac/gradcheck.hpp"
#include "taac/io.hpp"
#include "taac/signal_prep.hpp"
#include "taac/version.hpp"

namespace taac::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Option values arrive as strings and flow through the same
// section.key assignment path as config-file entries, so flags override
// file values with identical validation.
struct Common {
    std::string config_path;
    std::map<std::string, std::string> over;
    std::string data_dir, out_dir, init_ckpt, key_path, in_path, ann_path, ckpt_path;
    int split = -1;
    bool raw = false, direct = false;
    std::uint64_t keygen_seed = 0;
    bool keygen_given = false;
};

void add_override(CLI::App* sub, Common& c, const std::string& flag, const char* key,
                  const std::string& desc) {
    sub->add_option_function<std::string>(
        flag, [&c, key](const std::string& v) { c.over[key] = v; }, desc);
}

config::RunConfig resolve(const Common& c) {
    config::RunConfig cfg =
        c.config_path.empty() ? config::defaults() : config::load_config(c.config_path);
    config::apply_env_seed(cfg);
    config::apply_values(cfg, c.over);  // flags win over file and environment
    if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
    if (!c.out_dir.empty()) cfg.out_dir = c.out_dir;
    if (!c.init_ckpt.empty()) cfg.init_checkpoint = c.init_ckpt;
    if (!c.key_path.empty()) cfg.key_path = c.key_path;
    return cfg;
}

std::string require_out(const config::RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("an output directory is required (--out)");
    fs::create_directories(cfg.out_dir);
    return cfg.out_dir;
}

// A checkpoint's weight shapes are ground truth for the architecture, so
// adopt the dimensions recorded in its sidecar; runtime knobs such as the
// decision threshold stay with the config/flag system.
void adopt_checkpoint_dims(config::RunConfig& cfg, const std::string& ckpt_path) {
    const std::string sidecar = ckpt_path + ".json";
    if (!fs::exists(sidecar)) return;  // shapes must then match the config
    const json j = json::parse(io::read_text(sidecar));
    const auto& s = j.at("sdae");
    cfg.sdae.input_len = s.at("input_len").get<std::size_t>();
    cfg.sdae.h1 = s.at("h1").get<std::size_t>();
    cfg.sdae.h2 = s.at("h2").get<std::size_t>();
    cfg.sdae.latent = s.at("latent").get<std::size_t>();
    cfg.sdae.resblocks = s.at("resblocks").get<std::size_t>();
    cfg.sdae.dropout = s.at("dropout").get<double>();
    const auto& v = j.at("vpm");
    cfg.vpm.input_len = v.at("input_len").get<std::size_t>();
    cfg.vpm.c1 = v.at("c1").get<std::size_t>();
    cfg.vpm.c2 = v.at("c2").get<std::size_t>();
    cfg.vpm.kernel = v.at("kernel").get<std::size_t>();
    cfg.vpm.pool = v.at("pool").get<std::size_t>();
    cfg.vpm.dropout = v.at("dropout").get<double>();
}

synth::CorpusManifest manifest_of(const config::RunConfig& cfg) {
    if (cfg.data_dir.empty()) throw ConfigError("a corpus directory is required (--data)");
    return synth::load_manifest((fs::path(cfg.data_dir) / "manifest.json").string());
}

std::vector<int> pick_speakers(const synth::CorpusManifest& m, const config::RunConfig& cfg,
                               int split, bool test_side) {
    if (split < 0) return synth::all_speakers(m);
    const auto splits = synth::split_corpus(m, cfg.n_splits, synth::default_split_seed(m));
    if (static_cast<std::size_t>(split) >= splits.size())
        throw ConfigError("--split " + std::to_string(split) + " out of range, have " +
                          std::to_string(splits.size()));
    return test_side ? splits[split].test_speakers : splits[split].train_speakers;
}

// Key resolution for commands that can run the cipher without an explicit
// key file: derive one from the run seed so the run stays reproducible.
crypt::Key resolve_key(const config::RunConfig& cfg, const Common& c, const std::string& save_to) {
    if (c.keygen_given) {
        const auto key = crypt::keygen(c.keygen_seed);
        if (!cfg.key_path.empty()) crypt::save_key(cfg.key_path, key);
        return key;
    }
    if (!cfg.key_path.empty()) return crypt::load_key(cfg.key_path);
    const auto key = crypt::keygen(cfg.phase.seed);
    if (!save_to.empty()) crypt::save_key(save_to, key);
    return key;
}

train::EncryptionRun build_cipher(const config::RunConfig& cfg, const Common& c,
                                  const std::string& key_save_path) {
    train::EncryptionRun enc;
    enc.strength = cfg.strength;
    enc.chaos_r = cfg.chaos_r;
    enc.chaos_seed_base = cfg.chaos_seed_base;
    if (cfg.cipher == "none" || cfg.strength == 0) {
        enc.cipher = train::Cipher::None;
    } else if (cfg.cipher == "chaos") {
        enc.cipher = train::Cipher::Chaos;
    } else if (cfg.cipher == "taac") {
        enc.cipher = train::Cipher::Taac;
        enc.key = resolve_key(cfg, c, key_save_path);
    } else {
        throw ConfigError("unknown cipher '" + cfg.cipher + "'");
    }
    return enc;
}

json metrics_json(const eval::Metrics& m, const eval::ConfusionCounts& cc) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return json{{"accuracy", opt(m.accuracy)}, {"precision", opt(m.precision)},
                {"recall", opt(m.recall)},     {"f1", opt(m.f1)},
                {"tp", cc.tp},                 {"fp", cc.fp},
                {"fn", cc.fn},                 {"tn", cc.tn}};
}

json report_json(const train::TrainReport& rep, const config::RunConfig& cfg, int phase) {
    json dp{{"enabled", cfg.dp.enabled},
            {"clip_norm",
             std::isfinite(cfg.dp.clip_norm) ? json(cfg.dp.clip_norm) : json("inf")},
            {"noise_mult", cfg.dp.noise_mult},
            {"eps_target", cfg.dp.eps_target},
            {"delta_target", cfg.dp.delta_target},
            {"clip_checks", rep.dp_clip_checks}};
    return json{{"phase", phase},
                {"seed", cfg.phase.seed},
                {"tool_version", kVersion},
                {"steps", rep.steps},
                {"checkpoint", rep.checkpoint_path},
                {"traces",
                 {{"ortho", rep.ortho_trace},
                  {"recon", rep.recon_trace},
                  {"cls", rep.cls_trace},
                  {"total", rep.total_trace}}},
                {"epoch_wall_ms", rep.epoch_wall_ms},
                {"dp", dp}};
}

void cmd_gen_data(const Common& c) {
    config::RunConfig cfg = resolve(c);
    const std::string out = require_out(cfg);
    const auto m = synth::gen_corpus(cfg.corpus, out);
    cfg.data_dir = out;
    config::write_run_stamp(out, cfg);
    std::cout << "wrote " << m.clips.size() << " clips to " << out << "\n";
}

void cmd_preprocess(const Common& c, const std::string& tag, double target_s) {
    config::RunConfig cfg = resolve(c);
    const std::string out = require_out(cfg);
    if (c.in_path.empty()) throw ConfigError("an input recording is required (--in)");
    if (c.ann_path.empty()) throw ConfigError("an annotation file is required (--annotations)");

    const auto wav = io::read_wav(c.in_path);
    prep::RawRecording rec;
    rec.samples = prep::peak_normalize(wav.samples);
    rec.sample_rate = wav.sample_rate;
    rec.annotations = io::read_annotations_csv(c.ann_path);

    const auto segments = prep::extract_segments(rec, tag);
    const auto clips = prep::recombine(segments, target_s, rec.sample_rate);
    char name[64];
    std::size_t written = 0;
    for (const auto& clip : clips) {
        const auto fixed = prep::resample_to(clip, cfg.sdae.input_len);
        std::snprintf(name, sizeof(name), "clip_%04zu.f32", written++);
        io::write_f32((fs::path(out) / name).string(), fixed);
    }
    config::write_run_stamp(out, cfg);
    std::cout << "wrote " << written << " clips of length " << cfg.sdae.input_len << " to " << out
              << "\n";
}

void cmd_train(const Common& c) {
    config::RunConfig cfg = resolve(c);
    if (!cfg.init_checkpoint.empty()) adopt_checkpoint_dims(cfg, cfg.init_checkpoint);
    const std::string out = require_out(cfg);
    const auto m = manifest_of(cfg);
    const auto speakers = pick_speakers(m, cfg, c.split, /*test_side=*/false);
    const auto data = train::load_dataset(m, speakers);

    train::Pipeline pl(cfg.sdae, cfg.vpm);
    const std::string ckpt = (fs::path(out) / "checkpoint.bin").string();
    train::TrainReport rep;
    int phase = cfg.phase.phase;

    if (c.direct) {
        phase = 0;
        if (!cfg.init_checkpoint.empty()) pl.load(cfg.init_checkpoint);
        else pl.init(cfg.phase.seed);
        const auto enc = build_cipher(cfg, c, (fs::path(out) / "key.txt").string());
        rep = train::train_direct(pl, data, cfg.phase, enc, ckpt);
    } else if (phase == 1) {
        if (!cfg.init_checkpoint.empty()) pl.load(cfg.init_checkpoint);
        else pl.init(cfg.phase.seed);
        rep = train::train_phase1(pl, data, cfg.phase, cfg.dp, ckpt);
    } else if (phase == 2 || phase == 3) {
        if (cfg.init_checkpoint.empty())
            throw ConfigError("phase " + std::to_string(phase) +
                              " requires an earlier checkpoint (--init)");
        pl.load(cfg.init_checkpoint);
        if (phase == 2) {
            rep = train::train_phase2(pl, data, cfg.phase, ckpt);
        } else {
            const auto enc = build_cipher(cfg, c, (fs::path(out) / "key.txt").string());
            rep = train::train_phase3(pl, data, cfg.phase, enc, ckpt);
        }
    } else {
        throw ConfigError("phase must be 1, 2, or 3, got " + std::to_string(phase));
    }

    io::write_text((fs::path(out) / "report.json").string(),
                   report_json(rep, cfg, phase).dump(2) + "\n");
    config::write_run_stamp(out, cfg);
    std::cout << "phase " << phase << ": " << rep.steps << " steps over " << data.clips.size()
              << " clips, checkpoint " << ckpt << "\n";
}

void cmd_crypt(const Common& c, bool encrypting) {
    config::RunConfig cfg = resolve(c);
    if (c.in_path.empty()) throw ConfigError("an input file is required (--in)");
    if (cfg.out_dir.empty()) throw ConfigError("an output file is required (--out)");
    const auto x = io::read_f32(c.in_path);

    std::vector<float> y;
    json sidecar{{"tool_version", kVersion}, {"strength", cfg.strength}, {"cipher", cfg.cipher}};
    if (cfg.cipher == "chaos") {
        const double u = u64_to_unit(hash_combine(cfg.chaos_seed_base, 0));
        const double seed = 0.001 + 0.998 * u;
        y = encrypting ? crypt::chaos_encrypt(x, seed, cfg.chaos_r)
                       : crypt::chaos_decrypt(x, seed, cfg.chaos_r);
    } else if (cfg.cipher == "taac") {
        const auto key = resolve_key(cfg, c, "");
        y = encrypting ? crypt::encrypt_f32(x, key, cfg.strength)
                       : crypt::decrypt_f32(x, key, cfg.strength);
        sidecar["key_fingerprint"] = crypt::key_fingerprint(key);
    } else {
        throw ConfigError("cipher must be taac or chaos for this command");
    }
    io::write_f32(cfg.out_dir, y);
    io::write_text(cfg.out_dir + ".json", sidecar.dump(2) + "\n");
    std::cout << (encrypting ? "encrypted " : "decrypted ") << x.size() << " samples -> "
              << cfg.out_dir << "\n";
}

void cmd_classify(const Common& c) {
    config::RunConfig cfg = resolve(c);
    if (c.ckpt_path.empty()) throw ConfigError("a checkpoint is required (--ckpt)");
    adopt_checkpoint_dims(cfg, c.ckpt_path);
    train::Pipeline pl(cfg.sdae, cfg.vpm);
    pl.load(c.ckpt_path);
    const bool use_cipher = cfg.strength > 1 || cfg.cipher == "chaos";
    train::EncryptionRun enc;
    if (use_cipher) enc = build_cipher(cfg, c, "");

    if (!c.in_path.empty()) {
        const auto x = io::read_f32(c.in_path);
        if (x.size() != cfg.sdae.input_len)
            throw DimensionError("clip length " + std::to_string(x.size()) +
                                 " does not match model input length " +
                                 std::to_string(cfg.sdae.input_len));
        train::DataSet one;
        one.clips = {x};
        one.labels = {0};
        one.ids = {0};
        one.clip_len = x.size();
        const auto rep = eval::detection_eval(pl, one, enc, !c.raw, cfg.vpm.threshold);
        json j{{"score", rep.scores[0]},
               {"label", rep.predictions[0]},
               {"threshold", cfg.vpm.threshold}};
        std::cout << j.dump(2) << "\n";
        return;
    }

    const auto m = manifest_of(cfg);
    const std::string out = require_out(cfg);
    const auto speakers = pick_speakers(m, cfg, c.split, /*test_side=*/true);
    const auto data = train::load_dataset(m, speakers);
    const auto rep = eval::detection_eval(pl, data, enc, !c.raw, cfg.vpm.threshold);
    eval::write_decisions_csv((fs::path(out) / "decisions.csv").string(), data.ids, rep.scores,
                              rep.predictions);
    eval::write_confusion_csv((fs::path(out) / "confusion.csv").string(), rep.labels, rep.scores);
    json j = metrics_json(rep.metrics, rep.cc);
    j["threshold"] = cfg.vpm.threshold;
    j["tool_version"] = kVersion;
    io::write_text((fs::path(out) / "metrics.json").string(), j.dump(2) + "\n");
    config::write_run_stamp(out, cfg);
    std::cout << "classified " << data.clips.size() << " clips -> " << out << "\n";
}

void cmd_eval(const Common& c, const std::string& task) {
    config::RunConfig cfg = resolve(c);
    const std::string out = require_out(cfg);
    const auto m = manifest_of(cfg);

    if (task == "detection") {
        if (c.ckpt_path.empty()) throw ConfigError("detection evaluation needs --ckpt");
        adopt_checkpoint_dims(cfg, c.ckpt_path);
        train::Pipeline pl(cfg.sdae, cfg.vpm);
        pl.load(c.ckpt_path);
        const auto speakers = pick_speakers(m, cfg, c.split, /*test_side=*/true);
        const auto data = train::load_dataset(m, speakers);
        train::EncryptionRun enc;
        if (cfg.strength > 1 || cfg.cipher == "chaos") enc = build_cipher(cfg, c, "");
        const auto rep = eval::detection_eval(pl, data, enc, !c.raw, cfg.vpm.threshold);
        json j = metrics_json(rep.metrics, rep.cc);
        j["task"] = "detection";
        j["strength"] = cfg.strength;
        j["threshold"] = cfg.vpm.threshold;
        j["n_clips"] = data.clips.size();
        j["tool_version"] = kVersion;
        io::write_text((fs::path(out) / "detection.json").string(), j.dump(2) + "\n");
        eval::write_decisions_csv((fs::path(out) / "decisions.csv").string(), data.ids, rep.scores,
                                  rep.predictions);
        eval::write_confusion_csv((fs::path(out) / "confusion.csv").string(), rep.labels,
                                  rep.scores);
        config::write_run_stamp(out, cfg);
        std::cout << "detection accuracy "
                  << (rep.metrics.accuracy ? std::to_string(*rep.metrics.accuracy) : "n/a")
                  << " over " << data.clips.size() << " clips -> " << out << "\n";
        return;
    }

    if (task == "linkage") {
        const auto speakers = pick_speakers(m, cfg, c.split, /*test_side=*/true);
        const std::set<int> wanted(speakers.begin(), speakers.end());
        std::vector<std::vector<float>> clips;
        std::vector<int> ids;
        for (std::size_t i = 0; i < m.clips.size(); ++i) {
            if (!wanted.count(m.clips[i].speaker_id)) continue;
            clips.push_back(synth::load_clip(m, i));
            ids.push_back(m.clips[i].speaker_id);
        }

        // calibrate on the unencrypted clips with an independent pair draw,
        // then attack the encrypted versions
        eval::PairPlan cal_plan{cfg.pairs_pos, cfg.pairs_neg,
                                hash_combine(cfg.phase.seed, 0xca1ULL)};
        eval::PairPlan atk_plan{cfg.pairs_pos, cfg.pairs_neg, cfg.phase.seed};
        const auto cal = eval::pair_scores(clips, ids, cal_plan);
        std::vector<double> pos, neg;
        for (const auto& p : cal) (p.same_speaker ? pos : neg).push_back(p.score);
        const double threshold = eval::calibrate_threshold(pos, neg);

        json j{{"task", "linkage"},        {"strength", cfg.strength},
               {"threshold", threshold},   {"n_clips", clips.size()},
               {"tool_version", kVersion}, {"pairs_pos", cfg.pairs_pos},
               {"pairs_neg", cfg.pairs_neg}};
        if (cfg.strength > 0 && cfg.cipher != "none") {
            const auto enc = build_cipher(cfg, c, (fs::path(out) / "key.txt").string());
            if (enc.cipher == train::Cipher::Taac)
                j["key_fingerprint"] = crypt::key_fingerprint(enc.key);
            for (auto& clip : clips) clip = train::apply_cipher(enc, clip, 0);
        }
        const auto rep = eval::linkage_attack(clips, ids, atk_plan, threshold);
        j["acc"] = rep.accuracy;
        j["far"] = rep.far;
        j["frr"] = rep.frr;
        j["eer"] = rep.eer;
        io::write_text((fs::path(out) / "linkage.json").string(), j.dump(2) + "\n");
        eval::write_pair_scores_csv((fs::path(out) / "pair_scores.csv").string(), rep.scores);
        config::write_run_stamp(out, cfg);
        std::cout << "linkage acc " << rep.accuracy << " eer " << rep.eer << " at strength "
                  << cfg.strength << " -> " << out << "\n";
        return;
    }

    if (task == "recon") {
        json j{{"task", "recon"}, {"tool_version", kVersion}};
        const auto speakers = pick_speakers(m, cfg, c.split, /*test_side=*/true);
        const auto data = train::load_dataset(m, speakers);
        if (!c.ckpt_path.empty()) {
            adopt_checkpoint_dims(cfg, c.ckpt_path);
            train::Pipeline pl(cfg.sdae, cfg.vpm);
            pl.load(c.ckpt_path);
            j["relative_error"] = eval::recon_relative_error(pl, data);
        }
        if (cfg.strength > 0 && cfg.cipher == "taac") {
            const auto enc = build_cipher(cfg, c, "");
            double mse = 0, mae = 0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < data.clips.size(); ++i) {
                const auto y = train::apply_cipher(enc, data.clips[i], data.ids[i]);
                const auto st = eval::recon_stats(y, data.clips[i], 1.0);
                mse += st.mse;
                mae += st.mae;
                ++count;
            }
            mse /= static_cast<double>(count);
            mae /= static_cast<double>(count);
            const double psnr = mse == 0 ? std::numeric_limits<double>::infinity()
                                         : 10.0 * std::log10(1.0 / mse);
            j["encryption_distortion"] = {
                {"strength", cfg.strength},
                {"mse", mse},
                {"mae", mae},
                {"psnr_db", std::isfinite(psnr) ? json(psnr) : json("inf")}};
        }
        io::write_text((fs::path(out) / "recon.json").string(), j.dump(2) + "\n");
        config::write_run_stamp(out, cfg);
        std::cout << "reconstruction report -> " << out << "\n";
        return;
    }

    throw ConfigError("unknown eval task '" + task + "' (detection|linkage|recon)");
}

void cmd_gradcheck(std::uint64_t seed, std::size_t points) {
    const auto results = gradcheck::run_suite(seed, points);
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%-22s max rel err %.3e (threshold %.0e) %s\n", r.name.c_str(), r.max_rel_err,
                    r.threshold, r.pass ? "PASS" : "FAIL");
        ok = ok && r.pass;
    }
    if (!ok) throw NumericError("gradient check failed");
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"privacy-preserving audio depression screening (TAAC)"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Common gen, pre, trn, enc_c, dec_c, cls_c, evl, grd;
    std::string pre_tag = "speech", eval_task;
    double pre_target = 2.0;
    std::uint64_t gc_seed = 7;
    std::size_t gc_points = 10;

    auto wire_common = [](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config_path, "config file (key = value sections)");
        add_override(sub, c, "--seed", "phase.seed", "run seed");
        sub->add_option("--out", c.out_dir, "output directory or file");
    };

    // ---- gen-data ----
    auto* sg = app.add_subcommand("gen-data", "generate the synthetic planted-signal corpus");
    wire_common(sg, gen);
    add_override(sg, gen, "--speakers", "data.speakers", "number of speakers");
    add_override(sg, gen, "--clips", "data.clips_per_speaker", "clips per speaker");
    add_override(sg, gen, "--len", "model.input_len", "samples per clip");
    add_override(sg, gen, "--sample-rate", "data.sample_rate", "sample rate in Hz");
    add_override(sg, gen, "--rate", "data.depression_rate", "depressed speaker fraction");
    add_override(sg, gen, "--corpus-seed", "data.corpus_seed", "corpus generation seed");
    sg->callback([&] { cmd_gen_data(gen); });

    // ---- preprocess ----
    auto* sp = app.add_subcommand("preprocess",
                                  "normalize, segment, recombine, and resample a recording");
    wire_common(sp, pre);
    sp->add_option("--in", pre.in_path, "input WAV (PCM16 mono)");
    sp->add_option("--annotations", pre.ann_path, "CSV of t0,t1,tag rows");
    sp->add_option("--tag", pre_tag, "annotation tag to keep");
    sp->add_option("--target-seconds", pre_target, "clip duration before resampling");
    add_override(sp, pre, "--len", "model.input_len", "output samples per clip");
    sp->callback([&] { cmd_preprocess(pre, pre_tag, pre_target); });

    // ---- train ----
    auto* st = app.add_subcommand("train", "run one training phase");
    wire_common(st, trn);
    st->add_option("--data", trn.data_dir, "corpus directory (with manifest.json)");
    st->add_option("--init", trn.init_ckpt, "checkpoint to start from");
    st->add_option("--key", trn.key_path, "key file for the taac cipher");
    st->add_option("--split", trn.split, "train on this split's train side (default: all)");
    st->add_flag("--direct", trn.direct, "train the classifier directly on (encrypted) clips");
    st->add_option("--keygen-seed", trn.keygen_seed, "generate the key from this seed")
        ->each([&](const std::string&) { trn.keygen_given = true; });
    add_override(st, trn, "--phase", "phase.phase", "training phase 1|2|3");
    add_override(st, trn, "--len", "model.input_len", "model input length (phase 1)");
    add_override(st, trn, "--epochs", "phase.epochs", "epochs");
    add_override(st, trn, "--batch", "phase.batch", "batch size");
    add_override(st, trn, "--lr", "optimizer.lr", "learning rate");
    add_override(st, trn, "--weight-decay", "optimizer.weight_decay", "weight decay");
    add_override(st, trn, "--lambda-ortho", "phase.lambda_ortho", "orthogonality weight");
    add_override(st, trn, "--lambda-recon", "phase.lambda_recon", "reconstruction weight");
    add_override(st, trn, "--lambda-cls", "phase.lambda_cls", "classification weight");
    add_override(st, trn, "--label-smoothing", "phase.label_smoothing", "label smoothing");
    add_override(st, trn, "--strength", "encryption.strength", "encryption strength T");
    add_override(st, trn, "--cipher", "encryption.cipher", "taac|chaos|none");
    add_override(st, trn, "--dp", "dp.enabled", "enable DP-SGD (0|1)");
    add_override(st, trn, "--clip-norm", "dp.clip_norm", "per-example clip bound C (or inf)");
    add_override(st, trn, "--noise-mult", "dp.noise_mult", "DP noise multiplier sigma");
    add_override(st, trn, "--splits", "eval.splits", "number of splits");
    st->callback([&] { cmd_train(trn); });

    // ---- encrypt / decrypt ----
    for (auto [name, c, encrypting] :
         {std::tuple<const char*, Common*, bool>{"encrypt", &enc_c, true},
          std::tuple<const char*, Common*, bool>{"decrypt", &dec_c, false}}) {
        auto* sc = app.add_subcommand(name, encrypting ? "encrypt a clip file"
                                                       : "decrypt a clip file");
        wire_common(sc, *c);
        sc->add_option("--in", c->in_path, "input .f32 clip");
        sc->add_option("--key", c->key_path, "key file");
        Common* cp = c;
        sc->add_option("--keygen-seed", c->keygen_seed, "generate the key from this seed")
            ->each([cp](const std::string&) { cp->keygen_given = true; });
        add_override(sc, *c, "--strength", "encryption.strength", "encryption strength T");
        add_override(sc, *c, "--cipher", "encryption.cipher", "taac|chaos");
        add_override(sc, *c, "--chaos-seed", "encryption.chaos_seed", "chaos seed base");
        bool e = encrypting;
        sc->callback([cp, e] { cmd_crypt(*cp, e); });
    }

    // ---- classify ----
    auto* sc = app.add_subcommand("classify", "score clips with a trained pipeline");
    wire_common(sc, cls_c);
    sc->add_option("--ckpt", cls_c.ckpt_path, "pipeline checkpoint");
    sc->add_option("--in", cls_c.in_path, "single .f32 clip (prints JSON to stdout)");
    sc->add_option("--data", cls_c.data_dir, "corpus directory to score");
    sc->add_option("--key", cls_c.key_path, "key file for the taac cipher");
    sc->add_option("--split", cls_c.split, "score this split's test side (default: all)");
    sc->add_flag("--raw", cls_c.raw, "bypass the autoencoder and classify the input directly");
    add_override(sc, cls_c, "--strength", "encryption.strength", "encryption strength T");
    add_override(sc, cls_c, "--cipher", "encryption.cipher", "taac|chaos|none");
    add_override(sc, cls_c, "--threshold", "model.threshold", "decision threshold");
    add_override(sc, cls_c, "--splits", "eval.splits", "number of splits");
    sc->callback([&] { cmd_classify(cls_c); });

    // ---- eval ----
    auto* se = app.add_subcommand("eval", "evaluation harness");
    wire_common(se, evl);
    se->add_option("--task", eval_task, "detection|linkage|recon")->required();
    se->add_option("--data", evl.data_dir, "corpus directory");
    se->add_option("--ckpt", evl.ckpt_path, "pipeline checkpoint (detection/recon)");
    se->add_option("--key", evl.key_path, "key file for the taac cipher");
    se->add_option("--split", evl.split, "evaluate this split's test side (default: all)");
    se->add_flag("--raw", evl.raw, "bypass the autoencoder in detection");
    add_override(se, evl, "--strength", "encryption.strength", "encryption strength T (0 = none)");
    add_override(se, evl, "--cipher", "encryption.cipher", "taac|chaos|none");
    add_override(se, evl, "--threshold", "model.threshold", "decision threshold");
    add_override(se, evl, "--splits", "eval.splits", "number of splits");
    add_override(se, evl, "--pairs-pos", "eval.pairs_pos", "positive pairs");
    add_override(se, evl, "--pairs-neg", "eval.pairs_neg", "negative pairs");
    se->callback([&] { cmd_eval(evl, eval_task); });

    // ---- gradcheck ----
    auto* sd = app.add_subcommand("gradcheck", "finite-difference gradient battery");
    sd->add_option("--seed", gc_seed, "random seed");
    sd->add_option("--points", gc_points, "points per layer");
    sd->callback([&] { cmd_gradcheck(gc_seed, gc_points); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace taac::cli
