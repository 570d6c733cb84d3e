#include "taac/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "taac/classifier.hpp"
#include "taac/errors.hpp"
#include "taac/io.hpp"
#include "taac/rng.hpp"

namespace taac::eval {

namespace {

constexpr std::uint64_t kPairTag = 0x9a12;
constexpr double kPi = 3.14159265358979323846;

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics classification_metrics(const ConfusionCounts& cc) {
    if (cc.total() == 0) throw ConfigError("empty confusion table");
    Metrics m;
    m.accuracy = ratio(cc.tp + cc.tn, cc.total());
    m.precision = ratio(cc.tp, cc.tp + cc.fp);
    m.recall = ratio(cc.tp, cc.tp + cc.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    }
    return m;
}

std::pair<std::optional<double>, std::optional<double>> far_frr(const ConfusionCounts& cc) {
    return {ratio(cc.fp, cc.fp + cc.tn), ratio(cc.fn, cc.fn + cc.tp)};
}

ConfusionCounts count_confusion(const std::vector<int>& labels, const std::vector<int>& preds) {
    if (labels.size() != preds.size())
        throw DimensionError("labels and predictions must align: " +
                             std::to_string(labels.size()) + " vs " +
                             std::to_string(preds.size()));
    ConfusionCounts cc;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pos = labels[i] == 1;
        const bool hit = preds[i] == 1;
        if (pos && hit) ++cc.tp;
        else if (!pos && hit) ++cc.fp;
        else if (pos && !hit) ++cc.fn;
        else ++cc.tn;
    }
    return cc;
}

double far_at(const std::vector<double>& neg_scores, double threshold) {
    if (neg_scores.empty()) throw ConfigError("no negative scores");
    std::size_t acc = 0;
    for (double s : neg_scores)
        if (s > threshold) ++acc;
    return static_cast<double>(acc) / static_cast<double>(neg_scores.size());
}

double frr_at(const std::vector<double>& pos_scores, double threshold) {
    if (pos_scores.empty()) throw ConfigError("no positive scores");
    std::size_t rej = 0;
    for (double s : pos_scores)
        if (!(s > threshold)) ++rej;
    return static_cast<double>(rej) / static_cast<double>(pos_scores.size());
}

EerResult eer_sweep(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty())
        throw ConfigError("EER sweep needs both positive and negative scores");

    std::vector<double> cand;
    cand.reserve(pos_scores.size() + neg_scores.size() + 2);
    cand.insert(cand.end(), pos_scores.begin(), pos_scores.end());
    cand.insert(cand.end(), neg_scores.begin(), neg_scores.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    std::vector<double> taus;
    taus.reserve(2 * cand.size() + 1);
    taus.push_back(cand.front() - 1.0);  // everything accepted
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (i > 0) taus.push_back(0.5 * (cand[i - 1] + cand[i]));
        taus.push_back(cand[i]);
    }

    double prev_far = 1.0, prev_frr = 0.0, prev_tau = taus.front();
    for (double tau : taus) {
        const double far = far_at(neg_scores, tau);
        const double frr = frr_at(pos_scores, tau);
        const double d = far - frr;
        if (d <= 0.0) {
            if (d == 0.0) return {far, tau};
            const double dprev = prev_far - prev_frr;  // > 0 here
            const double t = dprev / (dprev - d);
            return {prev_far + t * (far - prev_far), prev_tau + t * (tau - prev_tau)};
        }
        prev_far = far;
        prev_frr = frr;
        prev_tau = tau;
    }
    // FAR stayed above FRR through the sweep (possible only if some negative
    // ties the global maximum); the crossing sits at the top threshold.
    return {prev_far, prev_tau};
}

ReconStats recon_stats(const std::vector<float>& a, const std::vector<float>& b, double peak) {
    if (a.size() != b.size())
        throw DimensionError("recon_stats: length " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    if (a.empty()) throw ConfigError("recon_stats: empty input");
    if (!(peak > 0)) throw ConfigError("recon_stats: peak must be positive");
    double se = 0, ae = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        se += d * d;
        ae += std::abs(d);
    }
    ReconStats r;
    r.peak = peak;
    r.mse = se / static_cast<double>(a.size());
    r.mae = ae / static_cast<double>(a.size());
    r.psnr_db = r.mse == 0 ? std::numeric_limits<double>::infinity()
                           : 10.0 * std::log10(peak * peak / r.mse);
    return r;
}

void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw DimensionError("FFT length " + std::to_string(n) + " is not a power of two");
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<std::complex<double>> dft_naive(const std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> s(0, 0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            s += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = s;
    }
    return out;
}

std::vector<double> spectral_embedding(const std::vector<float>& clip) {
    const std::size_t n = clip.size();
    if (n < 2) throw DimensionError("spectral embedding needs at least 2 samples");
    std::size_t fft_len = 2048;
    while (fft_len < n) fft_len <<= 1;

    std::vector<std::complex<double>> buf(fft_len, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        const double w =
            0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
        buf[i] = std::complex<double>(static_cast<double>(clip[i]) * w, 0.0);
    }
    fft_radix2(buf);

    constexpr std::size_t kBands = 64;
    const std::size_t half = fft_len / 2;       // bins 1..half, DC excluded
    const std::size_t band_w = half / kBands;   // exact: half is a power of two >= 1024
    std::vector<double> e(kBands);
    double mean = 0;
    for (std::size_t j = 0; j < kBands; ++j) {
        double p = 0;
        for (std::size_t k = 1 + j * band_w; k <= (j + 1) * band_w; ++k) p += std::norm(buf[k]);
        e[j] = std::log10(p / static_cast<double>(band_w) + 1e-10);
        mean += e[j];
    }
    mean /= static_cast<double>(kBands);
    for (auto& v : e) v -= mean;
    return e;
}

double cosine_score(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DimensionError("cosine: length " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<PairScore> pair_scores(const std::vector<std::vector<float>>& clips,
                                   const std::vector<int>& speakers, const PairPlan& plan,
                                   const Embedder& embed) {
    if (clips.size() != speakers.size())
        throw DimensionError("clips and speaker ids must align");
    if (plan.n_pos == 0 || plan.n_neg == 0) throw ConfigError("pair plan needs both pair kinds");

    std::map<int, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < clips.size(); ++i) by_speaker[speakers[i]].push_back(i);
    if (by_speaker.size() < 2)
        throw ConfigError("cannot form negative pairs: corpus has fewer than two speakers");
    std::vector<int> multi;  // speakers able to form positive pairs
    std::vector<int> all_speakers;
    for (const auto& [sp, idx] : by_speaker) {
        all_speakers.push_back(sp);
        if (idx.size() >= 2) multi.push_back(sp);
    }
    if (multi.empty())
        throw ConfigError("cannot form positive pairs: no speaker has two clips");

    std::vector<std::vector<double>> emb(clips.size());
    for (std::size_t i = 0; i < clips.size(); ++i) emb[i] = embed(clips[i]);

    Rng rng = sub_rng(plan.seed, kPairTag);
    std::vector<PairScore> out;
    out.reserve(plan.n_pos + plan.n_neg);
    for (std::size_t i = 0; i < plan.n_pos; ++i) {
        const int sp = multi[rng.randint(multi.size())];
        const auto& idx = by_speaker[sp];
        const std::size_t a = idx[rng.randint(idx.size())];
        std::size_t b = a;
        while (b == a) b = idx[rng.randint(idx.size())];
        out.push_back({a, b, true, cosine_score(emb[a], emb[b])});
    }
    for (std::size_t i = 0; i < plan.n_neg; ++i) {
        const int sa = all_speakers[rng.randint(all_speakers.size())];
        int sb = sa;
        while (sb == sa) sb = all_speakers[rng.randint(all_speakers.size())];
        const auto& ia = by_speaker[sa];
        const auto& ib = by_speaker[sb];
        const std::size_t a = ia[rng.randint(ia.size())];
        const std::size_t b = ib[rng.randint(ib.size())];
        out.push_back({a, b, false, cosine_score(emb[a], emb[b])});
    }
    return out;
}

double calibrate_threshold(const std::vector<double>& pos_scores,
                           const std::vector<double>& neg_scores) {
    return eer_sweep(pos_scores, neg_scores).threshold;
}

LinkageReport linkage_attack(const std::vector<std::vector<float>>& clips,
                             const std::vector<int>& speakers, const PairPlan& plan,
                             double threshold, const Embedder& embed) {
    LinkageReport rep;
    rep.threshold = threshold;
    rep.scores = pair_scores(clips, speakers, plan, embed);

    std::vector<double> pos, neg;
    ConfusionCounts cc;
    for (const auto& p : rep.scores) {
        const bool accept = p.score > threshold;
        if (p.same_speaker) {
            pos.push_back(p.score);
            accept ? ++cc.tp : ++cc.fn;
        } else {
            neg.push_back(p.score);
            accept ? ++cc.fp : ++cc.tn;
        }
    }
    rep.n_pos = pos.size();
    rep.n_neg = neg.size();
    rep.accuracy = static_cast<double>(cc.tp + cc.tn) / static_cast<double>(cc.total());
    const auto [far, frr] = far_frr(cc);
    rep.far = far.value();
    rep.frr = frr.value();
    rep.eer = eer_sweep(pos, neg).eer;
    return rep;
}

DetectionReport detection_eval(train::Pipeline& pl, const train::DataSet& data,
                               const train::EncryptionRun& enc, bool through_sdae,
                               double threshold) {
    if (data.clips.empty()) throw ConfigError("evaluation set is empty");
    const std::size_t n = data.clips.size();
    const std::size_t L = data.clip_len;

    DetectionReport rep;
    rep.labels = data.labels;
    rep.scores.resize(n);
    rep.predictions.resize(n);

    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t b = std::min(chunk, n - start);
        TensorF xb({b, L});
        if (through_sdae) {
            for (std::size_t e = 0; e < b; ++e)
                std::copy(data.clips[start + e].begin(), data.clips[start + e].end(),
                          xb.data.begin() + e * L);
            auto out = pl.sdae.forward(xb, nn::eval_ctx());
            for (std::size_t e = 0; e < b; ++e) {
                std::vector<float> vnd(out.pair.v_nd.data.begin() + e * L,
                                       out.pair.v_nd.data.begin() + (e + 1) * L);
                const auto enc_nd = train::apply_cipher(enc, vnd, data.ids[start + e]);
                for (std::size_t k = 0; k < L; ++k)
                    xb.data[e * L + k] = out.pair.v_d.data[e * L + k] + enc_nd[k];
            }
        } else {
            for (std::size_t e = 0; e < b; ++e) {
                const auto x = train::apply_cipher(enc, data.clips[start + e], data.ids[start + e]);
                std::copy(x.begin(), x.end(), xb.data.begin() + e * L);
            }
        }
        auto logits = pl.vpm.forward(xb, nn::eval_ctx());
        auto dec = cls::decide(logits, threshold);
        for (std::size_t e = 0; e < b; ++e) {
            rep.scores[start + e] = dec[e].score;
            rep.predictions[start + e] = dec[e].label;
        }
    }
    rep.cc = count_confusion(rep.labels, rep.predictions);
    rep.metrics = classification_metrics(rep.cc);
    return rep;
}

double recon_relative_error(train::Pipeline& pl, const train::DataSet& data) {
    if (data.clips.empty()) throw ConfigError("evaluation set is empty");
    const std::size_t n = data.clips.size();
    const std::size_t L = data.clip_len;
    double sum = 0;
    const std::size_t chunk = 64;
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t b = std::min(chunk, n - start);
        TensorF xb({b, L});
        for (std::size_t e = 0; e < b; ++e)
            std::copy(data.clips[start + e].begin(), data.clips[start + e].end(),
                      xb.data.begin() + e * L);
        auto out = pl.sdae.forward(xb, nn::eval_ctx());
        for (std::size_t e = 0; e < b; ++e) {
            double num = 0, den = 0;
            for (std::size_t k = 0; k < L; ++k) {
                const double x = xb.data[e * L + k];
                const double r = static_cast<double>(out.pair.v_d.data[e * L + k]) +
                                 static_cast<double>(out.pair.v_nd.data[e * L + k]) - x;
                num += r * r;
                den += x * x;
            }
            if (den == 0) throw NumericError("zero-energy clip in reconstruction evaluation");
            sum += std::sqrt(num) / std::sqrt(den);
        }
    }
    return sum / static_cast<double>(n);
}

void write_decisions_csv(const std::string& path, const std::vector<std::uint64_t>& clip_ids,
                         const std::vector<double>& scores, const std::vector<int>& predictions) {
    if (clip_ids.size() != scores.size() || clip_ids.size() != predictions.size())
        throw DimensionError("decision columns must align");
    std::ostringstream os;
    os << "clip_id,score,label\n";
    for (std::size_t i = 0; i < clip_ids.size(); ++i)
        os << clip_ids[i] << ',' << scores[i] << ',' << predictions[i] << '\n';
    io::write_text(path, os.str());
}

void write_confusion_csv(const std::string& path, const std::vector<int>& labels,
                         const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw DimensionError("labels and scores must align");
    std::ostringstream os;
    os << "threshold,tp,fp,fn,tn\n";
    for (double tau : {0.3, 0.4, 0.5, 0.6}) {
        std::vector<int> preds(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) preds[i] = scores[i] > tau ? 1 : 0;
        const auto cc = count_confusion(labels, preds);
        os << tau << ',' << cc.tp << ',' << cc.fp << ',' << cc.fn << ',' << cc.tn << '\n';
    }
    io::write_text(path, os.str());
}

void write_pair_scores_csv(const std::string& path, const std::vector<PairScore>& scores) {
    std::ostringstream os;
    os << "clip_a,clip_b,same_speaker,score\n";
    for (const auto& p : scores)
        os << p.clip_a << ',' << p.clip_b << ',' << (p.same_speaker ? 1 : 0) << ',' << p.score
           << '\n';
    io::write_text(path, os.str());
}

}  // namespace taac::eval
