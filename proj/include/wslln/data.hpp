#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metrics.hpp"
#include "proposals.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace wslln {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---- binary feature files ----
//
// Layout: 16-byte header [magic "WSLF" | u32 version=1 | u32 T | u32 Dv],
// then T*Dv little-endian 32-bit floats, row-major. Values are widened to
// 64-bit on load.

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
    out.append(b, 4);
}

inline uint32_t get_u32(const unsigned char* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

}  // namespace detail

inline void write_features(const fs::path& path, const Matrix& fv) {
    std::string bytes;
    bytes.reserve(16 + 4 * fv.size());
    bytes += "WSLF";
    detail::put_u32(bytes, 1);
    detail::put_u32(bytes, uint32_t(fv.rows));
    detail::put_u32(bytes, uint32_t(fv.cols));
    for (double v : fv.a) {
        float f = float(v);
        uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::put_u32(bytes, u);
    }
    detail::write_file(path, bytes);
}

inline Matrix load_features(const fs::path& path) {
    std::string bytes = detail::read_file(path);
    if (bytes.size() < 16 || bytes.compare(0, 4, "WSLF") != 0)
        throw std::runtime_error(path.string() + ": bad magic, not a feature file");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    uint32_t version = detail::get_u32(p + 4);
    if (version != 1)
        throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
    uint32_t T = detail::get_u32(p + 8), Dv = detail::get_u32(p + 12);
    size_t expect = 16 + 4 * size_t(T) * size_t(Dv);
    if (bytes.size() != expect)
        throw std::runtime_error(path.string() + ": truncated, got " +
                                 std::to_string(bytes.size()) + " bytes, expected " +
                                 std::to_string(expect));
    Matrix fv(T, Dv);
    for (size_t i = 0; i < fv.size(); ++i) {
        uint32_t u = detail::get_u32(p + 16 + 4 * i);
        float f;
        std::memcpy(&f, &u, 4);
        fv.a[i] = double(f);
    }
    return fv;
}

// ---- manifests ----

struct QueryRecord {
    std::string query_id;
    std::vector<double> vector;
    std::optional<TimeSpan> gt;
};

struct VideoRecord {
    std::string video_id;
    std::string features;  // as written in the manifest, relative to it
    fs::path features_resolved;
    size_t T = 0, Dv = 0;
    std::vector<QueryRecord> queries;
};

struct Manifest {
    std::string split;  // "train" or "eval"
    std::vector<VideoRecord> records;
};

inline void save_manifest(const Manifest& m, const fs::path& path) {
    json root;
    root["split"] = m.split;
    json recs = json::array();
    for (const VideoRecord& v : m.records) {
        json r;
        r["video_id"] = v.video_id;
        r["features"] = v.features;
        r["T"] = v.T;
        r["Dv"] = v.Dv;
        json qs = json::array();
        for (const QueryRecord& q : v.queries) {
            json jq;
            jq["query_id"] = q.query_id;
            jq["vector"] = q.vector;
            if (q.gt) jq["gt"] = {{"start_s", q.gt->start}, {"end_s", q.gt->end}};
            qs.push_back(jq);
        }
        r["queries"] = qs;
        recs.push_back(r);
    }
    root["records"] = recs;
    detail::write_file(path, root.dump(2) + "\n");
}

inline Manifest load_manifest(const fs::path& path) {
    std::string text = detail::read_file(path);
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports a byte offset; turn it into a line number
        size_t line = 1;
        for (size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw std::runtime_error(path.string() + ": parse error at line " +
                                 std::to_string(line) + ": " + e.what());
    }
    Manifest m;
    m.split = root.value("split", "train");
    std::vector<std::string> seen_videos, seen_queries;
    for (const json& r : root.at("records")) {
        VideoRecord v;
        v.video_id = r.at("video_id").get<std::string>();
        v.features = r.at("features").get<std::string>();
        v.T = r.at("T").get<size_t>();
        v.Dv = r.at("Dv").get<size_t>();
        for (const auto& id : seen_videos)
            if (id == v.video_id)
                throw std::runtime_error(path.string() + ": duplicate video id " + v.video_id);
        seen_videos.push_back(v.video_id);
        v.features_resolved = path.parent_path() / v.features;
        if (!fs::exists(v.features_resolved))
            throw std::runtime_error(path.string() + ": missing feature file " +
                                     v.features_resolved.string());
        Matrix fv = load_features(v.features_resolved);
        if (fv.rows != v.T || fv.cols != v.Dv)
            throw std::runtime_error(v.features_resolved.string() + ": header " +
                                     std::to_string(fv.rows) + "x" + std::to_string(fv.cols) +
                                     " does not match manifest " + std::to_string(v.T) + "x" +
                                     std::to_string(v.Dv));
        for (const json& jq : r.at("queries")) {
            QueryRecord q;
            q.query_id = jq.at("query_id").get<std::string>();
            q.vector = jq.at("vector").get<std::vector<double>>();
            if (jq.contains("gt"))
                q.gt = TimeSpan{jq["gt"].at("start_s").get<double>(),
                                jq["gt"].at("end_s").get<double>()};
            for (const auto& id : seen_queries)
                if (id == q.query_id)
                    throw std::runtime_error(path.string() + ": duplicate query id " + q.query_id);
            seen_queries.push_back(q.query_id);
            if (m.split == "eval" && !q.gt)
                throw std::runtime_error(path.string() + ": eval split missing gt span for query " +
                                         q.query_id);
            v.queries.push_back(std::move(q));
        }
        m.records.push_back(std::move(v));
    }
    return m;
}

// Manifest plus loaded feature matrices, ready for training or evaluation.
struct LoadedVideo {
    std::string video_id;
    Matrix fv;
    std::vector<QueryRecord> queries;
};

struct Dataset {
    std::vector<LoadedVideo> videos;
    size_t Dv = 0, Dq = 0;
};

inline Dataset load_dataset(const Manifest& m) {
    Dataset d;
    for (const VideoRecord& v : m.records) {
        LoadedVideo lv;
        lv.video_id = v.video_id;
        lv.fv = load_features(v.features_resolved);
        lv.queries = v.queries;
        d.videos.push_back(std::move(lv));
        d.Dv = v.Dv;
        if (!v.queries.empty()) d.Dq = v.queries[0].vector.size();
    }
    return d;
}

// ---- synthetic planted-event corpus ----

struct SynthConfig {
    size_t num_train = 500;
    size_t num_test = 100;
    size_t T = 50;
    size_t Dv = 32;
    size_t Dq = 32;
    int k = 5;
    double beta = 0.7;       // signal strength in [0,1]
    double sigma = 1.0;      // noise scale
    int distractors = 2;     // distractor spans per video
    uint64_t seed = 42;
};

// The fixed cross-modal map shared by the whole corpus. Drawn first from the
// corpus seed, so tests can reconstruct it independently of the files.
inline Matrix synth_map(const SynthConfig& cfg) {
    Rng rng(cfg.seed);
    Matrix M(cfg.Dv, cfg.Dq);
    double sd = 1.0 / std::sqrt(double(cfg.Dq));
    for (double& v : M.a) v = rng.normal(0.0, sd);
    return M;
}

struct SynthResult {
    fs::path train_manifest;
    fs::path test_manifest;
    size_t num_spans = 0;
};

// Per video: one unit-norm Gaussian query q, one ground-truth span drawn
// uniformly from the proposal set. Frames inside the span carry
// beta*(M*q) + (1-beta)*eps; outside frames are distractor signals M*q'
// (q' borrowed from another video) or pure noise eps ~ N(0, sigma^2/Dv per
// coordinate). Draw order is fixed, so a seed pins the corpus bytes.
inline SynthResult gen_synthetic(const SynthConfig& cfg, const fs::path& out_dir) {
    if (cfg.beta < 0.0 || cfg.beta > 1.0)
        throw std::invalid_argument("gen_synthetic: beta must be in [0,1]");
    Matrix M = synth_map(cfg);
    Rng rng(Rng::mix(cfg.seed, 1));  // corpus stream, distinct from the map stream
    std::vector<Span> spans = generate_spans(cfg.k);
    double noise_sd = cfg.sigma / std::sqrt(double(cfg.Dv));

    SynthResult result;
    result.num_spans = spans.size();
    for (int split = 0; split < 2; ++split) {
        size_t n = split == 0 ? cfg.num_train : cfg.num_test;
        fs::path dir = out_dir / (split == 0 ? "train" : "test");
        fs::create_directories(dir);

        // all queries first, so distractors can borrow from any other video
        std::vector<std::vector<double>> queries(n, std::vector<double>(cfg.Dq));
        for (auto& q : queries) {
            double norm2 = 0.0;
            for (double& v : q) { v = rng.normal(); norm2 += v * v; }
            double inv = 1.0 / std::sqrt(norm2);
            for (double& v : q) v *= inv;
        }

        Manifest man;
        man.split = split == 0 ? "train" : "eval";
        for (size_t i = 0; i < n; ++i) {
            Span gt = spans[rng.below(spans.size())];
            FrameRange gtf = span_frames(gt, cfg.T, cfg.k);

            // distractor spans: disjoint from gt and from each other; they
            // borrow another video's query, so a 1-video split has none
            std::vector<Span> candidates;
            if (n >= 2)
                for (const Span& s : spans)
                    if (s.end <= gt.start || s.start >= gt.end) candidates.push_back(s);
            rng.shuffle(candidates);
            std::vector<std::pair<FrameRange, size_t>> placed;  // range, source video
            for (const Span& c : candidates) {
                if (int(placed.size()) >= cfg.distractors) break;
                bool clash = false;
                for (const auto& [r, src] : placed) {
                    FrameRange cf = span_frames(c, cfg.T, cfg.k);
                    if (cf.first < r.last && r.first < cf.last) { clash = true; break; }
                }
                if (clash) continue;
                size_t src = rng.below(n - 1);
                if (src >= i) ++src;
                placed.emplace_back(span_frames(c, cfg.T, cfg.k), src);
            }

            // signal vector for this video and its distractor sources
            std::vector<double> sig(cfg.Dv, 0.0);
            for (size_t r = 0; r < cfg.Dv; ++r)
                for (size_t c = 0; c < cfg.Dq; ++c) sig[r] += M(r, c) * queries[i][c];

            Matrix fv(cfg.T, cfg.Dv);
            for (size_t tfr = 0; tfr < cfg.T; ++tfr) {
                const std::pair<FrameRange, size_t>* dist = nullptr;
                for (const auto& pr : placed)
                    if (tfr >= pr.first.first && tfr < pr.first.last) { dist = &pr; break; }
                if (dist) {
                    const std::vector<double>& qd = queries[dist->second];
                    for (size_t r = 0; r < cfg.Dv; ++r) {
                        double v = 0.0;
                        for (size_t c = 0; c < cfg.Dq; ++c) v += M(r, c) * qd[c];
                        fv(tfr, r) = v;
                    }
                } else if (tfr >= gtf.first && tfr < gtf.last) {
                    for (size_t r = 0; r < cfg.Dv; ++r)
                        fv(tfr, r) = cfg.beta * sig[r] + (1.0 - cfg.beta) * rng.normal(0.0, noise_sd);
                } else {
                    for (size_t r = 0; r < cfg.Dv; ++r) fv(tfr, r) = rng.normal(0.0, noise_sd);
                }
            }

            char vid[32], qid[32], fname[40];
            std::snprintf(vid, sizeof vid, "%s%04zu", split == 0 ? "tr" : "te", i);
            std::snprintf(qid, sizeof qid, "%s_q%04zu", split == 0 ? "tr" : "te", i);
            std::snprintf(fname, sizeof fname, "%s.wslf", vid);
            write_features(dir / fname, fv);

            VideoRecord rec;
            rec.video_id = vid;
            rec.features = fname;
            rec.features_resolved = dir / fname;
            rec.T = cfg.T;
            rec.Dv = cfg.Dv;
            QueryRecord q;
            q.query_id = qid;
            q.vector = queries[i];
            q.gt = TimeSpan{double(gtf.first), double(gtf.last)};
            rec.queries.push_back(std::move(q));
            man.records.push_back(std::move(rec));
        }
        fs::path man_path = dir / "manifest.json";
        save_manifest(man, man_path);
        (split == 0 ? result.train_manifest : result.test_manifest) = man_path;
    }
    return result;
}

}  // namespace wslln
