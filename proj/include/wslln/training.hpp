#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "eval.hpp"
#include "losses.hpp"
#include "optimizer.hpp"

namespace wslln {

// video/query are indices into Dataset::videos; a query is addressed by the
// video that owns it plus its position in that video's query list.
struct TrainingPair {
    size_t video = 0;
    size_t query_video = 0;
    size_t query_idx = 0;
    int label = 0;
};

struct TrainConfig {
    double lambda = 0.3;
    double lr = 0.01;
    double momentum = 0.9;
    size_t epochs = 50;
    uint64_t seed = 42;
    int negative_ratio = 1;
    size_t d = 64;  // fusion width; small default keeps CPU training fast
    size_t h = 32;  // classifier hidden width
    int k = 5;
    double grad_clip = 0.0;  // global gradient-norm clip, 0 disables
    Mode mode = Mode::full;
    bool eval_each_epoch = false;
};

// One negative per positive (times the configured ratio), drawn from other
// videos' queries, so no sampled pair can equal a positive pair.
// Deterministic per (seed, epoch).
inline std::vector<TrainingPair> sample_negatives(const Dataset& data, uint64_t seed,
                                                  size_t epoch, int ratio = 1) {
    size_t total_queries = 0;
    for (const LoadedVideo& v : data.videos) total_queries += v.queries.size();
    if (total_queries < 2)
        throw std::runtime_error("sample_negatives: need at least two queries to exclude positives");
    Rng rng(Rng::mix(seed, 0x6e656761 + epoch));
    std::vector<TrainingPair> out;
    for (size_t i = 0; i < data.videos.size(); ++i) {
        for (size_t qi = 0; qi < data.videos[i].queries.size(); ++qi) {
            for (int r = 0; r < ratio; ++r) {
                // draw until the query belongs to a different video
                for (;;) {
                    size_t j = rng.below(data.videos.size());
                    if (j == i || data.videos[j].queries.empty()) continue;
                    size_t qj = rng.below(data.videos[j].queries.size());
                    out.push_back({i, j, qj, 0});
                    break;
                }
            }
        }
    }
    return out;
}

struct EpochLog {
    size_t epoch = 0;
    double mean_lv = 0.0;
    double mean_lr = 0.0;
    std::optional<EvalReport> metrics;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> log;
};

// SGD over shuffled positive + freshly resampled negative pairs, one pair per
// step. Bitwise deterministic for a fixed config and seed.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg,
                         const Dataset* eval_data = nullptr) {
    if (data.videos.empty()) throw std::runtime_error("train: empty dataset");
    size_t Dv = data.Dv, Dq = data.Dq;
    TrainResult result;
    result.params = init_params(cfg.seed, Dv, Dq, cfg.d, cfg.h);
    Sgd opt(result.params, cfg.lr, cfg.momentum, cfg.grad_clip);

    std::vector<Span> spans = generate_spans(cfg.k);
    // proposal features are fixed per video; build them once
    std::vector<Matrix> props;
    props.reserve(data.videos.size());
    for (const LoadedVideo& v : data.videos) props.push_back(proposal_matrix(v.fv, spans, cfg.k));

    std::vector<TrainingPair> positives;
    for (size_t i = 0; i < data.videos.size(); ++i)
        for (size_t qi = 0; qi < data.videos[i].queries.size(); ++qi)
            positives.push_back({i, i, qi, 1});

    for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<TrainingPair> pairs = positives;
        if (cfg.negative_ratio > 0) {
            std::vector<TrainingPair> negs =
                sample_negatives(data, cfg.seed, epoch, cfg.negative_ratio);
            pairs.insert(pairs.end(), negs.begin(), negs.end());
        }
        Rng shuffle_rng(Rng::mix(cfg.seed, 0x73687566 + epoch));
        shuffle_rng.shuffle(pairs);

        double sum_lv = 0.0, sum_lr = 0.0;
        size_t n_lr = 0;
        for (const TrainingPair& pr : pairs) {
            const QueryRecord& q = data.videos[pr.query_video].queries[pr.query_idx];
            Matrix qm(1, Dq);
            for (size_t i = 0; i < Dq; ++i) qm(0, i) = q.vector[i];

            Tape t;
            Forward f = forward(t, props[pr.video], qm, result.params);
            NodeId loss;
            double lv_val = 0.0, lr_val = 0.0;
            if (cfg.mode == Mode::full) {
                NodeId lv = video_loss(t, f.vq, pr.label);
                lv_val = t.val(lv)(0, 0);
                loss = lv;
                if (pr.label == 1 && cfg.lambda > 0.0) {
                    NodeId lr = refine_loss(t, f.s, pseudo_label(t.val(f.s)));
                    lr_val = t.val(lr)(0, 0);
                    ++n_lr;
                    loss = t.add(lv, t.scale(lr, cfg.lambda));
                }
            } else {
                loss = mode_loss(t, f, pr.label, cfg.lambda, cfg.mode);
                lv_val = t.val(loss)(0, 0);
            }
            double loss_val = t.val(loss)(0, 0);
            if (!std::isfinite(loss_val))
                throw std::runtime_error(
                    "train: non-finite loss at epoch " + std::to_string(epoch) + ", pair (video=" +
                    data.videos[pr.video].video_id + ", query=" + q.query_id + ")");
            sum_lv += lv_val;
            sum_lr += lr_val;

            t.backward(loss);
            std::vector<Matrix> grads;
            grads.reserve(f.params.size());
            for (NodeId id : f.params) grads.push_back(t.grad(id));
            opt.step(grads);
        }

        EpochLog el;
        el.epoch = epoch;
        el.mean_lv = sum_lv / double(pairs.size());
        el.mean_lr = n_lr ? sum_lr / double(n_lr) : 0.0;
        if (eval_data && cfg.eval_each_epoch)
            el.metrics = evaluate_model(result.params, *eval_data, cfg.k, cfg.mode).first;
        result.log.push_back(std::move(el));
    }
    return result;
}

// JSON-lines, one record per epoch: {epoch, mean_Lv, mean_Lr, metrics?}
inline void write_train_log(const std::vector<EpochLog>& log, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const EpochLog& el : log) {
        json j;
        j["epoch"] = el.epoch;
        j["mean_Lv"] = el.mean_lv;
        j["mean_Lr"] = el.mean_lr;
        if (el.metrics) j["metrics"] = report_json(*el.metrics);
        out << j.dump() << "\n";
    }
}

}  // namespace wslln
