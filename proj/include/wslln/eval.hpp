#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "data.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace wslln {

struct EvalOptions {
    std::vector<size_t> ks{1, 5};
    std::vector<double> ths{0.1, 0.3, 0.5};
};

// Ranked proposals for one (video, query) pair under the given scoring mode.
inline std::vector<std::pair<Span, double>> predict_ranked(ModelParams& params, const Matrix& fv,
                                                           const std::vector<double>& query,
                                                           int k, Mode mode = Mode::full) {
    std::vector<Span> spans = generate_spans(k);
    Matrix props = proposal_matrix(fv, spans, k);
    Matrix q(1, query.size());
    for (size_t i = 0; i < query.size(); ++i) q(0, i) = query[i];
    Tape t;
    Forward f = forward(t, props, q, params);
    std::vector<double> scores = column_values(t, score_node(f, mode), 1);
    std::vector<size_t> order = rank(scores);
    std::vector<std::pair<Span, double>> out;
    out.reserve(order.size());
    for (size_t i : order) out.emplace_back(spans[i], scores[i]);
    return out;
}

// Runs the model over every query with ground truth and assembles the metric
// report. Deterministic: videos and queries are visited in manifest order.
inline std::pair<EvalReport, std::vector<QueryResult>> evaluate_model(
    ModelParams& params, const Dataset& data, int k, Mode mode = Mode::full,
    const EvalOptions& opt = {}) {
    std::vector<QueryResult> results;
    for (const LoadedVideo& v : data.videos) {
        for (const QueryRecord& q : v.queries) {
            if (!q.gt) continue;
            auto ranked = predict_ranked(params, v.fv, q.vector, k, mode);
            QueryResult r;
            r.query_id = q.query_id;
            for (auto& [span, score] : ranked) {
                FrameRange fr = span_frames(span, v.fv.rows, k);
                r.ranked.push_back(TimeSpan{double(fr.first), double(fr.last)});
            }
            r.gt = *q.gt;
            results.push_back(std::move(r));
        }
    }
    if (results.empty()) throw std::runtime_error("evaluate_model: no queries with ground truth");
    return {make_report(results, opt.ks, opt.ths), std::move(results)};
}

inline json report_json(const EvalReport& rep) {
    json j;
    j["recalls"] = rep.recalls;
    j["mIoU"] = rep.miou;
    j["per_query_iou"] = rep.per_query_iou;
    return j;
}

}  // namespace wslln
