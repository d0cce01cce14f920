#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "proposals.hpp"

namespace wslln {

// Temporal interval in seconds, [start, end).
struct TimeSpan {
    double start = 0.0;
    double end = 0.0;
};

inline double temporal_iou(const TimeSpan& a, const TimeSpan& b) {
    if (a.start >= a.end || b.start >= b.end)
        throw std::invalid_argument("temporal_iou: degenerate span");
    double inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    if (inter <= 0.0) return 0.0;
    double uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    return inter / uni;
}

// One evaluated query: its ranked predictions (best first) and ground truth.
struct QueryResult {
    std::string query_id;
    std::vector<TimeSpan> ranked;
    TimeSpan gt;
};

// th=1.0 demands exact spans; comparing floating IoU to 1.0 would miss on
// rounding, so equality is decided on rounded integer endpoints (our spans
// are frame-aligned).
inline bool span_hit(const TimeSpan& pred, const TimeSpan& gt, double th) {
    if (th >= 1.0)
        return std::llround(pred.start) == std::llround(gt.start) &&
               std::llround(pred.end) == std::llround(gt.end);
    return temporal_iou(pred, gt) >= th;
}

// Percentage of queries whose top-k predictions contain at least one span
// with IoU >= th against the ground truth.
inline double recall_at_k(const std::vector<QueryResult>& results, size_t k, double th) {
    if (results.empty()) throw std::invalid_argument("recall_at_k: no queries");
    size_t hits = 0;
    for (const QueryResult& r : results) {
        if (r.ranked.empty())
            throw std::runtime_error("recall_at_k: no prediction for query " + r.query_id);
        size_t lim = std::min(k, r.ranked.size());
        for (size_t i = 0; i < lim; ++i)
            if (span_hit(r.ranked[i], r.gt, th)) { ++hits; break; }
    }
    return 100.0 * double(hits) / double(results.size());
}

inline double mean_iou(const std::vector<QueryResult>& results) {
    if (results.empty()) throw std::invalid_argument("mean_iou: no queries");
    double sum = 0.0;
    for (const QueryResult& r : results) {
        if (r.ranked.empty())
            throw std::runtime_error("mean_iou: no prediction for query " + r.query_id);
        sum += temporal_iou(r.ranked[0], r.gt);
    }
    return sum / double(results.size());
}

struct EvalReport {
    // key "R@{k},IoU={th}" -> recall percentage; std::map keeps key order stable
    std::map<std::string, double> recalls;
    double miou = 0.0;
    std::vector<double> per_query_iou;
};

inline std::string recall_key(size_t k, double th) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "R@%zu,IoU=%g", k, th);
    return buf;
}

inline EvalReport make_report(const std::vector<QueryResult>& results,
                              const std::vector<size_t>& ks, const std::vector<double>& ths) {
    EvalReport rep;
    for (size_t k : ks)
        for (double th : ths) rep.recalls[recall_key(k, th)] = recall_at_k(results, k, th);
    rep.miou = mean_iou(results);
    rep.per_query_iou.reserve(results.size());
    for (const QueryResult& r : results) rep.per_query_iou.push_back(temporal_iou(r.ranked[0], r.gt));
    return rep;
}

// Aligned text table, one row per k, thresholds as columns, mIoU last.
inline std::string report_table(const EvalReport& rep, const std::vector<size_t>& ks,
                                const std::vector<double>& ths) {
    std::string out = "  k  ";
    char buf[64];
    for (double th : ths) {
        std::snprintf(buf, sizeof buf, "IoU=%-6g", th);
        out += buf;
    }
    out += "mIoU\n";
    for (size_t k : ks) {
        std::snprintf(buf, sizeof buf, "%3zu  ", k);
        out += buf;
        for (double th : ths) {
            std::snprintf(buf, sizeof buf, "%-10.2f", rep.recalls.at(recall_key(k, th)));
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "%.4f\n", rep.miou);
        out += buf;
    }
    return out;
}

// Brute-force chance rate for top-1 recall when predictions are uniform over
// the proposal set and ground truth is uniform over the same set.
inline double chance_recall_at_1(int k, size_t T, double th) {
    std::vector<Span> spans = generate_spans(k);
    size_t hits = 0;
    for (const Span& g : spans)
        for (const Span& p : spans) {
            FrameRange gf = span_frames(g, T, k), pf = span_frames(p, T, k);
            TimeSpan gs{double(gf.first), double(gf.last)}, ps{double(pf.first), double(pf.last)};
            if (span_hit(ps, gs, th)) ++hits;
        }
    return 100.0 * double(hits) / double(spans.size() * spans.size());
}

}  // namespace wslln
