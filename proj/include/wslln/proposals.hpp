#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tensor.hpp"

namespace wslln {

// A temporal span in base-segment units over k uniform segments: [start, end),
// 0 <= start < end <= k.
struct Span {
    int start = 0;
    int end = 0;
    bool operator==(const Span&) const = default;
    int length() const { return end - start; }
};

// Frame range [first, last) a span covers in a T-frame video.
struct FrameRange {
    size_t first = 0;
    size_t last = 0;
};

// All contiguous spans over k base segments: k(k+1)/2 of them, ordered by
// ascending length, then ascending start.
inline std::vector<Span> generate_spans(int k) {
    if (k < 1) throw std::invalid_argument("generate_spans: k must be >= 1");
    std::vector<Span> spans;
    spans.reserve(size_t(k) * size_t(k + 1) / 2);
    for (int len = 1; len <= k; ++len)
        for (int st = 0; st + len <= k; ++st) spans.push_back({st, st + len});
    return spans;
}

// Segment boundaries map to frames by round(boundary * T / k), with a clamp
// guaranteeing every span covers at least one in-range frame.
inline FrameRange span_frames(const Span& s, size_t T, int k) {
    if (T == 0) throw std::invalid_argument("span_frames: empty video");
    auto to_frame = [&](int b) {
        return size_t(std::llround(double(b) * double(T) / double(k)));
    };
    size_t first = std::min(to_frame(s.start), T - 1);
    size_t last = std::min(std::max(to_frame(s.end), first + 1), T);
    if (first >= last) first = last - 1;  // unreachable, kept as a guard
    return {first, last};
}

// Proposal feature: [mean over span frames | mean over all frames | start/k | end/k],
// length 2*Dv + 2. fv is T x Dv.
inline std::vector<double> proposal_feature(const Matrix& fv, const Span& s, int k) {
    FrameRange r = span_frames(s, fv.rows, k);
    size_t Dv = fv.cols;
    std::vector<double> out(2 * Dv + 2, 0.0);
    for (size_t t = r.first; t < r.last; ++t)
        for (size_t j = 0; j < Dv; ++j) out[j] += fv(t, j);
    for (size_t j = 0; j < Dv; ++j) out[j] /= double(r.last - r.first);
    for (size_t t = 0; t < fv.rows; ++t)
        for (size_t j = 0; j < Dv; ++j) out[Dv + j] += fv(t, j);
    for (size_t j = 0; j < Dv; ++j) out[Dv + j] /= double(fv.rows);
    out[2 * Dv] = double(s.start) / double(k);
    out[2 * Dv + 1] = double(s.end) / double(k);
    return out;
}

// Stack of proposal features, one row per span: n x (2*Dv + 2).
inline Matrix proposal_matrix(const Matrix& fv, const std::vector<Span>& spans, int k) {
    Matrix out(spans.size(), 2 * fv.cols + 2);
    for (size_t i = 0; i < spans.size(); ++i) {
        std::vector<double> f = proposal_feature(fv, spans[i], k);
        for (size_t j = 0; j < f.size(); ++j) out(i, j) = f[j];
    }
    return out;
}

}  // namespace wslln
