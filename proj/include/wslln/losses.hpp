#pragma once

#include <stdexcept>
#include <string>

#include "autodiff.hpp"
#include "model.hpp"

namespace wslln {

constexpr double kEps = 1e-8;        // guards zero scores in normalizations
constexpr double kLogFloor = 1e-12;  // probability clamp before ln

enum class Mode { full, align_only, detect_only };

inline Mode parse_mode(const std::string& s) {
    if (s == "full") return Mode::full;
    if (s == "align-only" || s == "align") return Mode::align_only;
    if (s == "detect-only" || s == "detect") return Mode::detect_only;
    throw std::invalid_argument("unknown mode: " + s);
}

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::full: return "full";
        case Mode::align_only: return "align-only";
        default: return "detect-only";
    }
}

// Two-class cross-entropy on the video aggregate vq (1x2). vq does not sum to
// one, so it is normalized first: p = (vq + eps) / (vq[0] + vq[1] + 2 eps).
inline NodeId video_loss(Tape& t, NodeId vq, int label) {
    if (label != 0 && label != 1) throw std::invalid_argument("video_loss: label must be 0/1");
    NodeId num = t.add_const(t.pick(vq, 0, size_t(label)), kEps);
    NodeId den = t.add_const(t.sum_all(vq), 2.0 * kEps);
    return t.scale(t.log_clamped(t.div(num, den), kLogFloor), -1.0);
}

// argmax over the match column; ties and n=1 resolve to the lowest index.
// The index is a constant of the training step: no gradient flows through it.
inline size_t pseudo_label(const Matrix& s) {
    size_t best = 0;
    for (size_t i = 1; i < s.rows; ++i)
        if (s(i, 1) > s(best, 1)) best = i;
    return best;
}

// Cross-entropy over proposals on the renormalized match column:
// p_j = (s[j,1] + eps) / (sum_j' s[j',1] + n eps), loss = -ln p_yhat.
// An all-zero column degenerates to the uniform distribution, loss = ln n.
inline NodeId refine_loss(Tape& t, NodeId s, size_t yhat) {
    size_t n = t.val(s).rows;  // copy out: pushing nodes invalidates val() references
    if (yhat >= n) throw std::invalid_argument("refine_loss: pseudo-label out of range");
    NodeId col = t.column(s, 1);
    NodeId num = t.add_const(t.pick(col, yhat, 0), kEps);
    NodeId den = t.add_const(t.sum_all(col), double(n) * kEps);
    return t.scale(t.log_clamped(t.div(num, den), kLogFloor), -1.0);
}

// L = L_v + lambda * L_r, with the refinement term only on positive pairs
// (a pseudo label is meaningless for a mismatched sentence).
inline NodeId total_loss(Tape& t, const Forward& f, int label, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be >= 0");
    NodeId lv = video_loss(t, f.vq, label);
    if (label == 1 && lambda > 0.0) {
        size_t yhat = pseudo_label(t.val(f.s));
        lv = t.add(lv, t.scale(refine_loss(t, f.s, yhat), lambda));
    }
    return lv;
}

// Alignment-only ablation: the video label is broadcast to every proposal and
// scored per proposal; the loss is the mean cross-entropy over proposals.
inline NodeId align_loss(Tape& t, NodeId sa, int label) {
    size_t n = t.val(sa).rows;  // copy out: pushing nodes invalidates val() references
    NodeId col = t.column(sa, size_t(label));
    NodeId sum = t.sum_all(t.log_clamped(col, kLogFloor));
    return t.scale(sum, -1.0 / double(n));
}

// Detection-only ablation: the highest match score over proposals, m, is
// renormalized against 1-m as a two-class score and judged by the video label.
inline NodeId detect_loss(Tape& t, NodeId sd, int label) {
    NodeId m = t.max_all(t.column(sd, 1));
    NodeId p;
    if (label == 1) {
        p = t.scale(t.add_const(m, kEps), 1.0 / (1.0 + 2.0 * kEps));
    } else {
        NodeId one_minus = t.add_const(t.scale(m, -1.0), 1.0);
        p = t.scale(t.add_const(one_minus, kEps), 1.0 / (1.0 + 2.0 * kEps));
    }
    return t.scale(t.log_clamped(p, kLogFloor), -1.0);
}

inline NodeId mode_loss(Tape& t, const Forward& f, int label, double lambda, Mode mode) {
    switch (mode) {
        case Mode::full: return total_loss(t, f, label, lambda);
        case Mode::align_only: return align_loss(t, f.sa, label);
        default: return detect_loss(t, f.sd, label);
    }
}

// Column of per-proposal match scores used for ranking in each mode.
inline NodeId score_node(const Forward& f, Mode mode) {
    switch (mode) {
        case Mode::full: return f.s;
        case Mode::align_only: return f.sa;
        default: return f.sd;
    }
}

}  // namespace wslln
