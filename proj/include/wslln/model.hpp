#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "proposals.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace wslln {

// Two-branch proposal scorer. A proposal feature and a query feature are
// projected to a common width d, fused, and scored by an alignment head
// (per-proposal match/no-match softmax) and a detection head (softmax across
// proposals, which makes proposals compete).
struct ModelParams {
    size_t Dv = 0, Dq = 0, d = 0, h = 0;

    Matrix vis_w, vis_b;        // (2Dv+2) x d, 1 x d
    Matrix txt_w, txt_b;        // Dq x d, 1 x d
    Matrix fc_w, fc_b;          // 2d x d, 1 x d
    Matrix align_w1, align_b1;  // 3d x h, 1 x h
    Matrix align_w2, align_b2;  // h x 2, 1 x 2
    Matrix det_w1, det_b1;      // 3d x h, 1 x h
    Matrix det_w2, det_b2;      // h x 2, 1 x 2

    // declared order; checkpoints and the optimizer iterate this
    std::vector<std::pair<std::string, Matrix*>> tensors() {
        return {{"vis_w", &vis_w},         {"vis_b", &vis_b},
                {"txt_w", &txt_w},         {"txt_b", &txt_b},
                {"fc_w", &fc_w},           {"fc_b", &fc_b},
                {"align_w1", &align_w1},   {"align_b1", &align_b1},
                {"align_w2", &align_w2},   {"align_b2", &align_b2},
                {"det_w1", &det_w1},       {"det_b1", &det_b1},
                {"det_w2", &det_w2},       {"det_b2", &det_b2}};
    }
};

// Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Matrices are filled row-major in declared order, so a seed pins every bit.
inline ModelParams init_params(uint64_t seed, size_t Dv, size_t Dq, size_t d, size_t h) {
    if (Dv < 1 || Dq < 1 || d < 1 || h < 1)
        throw std::invalid_argument("init_params: dims must be >= 1");
    ModelParams p;
    p.Dv = Dv; p.Dq = Dq; p.d = d; p.h = h;
    p.vis_w = Matrix(2 * Dv + 2, d); p.vis_b = Matrix(1, d);
    p.txt_w = Matrix(Dq, d);         p.txt_b = Matrix(1, d);
    p.fc_w = Matrix(2 * d, d);       p.fc_b = Matrix(1, d);
    p.align_w1 = Matrix(3 * d, h);   p.align_b1 = Matrix(1, h);
    p.align_w2 = Matrix(h, 2);       p.align_b2 = Matrix(1, 2);
    p.det_w1 = Matrix(3 * d, h);     p.det_b1 = Matrix(1, h);
    p.det_w2 = Matrix(h, 2);         p.det_b2 = Matrix(1, 2);
    Rng rng(seed);
    for (auto& [name, m] : p.tensors()) {
        // biases (named *_b*) stay zero; keyed on the name because txt_w is
        // also a single row when Dq=1 and must still get weights
        if (name.find("_b") != std::string::npos) continue;
        double bound = std::sqrt(6.0 / double(m->rows + m->cols));
        for (double& v : m->a) v = rng.uniform(-bound, bound);
    }
    return p;
}

// Tape node ids for one forward pass. Values live in the tape.
struct Forward {
    // parameter leaves, in ModelParams::tensors() order
    std::vector<NodeId> params;
    NodeId fm = -1;  // n x 3d fused features
    NodeId sa = -1;  // n x 2, rows sum to 1
    NodeId sd = -1;  // n x 2, columns sum to 1
    NodeId s = -1;   // sa * sd elementwise
    NodeId vq = -1;  // 1 x 2 column sums of s
};

// Projection, fusion fm = [(fp+fq) | fp*fq | FC(fp||fq)], both heads, merged
// scores, and the video-level aggregate vq.
inline Forward forward(Tape& t, const Matrix& proposal_feats, const Matrix& query_feat,
                       ModelParams& p) {
    if (proposal_feats.cols != 2 * p.Dv + 2)
        throw std::invalid_argument("forward: proposal feature width != 2*Dv+2");
    if (query_feat.rows != 1 || query_feat.cols != p.Dq)
        throw std::invalid_argument("forward: query feature must be 1 x Dq");
    size_t n = proposal_feats.rows;

    Forward f;
    for (auto& [name, m] : p.tensors()) f.params.push_back(t.leaf(*m));
    NodeId vis_w = f.params[0], vis_b = f.params[1];
    NodeId txt_w = f.params[2], txt_b = f.params[3];
    NodeId fc_w = f.params[4], fc_b = f.params[5];
    NodeId aw1 = f.params[6], ab1 = f.params[7], aw2 = f.params[8], ab2 = f.params[9];
    NodeId dw1 = f.params[10], db1 = f.params[11], dw2 = f.params[12], db2 = f.params[13];

    NodeId fp = t.linear(t.leaf(proposal_feats), vis_w, vis_b);      // n x d
    NodeId fq = t.linear(t.leaf(query_feat), txt_w, txt_b);          // 1 x d
    NodeId fqn = t.broadcast_row(fq, n);                             // n x d
    NodeId fsum = t.add(fp, fqn);
    NodeId fprod = t.mul(fp, fqn);
    NodeId fcat = t.concat_cols({fp, fqn});                          // n x 2d
    NodeId ffc = t.linear(fcat, fc_w, fc_b);                         // n x d
    f.fm = t.concat_cols({fsum, fprod, ffc});                        // n x 3d

    NodeId la = t.linear(t.relu(t.linear(f.fm, aw1, ab1)), aw2, ab2);
    f.sa = t.softmax_rows(la);
    NodeId ld = t.linear(t.relu(t.linear(f.fm, dw1, db1)), dw2, db2);
    f.sd = t.softmax_cols(ld);
    f.s = t.mul(f.sa, f.sd);
    f.vq = t.sum_cols(f.s);
    return f;
}

// Proposal indices sorted by match score descending; stable, so ties keep the
// lower index first. scores is the match column s[:,1] as plain values.
inline std::vector<size_t> rank(const std::vector<double>& match_scores) {
    std::vector<size_t> idx(match_scores.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return match_scores[a] > match_scores[b]; });
    return idx;
}

inline std::vector<double> column_values(const Tape& t, NodeId m, size_t col) {
    const Matrix& v = t.val(m);
    std::vector<double> out(v.rows);
    for (size_t i = 0; i < v.rows; ++i) out[i] = v(i, col);
    return out;
}

}  // namespace wslln
