#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "model.hpp"

namespace wslln {

// SGD with classical momentum: v = mu*v + g; p -= lr*v. With momentum 0 a
// step is exactly p -= lr*g. Optional global gradient-norm clip (off when
// max_grad_norm == 0); the normalized cross-entropy gradient scales like
// 1/vq and can spike by orders of magnitude once scores saturate, and the
// clip keeps long runs from being destroyed by a single such step.
class Sgd {
public:
    Sgd(ModelParams& params, double lr, double momentum, double max_grad_norm = 0.0)
        : params_(&params), lr_(lr), momentum_(momentum), clip_(max_grad_norm) {
        for (auto& [name, m] : params.tensors())
            velocity_.emplace_back(m->rows, m->cols);
    }

    // grads in ModelParams::tensors() order
    void step(const std::vector<Matrix>& grads) {
        auto tensors = params_->tensors();
        if (grads.size() != tensors.size())
            throw std::invalid_argument("Sgd::step: gradient count mismatch");
        for (size_t i = 0; i < tensors.size(); ++i)
            if (!grads[i].same_shape(*tensors[i].second))
                throw std::invalid_argument("Sgd::step: gradient shape mismatch for " +
                                            tensors[i].first);
        double scale = 1.0;
        if (clip_ > 0.0) {
            double sq = 0.0;
            for (const Matrix& g : grads)
                for (double v : g.a) sq += v * v;
            double norm = std::sqrt(sq);
            if (norm > clip_) scale = clip_ / norm;
        }
        for (size_t i = 0; i < tensors.size(); ++i) {
            Matrix& p = *tensors[i].second;
            Matrix& vel = velocity_[i];
            const Matrix& g = grads[i];
            for (size_t j = 0; j < p.size(); ++j) {
                vel.a[j] = momentum_ * vel.a[j] + scale * g.a[j];
                p.a[j] -= lr_ * vel.a[j];
            }
        }
    }

private:
    ModelParams* params_;
    double lr_, momentum_, clip_;
    std::vector<Matrix> velocity_;
};

}  // namespace wslln
