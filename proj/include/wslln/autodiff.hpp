#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tensor.hpp"

namespace wslln {

using NodeId = int;

// Reverse-mode tape. Each op records its backward closure; backward() replays
// them in reverse creation order (creation order is topological by
// construction). Gradients accumulate with +=, so fan-out works.
class Tape {
public:
    NodeId leaf(const Matrix& m) { return push(m); }

    // Nodes live in a vector, so these references are invalidated by the next
    // op on this tape. Read (or copy) before recording more nodes.
    const Matrix& val(NodeId id) const { return nodes_[size_t(id)].value; }
    Matrix& grad(NodeId id) { return nodes_[size_t(id)].grad; }

    // ---- elementwise ----

    NodeId add(NodeId a, NodeId b) {
        const Matrix &va = val(a), &vb = val(b);
        if (!va.same_shape(vb)) throw std::invalid_argument("add: shape mismatch");
        Matrix y = va;
        for (size_t i = 0; i < y.size(); ++i) y.a[i] += vb.a[i];
        return push(std::move(y), [a, b](Tape& t, const Node& n) {
            for (size_t i = 0; i < n.grad.size(); ++i) {
                t.grad(a).a[i] += n.grad.a[i];
                t.grad(b).a[i] += n.grad.a[i];
            }
        });
    }

    NodeId mul(NodeId a, NodeId b) {
        const Matrix &va = val(a), &vb = val(b);
        if (!va.same_shape(vb)) throw std::invalid_argument("mul: shape mismatch");
        Matrix y = va;
        for (size_t i = 0; i < y.size(); ++i) y.a[i] *= vb.a[i];
        return push(std::move(y), [a, b](Tape& t, const Node& n) {
            const Matrix &va = t.val(a), &vb = t.val(b);
            for (size_t i = 0; i < n.grad.size(); ++i) {
                t.grad(a).a[i] += n.grad.a[i] * vb.a[i];
                t.grad(b).a[i] += n.grad.a[i] * va.a[i];
            }
        });
    }

    NodeId div(NodeId a, NodeId b) {
        const Matrix &va = val(a), &vb = val(b);
        if (!va.same_shape(vb)) throw std::invalid_argument("div: shape mismatch");
        Matrix y = va;
        for (size_t i = 0; i < y.size(); ++i) y.a[i] /= vb.a[i];
        return push(std::move(y), [a, b](Tape& t, const Node& n) {
            const Matrix &vb = t.val(b), &vy = n.value;
            for (size_t i = 0; i < n.grad.size(); ++i) {
                t.grad(a).a[i] += n.grad.a[i] / vb.a[i];
                t.grad(b).a[i] -= n.grad.a[i] * vy.a[i] / vb.a[i];
            }
        });
    }

    NodeId scale(NodeId x, double c) {
        Matrix y = val(x);
        for (double& v : y.a) v *= c;
        return push(std::move(y), [x, c](Tape& t, const Node& n) {
            for (size_t i = 0; i < n.grad.size(); ++i) t.grad(x).a[i] += c * n.grad.a[i];
        });
    }

    NodeId add_const(NodeId x, double c) {
        Matrix y = val(x);
        for (double& v : y.a) v += c;
        return push(std::move(y), [x](Tape& t, const Node& n) {
            for (size_t i = 0; i < n.grad.size(); ++i) t.grad(x).a[i] += n.grad.a[i];
        });
    }

    NodeId relu(NodeId x) {
        Matrix y = val(x);
        // NaN passes through rather than flushing to 0, so bad values surface
        for (double& v : y.a) v = std::isnan(v) ? v : (v > 0.0 ? v : 0.0);
        // gradient at exactly 0 is 0
        return push(std::move(y), [x](Tape& t, const Node& n) {
            const Matrix& vx = t.val(x);
            for (size_t i = 0; i < n.grad.size(); ++i)
                if (vx.a[i] > 0.0) t.grad(x).a[i] += n.grad.a[i];
        });
    }

    // ln(max(x, floor)); gradient is 1/x where x > floor, else 0
    NodeId log_clamped(NodeId x, double floor = 1e-12) {
        Matrix y = val(x);
        // the floor guards log(0), but NaN must come out as NaN, not log(floor)
        for (double& v : y.a) v = std::isnan(v) ? v : std::log(v > floor ? v : floor);
        return push(std::move(y), [x, floor](Tape& t, const Node& n) {
            const Matrix& vx = t.val(x);
            for (size_t i = 0; i < n.grad.size(); ++i)
                if (vx.a[i] > floor) t.grad(x).a[i] += n.grad.a[i] / vx.a[i];
        });
    }

    // ---- linear algebra ----

    // y = x*W + b, with b a 1xout row added to every row
    NodeId linear(NodeId x, NodeId w, NodeId b) {
        const Matrix &vx = val(x), &vw = val(w), &vb = val(b);
        if (vx.cols != vw.rows || vb.rows != 1 || vb.cols != vw.cols)
            throw std::invalid_argument("linear: shape mismatch");
        Matrix y = matmul(vx, vw);
        for (size_t i = 0; i < y.rows; ++i)
            for (size_t j = 0; j < y.cols; ++j) y(i, j) += vb(0, j);
        return push(std::move(y), [x, w, b](Tape& t, const Node& n) {
            const Matrix &vx = t.val(x), &vw = t.val(w);
            Matrix dx = matmul_nt(n.grad, vw);
            Matrix dw = matmul_tn(vx, n.grad);
            for (size_t i = 0; i < dx.size(); ++i) t.grad(x).a[i] += dx.a[i];
            for (size_t i = 0; i < dw.size(); ++i) t.grad(w).a[i] += dw.a[i];
            Matrix& db = t.grad(b);
            for (size_t i = 0; i < n.grad.rows; ++i)
                for (size_t j = 0; j < n.grad.cols; ++j) db(0, j) += n.grad(i, j);
        });
    }

    // repeat a 1xd row n times
    NodeId broadcast_row(NodeId v, size_t n) {
        const Matrix& vv = val(v);
        if (vv.rows != 1) throw std::invalid_argument("broadcast_row: need 1-row input");
        Matrix y(n, vv.cols);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < vv.cols; ++j) y(i, j) = vv(0, j);
        return push(std::move(y), [v](Tape& t, const Node& n_) {
            Matrix& dv = t.grad(v);
            for (size_t i = 0; i < n_.grad.rows; ++i)
                for (size_t j = 0; j < n_.grad.cols; ++j) dv(0, j) += n_.grad(i, j);
        });
    }

    NodeId concat_cols(const std::vector<NodeId>& parts) {
        if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
        size_t rows = val(parts[0]).rows, cols = 0;
        for (NodeId p : parts) {
            if (val(p).rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
            cols += val(p).cols;
        }
        Matrix y(rows, cols);
        size_t off = 0;
        for (NodeId p : parts) {
            const Matrix& vp = val(p);
            for (size_t i = 0; i < rows; ++i)
                for (size_t j = 0; j < vp.cols; ++j) y(i, off + j) = vp(i, j);
            off += vp.cols;
        }
        return push(std::move(y), [parts](Tape& t, const Node& n) {
            size_t off = 0;
            for (NodeId p : parts) {
                Matrix& dp = t.grad(p);
                for (size_t i = 0; i < dp.rows; ++i)
                    for (size_t j = 0; j < dp.cols; ++j) dp(i, j) += n.grad(i, off + j);
                off += dp.cols;
            }
        });
    }

    // ---- softmax ----

    // softmax over the last dimension, independently per row
    NodeId softmax_rows(NodeId x) {
        const Matrix& vx = val(x);
        Matrix y(vx.rows, vx.cols);
        for (size_t i = 0; i < vx.rows; ++i) {
            double m = vx(i, 0);
            for (size_t j = 1; j < vx.cols; ++j) m = std::max(m, vx(i, j));
            double den = 0.0;
            for (size_t j = 0; j < vx.cols; ++j) den += (y(i, j) = std::exp(vx(i, j) - m));
            for (size_t j = 0; j < vx.cols; ++j) y(i, j) /= den;
        }
        return push(std::move(y), [x](Tape& t, const Node& n) {
            const Matrix& vy = n.value;
            Matrix& dx = t.grad(x);
            for (size_t i = 0; i < vy.rows; ++i) {
                double dot = 0.0;
                for (size_t j = 0; j < vy.cols; ++j) dot += n.grad(i, j) * vy(i, j);
                for (size_t j = 0; j < vy.cols; ++j)
                    dx(i, j) += vy(i, j) * (n.grad(i, j) - dot);
            }
        });
    }

    // softmax down each column (across proposals). The denominator uses the
    // order-canonical sum so that permuting rows permutes the output rows and
    // changes nothing else, bit for bit.
    NodeId softmax_cols(NodeId x) {
        const Matrix& vx = val(x);
        Matrix y(vx.rows, vx.cols);
        for (size_t j = 0; j < vx.cols; ++j) {
            double m = vx(0, j);
            for (size_t i = 1; i < vx.rows; ++i) m = std::max(m, vx(i, j));
            std::vector<double> e(vx.rows);
            for (size_t i = 0; i < vx.rows; ++i) e[i] = std::exp(vx(i, j) - m);
            double den = stable_sum(e);
            for (size_t i = 0; i < vx.rows; ++i) y(i, j) = e[i] / den;
        }
        return push(std::move(y), [x](Tape& t, const Node& n) {
            const Matrix& vy = n.value;
            Matrix& dx = t.grad(x);
            for (size_t j = 0; j < vy.cols; ++j) {
                double dot = 0.0;
                for (size_t i = 0; i < vy.rows; ++i) dot += n.grad(i, j) * vy(i, j);
                for (size_t i = 0; i < vy.rows; ++i)
                    dx(i, j) += vy(i, j) * (n.grad(i, j) - dot);
            }
        });
    }

    // ---- reductions and indexing ----

    NodeId column(NodeId x, size_t j) {
        const Matrix& vx = val(x);
        if (j >= vx.cols) throw std::invalid_argument("column: index out of range");
        Matrix y(vx.rows, 1);
        for (size_t i = 0; i < vx.rows; ++i) y(i, 0) = vx(i, j);
        return push(std::move(y), [x, j](Tape& t, const Node& n) {
            Matrix& dx = t.grad(x);
            for (size_t i = 0; i < n.grad.rows; ++i) dx(i, j) += n.grad(i, 0);
        });
    }

    NodeId pick(NodeId x, size_t i, size_t j) {
        const Matrix& vx = val(x);
        if (i >= vx.rows || j >= vx.cols) throw std::invalid_argument("pick: out of range");
        Matrix y(1, 1);
        y(0, 0) = vx(i, j);
        return push(std::move(y), [x, i, j](Tape& t, const Node& n) {
            t.grad(x)(i, j) += n.grad(0, 0);
        });
    }

    // column sums (order-canonical), 1xm result
    NodeId sum_cols(NodeId x) {
        const Matrix& vx = val(x);
        Matrix y(1, vx.cols);
        std::vector<double> acc(vx.rows);
        for (size_t j = 0; j < vx.cols; ++j) {
            for (size_t i = 0; i < vx.rows; ++i) acc[i] = vx(i, j);
            y(0, j) = stable_sum(acc);
        }
        return push(std::move(y), [x](Tape& t, const Node& n) {
            Matrix& dx = t.grad(x);
            for (size_t i = 0; i < dx.rows; ++i)
                for (size_t j = 0; j < dx.cols; ++j) dx(i, j) += n.grad(0, j);
        });
    }

    // sum of all entries (order-canonical), 1x1 result
    NodeId sum_all(NodeId x) {
        const Matrix& vx = val(x);
        Matrix y(1, 1);
        y(0, 0) = stable_sum(vx.a);
        return push(std::move(y), [x](Tape& t, const Node& n) {
            Matrix& dx = t.grad(x);
            for (size_t i = 0; i < dx.size(); ++i) dx.a[i] += n.grad(0, 0);
        });
    }

    // max over all entries, 1x1; subgradient goes to the first maximizer.
    // A NaN anywhere wins the scan, so corrupt values surface instead of
    // being skipped by the comparisons.
    NodeId max_all(NodeId x) {
        const Matrix& vx = val(x);
        size_t arg = 0;
        for (size_t i = 1; i < vx.size() && !std::isnan(vx.a[arg]); ++i)
            if (std::isnan(vx.a[i]) || vx.a[i] > vx.a[arg]) arg = i;
        Matrix y(1, 1);
        y(0, 0) = vx.a[arg];
        return push(std::move(y), [x, arg](Tape& t, const Node& n) {
            t.grad(x).a[arg] += n.grad(0, 0);
        });
    }

    // ---- engine ----

    void backward(NodeId loss) {
        Node& ln = nodes_[size_t(loss)];
        if (ln.value.rows != 1 || ln.value.cols != 1)
            throw std::invalid_argument("backward: loss must be 1x1");
        ln.grad(0, 0) = 1.0;
        for (size_t i = nodes_.size(); i-- > 0;)
            if (nodes_[i].backward) nodes_[i].backward(*this, nodes_[i]);
    }

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Node&)> backward;
    };

    NodeId push(Matrix v, std::function<void(Tape&, const Node&)> bw = nullptr) {
        Node n;
        n.grad = Matrix(v.rows, v.cols);
        n.value = std::move(v);
        n.backward = std::move(bw);
        nodes_.push_back(std::move(n));
        return NodeId(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

}  // namespace wslln
