#include "ada/numerics.hpp"

#include <cmath>

#include "ada/kernels.hpp"

namespace ada {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: dimension mismatch (" + shape_str(a) +
                             ")·(" + shape_str(b) + ")");
    }
    Tensor2 out(a.rows, b.cols);
    kernels::matmul_accum(out.data.data(), a.data.data(), b.data.data(),
                          a.rows, a.cols, b.cols);
    return out;
}

Tensor2 affine_forward(const Tensor2& x, const Tensor2& w, const Vec& b) {
    if (x.cols != w.rows) {
        throw DimensionError("affine_forward: dimension mismatch (" +
                             shape_str(x) + ")·(" + shape_str(w) + ")");
    }
    if (b.size() != w.cols) {
        throw DimensionError("affine_forward: bias length " +
                             std::to_string(b.size()) + " does not match weights (" +
                             shape_str(w) + ")");
    }
    // Seed the output with the broadcast bias, then accumulate x·w on top.
    Tensor2 out(x.rows, w.cols);
    for (std::size_t r = 0; r < out.rows; ++r) {
        double* dst = out.row(r);
        for (std::size_t c = 0; c < out.cols; ++c) dst[c] = b[c];
    }
    kernels::matmul_accum(out.data.data(), x.data.data(), w.data.data(),
                          x.rows, x.cols, w.cols);
    return out;
}

LayerGrads affine_backward(const Tensor2& x, const Tensor2& w,
                           const Tensor2& upstream) {
    if (upstream.rows != x.rows || upstream.cols != w.cols || x.cols != w.rows) {
        throw DimensionError("affine_backward: inconsistent shapes x=" +
                             shape_str(x) + " w=" + shape_str(w) +
                             " upstream=" + shape_str(upstream));
    }
    LayerGrads g;
    g.d_weights = matmul(transposed(x), upstream);
    g.d_bias = col_sums(upstream);
    g.d_input = matmul(upstream, transposed(w));
    return g;
}

Tensor2 relu_forward(const Tensor2& x) {
    Tensor2 out(x.rows, x.cols);
    kernels::relu(out.data.data(), x.data.data(), x.size());
    return out;
}

Tensor2 relu_backward(const Tensor2& x, const Tensor2& upstream) {
    if (x.rows != upstream.rows || x.cols != upstream.cols) {
        throw DimensionError("relu_backward: shape mismatch x=" + shape_str(x) +
                             " upstream=" + shape_str(upstream));
    }
    Tensor2 out(x.rows, x.cols);
    kernels::relu_grad(out.data.data(), x.data.data(), upstream.data.data(),
                       x.size());
    return out;
}

SoftmaxXent softmax_xent(const Vec& logits, std::size_t label) {
    if (logits.empty()) {
        throw DimensionError("softmax_xent: empty logits");
    }
    if (label >= logits.size()) {
        throw DataError("softmax_xent: label " + std::to_string(label) +
                        " out of range for " + std::to_string(logits.size()) +
                        " classes");
    }
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    SoftmaxXent out;
    out.probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.probs[i] = std::exp(logits[i] - mx);
        sum += out.probs[i];
    }
    for (double& p : out.probs) p /= sum;
    // -log p[label] in shifted coordinates; avoids the 0 * inf trap when the
    // winning logit dominates.
    out.loss = std::log(sum) - (logits[label] - mx);
    out.d_logits = out.probs;
    out.d_logits[label] -= 1.0;
    return out;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

SigmoidBce sigmoid_bce(double logit, int label) {
    // max(z,0) - z*y + log1p(exp(-|z|)); exact for the overflow-prone tails.
    const double z = logit;
    const double y = static_cast<double>(label);
    SigmoidBce out;
    out.loss = std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    out.d_logit = stable_sigmoid(z) - y;
    return out;
}

Vec mean_pool(const Tensor2& frames) {
    if (frames.rows == 0) {
        throw DataError("mean_pool: empty video (0 frames)");
    }
    return col_means(frames);
}

Tensor2 mean_pool_backward(const Vec& upstream, std::size_t t_rows) {
    Tensor2 out(t_rows, upstream.size());
    const double inv = static_cast<double>(t_rows);
    for (std::size_t r = 0; r < t_rows; ++r) {
        double* dst = out.row(r);
        for (std::size_t c = 0; c < upstream.size(); ++c) dst[c] = upstream[c] / inv;
    }
    return out;
}

}  // namespace ada
