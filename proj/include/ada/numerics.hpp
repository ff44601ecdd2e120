#pragma once

#include <cstddef>

#include "ada/tensor.hpp"

// Differentiable layer primitives: forward passes plus hand-derived analytic
// backward passes. Everything is a pure function of its inputs and runs in
// 64-bit floats; every backward here is checked against central finite
// differences in the test suite.

namespace ada {

struct LayerGrads {
    Tensor2 d_weights;
    Vec d_bias;
    Tensor2 d_input;
};

// a (m x k) . b (k x n). Throws DimensionError naming both shapes.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);

// x . w + b, bias broadcast over rows.
Tensor2 affine_forward(const Tensor2& x, const Tensor2& w, const Vec& b);

// Gradients of an affine layer: d_w = x^T . g, d_b = column sums of g,
// d_x = g . w^T.
LayerGrads affine_backward(const Tensor2& x, const Tensor2& w,
                           const Tensor2& upstream);

Tensor2 relu_forward(const Tensor2& x);

// Masks the upstream gradient where x <= 0 (the subgradient at 0 is 0).
Tensor2 relu_backward(const Tensor2& x, const Tensor2& upstream);

struct SoftmaxXent {
    double loss;
    Vec probs;
    Vec d_logits;  // probs - one_hot(label)
};

// Numerically stable softmax cross-entropy against a single class index.
SoftmaxXent softmax_xent(const Vec& logits, std::size_t label);

struct SigmoidBce {
    double loss;
    double d_logit;  // sigmoid(logit) - label
};

// Stable binary cross-entropy of sigmoid(logit) against label in {0, 1}.
SigmoidBce sigmoid_bce(double logit, int label);

double stable_sigmoid(double x);

// Column-wise mean over rows. Throws on an empty input.
Vec mean_pool(const Tensor2& frames);

// Backward of mean_pool: each row receives upstream / T.
Tensor2 mean_pool_backward(const Vec& upstream, std::size_t t_rows);

}  // namespace ada
