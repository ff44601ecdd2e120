#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ada/numerics.hpp"

// The adaptation network: FC embedder, fully-connected GCN encoder with
// uniform mean aggregation, average pooling, verb/noun classifier heads,
// classifier-weight disentanglement, gradient-reversal layer and a 2-layer
// domain discriminator. Forward and backward are written out by hand; the
// full-model gradient is finite-difference checked in the tests.

namespace ada {

enum class RunMode { Baseline, Ada };

// How the ground-truth verb and noun classifier columns combine into the
// disentanglement weight vector.
enum class CombineRule { Average, VerbOnly, NounOnly, Product };

struct ModelDims {
    std::size_t d_in = 0;
    std::size_t embed_dim = 0;    // D
    std::size_t gcn_depth = 0;    // L
    std::size_t num_verbs = 0;    // |V|
    std::size_t num_nouns = 0;    // |N|
    std::size_t disc_hidden = 0;  // H

    bool operator==(const ModelDims&) const = default;
};

struct GcnLayer {
    Tensor2 w;  // D x D
    Vec b;      // D

    bool operator==(const GcnLayer&) const = default;
};

// All learnable weights. Field order here is also the checkpoint layout and
// the parameter-initialization draw order.
struct ModelParams {
    Tensor2 embed_w;  // d_in x D
    Vec embed_b;      // D
    std::vector<GcnLayer> gcn;
    Tensor2 verb_w;   // D x |V|; column v is the verb classifier for class v
    Vec verb_b;       // |V|
    Tensor2 noun_w;   // D x |N|
    Vec noun_b;       // |N|
    Tensor2 disc_w1;  // D x H
    Vec disc_b1;      // H
    Tensor2 disc_w2;  // H x 1
    double disc_b2 = 0.0;

    ModelDims dims() const;

    bool operator==(const ModelParams&) const = default;

    // Glorot-uniform weights, zero biases, drawn deterministically from seed
    // in field order.
    static ModelParams init(const ModelDims& dims, std::uint64_t seed);
    static ModelParams zeros(const ModelDims& dims);

    // Visits every parameter array in field order: fn(double*, count).
    template <typename Fn>
    void for_each_array(Fn&& fn) {
        fn(embed_w.data.data(), embed_w.size());
        fn(embed_b.data(), embed_b.size());
        for (auto& layer : gcn) {
            fn(layer.w.data.data(), layer.w.size());
            fn(layer.b.data(), layer.b.size());
        }
        fn(verb_w.data.data(), verb_w.size());
        fn(verb_b.data(), verb_b.size());
        fn(noun_w.data.data(), noun_w.size());
        fn(noun_b.data(), noun_b.size());
        fn(disc_w1.data.data(), disc_w1.size());
        fn(disc_b1.data(), disc_b1.size());
        fn(disc_w2.data.data(), disc_w2.size());
        fn(&disc_b2, 1);
    }

    template <typename Fn>
    void for_each_array(Fn&& fn) const {
        const_cast<ModelParams*>(this)->for_each_array(
            [&fn](double* p, std::size_t n) { fn(static_cast<const double*>(p), n); });
    }

    std::size_t parameter_count() const;
};

using ParamGrads = ModelParams;

// FC embedding of frame features into graph space; no nonlinearity.
Tensor2 embed(const Tensor2& frames, const ModelParams& p);

// All GCN layers: h <- relu(A.h.W_l + b_l) with A the all-ones T x T matrix
// scaled by 1/T (mean aggregation over the fully connected frame graph,
// self-loops included).
Tensor2 gcn_forward(const Tensor2& h, const ModelParams& p);

// mean_pool(gcn_forward(embed(frames))) = the video-level feature F_v.
Vec video_feature(const Tensor2& frames, const ModelParams& p);

struct HeadLogits {
    Vec verb;
    Vec noun;
};

// Two independent affine heads on the same video feature.
HeadLogits classify(const Vec& f_v, const ModelParams& p);

// The ground-truth classifier columns combined per rule; optionally rectified.
Vec combined_head_column(const ModelParams& p, std::size_t verb_gt,
                         std::size_t noun_gt, CombineRule rule);

// Action-relevant feature: combined column (elementwise) video feature.
Vec disentangle(const Vec& f_v, const ModelParams& p, std::size_t verb_gt,
                std::size_t noun_gt, CombineRule rule = CombineRule::Average,
                bool rectify = false);

// Gradient-reversal layer. The forward pass is the identity on features (no
// code needed); the backward pass flips and scales the incoming gradient.
Vec grl_backward(const Vec& upstream, double lambda_grl);

// Domain logit: relu(feature.w1 + b1).w2 + b2.
double discriminate(const Vec& feature, const ModelParams& p);

// Everything the analytic backward needs from one video's forward pass.
struct ForwardCache {
    const Tensor2* frames = nullptr;  // borrowed; must outlive the backward
    Tensor2 embedded;                 // T x D
    std::vector<Vec> layer_in_mean;   // per layer: column mean of its input
    std::vector<Tensor2> layer_pre;   // per layer: pre-activation (rows equal)
    Vec video_feat;                   // F_v

    bool is_source = false;
    std::size_t verb_gt = 0, noun_gt = 0;
    SoftmaxXent verb_xent, noun_xent;  // source only

    bool disc_on_disentangled = false;  // ada mode, source sample
    Vec wp_raw;      // combined columns before optional rectification
    Vec wp;          // after rectification (== wp_raw when rectify is off)
    Vec disc_input;  // F_d fed to the discriminator (post-GRL identity)
    Vec disc_pre;    // F_d.w1 + b1
    double disc_logit = 0.0;
    double domain_label = 0.0;  // 1 = source, 0 = target
    SigmoidBce dom_bce;

    double cls_loss() const { return verb_xent.loss + noun_xent.loss; }
    double dom_loss() const { return dom_bce.loss; }
    bool verb_correct() const;
    bool noun_correct() const;
};

// Training-time forward pass for one video. Source samples carry labels;
// in Ada mode their discriminator input is the disentangled feature, in
// Baseline mode (and for target samples always) it is F_v.
ForwardCache forward_train(const Tensor2& frames, const ModelParams& p,
                           std::optional<std::pair<std::size_t, std::size_t>> labels,
                           RunMode mode, CombineRule rule, bool rectify_wp);

// Accumulates d(cls_scale * cls_loss + dom_scale * dom_loss)/d(params) into
// grads. Domain gradients reach the discriminator weights with sign +1 and
// the trunk through the reversal layer (times -lambda_grl).
void backward_accumulate(const ForwardCache& cache, const ModelParams& p,
                         double cls_scale, double dom_scale, double lambda_grl,
                         CombineRule rule, bool rectify_wp, ParamGrads& grads);

// Gradients of  mean_src(cls_loss) + loss_weight_domain * mean_all(dom_loss)
// over a batch of cached forward passes.
ParamGrads backward_batch(const std::vector<ForwardCache>& caches,
                          const ModelParams& p, double loss_weight_domain,
                          double lambda_grl, CombineRule rule, bool rectify_wp);

}  // namespace ada
