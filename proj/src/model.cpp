#include "ada/model.hpp"

#include <algorithm>
#include <cmath>

#include "ada/kernels.hpp"
#include "ada/rng.hpp"

namespace ada {

namespace {

Tensor2 broadcast_rows(const Vec& row, std::size_t t) {
    Tensor2 out(t, row.size());
    for (std::size_t r = 0; r < t; ++r) {
        std::copy(row.begin(), row.end(), out.row(r));
    }
    return out;
}

void glorot_fill(Tensor2& w, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (double& x : w.data) x = rng.uniform(-a, a);
}

std::size_t argmax(const Vec& v) {
    return static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
}

Vec head_forward(const Vec& f_v, const Tensor2& w, const Vec& b) {
    Tensor2 x(1, f_v.size(), f_v);
    return affine_forward(x, w, b).data;
}

}  // namespace

ModelDims ModelParams::dims() const {
    return ModelDims{embed_w.rows,  embed_w.cols, gcn.size(),
                     verb_w.cols,   noun_w.cols,  disc_w1.cols};
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each_array([&n](const double*, std::size_t len) { n += len; });
    return n;
}

ModelParams ModelParams::zeros(const ModelDims& d) {
    ModelParams p;
    p.embed_w = Tensor2(d.d_in, d.embed_dim);
    p.embed_b = Vec(d.embed_dim, 0.0);
    p.gcn.resize(d.gcn_depth);
    for (auto& layer : p.gcn) {
        layer.w = Tensor2(d.embed_dim, d.embed_dim);
        layer.b = Vec(d.embed_dim, 0.0);
    }
    p.verb_w = Tensor2(d.embed_dim, d.num_verbs);
    p.verb_b = Vec(d.num_verbs, 0.0);
    p.noun_w = Tensor2(d.embed_dim, d.num_nouns);
    p.noun_b = Vec(d.num_nouns, 0.0);
    p.disc_w1 = Tensor2(d.embed_dim, d.disc_hidden);
    p.disc_b1 = Vec(d.disc_hidden, 0.0);
    p.disc_w2 = Tensor2(d.disc_hidden, 1);
    p.disc_b2 = 0.0;
    return p;
}

ModelParams ModelParams::init(const ModelDims& d, std::uint64_t seed) {
    ModelParams p = zeros(d);
    Rng rng(seed);
    glorot_fill(p.embed_w, rng);
    for (auto& layer : p.gcn) glorot_fill(layer.w, rng);
    glorot_fill(p.verb_w, rng);
    glorot_fill(p.noun_w, rng);
    glorot_fill(p.disc_w1, rng);
    glorot_fill(p.disc_w2, rng);
    return p;
}

Tensor2 embed(const Tensor2& frames, const ModelParams& p) {
    if (frames.cols != p.embed_w.rows) {
        throw DimensionError("embed: frame feature dim " +
                             std::to_string(frames.cols) +
                             " does not match model d_in " +
                             std::to_string(p.embed_w.rows));
    }
    return affine_forward(frames, p.embed_w, p.embed_b);
}

Tensor2 gcn_forward(const Tensor2& h_in, const ModelParams& p) {
    if (h_in.rows == 0) {
        throw DataError("gcn_forward: empty video (0 frames)");
    }
    if (h_in.cols != p.embed_w.cols) {
        throw DimensionError("gcn_forward: input dim " +
                             std::to_string(h_in.cols) + " does not match D=" +
                             std::to_string(p.embed_w.cols));
    }
    Tensor2 h = h_in;
    for (const auto& layer : p.gcn) {
        // Uniform mean aggregation makes every row of A.h equal to the
        // column mean, so one affine on the mean row suffices.
        Vec m = col_means(h);
        const std::size_t width = m.size();
        Tensor2 pre_row = affine_forward(Tensor2(1, width, std::move(m)),
                                         layer.w, layer.b);
        h = relu_forward(broadcast_rows(pre_row.data, h.rows));
    }
    return h;
}

Vec video_feature(const Tensor2& frames, const ModelParams& p) {
    return mean_pool(gcn_forward(embed(frames, p), p));
}

HeadLogits classify(const Vec& f_v, const ModelParams& p) {
    return HeadLogits{head_forward(f_v, p.verb_w, p.verb_b),
                      head_forward(f_v, p.noun_w, p.noun_b)};
}

Vec combined_head_column(const ModelParams& p, std::size_t verb_gt,
                         std::size_t noun_gt, CombineRule rule) {
    if (verb_gt >= p.verb_w.cols) {
        throw DataError("disentangle: verb label " + std::to_string(verb_gt) +
                        " out of range for " + std::to_string(p.verb_w.cols) +
                        " classes");
    }
    if (noun_gt >= p.noun_w.cols) {
        throw DataError("disentangle: noun label " + std::to_string(noun_gt) +
                        " out of range for " + std::to_string(p.noun_w.cols) +
                        " classes");
    }
    const std::size_t d = p.embed_w.cols;
    Vec out(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double v = p.verb_w.at(i, verb_gt);
        const double n = p.noun_w.at(i, noun_gt);
        switch (rule) {
            case CombineRule::Average: out[i] = 0.5 * (v + n); break;
            case CombineRule::VerbOnly: out[i] = v; break;
            case CombineRule::NounOnly: out[i] = n; break;
            case CombineRule::Product: out[i] = v * n; break;
        }
    }
    return out;
}

Vec disentangle(const Vec& f_v, const ModelParams& p, std::size_t verb_gt,
                std::size_t noun_gt, CombineRule rule, bool rectify) {
    Vec wp = combined_head_column(p, verb_gt, noun_gt, rule);
    if (rectify) {
        kernels::relu(wp.data(), wp.data(), wp.size());
    }
    Vec out(f_v.size());
    kernels::hadamard(out.data(), wp.data(), f_v.data(), f_v.size());
    return out;
}

Vec grl_backward(const Vec& upstream, double lambda_grl) {
    Vec out(upstream.size());
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        out[i] = -lambda_grl * upstream[i];
    }
    return out;
}

double discriminate(const Vec& feature, const ModelParams& p) {
    if (feature.size() != p.disc_w1.rows) {
        throw DimensionError("discriminate: feature dim " +
                             std::to_string(feature.size()) +
                             " does not match discriminator input " +
                             std::to_string(p.disc_w1.rows));
    }
    Vec pre = head_forward(feature, p.disc_w1, p.disc_b1);
    Vec hidden(pre.size());
    kernels::relu(hidden.data(), pre.data(), pre.size());
    double logit = p.disc_b2;
    for (std::size_t h = 0; h < hidden.size(); ++h) {
        logit += hidden[h] * p.disc_w2.at(h, 0);
    }
    return logit;
}

bool ForwardCache::verb_correct() const {
    return is_source && argmax(verb_xent.probs) == verb_gt;
}

bool ForwardCache::noun_correct() const {
    return is_source && argmax(noun_xent.probs) == noun_gt;
}

ForwardCache forward_train(const Tensor2& frames, const ModelParams& p,
                           std::optional<std::pair<std::size_t, std::size_t>> labels,
                           RunMode mode, CombineRule rule, bool rectify_wp) {
    if (frames.rows == 0) {
        throw DataError("forward_train: empty video (0 frames)");
    }
    ForwardCache c;
    c.frames = &frames;
    c.embedded = embed(frames, p);

    Tensor2 h = c.embedded;
    for (const auto& layer : p.gcn) {
        Vec m = col_means(h);
        c.layer_in_mean.push_back(m);
        const std::size_t width = m.size();
        Tensor2 pre_row = affine_forward(Tensor2(1, width, std::move(m)),
                                         layer.w, layer.b);
        Tensor2 pre = broadcast_rows(pre_row.data, h.rows);
        h = relu_forward(pre);
        c.layer_pre.push_back(std::move(pre));
    }
    c.video_feat = mean_pool(h);

    if (labels) {
        c.is_source = true;
        c.verb_gt = labels->first;
        c.noun_gt = labels->second;
        HeadLogits logits = classify(c.video_feat, p);
        if (c.verb_gt >= logits.verb.size() || c.noun_gt >= logits.noun.size()) {
            throw DataError("forward_train: label (" + std::to_string(c.verb_gt) +
                            "," + std::to_string(c.noun_gt) +
                            ") out of range for heads (" +
                            std::to_string(logits.verb.size()) + "," +
                            std::to_string(logits.noun.size()) + ")");
        }
        c.verb_xent = softmax_xent(logits.verb, c.verb_gt);
        c.noun_xent = softmax_xent(logits.noun, c.noun_gt);
        c.domain_label = 1.0;
    } else {
        c.domain_label = 0.0;
    }

    if (mode == RunMode::Ada && c.is_source) {
        c.wp_raw = combined_head_column(p, c.verb_gt, c.noun_gt, rule);
        c.wp = c.wp_raw;
        if (rectify_wp) {
            kernels::relu(c.wp.data(), c.wp_raw.data(), c.wp_raw.size());
        }
        c.disc_input.resize(c.video_feat.size());
        kernels::hadamard(c.disc_input.data(), c.wp.data(), c.video_feat.data(),
                          c.video_feat.size());
        c.disc_on_disentangled = true;
    } else {
        c.disc_input = c.video_feat;
    }

    // GRL forward is the identity, so disc_input goes in untouched.
    c.disc_pre = head_forward(c.disc_input, p.disc_w1, p.disc_b1);
    Vec hidden(c.disc_pre.size());
    kernels::relu(hidden.data(), c.disc_pre.data(), c.disc_pre.size());
    c.disc_logit = p.disc_b2;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        c.disc_logit += hidden[i] * p.disc_w2.at(i, 0);
    }
    c.dom_bce = sigmoid_bce(c.disc_logit, static_cast<int>(c.domain_label));
    return c;
}

void backward_accumulate(const ForwardCache& cache, const ModelParams& p,
                         double cls_scale, double dom_scale, double lambda_grl,
                         CombineRule rule, bool rectify_wp, ParamGrads& grads) {
    const std::size_t dim = p.embed_w.cols;
    const std::size_t t_rows = cache.embedded.rows;
    const std::size_t n_hidden = p.disc_w1.cols;
    Vec d_fv(dim, 0.0);

    if (cache.is_source && cls_scale != 0.0) {
        Vec d_verb(cache.verb_xent.d_logits);
        Vec d_noun(cache.noun_xent.d_logits);
        kernels::scale(d_verb.data(), cls_scale, d_verb.size());
        kernels::scale(d_noun.data(), cls_scale, d_noun.size());
        kernels::axpy(grads.verb_b.data(), 1.0, d_verb.data(), d_verb.size());
        kernels::axpy(grads.noun_b.data(), 1.0, d_noun.data(), d_noun.size());
        for (std::size_t i = 0; i < dim; ++i) {
            kernels::axpy(grads.verb_w.row(i), cache.video_feat[i],
                          d_verb.data(), d_verb.size());
            kernels::axpy(grads.noun_w.row(i), cache.video_feat[i],
                          d_noun.data(), d_noun.size());
            double acc = 0.0;
            const double* vw = p.verb_w.row(i);
            for (std::size_t v = 0; v < d_verb.size(); ++v) acc += vw[v] * d_verb[v];
            const double* nw = p.noun_w.row(i);
            for (std::size_t n = 0; n < d_noun.size(); ++n) acc += nw[n] * d_noun[n];
            d_fv[i] += acc;
        }
    }

    if (dom_scale != 0.0) {
        const double d_logit = dom_scale * cache.dom_bce.d_logit;
        grads.disc_b2 += d_logit;

        Vec hidden(n_hidden);
        kernels::relu(hidden.data(), cache.disc_pre.data(), n_hidden);
        Vec d_hidden(n_hidden);
        for (std::size_t h = 0; h < n_hidden; ++h) {
            grads.disc_w2.at(h, 0) += hidden[h] * d_logit;
            d_hidden[h] = p.disc_w2.at(h, 0) * d_logit;
        }
        Vec d_pre(n_hidden);
        kernels::relu_grad(d_pre.data(), cache.disc_pre.data(), d_hidden.data(),
                           n_hidden);
        kernels::axpy(grads.disc_b1.data(), 1.0, d_pre.data(), n_hidden);

        Vec d_fd(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            kernels::axpy(grads.disc_w1.row(i), cache.disc_input[i],
                          d_pre.data(), n_hidden);
            double acc = 0.0;
            const double* w1 = p.disc_w1.row(i);
            for (std::size_t h = 0; h < n_hidden; ++h) acc += w1[h] * d_pre[h];
            d_fd[i] = acc;
        }

        if (lambda_grl != 0.0) {
            Vec d_trunk = grl_backward(d_fd, lambda_grl);
            if (cache.disc_on_disentangled) {
                // disc input was wp (.) f_v: split the gradient between the
                // feature and, through the combination rule, the head columns.
                Vec d_wp(dim);
                for (std::size_t i = 0; i < dim; ++i) {
                    d_fv[i] += cache.wp[i] * d_trunk[i];
                    d_wp[i] = cache.video_feat[i] * d_trunk[i];
                }
                if (rectify_wp) {
                    kernels::relu_grad(d_wp.data(), cache.wp_raw.data(),
                                       d_wp.data(), dim);
                }
                switch (rule) {
                    case CombineRule::Average:
                        for (std::size_t i = 0; i < dim; ++i) {
                            grads.verb_w.at(i, cache.verb_gt) += 0.5 * d_wp[i];
                            grads.noun_w.at(i, cache.noun_gt) += 0.5 * d_wp[i];
                        }
                        break;
                    case CombineRule::VerbOnly:
                        for (std::size_t i = 0; i < dim; ++i) {
                            grads.verb_w.at(i, cache.verb_gt) += d_wp[i];
                        }
                        break;
                    case CombineRule::NounOnly:
                        for (std::size_t i = 0; i < dim; ++i) {
                            grads.noun_w.at(i, cache.noun_gt) += d_wp[i];
                        }
                        break;
                    case CombineRule::Product:
                        for (std::size_t i = 0; i < dim; ++i) {
                            grads.verb_w.at(i, cache.verb_gt) +=
                                p.noun_w.at(i, cache.noun_gt) * d_wp[i];
                            grads.noun_w.at(i, cache.noun_gt) +=
                                p.verb_w.at(i, cache.verb_gt) * d_wp[i];
                        }
                        break;
                }
            } else {
                kernels::axpy(d_fv.data(), 1.0, d_trunk.data(), dim);
            }
        }
    }

    // Trunk: pooling, GCN stack, embedding.
    Tensor2 d_h = mean_pool_backward(d_fv, t_rows);
    for (std::size_t l = p.gcn.size(); l-- > 0;) {
        const auto& layer = p.gcn[l];
        Tensor2 d_pre = relu_backward(cache.layer_pre[l], d_h);
        Vec cs = col_sums(d_pre);
        const Vec& m = cache.layer_in_mean[l];
        for (std::size_t a = 0; a < dim; ++a) {
            kernels::axpy(grads.gcn[l].w.row(a), m[a], cs.data(), dim);
        }
        kernels::axpy(grads.gcn[l].b.data(), 1.0, cs.data(), dim);
        // Gradient through the mean aggregation: every input row gets
        // (cs . W^T) / T.
        Vec row(dim, 0.0);
        for (std::size_t j = 0; j < dim; ++j) {
            const double* wr = layer.w.row(j);
            double acc = 0.0;
            for (std::size_t b = 0; b < dim; ++b) acc += wr[b] * cs[b];
            row[j] = acc / static_cast<double>(t_rows);
        }
        d_h = broadcast_rows(row, t_rows);
    }

    Tensor2 frames_t = transposed(*cache.frames);
    kernels::matmul_accum(grads.embed_w.data.data(), frames_t.data.data(),
                          d_h.data.data(), frames_t.rows, frames_t.cols,
                          d_h.cols);
    Vec cs0 = col_sums(d_h);
    kernels::axpy(grads.embed_b.data(), 1.0, cs0.data(), cs0.size());
}

ParamGrads backward_batch(const std::vector<ForwardCache>& caches,
                          const ModelParams& p, double loss_weight_domain,
                          double lambda_grl, CombineRule rule,
                          bool rectify_wp) {
    ParamGrads grads = ModelParams::zeros(p.dims());
    std::size_t n_src = 0;
    for (const auto& c : caches) n_src += c.is_source ? 1 : 0;
    const double cls_scale = n_src > 0 ? 1.0 / static_cast<double>(n_src) : 0.0;
    const double dom_scale =
        caches.empty() ? 0.0
                       : loss_weight_domain / static_cast<double>(caches.size());
    for (const auto& c : caches) {
        backward_accumulate(c, p, c.is_source ? cls_scale : 0.0, dom_scale,
                            lambda_grl, rule, rectify_wp, grads);
    }
    return grads;
}

}  // namespace ada
