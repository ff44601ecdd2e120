#include "ada/training.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ada/kernels.hpp"
#include "ada/rng.hpp"

namespace ada {

namespace {

constexpr double kLossCeiling = 1e6;

std::size_t argmax(const Vec& v) {
    return static_cast<std::size_t>(
        std::max_element(v.begin(), v.end()) - v.begin());
}

// Independent per-purpose RNG streams derived from the run seed.
std::uint64_t substream(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer
    std::uint64_t z = seed + salt * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

void TrainConfig::validate() const {
    if (lr0 <= 0.0) {
        throw ConfigError("train: lr0 must be positive, got " + std::to_string(lr0));
    }
    if (lr_drop_factor <= 0.0) {
        throw ConfigError("train: lr_drop_factor must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ConfigError("train: momentum must be in [0,1)");
    }
    if (batch_size == 0) {
        throw ConfigError("train: batch_size must be positive");
    }
    if (embed_dim == 0 || disc_hidden == 0) {
        throw ConfigError("train: embed_dim and disc_hidden must be positive");
    }
    if (loss_weight_domain < 0.0) {
        throw ConfigError("train: loss_weight_domain must be non-negative");
    }
    if (lambda_grl < 0.0) {
        throw ConfigError("train: lambda_grl must be non-negative");
    }
    for (std::size_t i = 0; i + 1 < lr_drop_epochs.size(); ++i) {
        if (lr_drop_epochs[i] >= lr_drop_epochs[i + 1]) {
            throw ConfigError("train: lr_drop_epochs must be strictly increasing");
        }
    }
    // epochs == 0 is the degenerate "return the seeded init" run; the drop
    // schedule is only constrained when training actually happens.
    if (epochs > 0 && !lr_drop_epochs.empty() &&
        lr_drop_epochs.back() >= epochs) {
        throw ConfigError("train: lr_drop_epochs must all be below epochs=" +
                          std::to_string(epochs));
    }
}

std::string epoch_report_json(const EpochReport& r) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["mean_cls"] = r.mean_cls;
    j["mean_dom"] = r.mean_dom;
    j["source_acc"] = r.source_acc;
    if (r.target_acc) {
        j["target_acc"] = *r.target_acc;
    }
    j["lr"] = r.lr;
    return j.dump();
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
    std::size_t drops = 0;
    for (std::size_t d : cfg.lr_drop_epochs) {
        if (d <= epoch) ++drops;
    }
    return cfg.lr0 * std::pow(cfg.lr_drop_factor, static_cast<double>(drops));
}

double lambda_at(double progress, const TrainConfig& cfg) {
    if (cfg.lambda_schedule == LambdaSchedule::Constant) {
        return cfg.lambda_grl;
    }
    const double ramp = 2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0;
    return cfg.lambda_grl * ramp;
}

double total_loss(double verb_loss, double noun_loss,
                  const std::vector<double>& domain_losses,
                  const TrainConfig& cfg) {
    double dom_mean = 0.0;
    if (!domain_losses.empty()) {
        double sum = 0.0;
        for (double d : domain_losses) sum += d;
        dom_mean = sum / static_cast<double>(domain_losses.size());
    }
    return verb_loss + noun_loss + cfg.loss_weight_domain * dom_mean;
}

StepStats train_step(const std::vector<const Tensor2*>& source_frames,
                     const std::vector<std::pair<std::size_t, std::size_t>>& source_labels,
                     const std::vector<const Tensor2*>& target_frames,
                     ModelParams& params, ParamGrads& velocity,
                     const TrainConfig& cfg, double lr, double lambda_grl) {
    if (source_frames.size() != source_labels.size()) {
        throw DimensionError("train_step: " + std::to_string(source_frames.size()) +
                             " source videos but " +
                             std::to_string(source_labels.size()) + " labels");
    }
    if (source_frames.empty() && target_frames.empty()) {
        throw DataError("train_step: empty batch");
    }

    std::vector<ForwardCache> caches;
    caches.reserve(source_frames.size() + target_frames.size());
    StepStats stats;
    for (std::size_t i = 0; i < source_frames.size(); ++i) {
        caches.push_back(forward_train(*source_frames[i], params,
                                       source_labels[i], cfg.run_mode,
                                       cfg.combine_rule, cfg.rectify_wp));
        const ForwardCache& c = caches.back();
        stats.cls_sum += c.cls_loss();
        stats.dom_sum += c.dom_loss();
        stats.src_correct += (c.verb_correct() && c.noun_correct()) ? 1 : 0;
    }
    for (const Tensor2* frames : target_frames) {
        caches.push_back(forward_train(*frames, params, std::nullopt,
                                       cfg.run_mode, cfg.combine_rule,
                                       cfg.rectify_wp));
        stats.dom_sum += caches.back().dom_loss();
    }
    stats.src_count = source_frames.size();
    stats.all_count = caches.size();

    for (const ForwardCache& c : caches) {
        const double worst = std::max(c.cls_loss(), c.dom_loss());
        if (!std::isfinite(worst) || worst > kLossCeiling) {
            throw DivergenceError("train_step: loss diverged (cls=" +
                                  std::to_string(c.cls_loss()) + ", dom=" +
                                  std::to_string(c.dom_loss()) + ")");
        }
    }

    ParamGrads grads = backward_batch(caches, params, cfg.loss_weight_domain,
                                      lambda_grl, cfg.combine_rule,
                                      cfg.rectify_wp);
    // for_each_array visits fields in a fixed order, so the three walks stay
    // aligned.
    std::vector<std::pair<double*, std::size_t>> p_arrays, v_arrays, g_arrays;
    params.for_each_array(
        [&](double* p, std::size_t n) { p_arrays.emplace_back(p, n); });
    velocity.for_each_array(
        [&](double* p, std::size_t n) { v_arrays.emplace_back(p, n); });
    grads.for_each_array(
        [&](double* p, std::size_t n) { g_arrays.emplace_back(p, n); });
    for (std::size_t i = 0; i < p_arrays.size(); ++i) {
        kernels::sgd_momentum(p_arrays[i].first, v_arrays[i].first,
                              g_arrays[i].first, cfg.momentum, lr,
                              p_arrays[i].second);
    }
    return stats;
}

namespace {

double eval_action_top1(const FrameFeatureSet& features, const LabelSet& labels,
                        const ModelParams& params) {
    if (features.videos.empty()) return 0.0;
    std::size_t correct = 0;
    std::vector<std::string> missing;
    for (const auto& video : features.videos) {
        const LabelSet::Entry* e = labels.find(video.id);
        if (!e) {
            missing.push_back(video.id);
            continue;
        }
        const Vec f_v = video_feature(video.frames, params);
        const HeadLogits logits = classify(f_v, params);
        if (argmax(logits.verb) == e->verb && argmax(logits.noun) == e->noun) {
            ++correct;
        }
    }
    if (!missing.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < missing.size() && i < 5; ++i) {
            ids += (i ? ", " : "") + missing[i];
        }
        throw DataError("action_top1: " + std::to_string(missing.size()) +
                        " videos missing labels: " + ids);
    }
    return static_cast<double>(correct) /
           static_cast<double>(features.videos.size());
}

}  // namespace

double action_top1(const FrameFeatureSet& features, const LabelSet& labels,
                   const ModelParams& params) {
    return eval_action_top1(features, labels, params);
}

FitResult fit(const FrameFeatureSet& source, const LabelSet& source_labels,
              const FrameFeatureSet& target, const TrainConfig& cfg,
              const LabelSet* target_labels,
              const std::function<void(const EpochReport&)>& on_epoch) {
    cfg.validate();
    if (!target.videos.empty() && target.feat_dim != source.feat_dim) {
        throw DimensionError("fit: source d_in " + std::to_string(source.feat_dim) +
                             " does not match target d_in " +
                             std::to_string(target.feat_dim));
    }

    // Resolve labels for every source video up front.
    std::vector<std::pair<std::size_t, std::size_t>> src_gt(source.videos.size());
    for (std::size_t i = 0; i < source.videos.size(); ++i) {
        const LabelSet::Entry* e = source_labels.find(source.videos[i].id);
        if (!e) {
            throw DataError("fit: source video \"" + source.videos[i].id +
                            "\" has no label");
        }
        src_gt[i] = {e->verb, e->noun};
    }

    const ModelDims dims{source.feat_dim,       cfg.embed_dim,
                         cfg.gcn_depth,         source_labels.num_verbs,
                         source_labels.num_nouns, cfg.disc_hidden};
    FitResult result{ModelParams::init(dims, cfg.rng_seed), {}};
    if (cfg.epochs == 0 || source.videos.empty()) {
        return result;
    }

    ParamGrads velocity = ModelParams::zeros(dims);
    Rng src_rng(substream(cfg.rng_seed, 1));
    Rng tgt_rng(substream(cfg.rng_seed, 2));

    const std::size_t n_src = source.videos.size();
    const std::size_t n_tgt = target.videos.size();
    const std::size_t n_long = std::max(n_src, n_tgt);
    const std::size_t steps_per_epoch =
        (n_long + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    std::vector<std::size_t> src_order(n_src), tgt_order(n_tgt);
    for (std::size_t i = 0; i < n_src; ++i) src_order[i] = i;
    for (std::size_t i = 0; i < n_tgt; ++i) tgt_order[i] = i;

    std::size_t global_step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        src_rng.shuffle(src_order);
        tgt_rng.shuffle(tgt_order);

        double cls_sum = 0.0, dom_sum = 0.0;
        std::size_t src_correct = 0, src_seen = 0, all_seen = 0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            const double progress =
                total_steps > 1
                    ? static_cast<double>(global_step) /
                          static_cast<double>(total_steps - 1)
                    : 1.0;
            const double lambda = lambda_at(progress, cfg);

            const std::size_t begin = step * cfg.batch_size;
            const std::size_t count = std::min(cfg.batch_size, n_long - begin);
            std::vector<const Tensor2*> src_frames, tgt_frames;
            std::vector<std::pair<std::size_t, std::size_t>> batch_gt;
            src_frames.reserve(count);
            batch_gt.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t s = src_order[(begin + i) % n_src];
                src_frames.push_back(&source.videos[s].frames);
                batch_gt.push_back(src_gt[s]);
            }
            if (n_tgt > 0) {
                tgt_frames.reserve(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const std::size_t t = tgt_order[(begin + i) % n_tgt];
                    tgt_frames.push_back(&target.videos[t].frames);
                }
            }

            StepStats stats;
            try {
                stats = train_step(src_frames, batch_gt, tgt_frames,
                                   result.params, velocity, cfg, lr, lambda);
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " at epoch " +
                                      std::to_string(epoch) + " step " +
                                      std::to_string(step));
            }
            cls_sum += stats.cls_sum;
            dom_sum += stats.dom_sum;
            src_correct += stats.src_correct;
            src_seen += stats.src_count;
            all_seen += stats.all_count;
            ++global_step;
        }

        EpochReport report;
        report.epoch = epoch;
        report.mean_cls = src_seen ? cls_sum / static_cast<double>(src_seen) : 0.0;
        report.mean_dom = all_seen ? dom_sum / static_cast<double>(all_seen) : 0.0;
        report.source_acc =
            src_seen ? static_cast<double>(src_correct) / static_cast<double>(src_seen)
                     : 0.0;
        report.lr = lr;
        if (target_labels && !target.videos.empty()) {
            report.target_acc =
                eval_action_top1(target, *target_labels, result.params);
        }
        result.reports.push_back(report);
        if (on_epoch) on_epoch(result.reports.back());
    }
    return result;
}

}  // namespace ada
