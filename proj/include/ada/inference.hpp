#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ada/data.hpp"
#include "ada/model.hpp"

namespace ada {

struct Prediction {
    std::string video_id;
    Vec p_verb;                      // softmax verb probabilities, sums to 1
    Vec p_noun;                      // softmax noun probabilities, sums to 1
    std::optional<Tensor2> p_action; // |V| x |N|, set by refine/ensemble
};

struct PredictionSet {
    std::vector<Prediction> items;

    const Prediction* find(const std::string& video_id) const;
    void rebuild_index();

private:
    std::unordered_map<std::string, std::size_t> index_;
};

struct MetricsReport {
    double verb_top1 = 0.0, verb_top5 = 0.0;
    double noun_top1 = 0.0, noun_top5 = 0.0;
    double action_top1 = 0.0, action_top5 = 0.0;
    std::size_t samples = 0;
};

// Action probabilities as the outer product P_V . P_N^T. Inputs must be
// normalized to 1 within 1e-6.
Tensor2 compose_action(const Vec& p_verb, const Vec& p_noun);

// The binary-with-floor mask: 1 where the pair was ever seen, epsilon
// elsewhere.
Tensor2 cooccurrence_mask(const CooccurrenceMatrix& cooc);

// Elementwise product with the mask; deliberately not renormalized (a
// per-video positive rescale cannot change any top-k decision).
Tensor2 refine(const Tensor2& p_action, const Tensor2& mask);

// Composes and refines the action matrix of every prediction in place.
void refine_all(PredictionSet& preds, const CooccurrenceMatrix& cooc);

// Top-1/top-5 accuracy for verb, noun and action. Verb/noun always come from
// P_V/P_N; the action figures use the stored action matrix when use_refined
// is set (error if absent) and the fresh outer product otherwise. Ties rank
// by lowest flat index.
MetricsReport topk_metrics(const PredictionSet& preds, const LabelSet& labels,
                           bool use_refined);

// Weighted arithmetic mean of per-model action matrices (and of the
// verb/noun marginals). Inputs must share the same video ids and vocab
// sizes. Empty weights means uniform; weights are normalized so any positive
// rescale of them is a no-op.
PredictionSet ensemble(const std::vector<PredictionSet>& inputs,
                       std::vector<double> weights = {});

// Forward every video through the model and softmax both heads.
PredictionSet predict(const FrameFeatureSet& features, const ModelParams& params);

// JSON-lines prediction files:
//   {"video_id": str, "p_verb": [...], "p_noun": [...]}
// plus "p_action" as a flat row-major |V| x |N| array when present.
PredictionSet load_predictions(const std::string& path);
void save_predictions(const std::string& path, const PredictionSet& preds);

// The metrics-file payload: one JSON object with the six figures and the
// sample count.
std::string metrics_json(const MetricsReport& report);

}  // namespace ada
