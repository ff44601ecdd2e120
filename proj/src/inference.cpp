#include "ada/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ada/kernels.hpp"
#include "ada/numerics.hpp"

namespace ada {

namespace {

double vec_sum(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

void check_normalized(const Vec& p, const char* what) {
    const double s = vec_sum(p);
    if (p.empty() || std::abs(s - 1.0) > 1e-6) {
        throw DataError(std::string("compose_action: ") + what + " sums to " +
                        std::to_string(s) + ", expected 1 within 1e-6");
    }
}

// Number of entries ranked strictly ahead of idx; ties go to the lower index.
std::size_t rank_of(const double* v, std::size_t n, std::size_t idx) {
    std::size_t rank = 0;
    const double x = v[idx];
    for (std::size_t j = 0; j < n; ++j) {
        if (v[j] > x || (v[j] == x && j < idx)) ++rank;
    }
    return rank;
}

Vec softmax(const Vec& logits) {
    double mx = logits[0];
    for (double l : logits) mx = std::max(mx, l);
    Vec p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

}  // namespace

const Prediction* PredictionSet::find(const std::string& video_id) const {
    auto it = index_.find(video_id);
    return it == index_.end() ? nullptr : &items[it->second];
}

void PredictionSet::rebuild_index() {
    index_.clear();
    index_.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        index_.emplace(items[i].video_id, i);
    }
}

Tensor2 compose_action(const Vec& p_verb, const Vec& p_noun) {
    check_normalized(p_verb, "p_verb");
    check_normalized(p_noun, "p_noun");
    Tensor2 out(p_verb.size(), p_noun.size());
    for (std::size_t i = 0; i < p_verb.size(); ++i) {
        double* row = out.row(i);
        for (std::size_t j = 0; j < p_noun.size(); ++j) {
            row[j] = p_verb[i] * p_noun[j];
        }
    }
    return out;
}

Tensor2 cooccurrence_mask(const CooccurrenceMatrix& cooc) {
    Tensor2 mask(cooc.num_verbs, cooc.num_nouns);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask.data[i] = cooc.counts[i] > 0 ? 1.0 : cooc.epsilon;
    }
    return mask;
}

Tensor2 refine(const Tensor2& p_action, const Tensor2& mask) {
    if (p_action.rows != mask.rows || p_action.cols != mask.cols) {
        throw DimensionError("refine: action matrix " + shape_str(p_action) +
                             " does not match mask " + shape_str(mask));
    }
    Tensor2 out(p_action.rows, p_action.cols);
    kernels::hadamard(out.data.data(), p_action.data.data(), mask.data.data(),
                      p_action.size());
    return out;
}

void refine_all(PredictionSet& preds, const CooccurrenceMatrix& cooc) {
    const Tensor2 mask = cooccurrence_mask(cooc);
    for (auto& item : preds.items) {
        Tensor2 action = item.p_action ? *item.p_action
                                       : compose_action(item.p_verb, item.p_noun);
        item.p_action = refine(action, mask);
    }
}

MetricsReport topk_metrics(const PredictionSet& preds, const LabelSet& labels,
                           bool use_refined) {
    std::vector<std::string> missing;
    for (const auto& e : labels.entries) {
        if (!preds.find(e.video_id)) missing.push_back(e.video_id);
    }
    if (!missing.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < missing.size() && i < 8; ++i) {
            ids += (i ? ", " : "") + missing[i];
        }
        throw DataError("topk_metrics: " + std::to_string(missing.size()) +
                        " labeled videos missing from predictions: " + ids);
    }

    MetricsReport m;
    m.samples = labels.entries.size();
    if (m.samples == 0) return m;

    std::size_t v1 = 0, v5 = 0, n1 = 0, n5 = 0, a1 = 0, a5 = 0;
    for (const auto& e : labels.entries) {
        const Prediction& p = *preds.find(e.video_id);
        if (e.verb >= p.p_verb.size() || e.noun >= p.p_noun.size()) {
            throw DataError("topk_metrics: label (" + std::to_string(e.verb) +
                            "," + std::to_string(e.noun) + ") out of range for \"" +
                            e.video_id + "\"");
        }
        const std::size_t vr = rank_of(p.p_verb.data(), p.p_verb.size(), e.verb);
        const std::size_t nr = rank_of(p.p_noun.data(), p.p_noun.size(), e.noun);
        v1 += vr < 1;
        v5 += vr < 5;
        n1 += nr < 1;
        n5 += nr < 5;

        Tensor2 fresh;
        const Tensor2* action = nullptr;
        if (use_refined) {
            if (!p.p_action) {
                throw DataError("topk_metrics: \"" + e.video_id +
                                "\" has no stored action matrix; refine first");
            }
            action = &*p.p_action;
        } else {
            fresh = compose_action(p.p_verb, p.p_noun);
            action = &fresh;
        }
        const std::size_t flat = e.verb * action->cols + e.noun;
        const std::size_t ar = rank_of(action->data.data(), action->size(), flat);
        a1 += ar < 1;
        a5 += ar < 5;
    }
    const double total = static_cast<double>(m.samples);
    m.verb_top1 = v1 / total;
    m.verb_top5 = v5 / total;
    m.noun_top1 = n1 / total;
    m.noun_top5 = n5 / total;
    m.action_top1 = a1 / total;
    m.action_top5 = a5 / total;
    return m;
}

PredictionSet ensemble(const std::vector<PredictionSet>& inputs,
                       std::vector<double> weights) {
    if (inputs.empty()) {
        throw DataError("ensemble: no inputs");
    }
    if (weights.empty()) {
        weights.assign(inputs.size(), 1.0);
    }
    if (weights.size() != inputs.size()) {
        throw DataError("ensemble: " + std::to_string(weights.size()) +
                        " weights for " + std::to_string(inputs.size()) +
                        " inputs");
    }
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw DataError("ensemble: weights must be finite and non-negative");
        }
        wsum += w;
    }
    if (wsum <= 0.0) {
        throw DataError("ensemble: weights sum to zero");
    }
    for (double& w : weights) w /= wsum;

    const PredictionSet& first = inputs[0];
    for (std::size_t k = 1; k < inputs.size(); ++k) {
        if (inputs[k].items.size() != first.items.size()) {
            throw DataError("ensemble: input " + std::to_string(k) + " has " +
                            std::to_string(inputs[k].items.size()) +
                            " videos, expected " +
                            std::to_string(first.items.size()));
        }
        for (const auto& item : first.items) {
            if (!inputs[k].find(item.video_id)) {
                throw DataError("ensemble: input " + std::to_string(k) +
                                " is missing video \"" + item.video_id + "\"");
            }
        }
    }

    PredictionSet out;
    out.items.reserve(first.items.size());
    for (const auto& ref : first.items) {
        Prediction acc;
        acc.video_id = ref.video_id;
        acc.p_verb.assign(ref.p_verb.size(), 0.0);
        acc.p_noun.assign(ref.p_noun.size(), 0.0);
        Tensor2 action(ref.p_verb.size(), ref.p_noun.size());
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            const Prediction* item = inputs[k].find(ref.video_id);
            if (item->p_verb.size() != acc.p_verb.size() ||
                item->p_noun.size() != acc.p_noun.size()) {
                throw DataError("ensemble: vocab mismatch for video \"" +
                                ref.video_id + "\" in input " + std::to_string(k));
            }
            kernels::axpy(acc.p_verb.data(), weights[k], item->p_verb.data(),
                          acc.p_verb.size());
            kernels::axpy(acc.p_noun.data(), weights[k], item->p_noun.data(),
                          acc.p_noun.size());
            Tensor2 item_action =
                item->p_action ? *item->p_action
                               : compose_action(item->p_verb, item->p_noun);
            if (item_action.rows != action.rows ||
                item_action.cols != action.cols) {
                throw DataError("ensemble: action shape mismatch for video \"" +
                                ref.video_id + "\" in input " + std::to_string(k));
            }
            kernels::axpy(action.data.data(), weights[k], item_action.data.data(),
                          action.size());
        }
        acc.p_action = std::move(action);
        out.items.push_back(std::move(acc));
    }
    out.rebuild_index();
    return out;
}

PredictionSet predict(const FrameFeatureSet& features,
                      const ModelParams& params) {
    PredictionSet out;
    out.items.reserve(features.videos.size());
    for (const auto& video : features.videos) {
        const Vec f_v = video_feature(video.frames, params);
        const HeadLogits logits = classify(f_v, params);
        Prediction p;
        p.video_id = video.id;
        p.p_verb = softmax(logits.verb);
        p.p_noun = softmax(logits.noun);
        out.items.push_back(std::move(p));
    }
    out.rebuild_index();
    return out;
}

PredictionSet load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("load_predictions: cannot open " + path);
    }
    PredictionSet out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("video_id") || !j.contains("p_verb") ||
            !j.contains("p_noun")) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": missing video_id/p_verb/p_noun");
        }
        Prediction p;
        p.video_id = j["video_id"].get<std::string>();
        p.p_verb = j["p_verb"].get<Vec>();
        p.p_noun = j["p_noun"].get<Vec>();
        if (p.p_verb.empty() || p.p_noun.empty()) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": empty probability vector");
        }
        for (double x : p.p_verb) {
            if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
                throw DataError("line " + std::to_string(line_no) +
                                ": p_verb entry out of [0,1]");
            }
        }
        for (double x : p.p_noun) {
            if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
                throw DataError("line " + std::to_string(line_no) +
                                ": p_noun entry out of [0,1]");
            }
        }
        if (j.contains("p_action")) {
            Vec flat = j["p_action"].get<Vec>();
            if (flat.size() != p.p_verb.size() * p.p_noun.size()) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": p_action length " + std::to_string(flat.size()) +
                                 " does not equal |V|*|N|");
            }
            p.p_action = Tensor2(p.p_verb.size(), p.p_noun.size(), std::move(flat));
        }
        out.items.push_back(std::move(p));
    }
    out.rebuild_index();
    for (const auto& p : out.items) {
        // The index keeps the first occurrence, so any later duplicate
        // resolves to a different item.
        if (out.find(p.video_id) != &p) {
            throw ParseError("duplicate video id \"" + p.video_id + "\" in " +
                             path);
        }
    }
    return out;
}

void save_predictions(const std::string& path, const PredictionSet& preds) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("save_predictions: cannot open " + path + " for writing");
    }
    for (const auto& p : preds.items) {
        nlohmann::ordered_json j;
        j["video_id"] = p.video_id;
        j["p_verb"] = p.p_verb;
        j["p_noun"] = p.p_noun;
        if (p.p_action) {
            j["p_action"] = p.p_action->data;
        }
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw Error("save_predictions: write to " + path + " failed");
    }
}

std::string metrics_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["verb_top1"] = report.verb_top1;
    j["verb_top5"] = report.verb_top5;
    j["noun_top1"] = report.noun_top1;
    j["noun_top5"] = report.noun_top5;
    j["action_top1"] = report.action_top1;
    j["action_top5"] = report.action_top5;
    j["samples"] = report.samples;
    return j.dump();
}

}  // namespace ada
