#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ada/data.hpp"
#include "ada/model.hpp"

namespace ada {

enum class LambdaSchedule { Constant, Ramp };

struct TrainConfig {
    RunMode run_mode = RunMode::Ada;
    std::size_t embed_dim = 512;   // D
    std::size_t gcn_depth = 2;     // L
    std::size_t disc_hidden = 256; // H
    double lambda_grl = 1.0;
    LambdaSchedule lambda_schedule = LambdaSchedule::Constant;
    double loss_weight_domain = 1.0;
    double lr0 = 3e-3;
    double momentum = 0.9;
    std::size_t epochs = 60;
    std::vector<std::size_t> lr_drop_epochs = {30, 45};
    double lr_drop_factor = 0.1;
    std::size_t batch_size = 16;
    std::uint64_t rng_seed = 0;
    CombineRule combine_rule = CombineRule::Average;
    bool rectify_wp = false;

    void validate() const;  // throws ConfigError
};

struct EpochReport {
    std::size_t epoch = 0;
    double mean_cls = 0.0;   // mean over source samples of verb+noun xent
    double mean_dom = 0.0;   // mean over all processed samples of L_d
    double source_acc = 0.0; // action top-1 on the training-time forwards
    std::optional<double> target_acc;  // eval pass, when labels are supplied
    double lr = 0.0;
};

// One JSON object (single line, no trailing newline) per report; this is the
// metrics-log line format.
std::string epoch_report_json(const EpochReport& r);

// Step-decay schedule: lr0 * factor^(number of drop epochs <= epoch).
double lr_at(std::size_t epoch, const TrainConfig& cfg);

// lambda_grl at training progress p in [0,1]: constant, or the logistic
// ramp lambda_grl * (2 / (1 + exp(-10 p)) - 1).
double lambda_at(double progress, const TrainConfig& cfg);

// L = verb + noun + loss_weight_domain * mean(domain_losses). The
// classification terms come from source samples only; domain_losses covers
// source and target.
double total_loss(double verb_loss, double noun_loss,
                  const std::vector<double>& domain_losses,
                  const TrainConfig& cfg);

struct StepStats {
    double cls_sum = 0.0;
    double dom_sum = 0.0;
    std::size_t src_correct = 0;
    std::size_t src_count = 0;
    std::size_t all_count = 0;
};

// One SGD-with-momentum step on paired source/target mini-batches.
StepStats train_step(const std::vector<const Tensor2*>& source_frames,
                     const std::vector<std::pair<std::size_t, std::size_t>>& source_labels,
                     const std::vector<const Tensor2*>& target_frames,
                     ModelParams& params, ParamGrads& velocity,
                     const TrainConfig& cfg, double lr, double lambda_grl);

struct FitResult {
    ModelParams params;
    std::vector<EpochReport> reports;
};

// Full training loop. Shuffles source and target independently each epoch
// (seeded), pairs equal-sized mini-batches cycling the shorter stream, and
// emits one EpochReport per epoch. target_labels, when given, are used for
// evaluation only.
FitResult fit(const FrameFeatureSet& source, const LabelSet& source_labels,
              const FrameFeatureSet& target, const TrainConfig& cfg,
              const LabelSet* target_labels = nullptr,
              const std::function<void(const EpochReport&)>& on_epoch = {});

// Fraction of videos whose verb and noun argmax are both correct. Every
// video in features must be labeled.
double action_top1(const FrameFeatureSet& features, const LabelSet& labels,
                   const ModelParams& params);

}  // namespace ada
