// Command-line surface for the adaptation pipeline. One subcommand per
// pipeline stage: gen-synth, train, predict, cooccur, refine, ensemble, eval.
//
// Data goes to --out (or stdout when --out is absent); diagnostics go to
// stderr. Outputs are written through temp files and renamed, and anything
// partially written is removed on failure, so exit code 0 means every output
// is complete.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ada/checkpoint.hpp"
#include "ada/data.hpp"
#include "ada/inference.hpp"
#include "ada/kernels.hpp"
#include "ada/training.hpp"

namespace fs = std::filesystem;

namespace {

// Tracks files created by the running command so a failure can sweep them.
class OutputTracker {
public:
    void add(const std::string& path) { written_.push_back(path); }

    void discard_all() {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written_.clear();
    }

private:
    std::vector<std::string> written_;
};

OutputTracker g_outputs;

// Writes through <path>.tmp then renames, so a crash mid-write never leaves
// a half-file behind under the final name.
template <typename WriteFn>
void write_output(const std::string& path, WriteFn&& fn) {
    const std::string tmp = path + ".tmp";
    try {
        fn(tmp);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
    fs::rename(tmp, path);
    g_outputs.add(path);
}

// Emits to the file when out_path is set, to stdout otherwise.
template <typename WriteFn>
void emit(const std::string& out_path, WriteFn&& fn) {
    if (!out_path.empty()) {
        write_output(out_path, fn);
        return;
    }
    const std::string tmp =
        (fs::temp_directory_path() /
         ("ada-stdout-" + std::to_string(::getpid()) + ".tmp"))
            .string();
    fn(tmp);
    std::ifstream in(tmp, std::ios::binary);
    std::cout << in.rdbuf();
    std::cout.flush();
    in.close();
    std::error_code ec;
    fs::remove(tmp, ec);
}

ada::RunMode parse_mode(const std::string& mode) {
    if (mode == "baseline") return ada::RunMode::Baseline;
    if (mode == "ada") return ada::RunMode::Ada;
    throw ada::ConfigError("unknown mode \"" + mode +
                           "\" (expected baseline|ada)");
}

ada::CombineRule parse_combine(const std::string& rule) {
    if (rule == "avg") return ada::CombineRule::Average;
    if (rule == "verb") return ada::CombineRule::VerbOnly;
    if (rule == "noun") return ada::CombineRule::NounOnly;
    if (rule == "product") return ada::CombineRule::Product;
    throw ada::ConfigError("unknown combine rule \"" + rule +
                           "\" (expected avg|verb|noun|product)");
}

std::vector<double> parse_weights(const std::string& csv) {
    std::vector<double> out;
    if (csv.empty()) return out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw ada::ConfigError("bad weight \"" + cell + "\" in --weights");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// gen-synth
// ---------------------------------------------------------------------------

struct GenSynthArgs {
    ada::SynthConfig cfg;
    std::string out_dir;
};

void run_gen_synth(const GenSynthArgs& args) {
    fs::create_directories(args.out_dir);
    const ada::SynthDataset data = ada::generate_synthetic(args.cfg);
    const fs::path dir(args.out_dir);
    write_output((dir / "source_features.adaf").string(), [&](const std::string& p) {
        ada::save_features(p, data.source.features);
    });
    write_output((dir / "source_labels.csv").string(), [&](const std::string& p) {
        ada::save_labels(p, data.source.labels);
    });
    write_output((dir / "target_features.adaf").string(), [&](const std::string& p) {
        ada::save_features(p, data.target.features);
    });
    write_output((dir / "target_labels.csv").string(), [&](const std::string& p) {
        ada::save_labels(p, data.target.labels);
    });
    std::cerr << "gen-synth: wrote 4 files to " << args.out_dir << " ("
              << data.source.features.videos.size() << " source, "
              << data.target.features.videos.size() << " target videos)\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string source_features, source_labels, target_features, target_labels;
    std::string checkpoint_out;
    std::string log_out;
    std::string mode = "ada";
    std::string combine = "avg";
    std::string lambda_schedule = "constant";
    ada::TrainConfig cfg;
};

nlohmann::ordered_json effective_config_json(const TrainArgs& args) {
    nlohmann::ordered_json j;
    j["mode"] = args.mode;
    j["embed_dim"] = args.cfg.embed_dim;
    j["gcn_depth"] = args.cfg.gcn_depth;
    j["disc_hidden"] = args.cfg.disc_hidden;
    j["lambda_grl"] = args.cfg.lambda_grl;
    j["lambda_schedule"] = args.lambda_schedule;
    j["loss_weight_domain"] = args.cfg.loss_weight_domain;
    j["lr0"] = args.cfg.lr0;
    j["momentum"] = args.cfg.momentum;
    j["epochs"] = args.cfg.epochs;
    j["lr_drop_epochs"] = args.cfg.lr_drop_epochs;
    j["lr_drop_factor"] = args.cfg.lr_drop_factor;
    j["batch_size"] = args.cfg.batch_size;
    j["seed"] = args.cfg.rng_seed;
    j["combine_rule"] = args.combine;
    j["rectify_wp"] = args.cfg.rectify_wp;
    j["source_features"] = args.source_features;
    j["source_labels"] = args.source_labels;
    j["target_features"] = args.target_features;
    j["target_labels"] = args.target_labels;
    j["checkpoint_out"] = args.checkpoint_out;
    j["kernels"] = ada::kernels::backend_name(ada::kernels::active());
    return j;
}

void run_train(TrainArgs& args) {
    args.cfg.run_mode = parse_mode(args.mode);
    args.cfg.combine_rule = parse_combine(args.combine);
    if (args.lambda_schedule == "constant") {
        args.cfg.lambda_schedule = ada::LambdaSchedule::Constant;
    } else if (args.lambda_schedule == "ramp") {
        args.cfg.lambda_schedule = ada::LambdaSchedule::Ramp;
    } else {
        throw ada::ConfigError("unknown lambda schedule \"" +
                               args.lambda_schedule + "\"");
    }

    const ada::FrameFeatureSet source =
        ada::load_features(args.source_features, ada::Domain::Source);
    const ada::LabelSet source_labels = ada::load_labels(args.source_labels);
    const ada::FrameFeatureSet target =
        ada::load_features(args.target_features, ada::Domain::Target);
    ada::LabelSet target_labels;
    const bool have_target_labels = !args.target_labels.empty();
    if (have_target_labels) {
        target_labels = ada::load_labels(args.target_labels);
    }

    emit(args.log_out, [&](const std::string& log_path) {
        std::ofstream log(log_path, std::ios::trunc);
        if (!log) {
            throw ada::Error("train: cannot open log " + log_path);
        }
        nlohmann::ordered_json header;
        header["config"] = effective_config_json(args);
        log << header.dump() << '\n';

        const ada::FitResult result =
            ada::fit(source, source_labels, target, args.cfg,
                     have_target_labels ? &target_labels : nullptr,
                     [&log](const ada::EpochReport& r) {
                         log << ada::epoch_report_json(r) << '\n';
                         log.flush();
                     });
        if (!log) {
            throw ada::Error("train: write to log failed");
        }
        write_output(args.checkpoint_out, [&](const std::string& p) {
            ada::save_checkpoint(p, result.params);
        });
    });
}

// ---------------------------------------------------------------------------
// remaining thin wrappers
// ---------------------------------------------------------------------------

void run_predict(const std::string& checkpoint, const std::string& features,
                 const std::string& out) {
    const ada::ModelParams params = ada::load_checkpoint(checkpoint);
    const ada::FrameFeatureSet set =
        ada::load_features(features, ada::Domain::Target);
    if (set.feat_dim != params.dims().d_in) {
        throw ada::DimensionError(
            "predict: feature dim " + std::to_string(set.feat_dim) +
            " does not match checkpoint d_in " +
            std::to_string(params.dims().d_in));
    }
    const ada::PredictionSet preds = ada::predict(set, params);
    emit(out, [&](const std::string& p) { ada::save_predictions(p, preds); });
}

void run_cooccur(const std::string& labels_path, const std::string& out) {
    const ada::LabelSet labels = ada::load_labels(labels_path);
    const ada::CooccurrenceMatrix cooc = ada::build_cooccurrence(labels);
    emit(out, [&](const std::string& p) { ada::save_cooccurrence(p, cooc); });
}

void run_refine(const std::string& pred_path, const std::string& cooc_path,
                double epsilon, const std::string& out) {
    ada::PredictionSet preds = ada::load_predictions(pred_path);
    ada::CooccurrenceMatrix cooc = ada::load_cooccurrence(cooc_path);
    cooc.epsilon = epsilon;
    ada::refine_all(preds, cooc);
    emit(out, [&](const std::string& p) { ada::save_predictions(p, preds); });
}

void run_ensemble(const std::vector<std::string>& pred_paths,
                  const std::string& weights_csv, const std::string& out) {
    std::vector<ada::PredictionSet> inputs;
    inputs.reserve(pred_paths.size());
    for (const auto& p : pred_paths) {
        inputs.push_back(ada::load_predictions(p));
    }
    const ada::PredictionSet merged =
        ada::ensemble(inputs, parse_weights(weights_csv));
    emit(out, [&](const std::string& p) { ada::save_predictions(p, merged); });
}

void run_eval(const std::string& pred_path, const std::string& labels_path,
              bool refined, const std::string& out) {
    const ada::PredictionSet preds = ada::load_predictions(pred_path);
    const ada::LabelSet labels = ada::load_labels(labels_path);
    const ada::MetricsReport report = ada::topk_metrics(preds, labels, refined);
    emit(out, [&](const std::string& p) {
        std::ofstream f(p, std::ios::trunc);
        f << ada::metrics_json(report) << '\n';
        if (!f) throw ada::Error("eval: write failed");
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Action-aware domain adaptation pipeline"};
    app.require_subcommand(1);

    // gen-synth ------------------------------------------------------------
    GenSynthArgs gen;
    CLI::App* gen_cmd = app.add_subcommand(
        "gen-synth", "Generate a synthetic source/target dataset");
    gen_cmd->set_config("--config");
    gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
    gen_cmd->add_option("--verbs", gen.cfg.num_verbs, "Verb vocabulary size");
    gen_cmd->add_option("--nouns", gen.cfg.num_nouns, "Noun vocabulary size");
    gen_cmd->add_option("--pair-fraction", gen.cfg.valid_pair_fraction,
                        "Fraction of the verb-noun grid that is valid");
    gen_cmd->add_option("--d-in", gen.cfg.d_in, "Frame feature dimension");
    gen_cmd->add_option("--min-frames", gen.cfg.min_frames, "Min frames per video");
    gen_cmd->add_option("--max-frames", gen.cfg.max_frames, "Max frames per video");
    gen_cmd->add_option("--samples", gen.cfg.samples_per_domain,
                        "Videos per domain");
    gen_cmd->add_option("--signal-dim", gen.cfg.action_signal_dim,
                        "Action-signal coordinates");
    gen_cmd->add_option("--nuisance-dim", gen.cfg.nuisance_dim,
                        "Nuisance coordinates carrying the domain shift");
    gen_cmd->add_option("--shift", gen.cfg.domain_shift_magnitude,
                        "Domain shift magnitude");
    gen_cmd->add_option("--feature-noise", gen.cfg.feature_noise,
                        "Per-frame feature noise");
    gen_cmd->add_option("--label-noise", gen.cfg.label_noise,
                        "Source label corruption probability");
    gen_cmd->add_option("--seed", gen.cfg.rng_seed, "RNG seed");

    // train ------------------------------------------------------------------
    TrainArgs train;
    CLI::App* train_cmd =
        app.add_subcommand("train", "Train baseline or adaptation model");
    train_cmd->set_config("--config");
    train_cmd->add_option("--source-features", train.source_features)->required();
    train_cmd->add_option("--source-labels", train.source_labels)->required();
    train_cmd->add_option("--target-features", train.target_features)->required();
    train_cmd->add_option("--target-labels", train.target_labels,
                          "Target labels (evaluation only)");
    train_cmd->add_option("--checkpoint-out", train.checkpoint_out)->required();
    train_cmd->add_option("--log", train.log_out,
                          "Metrics log path (stdout when absent)");
    train_cmd->add_option("--mode", train.mode, "baseline|ada");
    train_cmd->add_option("--embed-dim", train.cfg.embed_dim);
    train_cmd->add_option("--gcn-depth", train.cfg.gcn_depth);
    train_cmd->add_option("--disc-hidden", train.cfg.disc_hidden);
    train_cmd->add_option("--lambda", train.cfg.lambda_grl);
    train_cmd->add_option("--lambda-schedule", train.lambda_schedule,
                          "constant|ramp");
    train_cmd->add_option("--domain-weight", train.cfg.loss_weight_domain);
    train_cmd->add_option("--lr", train.cfg.lr0);
    train_cmd->add_option("--momentum", train.cfg.momentum);
    train_cmd->add_option("--epochs", train.cfg.epochs);
    train_cmd->add_option("--lr-drops", train.cfg.lr_drop_epochs,
                          "Epochs at which lr is multiplied by the drop factor");
    train_cmd->add_option("--lr-drop-factor", train.cfg.lr_drop_factor);
    train_cmd->add_option("--batch-size", train.cfg.batch_size);
    train_cmd->add_option("--seed", train.cfg.rng_seed);
    train_cmd->add_option("--combine", train.combine, "avg|verb|noun|product");
    train_cmd->add_flag("--rectify-wp", train.cfg.rectify_wp,
                        "Rectify the combined classifier column");

    // predict ----------------------------------------------------------------
    std::string pr_checkpoint, pr_features, pr_out;
    CLI::App* predict_cmd =
        app.add_subcommand("predict", "Emit per-video verb/noun probabilities");
    predict_cmd->set_config("--config");
    predict_cmd->add_option("--checkpoint", pr_checkpoint)->required();
    predict_cmd->add_option("--features", pr_features)->required();
    predict_cmd->add_option("--out", pr_out, "Output path (stdout when absent)");

    // cooccur ------------------------------------------------------------
    std::string co_labels, co_out;
    CLI::App* cooccur_cmd = app.add_subcommand(
        "cooccur", "Build the verb-noun co-occurrence matrix");
    cooccur_cmd->set_config("--config");
    cooccur_cmd->add_option("--labels", co_labels)->required();
    cooccur_cmd->add_option("--out", co_out, "Output path (stdout when absent)");

    // refine -------------------------------------------------------------
    std::string rf_pred, rf_cooc, rf_out;
    double rf_epsilon = 0.01;
    CLI::App* refine_cmd = app.add_subcommand(
        "refine", "Mask action probabilities with the co-occurrence prior");
    refine_cmd->set_config("--config");
    refine_cmd->add_option("--pred", rf_pred)->required();
    refine_cmd->add_option("--cooc", rf_cooc)->required();
    refine_cmd->add_option("--epsilon", rf_epsilon, "Mask floor for unseen pairs");
    refine_cmd->add_option("--out", rf_out, "Output path (stdout when absent)");

    // ensemble -----------------------------------------------------------
    std::vector<std::string> en_preds;
    std::string en_weights, en_out;
    CLI::App* ensemble_cmd = app.add_subcommand(
        "ensemble", "Average action probabilities across prediction files");
    ensemble_cmd->set_config("--config");
    ensemble_cmd->add_option("preds", en_preds, "Prediction files")
        ->required()
        ->expected(-1);
    ensemble_cmd->add_option("--weights", en_weights, "Comma-separated weights");
    ensemble_cmd->add_option("--out", en_out, "Output path (stdout when absent)");

    // eval ---------------------------------------------------------------
    std::string ev_pred, ev_labels, ev_out;
    bool ev_refined = false;
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "Top-1/top-5 metrics against labels");
    eval_cmd->set_config("--config");
    eval_cmd->add_option("--pred", ev_pred)->required();
    eval_cmd->add_option("--labels", ev_labels)->required();
    eval_cmd->add_flag("--refined", ev_refined,
                       "Use the stored (refined) action matrices");
    eval_cmd->add_option("--out", ev_out, "Output path (stdout when absent)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) run_gen_synth(gen);
        if (train_cmd->parsed()) run_train(train);
        if (predict_cmd->parsed()) run_predict(pr_checkpoint, pr_features, pr_out);
        if (cooccur_cmd->parsed()) run_cooccur(co_labels, co_out);
        if (refine_cmd->parsed()) run_refine(rf_pred, rf_cooc, rf_epsilon, rf_out);
        if (ensemble_cmd->parsed()) run_ensemble(en_preds, en_weights, en_out);
        if (eval_cmd->parsed()) run_eval(ev_pred, ev_labels, ev_refined, ev_out);
    } catch (const std::exception& e) {
        g_outputs.discard_all();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
