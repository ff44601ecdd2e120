#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ada/training.hpp"
#include "support/oracles.hpp"

using namespace ada;

namespace {

// Small, fast defaults for loop-level tests.
TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.embed_dim = 12;
    cfg.gcn_depth = 1;
    cfg.disc_hidden = 12;
    cfg.epochs = 4;
    cfg.lr_drop_epochs = {};
    cfg.batch_size = 8;
    cfg.rng_seed = 5;
    return cfg;
}

SynthConfig tiny_synth(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.samples_per_domain = 48;
    cfg.rng_seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("lr_at reproduces the published schedule") {
    TrainConfig cfg;  // defaults: lr0 3e-3, drops {30,45}, factor 0.1
    CHECK(lr_at(0, cfg) == doctest::Approx(3e-3).epsilon(1e-12));
    CHECK(lr_at(29, cfg) == doctest::Approx(3e-3).epsilon(1e-12));
    CHECK(lr_at(30, cfg) == doctest::Approx(3e-4).epsilon(1e-12));
    CHECK(lr_at(44, cfg) == doctest::Approx(3e-4).epsilon(1e-12));
    CHECK(lr_at(45, cfg) == doctest::Approx(3e-5).epsilon(1e-12));
    CHECK(lr_at(59, cfg) == doctest::Approx(3e-5).epsilon(1e-12));

    TrainConfig flat;
    flat.lr_drop_epochs = {};
    for (std::size_t e : {0u, 10u, 59u}) {
        CHECK(lr_at(e, flat) == flat.lr0);
    }
}

TEST_CASE("lr_at is non-increasing with exactly one drop per configured epoch") {
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.lr_drop_epochs = {10, 20, 35};
    std::size_t drops = 0;
    double prev = lr_at(0, cfg);
    for (std::size_t e = 1; e < cfg.epochs; ++e) {
        const double lr = lr_at(e, cfg);
        CHECK(lr <= prev);
        if (lr < prev) ++drops;
        prev = lr;
    }
    CHECK(drops == cfg.lr_drop_epochs.size());
}

TEST_CASE("total_loss combines the three terms") {
    TrainConfig cfg;
    cfg.loss_weight_domain = 0.0;
    CHECK(total_loss(0.7, 0.4, {10.0, 20.0}, cfg) == doctest::Approx(1.1));

    cfg.loss_weight_domain = 1.0;
    CHECK(total_loss(1.0, 1.0, {1.0, 1.0, 1.0}, cfg) == doctest::Approx(3.0));
    CHECK(total_loss(1.0, 1.0, {}, cfg) == doctest::Approx(2.0));
}

TEST_CASE("config validation rejects bad schedules") {
    TrainConfig cfg = tiny_config();
    cfg.lr0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.lr_drop_epochs = {3, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.epochs = 10;
    cfg.lr_drop_epochs = {10};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = tiny_config();
    cfg.epochs = 0;  // degenerate run is allowed, schedule unconstrained
    cfg.lr_drop_epochs = {30, 45};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("train_step with adaptation off equals a pure supervised step") {
    const SynthDataset data = generate_synthetic(tiny_synth(21));
    TrainConfig cfg = tiny_config();
    cfg.run_mode = RunMode::Ada;
    cfg.lambda_grl = 0.0;
    cfg.loss_weight_domain = 0.0;

    const ModelDims dims{data.source.features.feat_dim, cfg.embed_dim,
                         cfg.gcn_depth, data.source.labels.num_verbs,
                         data.source.labels.num_nouns, cfg.disc_hidden};

    std::vector<const Tensor2*> src_frames, tgt_frames;
    std::vector<std::pair<std::size_t, std::size_t>> src_gt;
    for (std::size_t i = 0; i < 6; ++i) {
        src_frames.push_back(&data.source.features.videos[i].frames);
        const auto& e = data.source.labels.entries[i];
        src_gt.emplace_back(e.verb, e.noun);
        tgt_frames.push_back(&data.target.features.videos[i].frames);
    }

    ModelParams with_target = ModelParams::init(dims, cfg.rng_seed);
    ParamGrads vel_a = ModelParams::zeros(dims);
    train_step(src_frames, src_gt, tgt_frames, with_target, vel_a, cfg, 0.01,
               0.0);

    // reference: identical step with no target data at all
    ModelParams supervised = ModelParams::init(dims, cfg.rng_seed);
    ParamGrads vel_b = ModelParams::zeros(dims);
    train_step(src_frames, src_gt, {}, supervised, vel_b, cfg, 0.01, 0.0);

    CHECK(with_target == supervised);
}

TEST_CASE("train_step with lr=0 leaves parameters bit-identical") {
    const SynthDataset data = generate_synthetic(tiny_synth(22));
    TrainConfig cfg = tiny_config();
    const ModelDims dims{data.source.features.feat_dim, cfg.embed_dim,
                         cfg.gcn_depth, data.source.labels.num_verbs,
                         data.source.labels.num_nouns, cfg.disc_hidden};
    ModelParams params = ModelParams::init(dims, 3);
    const ModelParams before = params;
    ParamGrads vel = ModelParams::zeros(dims);

    std::vector<const Tensor2*> src{&data.source.features.videos[0].frames};
    std::vector<const Tensor2*> tgt{&data.target.features.videos[0].frames};
    train_step(src, {{data.source.labels.entries[0].verb,
                      data.source.labels.entries[0].noun}},
               tgt, params, vel, cfg, 0.0, 1.0);
    CHECK(params == before);
}

TEST_CASE("one small step decreases the loss on a toy problem") {
    const SynthDataset data = generate_synthetic(tiny_synth(23));
    TrainConfig cfg = tiny_config();
    cfg.run_mode = RunMode::Baseline;
    cfg.loss_weight_domain = 0.0;  // isolate the descent direction
    const ModelDims dims{data.source.features.feat_dim, cfg.embed_dim,
                         cfg.gcn_depth, data.source.labels.num_verbs,
                         data.source.labels.num_nouns, cfg.disc_hidden};

    std::vector<const Tensor2*> src;
    std::vector<std::pair<std::size_t, std::size_t>> gt;
    for (std::size_t i = 0; i < 2; ++i) {
        src.push_back(&data.source.features.videos[i].frames);
        const auto& e = data.source.labels.entries[i];
        gt.emplace_back(e.verb, e.noun);
    }

    auto batch_cls = [&](const ModelParams& p) {
        double loss = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            const auto c = forward_train(*src[i], p, gt[i], cfg.run_mode,
                                         cfg.combine_rule, cfg.rectify_wp);
            loss += c.cls_loss();
        }
        return loss / static_cast<double>(src.size());
    };

    bool any_decrease = false;
    for (double lr : {1e-3, 1e-2}) {
        ModelParams params = ModelParams::init(dims, 11);
        const double before = batch_cls(params);
        ParamGrads vel = ModelParams::zeros(dims);
        cfg.momentum = 0.0;
        train_step(src, gt, {}, params, vel, cfg, lr, 0.0);
        const double after = batch_cls(params);
        if (after < before) any_decrease = true;
    }
    CHECK(any_decrease);
}

TEST_CASE("fit: epochs=0 returns the seeded initialization unchanged") {
    const SynthDataset data = generate_synthetic(tiny_synth(24));
    TrainConfig cfg = tiny_config();
    cfg.epochs = 0;
    const FitResult r = fit(data.source.features, data.source.labels,
                            data.target.features, cfg);
    const ModelDims dims{data.source.features.feat_dim, cfg.embed_dim,
                         cfg.gcn_depth, data.source.labels.num_verbs,
                         data.source.labels.num_nouns, cfg.disc_hidden};
    CHECK(r.params == ModelParams::init(dims, cfg.rng_seed));
    CHECK(r.reports.empty());
}

TEST_CASE("fit: same seed gives bit-identical checkpoints and reports") {
    const SynthDataset data = generate_synthetic(tiny_synth(25));
    TrainConfig cfg = tiny_config();
    const FitResult a = fit(data.source.features, data.source.labels,
                            data.target.features, cfg, &data.target.labels);
    const FitResult b = fit(data.source.features, data.source.labels,
                            data.target.features, cfg, &data.target.labels);
    CHECK(a.params == b.params);
    REQUIRE(a.reports.size() == b.reports.size());
    for (std::size_t i = 0; i < a.reports.size(); ++i) {
        CHECK(epoch_report_json(a.reports[i]) == epoch_report_json(b.reports[i]));
    }
}

TEST_CASE("fit: with adaptation off, target data content cannot matter") {
    const SynthDataset data = generate_synthetic(tiny_synth(26));
    SynthConfig other_cfg = tiny_synth(27);
    other_cfg.domain_shift_magnitude = 9.0;
    const SynthDataset other = generate_synthetic(other_cfg);
    REQUIRE(data.target.features.videos.size() ==
            other.target.features.videos.size());

    TrainConfig cfg = tiny_config();
    cfg.lambda_grl = 0.0;
    cfg.loss_weight_domain = 0.0;

    const FitResult a = fit(data.source.features, data.source.labels,
                            data.target.features, cfg);
    const FitResult b = fit(data.source.features, data.source.labels,
                            other.target.features, cfg);
    CHECK(a.params == b.params);
}

TEST_CASE("fit: mean source cls loss decreases over the first five epochs") {
    const SynthDataset data = generate_synthetic(tiny_synth(28));
    TrainConfig cfg = tiny_config();
    cfg.epochs = 5;
    cfg.lr0 = 1e-3;
    const FitResult r = fit(data.source.features, data.source.labels,
                            data.target.features, cfg);
    REQUIRE(r.reports.size() == 5);
    std::size_t violations = 0;
    for (std::size_t e = 1; e < r.reports.size(); ++e) {
        if (r.reports[e].mean_cls >= r.reports[e - 1].mean_cls) ++violations;
    }
    CHECK(violations <= 1);
}

TEST_CASE("zero shift sanity floor: source-only training generalizes") {
    SynthConfig synth = tiny_synth(29);
    synth.samples_per_domain = 96;
    synth.domain_shift_magnitude = 0.0;
    synth.label_noise = 0.0;
    const SynthDataset data = generate_synthetic(synth);

    TrainConfig cfg = tiny_config();
    cfg.run_mode = RunMode::Baseline;
    cfg.lambda_grl = 0.0;
    cfg.loss_weight_domain = 0.0;
    cfg.embed_dim = 16;
    cfg.epochs = 30;
    cfg.lr0 = 2e-2;
    const FitResult r = fit(data.source.features, data.source.labels,
                            data.target.features, cfg, &data.target.labels);

    // verb top-1 on the target domain
    std::size_t correct = 0;
    for (const auto& video : data.target.features.videos) {
        const Vec f = video_feature(video.frames, r.params);
        const HeadLogits logits = classify(f, r.params);
        const auto* e = data.target.labels.find(video.id);
        const std::size_t argmax = static_cast<std::size_t>(
            std::max_element(logits.verb.begin(), logits.verb.end()) -
            logits.verb.begin());
        if (argmax == e->verb) ++correct;
    }
    const double verb_acc = static_cast<double>(correct) /
                            static_cast<double>(data.target.features.videos.size());
    MESSAGE("zero-shift target verb top-1: ", verb_acc);
    CHECK(verb_acc >= 0.95);
}

TEST_CASE("epoch report JSON carries the expected fields") {
    EpochReport r;
    r.epoch = 3;
    r.mean_cls = 1.5;
    r.mean_dom = 0.25;
    r.source_acc = 0.75;
    r.lr = 3e-3;
    CHECK(epoch_report_json(r) ==
          R"({"epoch":3,"mean_cls":1.5,"mean_dom":0.25,"source_acc":0.75,"lr":0.003})");
    r.target_acc = 0.5;
    CHECK(epoch_report_json(r).find("\"target_acc\":0.5") != std::string::npos);
}

TEST_CASE("lambda schedule: constant and logistic ramp") {
    TrainConfig cfg;
    cfg.lambda_grl = 0.8;
    CHECK(lambda_at(0.0, cfg) == 0.8);
    CHECK(lambda_at(1.0, cfg) == 0.8);

    cfg.lambda_schedule = LambdaSchedule::Ramp;
    CHECK(lambda_at(0.0, cfg) == doctest::Approx(0.0));
    CHECK(lambda_at(1.0, cfg) ==
          doctest::Approx(0.8 * (2.0 / (1.0 + std::exp(-10.0)) - 1.0)));
    CHECK(lambda_at(0.3, cfg) > lambda_at(0.1, cfg));
}
