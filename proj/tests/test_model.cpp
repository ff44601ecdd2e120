#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ada/checkpoint.hpp"
#include "ada/model.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace ada;
using gradcheck::Batch;
using gradcheck::forward_batch;
using gradcheck::random_batch;

namespace {

ModelParams random_params(const ModelDims& dims, std::uint64_t seed) {
    return ModelParams::init(dims, seed);
}

}  // namespace

TEST_CASE("embed: identity weights pass frames through") {
    ModelParams p = ModelParams::zeros({3, 3, 0, 2, 2, 2});
    for (std::size_t i = 0; i < 3; ++i) p.embed_w.at(i, i) = 1.0;
    Rng rng(1);
    Tensor2 frames(4, 3);
    oracle::fill_uniform(frames, rng);
    CHECK(embed(frames, p) == frames);

    Tensor2 single(1, 3);
    oracle::fill_uniform(single, rng);
    CHECK(embed(single, p).rows == 1);

    Tensor2 bad(2, 5);
    CHECK_THROWS_AS(embed(bad, p), DimensionError);
}

TEST_CASE("embed: random case matches the affine oracle") {
    ModelDims dims{6, 4, 0, 2, 2, 2};
    ModelParams p = random_params(dims, 42);
    Rng rng(2);
    Tensor2 frames(3, 6);
    oracle::fill_uniform(frames, rng);
    const Tensor2 got = embed(frames, p);
    const Tensor2 expect = oracle::affine(frames, p.embed_w, p.embed_b);
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(oracle::close(got.data[i], expect.data[i], 1e-12));
    }
}

TEST_CASE("gcn_forward: forced mean-then-relu example") {
    ModelParams p = ModelParams::zeros({2, 2, 1, 2, 2, 2});
    p.gcn[0].w.at(0, 0) = 1.0;
    p.gcn[0].w.at(1, 1) = 1.0;
    Tensor2 h(2, 2, {1, 3, 3, 1});
    const Tensor2 out = gcn_forward(h, p);
    CHECK(out.data == std::vector<double>{2, 2, 2, 2});
}

TEST_CASE("gcn_forward: T=1 reduces to relu(h.W + b)") {
    ModelDims dims{4, 4, 1, 2, 2, 2};
    ModelParams p = random_params(dims, 7);
    Rng rng(3);
    Tensor2 h(1, 4);
    oracle::fill_uniform(h, rng);
    const Tensor2 got = gcn_forward(h, p);
    const Tensor2 pre = oracle::affine(h, p.gcn[0].w, p.gcn[0].b);
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double expect = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
        CHECK(oracle::close(got.data[i], expect, 1e-12));
    }
    CHECK_THROWS_AS(gcn_forward(Tensor2(0, 4), p), DataError);
}

TEST_CASE("gcn_forward: row permutation of the input permutes the output") {
    ModelDims dims{4, 4, 2, 2, 2, 2};
    ModelParams p = random_params(dims, 9);
    Rng rng(4);
    Tensor2 h(5, 4);
    oracle::fill_uniform(h, rng);
    const Tensor2 base = gcn_forward(h, p);

    std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    Tensor2 shuffled(5, 4);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 4; ++c) shuffled.at(r, c) = h.at(perm[r], c);
    }
    const Tensor2 permuted = gcn_forward(shuffled, p);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(oracle::close(permuted.at(r, c), base.at(perm[r], c), 1e-12));
        }
    }
}

TEST_CASE("video_feature: permutation invariance and oracle composition") {
    ModelDims dims{5, 4, 2, 3, 3, 4};
    ModelParams p = random_params(dims, 11);
    Rng rng(5);
    Tensor2 frames(4, 5);
    oracle::fill_uniform(frames, rng);

    const Vec base = video_feature(frames, p);

    std::vector<std::size_t> perm{2, 0, 3, 1};
    Tensor2 shuffled(4, 5);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            shuffled.at(r, c) = frames.at(perm[r], c);
        }
    }
    const Vec permuted = video_feature(shuffled, p);
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(oracle::close(base[i], permuted[i], 1e-12));
    }

    // Step-by-step composition out of the naive oracles.
    Tensor2 h = oracle::affine(frames, p.embed_w, p.embed_b);
    for (const auto& layer : p.gcn) {
        Tensor2 agg = oracle::uniform_aggregate(h);
        Tensor2 pre = oracle::affine(agg, layer.w, layer.b);
        for (double& x : pre.data) x = x > 0.0 ? x : 0.0;
        h = pre;
    }
    for (std::size_t c = 0; c < h.cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < h.rows; ++r) sum += h.at(r, c);
        CHECK(oracle::close(base[c], sum / static_cast<double>(h.rows), 1e-12));
    }
}

TEST_CASE("video_feature: identical frames with L=1 collapse to one frame") {
    ModelDims dims{3, 4, 1, 2, 2, 2};
    ModelParams p = random_params(dims, 13);
    Rng rng(6);
    Tensor2 one(1, 3);
    oracle::fill_uniform(one, rng);
    Tensor2 repeated(5, 3);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 3; ++c) repeated.at(r, c) = one.at(0, c);
    }
    const Vec a = video_feature(one, p);
    const Vec b = video_feature(repeated, p);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(oracle::close(a[i], b[i], 1e-12));
    }
}

TEST_CASE("classify: zero feature yields biases, basis vector reads a row") {
    ModelDims dims{3, 4, 0, 3, 2, 2};
    ModelParams p = random_params(dims, 17);
    const HeadLogits at_zero = classify(Vec(4, 0.0), p);
    CHECK(at_zero.verb == p.verb_b);
    CHECK(at_zero.noun == p.noun_b);

    Vec e2(4, 0.0);
    e2[2] = 1.0;
    const HeadLogits basis = classify(e2, p);
    for (std::size_t v = 0; v < 3; ++v) {
        CHECK(oracle::close(basis.verb[v], p.verb_w.at(2, v) + p.verb_b[v], 1e-12));
    }
}

TEST_CASE("classify is affine in the feature") {
    ModelDims dims{3, 5, 0, 4, 3, 2};
    ModelParams p = random_params(dims, 19);
    Rng rng(7);
    Vec f(5);
    oracle::fill_uniform(f, rng);
    Vec scaled(f);
    const double a = 2.75;
    for (double& x : scaled) x *= a;

    const HeadLogits base = classify(f, p);
    const HeadLogits big = classify(scaled, p);
    for (std::size_t v = 0; v < 4; ++v) {
        CHECK(oracle::close(big.verb[v] - p.verb_b[v],
                            a * (base.verb[v] - p.verb_b[v]), 1e-9));
    }
}

TEST_CASE("disentangle: worked example under the average rule") {
    ModelParams p = ModelParams::zeros({2, 3, 0, 1, 1, 2});
    p.verb_w = Tensor2(3, 1, {1, 0, 2});
    p.noun_w = Tensor2(3, 1, {0, 2, 2});
    const Vec wp = combined_head_column(p, 0, 0, CombineRule::Average);
    CHECK(wp == Vec{0.5, 1, 2});
    const Vec fvp = disentangle({0.4, 0.5, 0.1}, p, 0, 0);
    CHECK(oracle::close(fvp[0], 0.2, 1e-12));
    CHECK(oracle::close(fvp[1], 0.5, 1e-12));
    CHECK(oracle::close(fvp[2], 0.2, 1e-12));

    CHECK_THROWS_AS(disentangle({1, 1, 1}, p, 1, 0, CombineRule::Average),
                    DataError);
}

TEST_CASE("disentangle: all-ones combined column is the identity") {
    ModelParams p = ModelParams::zeros({2, 3, 0, 2, 2, 2});
    for (std::size_t i = 0; i < 3; ++i) {
        p.verb_w.at(i, 0) = 1.0;
        p.noun_w.at(i, 1) = 1.0;
    }
    Rng rng(8);
    Vec f(3);
    oracle::fill_uniform(f, rng);
    CHECK(disentangle(f, p, 0, 1) == f);
}

TEST_CASE("grl_backward: forced values and zero lambda") {
    CHECK(grl_backward({2, -3}, 1.0) == Vec{-2, 3});
    const Vec zero = grl_backward({5, -7}, 0.0);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);
}

TEST_CASE("grl forward is the identity on the discriminator input") {
    ModelDims dims{4, 4, 1, 2, 2, 3};
    ModelParams p = random_params(dims, 23);
    Rng rng(9);
    Tensor2 frames(3, 4);
    oracle::fill_uniform(frames, rng);
    const ForwardCache c = forward_train(frames, p, std::nullopt,
                                         RunMode::Baseline,
                                         CombineRule::Average, false);
    CHECK(c.disc_input == c.video_feat);
}

TEST_CASE("discriminate: zero weights and a hand-computed H=1 case") {
    ModelParams p = ModelParams::zeros({2, 2, 0, 1, 1, 4});
    p.disc_b2 = 0.75;
    CHECK(discriminate({0.3, -2.0}, p) == 0.75);

    ModelParams q = ModelParams::zeros({2, 2, 0, 1, 1, 1});
    q.disc_w1 = Tensor2(2, 1, {2, -1});
    q.disc_b1 = {0.5};
    q.disc_w2 = Tensor2(1, 1, {3});
    q.disc_b2 = -1.0;
    // relu(2*1 + (-1)*0.5 + 0.5) * 3 - 1
    CHECK(discriminate({1.0, 0.5}, q) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("grl sign: flipping lambda flips the domain contribution exactly") {
    ModelDims dims{4, 3, 1, 2, 2, 3};
    ModelParams p = random_params(dims, 29);
    Rng rng(10);
    Batch b = random_batch(dims, rng, 1, 1, 3);
    const auto caches =
        forward_batch(b, p, RunMode::Ada, CombineRule::Average, false);

    // cls off: everything in the trunk comes from the domain term.
    ParamGrads plus = ModelParams::zeros(dims);
    ParamGrads minus = ModelParams::zeros(dims);
    for (const auto& c : caches) {
        backward_accumulate(c, p, 0.0, 0.5, 1.0, CombineRule::Average, false,
                            plus);
        backward_accumulate(c, p, 0.0, 0.5, -1.0, CombineRule::Average, false,
                            minus);
    }
    CHECK(plus.embed_w.data != minus.embed_w.data);
    for (std::size_t i = 0; i < plus.embed_w.size(); ++i) {
        CHECK(plus.embed_w.data[i] == -minus.embed_w.data[i]);
    }
    for (std::size_t i = 0; i < plus.gcn[0].w.size(); ++i) {
        CHECK(plus.gcn[0].w.data[i] == -minus.gcn[0].w.data[i]);
    }
    CHECK(plus.disc_w1 == minus.disc_w1);
    CHECK(plus.disc_w2 == minus.disc_w2);
    CHECK(plus.disc_b2 == minus.disc_b2);
}

TEST_CASE("backward linearity: doubling both scales doubles every gradient") {
    ModelDims dims{3, 3, 1, 2, 2, 2};
    ModelParams p = random_params(dims, 31);
    Rng rng(11);
    Batch b = random_batch(dims, rng, 2, 1, 3);
    const auto caches =
        forward_batch(b, p, RunMode::Ada, CombineRule::Average, false);
    ParamGrads g1 = ModelParams::zeros(dims);
    ParamGrads g2 = ModelParams::zeros(dims);
    for (const auto& c : caches) {
        backward_accumulate(c, p, c.is_source ? 0.5 : 0.0, 0.25, 0.8,
                            CombineRule::Average, false, g1);
        backward_accumulate(c, p, c.is_source ? 1.0 : 0.0, 0.5, 0.8,
                            CombineRule::Average, false, g2);
    }
    std::vector<std::pair<double*, std::size_t>> a1, a2;
    g1.for_each_array([&](double* ptr, std::size_t n) { a1.emplace_back(ptr, n); });
    g2.for_each_array([&](double* ptr, std::size_t n) { a2.emplace_back(ptr, n); });
    for (std::size_t a = 0; a < a1.size(); ++a) {
        for (std::size_t i = 0; i < a1[a].second; ++i) {
            CHECK(a2[a].first[i] == 2.0 * a1[a].first[i]);
        }
    }
}

TEST_CASE("full-model gradients match the finite-difference oracle") {
    // Small instances over both run modes, all combine rules, assorted
    // lambda/weight settings; the acceptance suite runs the 20-seed sweep.
    double worst = 0.0;
    worst = std::max(worst, gradcheck::check_instance({4, 3, 1, 3, 2, 3}, 101,
                                                      RunMode::Ada,
                                                      CombineRule::Average,
                                                      false, 1.0, 1.0));
    worst = std::max(worst, gradcheck::check_instance({5, 4, 2, 2, 3, 2}, 102,
                                                      RunMode::Baseline,
                                                      CombineRule::Average,
                                                      false, 0.7, 0.3));
    worst = std::max(worst, gradcheck::check_instance({3, 3, 1, 2, 2, 2}, 103,
                                                      RunMode::Ada,
                                                      CombineRule::Product,
                                                      false, 1.0, 0.5));
    worst = std::max(worst, gradcheck::check_instance({3, 3, 2, 2, 2, 2}, 104,
                                                      RunMode::Ada,
                                                      CombineRule::VerbOnly,
                                                      true, 0.5, 2.0));
    worst = std::max(worst, gradcheck::check_instance({4, 2, 1, 2, 2, 3}, 105,
                                                      RunMode::Ada,
                                                      CombineRule::NounOnly,
                                                      false, 0.0, 1.0));
    CHECK(worst < 1e-5);
    MESSAGE("max relative gradient error: ", worst);
}

TEST_CASE("decoupled backward equals the pure classification gradient") {
    ModelDims dims{3, 3, 1, 2, 2, 2};
    ModelParams p = random_params(dims, 41);
    Rng rng(12);
    Batch b = random_batch(dims, rng, 2, 2, 3);
    const auto caches =
        forward_batch(b, p, RunMode::Ada, CombineRule::Average, false);
    const ParamGrads decoupled =
        backward_batch(caches, p, 0.0, 0.0, CombineRule::Average, false);

    ParamGrads cls_only = ModelParams::zeros(dims);
    for (const auto& c : caches) {
        if (c.is_source) {
            backward_accumulate(c, p, 0.5, 0.0, 0.0, CombineRule::Average,
                                false, cls_only);
        }
    }
    CHECK(decoupled == cls_only);
}

TEST_CASE("checkpoint round trip is exact; corrupt files are rejected") {
    const ModelDims dims{5, 4, 2, 3, 2, 3};
    const ModelParams p = random_params(dims, 55);
    const std::string path = "/tmp/ada_test_ckpt.bin";
    save_checkpoint(path, p);
    const ModelParams q = load_checkpoint(path);
    CHECK(p == q);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);

    save_checkpoint(path, p);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    std::filesystem::remove(path);
}
