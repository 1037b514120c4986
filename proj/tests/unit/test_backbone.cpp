// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "faprompt/backbone.hpp"
#include "faprompt/errors.hpp"
#include "test_util.hpp"

using namespace faprompt;
using faprompt::testing::finite_difference;
using faprompt::testing::max_relative_error;
using faprompt::testing::random_tensor;

namespace {

BackboneConfig small_config() {
    BackboneConfig cfg;
    cfg.embedding_dim = 8;
    cfg.token_dim = 8;
    cfg.deep_prompt_depth = 2;
    cfg.deep_prompt_length = 3;
    cfg.input_h = 32;
    cfg.input_w = 32;
    cfg.patch_size = 8;
    cfg.seed = 5;
    return cfg;
}

Tensor constant_image(std::size_t h, std::size_t w, double value) {
    Tensor image({h, w, 3});
    image.fill(value);
    return image;
}

}  // namespace

TEST_CASE("encode_image obeys the grid shape contract") {
    ToyBackbone backbone(small_config());
    const ImageEncoding enc = backbone.encode_image(constant_image(32, 32, 0.5));
    CHECK(enc.grid_h == 4);
    CHECK(enc.grid_w == 4);
    CHECK(enc.patch_embeddings.dim(0) == enc.grid_h * enc.grid_w);
    CHECK(enc.patch_embeddings.dim(1) == 8);
    CHECK(enc.image_embedding.size() == 8);
    CHECK(enc.patch_embeddings.all_finite());
}

TEST_CASE("encode_image is deterministic for a fixed seed") {
    ToyBackbone a(small_config());
    ToyBackbone b(small_config());
    Rng rng(17);
    Tensor image({32, 32, 3});
    for (double& v : image.data()) v = rng.uniform();

    const ImageEncoding ea = a.encode_image(image);
    const ImageEncoding eb = b.encode_image(image);
    for (std::size_t i = 0; i < ea.patch_embeddings.size(); ++i) {
        CHECK(ea.patch_embeddings[i] == eb.patch_embeddings[i]);
    }
    for (std::size_t i = 0; i < ea.image_embedding.size(); ++i) {
        CHECK(ea.image_embedding[i] == eb.image_embedding[i]);
    }
}

TEST_CASE("encode_image matches an independent projection oracle") {
    const BackboneConfig cfg = small_config();
    ToyBackbone backbone(cfg);
    const Tensor image = constant_image(32, 32, 0.25);
    const ImageEncoding enc = backbone.encode_image(image);

    // Plain-loop re-computation from the exposed weights.
    const std::size_t pflat = cfg.patch_size * cfg.patch_size * 3;
    std::vector<double> flat(pflat, 0.25);  // constant image: every patch identical
    std::vector<double> patch_embed(cfg.embedding_dim);
    for (std::size_t i = 0; i < cfg.embedding_dim; ++i) {
        double acc = backbone.patch_bias()[i];
        for (std::size_t j = 0; j < pflat; ++j) acc += backbone.patch_weight()(i, j) * flat[j];
        patch_embed[i] = std::tanh(acc);
    }
    for (std::size_t row = 0; row < enc.patch_embeddings.dim(0); ++row) {
        for (std::size_t i = 0; i < cfg.embedding_dim; ++i) {
            CHECK(enc.patch_embeddings(row, i) == doctest::Approx(patch_embed[i]).epsilon(1e-6));
        }
    }
    for (std::size_t i = 0; i < cfg.embedding_dim; ++i) {
        double acc = backbone.global_bias()[i];
        for (std::size_t j = 0; j < cfg.embedding_dim; ++j) {
            acc += backbone.global_weight()(i, j) * patch_embed[j];
        }
        CHECK(enc.image_embedding[i] == doctest::Approx(std::tanh(acc)).epsilon(1e-6));
    }
}

TEST_CASE("encode_image validates input") {
    ToyBackbone backbone(small_config());
    CHECK_THROWS_AS(backbone.encode_image(constant_image(16, 32, 0.5)), ConfigError);

    Tensor bad = constant_image(32, 32, 0.5);
    bad[10] = std::nan("");
    CHECK_THROWS_AS(backbone.encode_image(bad), ValidationError);
}

TEST_CASE("encode_text is deterministic and differentiable w.r.t. every token") {
    const BackboneConfig cfg = small_config();
    ToyBackbone backbone(cfg);
    Rng rng(23);
    const Tensor token0 = random_tensor(rng, {8}, -0.1, 0.1);
    const Tensor token1 = random_tensor(rng, {8}, -0.1, 0.1);
    const Tensor deep = random_tensor(rng, {2, 3, 8}, -0.1, 0.1);
    const Tensor probe_weights = random_tensor(rng, {8});

    auto loss = [&](const Tensor& t0, const Tensor& t1, const Tensor& dp) {
        Graph g;
        std::vector<Var> tokens = {g.leaf(t0), g.leaf(t1)};
        Var out = backbone.encode_text(g, tokens, g.leaf(dp));
        return g.value(g.sum(g.mul_const(out, probe_weights)))[0];
    };

    // Determinism: two evaluations agree exactly.
    CHECK(loss(token0, token1, deep) == loss(token0, token1, deep));

    Graph g;
    Var t0 = g.leaf(token0, true);
    Var t1 = g.leaf(token1, true);
    Var dp = g.leaf(deep, true);
    std::vector<Var> tokens = {t0, t1};
    Var out = backbone.encode_text(g, tokens, dp);
    g.backward(g.sum(g.mul_const(out, probe_weights)));

    auto wrap0 = [&](const Tensor& p) { return loss(p, token1, deep); };
    auto wrap1 = [&](const Tensor& p) { return loss(token0, p, deep); };
    auto wrap_dp = [&](const Tensor& p) { return loss(token0, token1, p); };
    CHECK(max_relative_error(g.grad(t0), finite_difference(wrap0, token0)) < 1e-3);
    CHECK(max_relative_error(g.grad(t1), finite_difference(wrap1, token1)) < 1e-3);
    CHECK(max_relative_error(g.grad(dp), finite_difference(wrap_dp, deep)) < 1e-3);
}

TEST_CASE("encode_text bias path matches a loop oracle for zero inputs") {
    const BackboneConfig cfg = small_config();
    ToyBackbone backbone(cfg);

    Graph g;
    std::vector<Var> tokens = {g.leaf(Tensor({8})), g.leaf(Tensor({8}))};
    Var out = backbone.encode_text(g, tokens, g.leaf(Tensor({2, 3, 8})));

    // All-zero tokens and deep prompts: the encoding reduces to the bias path.
    std::vector<double> r(8, 0.0);
    for (std::size_t layer = 0; layer < cfg.deep_prompt_depth; ++layer) {
        std::vector<double> next(8);
        for (std::size_t i = 0; i < 8; ++i) {
            double acc = backbone.text_layer_bias(layer)[i];
            for (std::size_t j = 0; j < 8; ++j) {
                acc += backbone.text_layer_weight(layer)(i, j) * r[j];
            }
            next[i] = std::tanh(acc);
        }
        r = next;
    }
    for (std::size_t i = 0; i < 8; ++i) {
        double acc = backbone.text_out_bias()[i];
        for (std::size_t j = 0; j < 8; ++j) acc += backbone.text_out_weight()(i, j) * r[j];
        CHECK(g.value(out)[i] == doctest::Approx(acc).epsilon(1e-9));
    }
}

TEST_CASE("encode_text rejects empty sequences") {
    ToyBackbone backbone(small_config());
    Graph g;
    std::vector<Var> none;
    CHECK_THROWS_AS(backbone.encode_text(g, none, std::nullopt), ValidationError);
}

TEST_CASE("make_backbone rejects unknown kinds, parameter hash is stable") {
    BackboneConfig cfg = small_config();
    CHECK(make_backbone(cfg) != nullptr);
    CHECK(ToyBackbone(cfg).parameter_hash() == ToyBackbone(cfg).parameter_hash());

    cfg.seed = 6;
    CHECK(ToyBackbone(small_config()).parameter_hash() != ToyBackbone(cfg).parameter_hash());

    cfg.kind = "clip-vitl14";
    CHECK_THROWS_AS(make_backbone(cfg), ConfigError);
}
