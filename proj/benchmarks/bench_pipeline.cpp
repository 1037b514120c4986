// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "faprompt/dap.hpp"
#include "faprompt/metrics.hpp"
#include "faprompt/rng.hpp"
#include "faprompt/scoring.hpp"
#include "faprompt/training.hpp"

using namespace faprompt;

namespace {

BackboneConfig bench_backbone(std::size_t dim, std::size_t input) {
    BackboneConfig cfg;
    cfg.embedding_dim = dim;
    cfg.token_dim = dim;
    cfg.deep_prompt_depth = 9;
    cfg.deep_prompt_length = 4;
    cfg.input_h = input;
    cfg.input_w = input;
    cfg.patch_size = 8;
    cfg.seed = 0;
    return cfg;
}

Tensor random_map(Rng& rng, std::size_t side) {
    Tensor map({side, side});
    for (double& v : map.data()) v = rng.uniform();
    return map;
}

}  // namespace

static void BM_EncodeImage(benchmark::State& state) {
    ToyBackbone backbone(bench_backbone(64, static_cast<std::size_t>(state.range(0))));
    Rng rng(1);
    Tensor image({backbone.config().input_h, backbone.config().input_w, 3});
    for (double& v : image.data()) v = rng.uniform();
    for (auto _ : state) {
        ImageEncoding enc = backbone.encode_image(image);
        benchmark::DoNotOptimize(enc.patch_embeddings);
    }
}
BENCHMARK(BM_EncodeImage)->Arg(64)->Arg(128)->Arg(256);

static void BM_BilinearUpsample(benchmark::State& state) {
    Rng rng(2);
    Tensor scores({64});
    for (double& v : scores.data()) v = rng.uniform();
    const std::size_t side = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        Tensor map = to_segmentation_map(scores, 8, 8, side, side);
        benchmark::DoNotOptimize(map);
    }
}
BENCHMARK(BM_BilinearUpsample)->Arg(64)->Arg(256)->Arg(518);

static void BM_GaussianSmooth(benchmark::State& state) {
    Rng rng(3);
    Tensor map = random_map(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        Tensor out = gaussian_smooth(map, 10.0);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_GaussianSmooth)->Arg(64)->Arg(256);

static void BM_Auroc(benchmark::State& state) {
    Rng rng(4);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i] = rng.uniform();
        labels[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(auroc(scores, labels));
    }
}
BENCHMARK(BM_Auroc)->Range(1 << 10, 1 << 18);

static void BM_Pro(benchmark::State& state) {
    Rng rng(5);
    std::vector<Tensor> maps, masks;
    for (int i = 0; i < 8; ++i) {
        maps.push_back(random_map(rng, 64));
        Tensor mask({64, 64});
        for (std::size_t y = 20; y < 30; ++y) {
            for (std::size_t x = 20; x < 30; ++x) mask(y, x) = 1.0;
        }
        masks.push_back(std::move(mask));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(pro(maps, masks, 0.3));
    }
}
BENCHMARK(BM_Pro);

static void BM_ModelForward(benchmark::State& state) {
    ToyBackbone backbone(bench_backbone(64, 64));
    TrainConfig cfg;
    cfg.input_h = 64;
    cfg.input_w = 64;
    const DatasetHandle data = synth_dataset(0, 2, 2, 64, 0.5);
    const Sample sample = data.sample(0);
    PromptBank bank = PromptBank::init(backbone, cfg.num_normal, cfg.num_abnormal,
                                       cfg.num_prompts, cfg.seed);
    PriorNetwork psi = PriorNetwork::init(64, cfg.top_m, 64, cfg.seed);

    for (auto _ : state) {
        Graph g;
        PromptBankVars bank_vars = PromptBankVars::attach(g, bank);
        PriorNetworkVars psi_vars = PriorNetworkVars::attach(g, psi);
        ModelForward fwd =
            model_forward(g, sample, bank, bank_vars, psi, psi_vars, backbone, cfg);
        benchmark::DoNotOptimize(g.value(fwd.final));
    }
}
BENCHMARK(BM_ModelForward);

BENCHMARK_MAIN();
