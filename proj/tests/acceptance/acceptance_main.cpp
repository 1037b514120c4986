// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one self-contained check per criterion, each printing a
// single pass/fail line. Run all with no arguments or one with
// `--criterion N`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "faprompt/cap.hpp"
#include "faprompt/commands.hpp"
#include "faprompt/dap.hpp"
#include "faprompt/errors.hpp"
#include "faprompt/losses.hpp"
#include "faprompt/metrics.hpp"
#include "faprompt/run_config.hpp"
#include "faprompt/scoring.hpp"
#include "faprompt/training.hpp"
#include "test_util.hpp"

using namespace faprompt;
using faprompt::testing::auroc_pairwise_oracle;
using faprompt::testing::finite_difference;
using faprompt::testing::max_relative_error;
using faprompt::testing::random_tensor;

namespace fs = std::filesystem;

namespace {

// Reference numbers from the committed seed-0 toy run (64x64 synthetic,
// 200/80 split, d=64, stock defaults). Reruns must reproduce them to 1e-6.
constexpr double kCommittedImageAuroc = 0.83562499999999995;
constexpr double kCommittedPixelAuroc = 0.84636964537704851;

struct Outcome {
    bool pass = false;
    bool flag_only = false;  // criterion 8: report, never hard-fail
    std::string detail;
};

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "faprompt_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: finite-difference gradient suite (d=8, K=3, M=2, 4x4 maps).
// ---------------------------------------------------------------------------
Outcome criterion_gradients() {
    constexpr double kTol = 1e-3;
    Rng rng(1234);
    std::vector<std::string> failures;

    auto expect = [&](const char* name, double err) {
        if (!(err < kTol)) failures.push_back(std::string(name) + " rel err " + fmt(err));
    };

    {  // Orthogonality loss over a K=3, d=8 matrix.
        const Tensor rows = random_tensor(rng, {3, 8}, -1.0, 1.0);
        Graph g;
        Var m = g.leaf(rows, true);
        std::vector<Var> row_vars;
        for (std::size_t i = 0; i < 3; ++i) row_vars.push_back(g.subvector(m, i * 8, 8));
        g.backward(orthogonality_loss(g, row_vars));
        expect("L_oc", max_relative_error(
                           g.grad(m), finite_difference(
                                          [](const Tensor& p) { return orthogonality_loss(p); },
                                          rows)));
    }
    {  // Prior loss (normal label).
        const Tensor omega0 = random_tensor(rng, {8}, -1.0, 1.0);
        Graph g;
        Var omega = g.leaf(omega0, true);
        g.backward(prior_loss(g, omega, 0));
        auto f = [](const Tensor& p) {
            Graph h;
            Var o = h.leaf(p, true);
            return h.value(prior_loss(h, o, 0))[0];
        };
        expect("L_prior", max_relative_error(g.grad(omega), finite_difference(f, omega0)));
    }

    Tensor mask({4, 4});
    for (std::size_t i = 0; i < 16; ++i) mask[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const Tensor probs = random_tensor(rng, {4, 4}, 0.05, 0.95);
    {  // Focal.
        Graph g;
        Var p = g.leaf(probs, true);
        g.backward(focal_loss(g, p, mask));
        auto f = [&](const Tensor& q) { return focal_loss(q, mask); };
        expect("focal", max_relative_error(g.grad(p), finite_difference(f, probs)));
    }
    {  // Dice.
        Graph g;
        Var p = g.leaf(probs, true);
        g.backward(dice_loss(g, p, mask));
        auto f = [&](const Tensor& q) { return dice_loss(q, mask); };
        expect("dice", max_relative_error(g.grad(p), finite_difference(f, probs)));
    }
    {  // Local loss, both map arguments.
        const Tensor map_a = random_tensor(rng, {4, 4}, 0.05, 0.95);
        Graph g;
        Var mn = g.leaf(probs, true);
        Var ma = g.leaf(map_a, true);
        g.backward(local_loss(g, mn, ma, mask));
        auto fn = [&](const Tensor& q) { return local_loss(q, map_a, mask); };
        auto fa = [&](const Tensor& q) { return local_loss(probs, q, mask); };
        expect("L_local/map_n", max_relative_error(g.grad(mn), finite_difference(fn, probs)));
        expect("L_local/map_a", max_relative_error(g.grad(ma), finite_difference(fa, map_a)));
    }
    {  // Global loss over a batch of scores.
        const Tensor scores = random_tensor(rng, {6}, 0.05, 0.95);
        std::vector<int> labels(6);
        for (auto& y : labels) y = rng.uniform() < 0.5 ? 1 : 0;
        Graph g;
        Var s = g.leaf(scores, true);
        std::vector<Var> parts;
        for (std::size_t i = 0; i < 6; ++i) parts.push_back(g.subvector(s, i, 1));
        g.backward(global_loss(g, parts, labels));
        auto f = [&](const Tensor& q) { return global_loss(q, labels); };
        expect("L_global", max_relative_error(g.grad(s), finite_difference(f, scores)));
    }
    {  // Prior network parameters through sum(omega^2), d=8, M=2.
        PriorNetwork psi = PriorNetwork::init(8, 2, 8, 55);
        const Tensor patches = random_tensor(rng, {2, 8}, -1.0, 1.0);
        Graph g;
        PriorNetworkVars vars = PriorNetworkVars::attach(g, psi);
        Var omega = compute_prior(g, psi, vars, g.leaf(patches));
        g.backward(g.sum(g.mul(omega, omega)));

        auto eval_net = [&](const PriorNetwork& net) {
            Graph h;
            PriorNetworkVars hv = PriorNetworkVars::attach(h, net);
            Var o = compute_prior(h, net, hv, h.leaf(patches));
            return h.value(h.sum(h.mul(o, o)))[0];
        };
        auto fw1 = [&](const Tensor& q) {
            PriorNetwork net = psi;
            net.w1 = q;
            return eval_net(net);
        };
        auto fb1 = [&](const Tensor& q) {
            PriorNetwork net = psi;
            net.b1 = q;
            return eval_net(net);
        };
        auto fw2 = [&](const Tensor& q) {
            PriorNetwork net = psi;
            net.w2 = q;
            return eval_net(net);
        };
        auto fb2 = [&](const Tensor& q) {
            PriorNetwork net = psi;
            net.b2 = q;
            return eval_net(net);
        };
        expect("psi.w1", max_relative_error(g.grad(vars.w1), finite_difference(fw1, psi.w1)));
        expect("psi.b1", max_relative_error(g.grad(vars.b1), finite_difference(fb1, psi.b1)));
        expect("psi.w2", max_relative_error(g.grad(vars.w2), finite_difference(fw2, psi.w2)));
        expect("psi.b2", max_relative_error(g.grad(vars.b2), finite_difference(fb2, psi.b2)));
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = out.pass ? "11 gradient checks within rel 1e-3"
                          : "failed: " + failures.front();
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: formula oracles on 100 random instances each, tol 1e-9.
// ---------------------------------------------------------------------------
Outcome criterion_formula_oracles() {
    Rng rng(2024);
    double worst = 0.0;

    // Two-way softmax (patch and image scores share the same form).
    for (int i = 0; i < 100; ++i) {
        Tensor patches = random_tensor(rng, {5, 6}, -1.0, 1.0);
        const Tensor f_n = random_tensor(rng, {6}, -1.0, 1.0);
        const Tensor f_a = random_tensor(rng, {6}, -1.0, 1.0);
        const double tau = rng.uniform(0.5, 20.0);

        Graph g;
        auto [s_n, s_a] = patch_scores(g, patches, g.leaf(f_n), g.leaf(f_a), tau);
        for (std::size_t p = 0; p < 5; ++p) {
            double dot_n = 0.0, dot_a = 0.0, nn = 0.0, na = 0.0, np = 0.0;
            for (std::size_t j = 0; j < 6; ++j) {
                dot_n += patches(p, j) * f_n[j];
                dot_a += patches(p, j) * f_a[j];
                np += patches(p, j) * patches(p, j);
                nn += f_n[j] * f_n[j];
                na += f_a[j] * f_a[j];
            }
            const double ln = tau * dot_n / std::sqrt(np * nn);
            const double la = tau * dot_a / std::sqrt(np * na);
            const double m = std::max(ln, la);
            const double oracle = std::exp(la - m) / (std::exp(ln - m) + std::exp(la - m));
            worst = std::max(worst, std::abs(g.value(s_a)[p] - oracle));
            worst = std::max(worst, std::abs(g.value(s_n)[p] - (1.0 - oracle)));
        }
    }

    // Final-score fusion.
    for (int i = 0; i < 100; ++i) {
        const Tensor s_a = random_tensor(rng, {7}, 0.0, 1.0);
        const Tensor s_hat = random_tensor(rng, {7}, 0.0, 1.0);
        const double prob = rng.uniform();
        const double oracle = 0.5 * (prob + 0.5 * (s_a.max() + s_hat.max()));
        worst = std::max(worst, std::abs(final_score(prob, s_a, s_hat) - oracle));
    }

    // Inference-map fusion.
    for (int i = 0; i < 100; ++i) {
        const Tensor ma = random_tensor(rng, {4, 5}, 0.0, 1.0);
        const Tensor mn = random_tensor(rng, {4, 5}, 0.0, 1.0);
        const Tensor mah = random_tensor(rng, {4, 5}, 0.0, 1.0);
        const Tensor mnh = random_tensor(rng, {4, 5}, 0.0, 1.0);
        const Tensor fused = inference_map(ma, mn, mah, mnh);
        for (std::size_t p = 0; p < fused.size(); ++p) {
            const double oracle = 0.25 * (ma[p] + (1.0 - mn[p]) + mah[p] + (1.0 - mnh[p]));
            worst = std::max(worst, std::abs(fused[p] - oracle));
        }
    }

    // Total-loss additivity.
    Graph g;
    for (int i = 0; i < 100; ++i) {
        const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(),
                     d = rng.uniform();
        TotalLoss t = total_loss(g, g.leaf(Tensor::scalar(a)), g.leaf(Tensor::scalar(b)),
                                 g.leaf(Tensor::scalar(c)), g.leaf(Tensor::scalar(d)));
        worst = std::max(worst, std::abs(t.breakdown.total - (((a + b) + c) + d)));
    }

    Outcome out;
    out.pass = worst < 1e-9;
    out.detail = "max |impl - oracle| = " + fmt(worst);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: CAP properties.
// ---------------------------------------------------------------------------
Outcome criterion_cap() {
    std::vector<std::string> failures;

    // Constructed orthogonal embeddings -> exactly zero.
    Tensor orthogonal({4, 8});
    for (std::size_t i = 0; i < 4; ++i) orthogonal(i, 2 * i) = 1.0 + double(i);
    if (orthogonality_loss(orthogonal) != 0.0) failures.push_back("orthogonal set not 0");

    // Three-vector example equals sqrt(2).
    const double inv = 1.0 / std::sqrt(2.0);
    const double loss =
        orthogonality_loss(Tensor::from({{1.0, 0.0}, {0.0, 1.0}, {inv, inv}}));
    if (std::abs(loss - std::sqrt(2.0)) > 1e-6) failures.push_back("sqrt(2) example off");

    // Prototype permutation invariance (exact) and K=1 identity.
    BackboneConfig bcfg;
    bcfg.embedding_dim = 12;
    bcfg.token_dim = 12;
    bcfg.deep_prompt_depth = 2;
    bcfg.deep_prompt_length = 2;
    bcfg.input_h = 16;
    bcfg.input_w = 16;
    bcfg.patch_size = 8;
    bcfg.seed = 4;
    ToyBackbone backbone(bcfg);

    PromptBank bank = PromptBank::init(backbone, 3, 2, 4, 21);
    PromptBank permuted = bank;
    const std::size_t block = bank.num_abnormal * 12;
    const std::size_t perm[4] = {2, 0, 3, 1};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t b = 0; b < block; ++b) {
            permuted.abnormal_tokens[i * block + b] = bank.abnormal_tokens[perm[i] * block + b];
        }
    }
    Graph g1, g2;
    const Tensor p1 = g1.value(
        encode_prompt_bank(g1, PromptBankVars::attach(g1, bank), bank, backbone).prototype);
    const Tensor p2 = g2.value(
        encode_prompt_bank(g2, PromptBankVars::attach(g2, permuted), permuted, backbone)
            .prototype);
    for (std::size_t j = 0; j < p1.size(); ++j) {
        if (p1[j] != p2[j]) {
            failures.push_back("prototype not permutation invariant");
            break;
        }
    }

    PromptBank single = PromptBank::init(backbone, 3, 2, 1, 22);
    Graph g3;
    const PromptEmbeddings e =
        encode_prompt_bank(g3, PromptBankVars::attach(g3, single), single, backbone);
    const Tensor& proto = g3.value(e.prototype);
    const Tensor& only = g3.value(e.per_prompt[0]);
    for (std::size_t j = 0; j < proto.size(); ++j) {
        if (proto[j] != only[j]) {
            failures.push_back("K=1 prototype differs from its single embedding");
            break;
        }
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = out.pass ? "orthogonality + prototype properties hold"
                          : failures.front();
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: DAP properties.
// ---------------------------------------------------------------------------
Outcome criterion_dap() {
    std::vector<std::string> failures;

    // Zero-psi degeneracy: pass 2 bit-equal to pass 1.
    BackboneConfig bcfg;
    bcfg.embedding_dim = 16;
    bcfg.token_dim = 16;
    bcfg.deep_prompt_depth = 3;
    bcfg.deep_prompt_length = 2;
    bcfg.input_h = 32;
    bcfg.input_w = 32;
    bcfg.patch_size = 8;
    bcfg.seed = 9;
    ToyBackbone backbone(bcfg);
    TrainConfig tcfg;
    tcfg.input_h = 32;
    tcfg.input_w = 32;
    tcfg.num_normal = 2;
    tcfg.num_abnormal = 2;
    tcfg.num_prompts = 3;
    tcfg.top_m = 4;
    tcfg.seed = 9;

    PromptBank bank =
        PromptBank::init(backbone, tcfg.num_normal, tcfg.num_abnormal, tcfg.num_prompts, 9);
    PriorNetwork psi = PriorNetwork::zero(16, tcfg.top_m, 16);
    const DatasetHandle data = synth_dataset(9, 2, 2, 32, 0.5);

    Graph g;
    PromptBankVars bank_vars = PromptBankVars::attach(g, bank);
    PriorNetworkVars psi_vars = PriorNetworkVars::attach(g, psi);
    const ModelForward fwd =
        model_forward(g, data.sample(0), bank, bank_vars, psi, psi_vars, backbone, tcfg);
    const ScoreBundle bundle = extract_bundle(g, fwd);
    for (std::size_t i = 0; i < bundle.patch_abnormal.size(); ++i) {
        if (bundle.patch_abnormal[i] != bundle.patch_abnormal_refined[i] ||
            bundle.patch_normal[i] != bundle.patch_normal_refined[i]) {
            failures.push_back("zero-psi pass 2 not bit-equal to pass 1");
            break;
        }
    }
    for (std::size_t i = 0; i < bundle.map_abnormal.size(); ++i) {
        if (bundle.map_abnormal[i] != bundle.map_abnormal_refined[i]) {
            failures.push_back("zero-psi maps differ");
            break;
        }
    }

    // prior_loss gradient equals 2*omega, tol 1e-9.
    Rng rng(4321);
    const Tensor omega0 = random_tensor(rng, {16}, -2.0, 2.0);
    Graph h;
    Var omega = h.leaf(omega0, true);
    h.backward(prior_loss(h, omega, 0));
    for (std::size_t i = 0; i < omega0.size(); ++i) {
        if (std::abs(h.grad(omega)[i] - 2.0 * omega0[i]) > 1e-9) {
            failures.push_back("prior_loss gradient is not 2*omega");
            break;
        }
    }

    // Top-M selection vs a sort oracle, 1000 random vectors with ties.
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t l = 4 + rng.below(24);
        Tensor scores({l});
        for (double& v : scores.data()) v = std::floor(rng.uniform() * 7.0) / 7.0;
        Tensor embeddings({l, 2});
        for (std::size_t i = 0; i < l; ++i) {
            embeddings(i, 0) = double(i);
            embeddings(i, 1) = -double(i);
        }
        const std::size_t m = 1 + rng.below(l);
        const PatchSelection got = select_top_patches(scores, embeddings, m);

        // Oracle: stable sort of (score desc, index asc) pairs.
        std::vector<std::size_t> idx(l);
        for (std::size_t i = 0; i < l; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        for (std::size_t i = 0; i < m; ++i) {
            if (got.indices[i] != idx[i] || got.patches(i, 0) != double(idx[i])) {
                failures.push_back("top-M selection mismatch at trial " + std::to_string(trial));
                trial = 1000;
                break;
            }
        }
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = out.pass ? "zero-prior degeneracy, analytic gradient, 1000 selection trials"
                          : failures.front();
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 5: metric oracles.
// ---------------------------------------------------------------------------
Outcome criterion_metrics() {
    Rng rng(555);
    std::vector<std::string> failures;

    // AUROC vs brute force, n=500 with ties.
    std::vector<double> scores(500);
    std::vector<int> labels(500);
    for (std::size_t i = 0; i < 500; ++i) {
        scores[i] = std::floor(rng.uniform() * 15.0) / 15.0;
        labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    if (std::abs(auroc(scores, labels) - auroc_pairwise_oracle(scores, labels)) >= 1e-12) {
        failures.push_back("auroc differs from the pairwise oracle");
    }

    // AP vs the step-wise definition.
    for (int trial = 0; trial < 50 && failures.empty(); ++trial) {
        std::vector<double> s(80);
        std::vector<int> y(80);
        for (std::size_t i = 0; i < 80; ++i) {
            s[i] = std::floor(rng.uniform() * 10.0) / 10.0;
            y[i] = rng.uniform() < 0.3 ? 1 : 0;
        }
        y[3] = 1;

        std::vector<double> distinct = s;
        std::sort(distinct.begin(), distinct.end(), std::greater<>());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        std::size_t total_pos = 0;
        for (int v : y) total_pos += (v != 0);
        double oracle = 0.0, prev_recall = 0.0;
        for (double t : distinct) {
            std::size_t tp = 0, fp = 0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (s[i] >= t) (y[i] != 0 ? tp : fp) += 1;
            }
            const double recall = double(tp) / double(total_pos);
            oracle += (recall - prev_recall) * (double(tp) / double(tp + fp));
            prev_recall = recall;
        }
        if (std::abs(average_precision(s, y) - oracle) >= 1e-12) {
            failures.push_back("average_precision differs from the step-wise oracle");
        }
    }

    // PRO vs an exhaustive sweep on 5x5 instances.
    for (int trial = 0; trial < 30 && failures.empty(); ++trial) {
        Tensor map({5, 5});
        Tensor mask({5, 5});
        for (std::size_t p = 0; p < 25; ++p) {
            map[p] = std::floor(rng.uniform() * 5.0) / 5.0;
            mask[p] = rng.uniform() < 0.3 ? 1.0 : 0.0;
        }
        mask(2, 2) = 1.0;
        std::vector<Tensor> maps{map}, masks{mask};

        // Exhaustive oracle: recompute recall and FPR per distinct value.
        std::vector<double> thresholds(map.data().begin(), map.data().end());
        std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
        const auto regions = connected_components(mask);
        std::size_t normals = 0;
        for (std::size_t p = 0; p < 25; ++p) normals += mask[p] == 0.0;

        std::vector<std::pair<double, double>> curve;
        for (double t : thresholds) {
            double recall_sum = 0.0;
            for (const auto& region : regions) {
                std::size_t hit = 0;
                for (std::size_t px : region) hit += map[px] > t;
                recall_sum += double(hit) / double(region.size());
            }
            std::size_t fp = 0;
            for (std::size_t p = 0; p < 25; ++p) fp += mask[p] == 0.0 && map[p] > t;
            const double fpr = double(fp) / double(normals);
            const double overlap = recall_sum / double(regions.size());
            if (!curve.empty() && curve.back().first == fpr) {
                curve.back().second = overlap;
            } else {
                curve.emplace_back(fpr, overlap);
            }
        }
        const double limit = 0.3;
        double area = 0.0, pf = curve.front().first, po = curve.front().second;
        for (std::size_t i = 1; i < curve.size() && pf < limit; ++i) {
            auto [f, o] = curve[i];
            if (f >= limit) {
                const double at = po + (o - po) * (limit - pf) / (f - pf);
                area += 0.5 * (po + at) * (limit - pf);
                pf = limit;
                break;
            }
            area += 0.5 * (po + o) * (f - pf);
            pf = f;
            po = o;
        }
        if (pf < limit) area += po * (limit - pf);
        const double oracle = area / limit;

        if (std::abs(pro(maps, masks, limit) - oracle) >= 1e-9) {
            failures.push_back("pro differs from the exhaustive oracle");
        }
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = out.pass ? "auroc/ap within 1e-12, pro within 1e-9 of the oracles"
                          : failures.front();
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 6: prior nulling on an all-normal stream.
// ---------------------------------------------------------------------------
Outcome criterion_prior_nulling() {
    BackboneConfig bcfg;
    bcfg.embedding_dim = 32;
    bcfg.token_dim = 32;
    bcfg.deep_prompt_depth = 3;
    bcfg.deep_prompt_length = 2;
    bcfg.input_h = 32;
    bcfg.input_w = 32;
    bcfg.patch_size = 8;
    bcfg.seed = 0;
    ToyBackbone backbone(bcfg);

    TrainConfig tcfg;
    tcfg.input_h = 32;
    tcfg.input_w = 32;
    tcfg.num_normal = 2;
    tcfg.num_abnormal = 2;
    tcfg.num_prompts = 3;
    tcfg.top_m = 8;
    tcfg.batch_size = 8;
    tcfg.seed = 0;

    // All-normal stream: anomaly_fraction small enough that floor() is zero.
    const std::size_t n_train = 64;
    const DatasetHandle data = synth_dataset(0, n_train, 8, 32, 1e-9);
    if (data.count_anomalous(Split::Train) != 0) {
        return {false, false, "stream is not all-normal"};
    }
    // 64 samples / batch 8 = 8 steps per epoch; 25 epochs = 200 steps.
    tcfg.epochs = 25;

    auto mean_prior_norm = [&](const PromptBank& bank, const PriorNetwork& psi) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < 8; ++i) {
            Graph g;
            PromptBankVars bank_vars = PromptBankVars::attach(g, bank, false);
            PriorNetworkVars psi_vars = PriorNetworkVars::attach(g, psi, false);
            const ModelForward fwd = model_forward(g, data.sample(i), bank, bank_vars, psi,
                                                   psi_vars, backbone, tcfg);
            total += g.value(fwd.omega).norm();
            ++count;
        }
        return total / double(count);
    };

    const PromptBank bank0 = PromptBank::init(backbone, tcfg.num_normal, tcfg.num_abnormal,
                                              tcfg.num_prompts, tcfg.seed);
    const PriorNetwork psi0 =
        PriorNetwork::init(bcfg.embedding_dim, tcfg.top_m, bcfg.token_dim, tcfg.seed);
    const double before = mean_prior_norm(bank0, psi0);

    std::size_t steps = 0;
    const Checkpoint trained =
        train(tcfg, data, backbone, [&steps](const StepRecord&) { ++steps; });
    const double after = mean_prior_norm(trained.bank, trained.psi);

    Outcome out;
    out.pass = steps == 200 && after < 0.01 * before;
    out.detail = "mean ||omega||: " + fmt(before) + " -> " + fmt(after) + " after " +
                 std::to_string(steps) + " steps (need < 1% of initial)";
    return out;
}

// ---------------------------------------------------------------------------
// Criteria 7-9 share the reference toy configuration.
// ---------------------------------------------------------------------------
RunConfig reference_config(const std::string& output_dir) {
    std::ostringstream json;
    json << R"({
      "backbone": {"embedding_dim": 64, "token_dim": 64, "patch_size": 8},
      "train": {"input_size": [64, 64], "seed": 0},
      "data": {"synth": {"n_train": 200, "n_test": 80, "size": 64, "anomaly_fraction": 0.5}},
      "eval": {"fpr_limit": 0.3},
      "output_dir": ")"
         << output_dir << R"("})";
    return parse_run_config(json.str());
}

struct ToyRun {
    EvalReport report;
    std::vector<double> epoch_mean_total;
};

ToyRun toy_run(const RunConfig& config, const TrainOptions& options) {
    const DatasetHandle dataset = open_dataset(config);
    const std::unique_ptr<Backbone> backbone = make_backbone(config.backbone);

    std::map<std::size_t, std::pair<double, std::size_t>> epoch_totals;
    Checkpoint checkpoint =
        train(config.train, dataset, *backbone,
              [&epoch_totals](const StepRecord& record) {
                  epoch_totals[record.epoch].first += record.losses.total;
                  epoch_totals[record.epoch].second += 1;
              },
              options);

    const fs::path dir = scratch_dir("toy_run_eval");
    const std::string path = (dir / "checkpoint.fapk").string();
    save_checkpoint(checkpoint, path);

    RunConfig eval_config = config;
    eval_config.output_dir = dir.string();
    ToyRun run;
    run.report = run_eval(eval_config, path);
    for (const auto& [epoch, acc] : epoch_totals) {
        run.epoch_mean_total.push_back(acc.first / double(acc.second));
    }
    return run;
}

Outcome criterion_end_to_end() {
    const fs::path dir = scratch_dir("criterion7");
    const RunConfig config = reference_config(dir.string());
    const ToyRun run = toy_run(config, TrainOptions{});

    std::vector<std::string> failures;
    if (!(run.epoch_mean_total.back() < run.epoch_mean_total.front())) {
        failures.push_back("final-epoch mean loss did not improve on the first epoch");
    }
    if (!(run.report.image_auroc > 0.80)) {
        failures.push_back("image AUROC " + fmt(run.report.image_auroc) + " <= 0.80");
    }
    if (!(run.report.pixel_auroc > 0.80)) {
        failures.push_back("pixel AUROC " + fmt(run.report.pixel_auroc) + " <= 0.80");
    }
    if (kCommittedImageAuroc > 0.0 &&
        std::abs(run.report.image_auroc - kCommittedImageAuroc) > 1e-6) {
        failures.push_back("image AUROC drifted from the committed reference value");
    }
    if (kCommittedPixelAuroc > 0.0 &&
        std::abs(run.report.pixel_auroc - kCommittedPixelAuroc) > 1e-6) {
        failures.push_back("pixel AUROC drifted from the committed reference value");
    }

    Outcome out;
    out.pass = failures.empty();
    out.detail = "image AUROC " + fmt(run.report.image_auroc) + ", pixel AUROC " +
                 fmt(run.report.pixel_auroc) + ", epoch loss " +
                 fmt(run.epoch_mean_total.front()) + " -> " + fmt(run.epoch_mean_total.back());
    if (!failures.empty()) out.detail += "; " + failures.front();
    return out;
}

Outcome criterion_ablation() {
    const fs::path dir = scratch_dir("criterion8");
    const RunConfig full_config = reference_config(dir.string());

    const ToyRun full = toy_run(full_config, TrainOptions{});

    RunConfig no_cap_config = full_config;  // K = 1: no compound prompt set
    no_cap_config.train.num_prompts = 1;
    const ToyRun no_cap = toy_run(no_cap_config, TrainOptions{});

    TrainOptions no_oc;
    no_oc.use_orthogonality_loss = false;
    const ToyRun no_oc_run = toy_run(full_config, no_oc);

    TrainOptions no_dap;
    no_dap.freeze_zero_prior = true;
    const ToyRun no_dap_run = toy_run(full_config, no_dap);

    std::ostringstream table;
    table << "\n  variant        image_auroc  pixel_auroc\n";
    auto row = [&table](const char* name, const EvalReport& r) {
        table << "  " << name << "  " << fmt(r.image_auroc) << "      " << fmt(r.pixel_auroc)
              << "\n";
    };
    row("full        ", full.report);
    row("no-CAP (K=1)", no_cap.report);
    row("no-L_oc     ", no_oc_run.report);
    row("no-DAP      ", no_dap_run.report);

    constexpr double kTol = 0.02;
    std::vector<std::string> flags;
    if (full.report.image_auroc < no_cap.report.image_auroc - kTol) {
        flags.push_back("image AUROC below no-CAP variant");
    }
    if (full.report.image_auroc < no_oc_run.report.image_auroc - kTol) {
        flags.push_back("image AUROC below no-L_oc variant");
    }
    if (full.report.image_auroc < no_dap_run.report.image_auroc - kTol) {
        flags.push_back("image AUROC below no-DAP variant");
    }
    if (full.report.pixel_auroc < no_dap_run.report.pixel_auroc - kTol) {
        flags.push_back("pixel AUROC below no-DAP variant");
    }

    Outcome out;
    out.pass = true;  // stochastic-optimization caveat: flags never hard-fail
    out.flag_only = !flags.empty();
    out.detail = table.str();
    if (!flags.empty()) out.detail += "  FLAG: " + flags.front();
    return out;
}

Outcome criterion_determinism() {
    const fs::path dir_a = scratch_dir("criterion9_a");
    const fs::path dir_b = scratch_dir("criterion9_b");

    auto run_once = [](const fs::path& dir) {
        std::ostringstream json;
        json << R"({
          "backbone": {"embedding_dim": 16, "token_dim": 16,
                       "deep_prompt_depth": 3, "deep_prompt_length": 2, "patch_size": 8},
          "train": {"epochs": 2, "batch_size": 4, "input_size": [32, 32],
                    "E": 2, "E_prime": 2, "K": 3, "M": 4, "seed": 0, "sigma": 2.0},
          "data": {"synth": {"n_train": 16, "n_test": 8, "size": 32, "anomaly_fraction": 0.5}},
          "output_dir": ")"
             << dir.string() << R"("})";
        const RunConfig config = parse_run_config(json.str());
        const std::string checkpoint = run_train(config);
        run_eval(config, checkpoint);
        std::ifstream in(dir / "eval-report.json", std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };

    const std::string first = run_once(dir_a);
    const std::string second = run_once(dir_b);

    Outcome out;
    out.pass = !first.empty() && first == second;
    out.detail = out.pass ? "train+eval twice -> byte-identical eval-report.json"
                          : "reports differ between identical runs";
    return out;
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
            ++i;
        } else {
            std::cerr << "usage: faprompt_acceptance [--criterion N]\n";
            return 2;
        }
    }

    const std::vector<Criterion> criteria = {
        {1, "gradient suite", criterion_gradients},
        {2, "formula oracles", criterion_formula_oracles},
        {3, "CAP properties", criterion_cap},
        {4, "DAP properties", criterion_dap},
        {5, "metric oracles", criterion_metrics},
        {6, "prior nulling", criterion_prior_nulling},
        {7, "end-to-end toy run", criterion_end_to_end},
        {8, "ablation trend (flag only)", criterion_ablation},
        {9, "determinism", criterion_determinism},
    };

    bool all_pass = true;
    for (const Criterion& criterion : criteria) {
        if (only != 0 && criterion.number != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const char* verdict = outcome.pass ? (outcome.flag_only ? "FLAG" : "PASS") : "FAIL";
        std::cout << "[" << verdict << "] criterion " << criterion.number << ": "
                  << criterion.name << " — " << outcome.detail << " (" << fmt(seconds)
                  << " s)\n";
        all_pass = all_pass && outcome.pass;
    }
    return all_pass ? 0 : 1;
}
