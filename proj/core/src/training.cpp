// Copyright 2026 The faprompt Authors
// SPDX-License-Identifier: Apache-2.0

#include "faprompt/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "faprompt/errors.hpp"
#include "faprompt/logging.hpp"
#include "faprompt/rng.hpp"
#include "json_conv.hpp"

namespace faprompt {

void TrainConfig::validate() const {
    if (lr < 0.0) throw ConfigError("train: lr must be nonnegative");
    if (batch_size == 0 || epochs == 0) {
        throw ConfigError("train: batch_size and epochs must be positive");
    }
    if (input_h == 0 || input_w == 0) throw ConfigError("train: input size must be positive");
    if (num_normal == 0 || num_abnormal == 0 || num_prompts == 0 || top_m == 0) {
        throw ConfigError("train: E, E', K and M must all be positive");
    }
    if (tau <= 0.0 || sigma <= 0.0) throw ConfigError("train: tau and sigma must be positive");
    if (gamma < 0.0 || alpha <= 0.0 || alpha >= 1.0) {
        throw ConfigError("train: gamma must be nonnegative and alpha in (0, 1)");
    }
}

ModelForward model_forward(Graph& g, const Sample& sample, const PromptBank& bank,
                           const PromptBankVars& bank_vars, const PriorNetwork& psi,
                           const PriorNetworkVars& psi_vars, const Backbone& backbone,
                           const TrainConfig& config) {
    const PromptEmbeddings pass1 = encode_prompt_bank(g, bank_vars, bank, backbone);
    return model_forward(g, sample, bank, bank_vars, psi, psi_vars, backbone, config, pass1);
}

ModelForward model_forward(Graph& g, const Sample& sample, const PromptBank& bank,
                           const PromptBankVars& bank_vars, const PriorNetwork& psi,
                           const PriorNetworkVars& psi_vars, const Backbone& backbone,
                           const TrainConfig& config, const PromptEmbeddings& pass1) {
    ModelForward out;
    out.encoding = backbone.encode_image(sample.image);
    out.pass1 = pass1;

    const std::size_t patch_count = out.encoding.patch_embeddings.dim(0);
    if (config.top_m > patch_count) {
        throw ConfigError("model_forward: M exceeds the patch count of the input size");
    }

    // Pass 1: prior-free scores drive the abnormal-patch selection.
    auto [s_n, s_a] = patch_scores(g, out.encoding.patch_embeddings, pass1.normal,
                                   pass1.prototype, config.tau);
    out.patch_normal = s_n;
    out.patch_abnormal = s_a;

    PatchSelection selection =
        select_top_patches(g.value(s_a), out.encoding.patch_embeddings, config.top_m);
    out.prior_indices = selection.indices;

    // The selected embeddings come from the frozen visual encoder applied to
    // data, so they enter the graph as constants.
    Var patches = g.leaf(std::move(selection.patches));
    out.omega = compute_prior(g, psi, psi_vars, patches);

    // Pass 2: re-encode the prompts with the abnormality prior mixed into
    // the abnormal tokens.
    out.pass2 = encode_prompt_bank(g, bank_vars, bank, backbone, out.omega);
    auto [s_n_hat, s_a_hat] = patch_scores(g, out.encoding.patch_embeddings, out.pass2.normal,
                                           out.pass2.prototype, config.tau);
    out.patch_normal_refined = s_n_hat;
    out.patch_abnormal_refined = s_a_hat;

    const std::size_t gh = out.encoding.grid_h;
    const std::size_t gw = out.encoding.grid_w;
    const std::size_t h = sample.image.dim(0);
    const std::size_t w = sample.image.dim(1);
    out.map_normal = to_segmentation_map(g, s_n, gh, gw, h, w);
    out.map_abnormal = to_segmentation_map(g, s_a, gh, gw, h, w);
    out.map_normal_refined = to_segmentation_map(g, s_n_hat, gh, gw, h, w);
    out.map_abnormal_refined = to_segmentation_map(g, s_a_hat, gh, gw, h, w);

    out.image_prob = image_probability(g, out.encoding.image_embedding, out.pass2.normal,
                                       out.pass2.prototype, config.tau);
    out.final = final_score(g, out.image_prob, s_a, s_a_hat);
    return out;
}

ScoreBundle extract_bundle(const Graph& g, const ModelForward& forward) {
    ScoreBundle bundle;
    bundle.patch_normal = g.value(forward.patch_normal);
    bundle.patch_abnormal = g.value(forward.patch_abnormal);
    bundle.patch_normal_refined = g.value(forward.patch_normal_refined);
    bundle.patch_abnormal_refined = g.value(forward.patch_abnormal_refined);
    bundle.map_normal = g.value(forward.map_normal);
    bundle.map_abnormal = g.value(forward.map_abnormal);
    bundle.map_normal_refined = g.value(forward.map_normal_refined);
    bundle.map_abnormal_refined = g.value(forward.map_abnormal_refined);
    bundle.image_probability = g.value(forward.image_prob)[0];
    bundle.final_score = g.value(forward.final)[0];
    return bundle;
}

void AdamOptimizer::step(std::span<const std::pair<Tensor*, const Tensor*>> params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = Tensor(params[i].first->shape());
            v_[i] = Tensor(params[i].first->shape());
        }
    }
    if (m_.size() != params.size()) {
        throw TrainingError("AdamOptimizer: parameter list changed between steps");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i].first;
        const Tensor& grad = *params[i].second;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = grad.empty() ? 0.0 : grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * gj;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

namespace {

constexpr char kMagic[4] = {'F', 'A', 'P', 'K'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_f32_le(std::ofstream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u32(out, bits);
}

float read_f32_le(std::ifstream& in) {
    const std::uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

void write_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) write_f32_le(out, static_cast<float>(v));
}

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

NamedTensor read_tensor(std::ifstream& in) {
    NamedTensor out;
    const std::uint32_t name_len = read_u32(in);
    out.name.resize(name_len);
    in.read(out.name.data(), name_len);
    const std::uint32_t rank = read_u32(in);
    if (rank == 0 || rank > 3) throw ValidationError("checkpoint: bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u32(in);
    out.tensor = Tensor(shape);
    for (double& v : out.tensor.data()) v = static_cast<double>(read_f32_le(in));
    if (!in.good()) throw ValidationError("checkpoint: truncated tensor data");
    return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open checkpoint file '" + path + "' for writing");

    out.write(kMagic, 4);
    write_u32(out, checkpoint.format_version);

    nlohmann::json meta{
        {"backbone", detail::backbone_to_json(checkpoint.backbone)},
        {"train", detail::train_to_json(checkpoint.train)},
    };
    const std::string meta_bytes = meta.dump();
    write_u32(out, static_cast<std::uint32_t>(meta_bytes.size()));
    out.write(meta_bytes.data(), static_cast<std::streamsize>(meta_bytes.size()));

    std::vector<std::pair<std::string, const Tensor*>> tensors = {
        {"cap.normal_tokens", &checkpoint.bank.normal_tokens},
        {"cap.abnormal_tokens", &checkpoint.bank.abnormal_tokens},
        {"cap.object_token", &checkpoint.bank.object_token},
    };
    if (checkpoint.bank.has_deep_prompts()) {
        tensors.emplace_back("cap.deep_prompts", &checkpoint.bank.deep_prompts);
    }
    tensors.emplace_back("psi.w1", &checkpoint.psi.w1);
    tensors.emplace_back("psi.b1", &checkpoint.psi.b1);
    tensors.emplace_back("psi.w2", &checkpoint.psi.w2);
    tensors.emplace_back("psi.b2", &checkpoint.psi.b2);

    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) write_tensor(out, name, *tensor);
    if (!out.good()) throw ValidationError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint file '" + path + "'");

    char magic[4];
    in.read(magic, 4);
    if (!in.good() || std::memcmp(magic, kMagic, 4) != 0) {
        throw ValidationError("'" + path + "' is not a checkpoint file (bad magic)");
    }
    Checkpoint checkpoint;
    checkpoint.format_version = read_u32(in);
    if (checkpoint.format_version != 1) {
        throw ValidationError("unsupported checkpoint version " +
                              std::to_string(checkpoint.format_version));
    }

    const std::uint32_t meta_len = read_u32(in);
    std::string meta_bytes(meta_len, '\0');
    in.read(meta_bytes.data(), meta_len);
    nlohmann::json meta = nlohmann::json::parse(meta_bytes);
    checkpoint.backbone = detail::backbone_from_json(meta.at("backbone"));
    checkpoint.train = detail::train_from_json(meta.at("train"));

    const std::uint32_t n_tensors = read_u32(in);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        NamedTensor named = read_tensor(in);
        if (named.name == "cap.normal_tokens") {
            checkpoint.bank.normal_tokens = std::move(named.tensor);
        } else if (named.name == "cap.abnormal_tokens") {
            checkpoint.bank.abnormal_tokens = std::move(named.tensor);
        } else if (named.name == "cap.object_token") {
            checkpoint.bank.object_token = std::move(named.tensor);
        } else if (named.name == "cap.deep_prompts") {
            checkpoint.bank.deep_prompts = std::move(named.tensor);
        } else if (named.name == "psi.w1") {
            checkpoint.psi.w1 = std::move(named.tensor);
        } else if (named.name == "psi.b1") {
            checkpoint.psi.b1 = std::move(named.tensor);
        } else if (named.name == "psi.w2") {
            checkpoint.psi.w2 = std::move(named.tensor);
        } else if (named.name == "psi.b2") {
            checkpoint.psi.b2 = std::move(named.tensor);
        } else {
            throw ValidationError("checkpoint: unknown tensor '" + named.name + "'");
        }
    }
    if (checkpoint.bank.normal_tokens.empty() || checkpoint.bank.abnormal_tokens.empty() ||
        checkpoint.bank.object_token.empty() || checkpoint.psi.w1.empty()) {
        throw ValidationError("checkpoint: missing parameter tensors");
    }
    checkpoint.bank.num_normal = checkpoint.bank.normal_tokens.dim(0);
    checkpoint.bank.num_prompts = checkpoint.bank.abnormal_tokens.dim(0);
    checkpoint.bank.num_abnormal = checkpoint.bank.abnormal_tokens.dim(1);
    return checkpoint;
}

Checkpoint train(const TrainConfig& config, const DatasetHandle& dataset,
                 const Backbone& backbone, const std::function<void(const StepRecord&)>& on_step,
                 const TrainOptions& options) {
    config.validate();
    const std::vector<std::size_t> train_indices = dataset.indices(Split::Train);
    if (train_indices.empty()) throw ValidationError("train: dataset has no training samples");

    const BackboneConfig& bcfg = backbone.config();
    if (config.input_h != bcfg.input_h || config.input_w != bcfg.input_w) {
        throw ConfigError("train: config input size does not match the backbone input size");
    }

    PromptBank bank = PromptBank::init(backbone, config.num_normal, config.num_abnormal,
                                       config.num_prompts, config.seed);
    PriorNetwork psi =
        options.freeze_zero_prior
            ? PriorNetwork::zero(bcfg.embedding_dim, config.top_m, bcfg.token_dim)
            : PriorNetwork::init(bcfg.embedding_dim, config.top_m, bcfg.token_dim, config.seed);

    AdamOptimizer optimizer(config.lr);
    Rng shuffle_rng(config.seed ^ 0x0badcafe12345678ULL);
    const FocalParams focal = config.focal();

    std::size_t global_step = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        // Seeded Fisher-Yates; the last partial batch is kept.
        std::vector<std::size_t> order = train_indices;
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }

        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, order.size());
            const std::size_t batch = end - begin;

            Graph g;
            PromptBankVars bank_vars = PromptBankVars::attach(g, bank, /*requires_grad=*/true);
            PriorNetworkVars psi_vars =
                PriorNetworkVars::attach(g, psi, /*requires_grad=*/!options.freeze_zero_prior);

            const PromptEmbeddings pass1 = encode_prompt_bank(g, bank_vars, bank, backbone);

            std::vector<Var> locals, priors, scores;
            std::vector<int> labels;
            for (std::size_t b = begin; b < end; ++b) {
                Sample sample = dataset.sample(order[b]);
                if (sample.image.dim(0) != config.input_h ||
                    sample.image.dim(1) != config.input_w) {
                    sample.image = resize_image(sample.image, config.input_h, config.input_w);
                    sample.mask =
                        resize_mask_nearest(sample.mask, config.input_h, config.input_w);
                }

                ModelForward fwd = model_forward(g, sample, bank, bank_vars, psi, psi_vars,
                                                 backbone, config, pass1);

                // The pixel objective covers both the prior-refined and the
                // prior-free maps.
                Var local_refined = local_loss(g, fwd.map_normal_refined,
                                               fwd.map_abnormal_refined, sample.mask, focal);
                Var local_plain =
                    local_loss(g, fwd.map_normal, fwd.map_abnormal, sample.mask, focal);
                locals.push_back(g.add(local_refined, local_plain));
                priors.push_back(prior_loss(g, fwd.omega, sample.label));
                scores.push_back(fwd.final);
                labels.push_back(sample.label);
            }

            Var local = g.affine(g.sum(g.concat(locals)), 1.0 / static_cast<double>(batch), 0.0);
            Var global = global_loss(g, scores, labels, focal);
            Var prior = g.sum(g.concat(priors));
            Var oc = options.use_orthogonality_loss
                         ? orthogonality_loss(g, pass1.per_prompt)
                         : g.leaf(Tensor::scalar(0.0));

            TotalLoss loss = total_loss(g, local, global, prior, oc);
            g.backward(loss.value);

            std::vector<std::pair<Tensor*, const Tensor*>> updates;
            for (auto& [name, tensor] : bank.parameters()) {
                Var v = name == "cap.normal_tokens"     ? bank_vars.normal_tokens
                        : name == "cap.abnormal_tokens" ? bank_vars.abnormal_tokens
                                                        : *bank_vars.deep_prompts;
                updates.emplace_back(tensor, &g.grad(v));
            }
            if (!options.freeze_zero_prior) {
                updates.emplace_back(&psi.w1, &g.grad(psi_vars.w1));
                updates.emplace_back(&psi.b1, &g.grad(psi_vars.b1));
                updates.emplace_back(&psi.w2, &g.grad(psi_vars.w2));
                updates.emplace_back(&psi.b2, &g.grad(psi_vars.b2));
            }
            optimizer.step(updates);

            ++global_step;
            if (on_step) on_step(StepRecord{epoch, global_step, loss.breakdown});
        }
        log_info("epoch " + std::to_string(epoch) + "/" + std::to_string(config.epochs) +
                 " finished (" + std::to_string(global_step) + " steps)");
    }

    Checkpoint checkpoint;
    checkpoint.backbone = bcfg;
    checkpoint.train = config;
    checkpoint.bank = std::move(bank);
    checkpoint.psi = std::move(psi);
    return checkpoint;
}

}  // namespace faprompt
