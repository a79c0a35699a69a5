// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/predictor.hpp"

#include <set>

#include "pen/checksum.hpp"
#include "pen/errors.hpp"
#include "pen/nn/ops.hpp"

namespace pen {

using nn::Conv2D;
using nn::Dense;
using nn::NamedParameter;
using nn::PReLU;
using nn::ResNetBlock;
using nn::Tensor;

void ArchitectureConfig::validate() const {
    if (d_inp < 3) throw ConfigError("d_inp", "d_inp must be at least 3");
    if (dense_widths.empty()) throw ConfigError("dense_widths", "at least one dense layer is required");
    for (int w : dense_widths) {
        if (w <= 0) throw ConfigError("dense_widths", "dense widths must be positive");
    }
    if (channels <= 0) throw ConfigError("channels", "channels must be positive");
    if (dense_widths.back() != channels * d_inp * d_inp) {
        throw ConfigError("dense_widths", "last dense width " + std::to_string(dense_widths.back()) +
                                              " must equal channels * d_inp^2 = " +
                                              std::to_string(channels * d_inp * d_inp));
    }
    if (kernel <= 0 || kernel % 2 == 0) throw ConfigError("kernel", "kernel size must be odd and positive");
    if (level1_convs < 1) throw ConfigError("level1_convs", "level 1 needs at least one convolution");
    if (max_level < 1 || max_level > 6) throw ConfigError("max_level", "max_level must be in 1..6");
    if (!(force_scale > 0.0)) throw ConfigError("force_scale", "force_scale must be positive");
}

nlohmann::json ArchitectureConfig::to_json() const {
    return {{"d_inp", d_inp},           {"dense_widths", dense_widths}, {"channels", channels},
            {"kernel", kernel},         {"level1_convs", level1_convs}, {"max_level", max_level},
            {"prelu_init", prelu_init}, {"force_scale", force_scale}};
}

ArchitectureConfig ArchitectureConfig::from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"d_inp",        "dense_widths", "channels",  "kernel",
                                             "level1_convs", "max_level",    "prelu_init", "force_scale"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError(key, "unknown architecture key '" + key + "'");
    }
    ArchitectureConfig a;
    a.d_inp = j.value("d_inp", a.d_inp);
    a.dense_widths = j.value("dense_widths", a.dense_widths);
    a.channels = j.value("channels", a.channels);
    a.kernel = j.value("kernel", a.kernel);
    a.level1_convs = j.value("level1_convs", a.level1_convs);
    a.max_level = j.value("max_level", a.max_level);
    a.prelu_init = j.value("prelu_init", a.prelu_init);
    a.force_scale = j.value("force_scale", a.force_scale);
    a.validate();
    return a;
}

struct Predictor::Impl {
    struct Head {
        ResNetBlock block;
        PReLU act;
        Conv2D out;
    };

    std::vector<std::unique_ptr<Dense>> dense;
    std::vector<std::unique_ptr<PReLU>> dense_act;
    std::vector<std::unique_ptr<Conv2D>> level1_conv;
    std::vector<std::unique_ptr<PReLU>> level1_act;
    std::vector<std::unique_ptr<Head>> heads;  // heads[k] serves level k + 2

    explicit Impl(const ArchitectureConfig& a) {
        const auto c = static_cast<std::size_t>(a.channels);
        const auto k = static_cast<std::size_t>(a.kernel);
        auto in = static_cast<std::size_t>(a.input_width());
        for (std::size_t i = 0; i < a.dense_widths.size(); ++i) {
            const auto out = static_cast<std::size_t>(a.dense_widths[i]);
            dense.push_back(std::make_unique<Dense>("trunk.dense" + std::to_string(i + 1), in, out));
            dense_act.push_back(std::make_unique<PReLU>("trunk.act" + std::to_string(i + 1), a.prelu_init));
            in = out;
        }
        for (int i = 0; i + 1 < a.level1_convs; ++i) {
            level1_conv.push_back(std::make_unique<Conv2D>("level1.conv" + std::to_string(i + 1), c, c, k));
            level1_act.push_back(std::make_unique<PReLU>("level1.act" + std::to_string(i + 1), a.prelu_init));
        }
        level1_conv.push_back(std::make_unique<Conv2D>("level1.out", c, 1, k));
        for (int level = 2; level <= a.max_level; ++level) {
            const std::string p = "level" + std::to_string(level);
            heads.push_back(std::unique_ptr<Head>(new Head{ResNetBlock(p + ".block", c, c, k, a.prelu_init),
                                                           PReLU(p + ".act", a.prelu_init),
                                                           Conv2D(p + ".out", c, 1, k)}));
        }
    }

    [[nodiscard]] std::vector<NamedParameter> parameters(int level) const {
        std::vector<NamedParameter> params;
        auto append = [&params](std::vector<NamedParameter> more) {
            for (auto& p : more) params.push_back(std::move(p));
        };
        for (std::size_t i = 0; i < dense.size(); ++i) {
            append(dense[i]->parameters());
            append(dense_act[i]->parameters());
        }
        for (std::size_t i = 0; i < level1_conv.size(); ++i) {
            append(level1_conv[i]->parameters());
            if (i < level1_act.size()) append(level1_act[i]->parameters());
        }
        for (int l = 2; l <= level; ++l) {
            const auto& h = *heads[static_cast<std::size_t>(l - 2)];
            append(h.block.parameters());
            append(h.act.parameters());
            append(h.out.parameters());
        }
        return params;
    }
};

Predictor::Predictor(ArchitectureConfig arch) : arch_(std::move(arch)) {
    arch_.validate();
    impl_ = std::make_unique<Impl>(arch_);
}

Predictor::Predictor(ArchitectureConfig arch, Rng& rng) : Predictor(std::move(arch)) {
    initialize(rng);
    quantize_to_float32();
}

Predictor::~Predictor() = default;
Predictor::Predictor(Predictor&&) noexcept = default;
Predictor& Predictor::operator=(Predictor&&) noexcept = default;

void Predictor::initialize(Rng& rng) {
    for (auto& d : impl_->dense) d->initialize(rng);
    for (auto& c : impl_->level1_conv) c->initialize(rng);
    for (auto& h : impl_->heads) {
        h->block.initialize(rng);
        h->out.initialize(rng);
    }
}

Tensor Predictor::forward(const Tensor& input, int level) const {
    if (level < 1 || level > arch_.max_level) {
        throw DomainError("level " + std::to_string(level) + " outside the architecture's range 1.." +
                          std::to_string(arch_.max_level));
    }
    const auto& s = input.shape();
    if (s.size() != 2 || s[1] != static_cast<std::size_t>(arch_.input_width())) {
        throw DimensionError("predictor input must be [B," + std::to_string(arch_.input_width()) + "], got " +
                             nn::to_string(s));
    }
    const std::size_t batch = s[0];
    const auto n = static_cast<std::size_t>(arch_.d_inp);
    const auto c = static_cast<std::size_t>(arch_.channels);

    Tensor h = input;
    for (std::size_t i = 0; i < impl_->dense.size(); ++i) {
        h = impl_->dense_act[i]->forward(impl_->dense[i]->forward(h));
    }
    const Tensor trunk = nn::reshape(h, {batch, c, n, n});

    Tensor logits = trunk;
    for (std::size_t i = 0; i < impl_->level1_conv.size(); ++i) {
        logits = impl_->level1_conv[i]->forward(logits);
        if (i < impl_->level1_act.size()) logits = impl_->level1_act[i]->forward(logits);
    }
    for (int l = 2; l <= level; ++l) {
        const auto& head = *impl_->heads[static_cast<std::size_t>(l - 2)];
        const Tensor features = nn::upsample_nearest2d(trunk, std::size_t{1} << (l - 1));
        const Tensor merged = nn::add_channel_broadcast(features, nn::upsample_nearest2d(logits, 2));
        logits = head.out.forward(head.act.forward(head.block.forward(merged)));
    }
    const std::size_t d = n << (level - 1);
    return nn::sigmoid(nn::reshape(logits, {batch, d * d}));
}

Tensor Predictor::make_input(std::span<const InputSample> samples) const {
    const auto width = static_cast<std::size_t>(arch_.input_width());
    std::vector<double> data;
    data.reserve(samples.size() * width);
    for (const auto& sample : samples) {
        if (sample.bc.d_inp() != arch_.d_inp) {
            throw DimensionError("sample defined for d_inp=" + std::to_string(sample.bc.d_inp()) +
                                 ", predictor expects " + std::to_string(arch_.d_inp));
        }
        auto z = sample.network_input();
        const std::size_t l = (z.size() - 1) / 4;  // nodes; z = [rkx, rky, rsx, rsy, m_tar]
        for (std::size_t i = 2 * l; i < 4 * l; ++i) z[i] /= arch_.force_scale;
        data.insert(data.end(), z.begin(), z.end());
    }
    return {{samples.size(), width}, std::move(data)};
}

DensityField Predictor::predict(const InputSample& sample, int level, double x_min) const {
    const nn::NoGradGuard no_grad;
    const Tensor out = forward(make_input({&sample, 1}), level);
    return DensityField::clamped(Level{level, arch_.d_inp}, out.data(), x_min);
}

std::vector<NamedParameter> Predictor::parameters() const { return impl_->parameters(arch_.max_level); }

std::vector<NamedParameter> Predictor::parameters_up_to(int level) const {
    if (level < 1 || level > arch_.max_level) throw DomainError("level outside the architecture's range");
    return impl_->parameters(level);
}

std::size_t Predictor::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.size();
    return n;
}

void Predictor::quantize_to_float32() {
    for (auto& p : parameters()) {
        for (double& v : p.tensor.mutable_data()) v = static_cast<double>(static_cast<float>(v));
    }
}

std::string Predictor::architecture_hash() const {
    std::string canonical = arch_.to_json().dump();
    for (const auto& p : parameters()) canonical += "|" + p.name + nn::to_string(p.tensor.shape());
    return sha256_hex(canonical);
}

}  // namespace pen
