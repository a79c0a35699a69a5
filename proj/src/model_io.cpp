// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/model_io.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "pen/checksum.hpp"
#include "pen/errors.hpp"
#include "pen/io.hpp"

namespace pen {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "model files are written in host byte order");
static_assert(std::numeric_limits<float>::is_iec559);

namespace {

constexpr char kMagic[8] = {'P', 'E', 'N', 'M', 'O', 'D', 'E', 'L'};
constexpr std::size_t kHeaderSize = sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t);

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
    T v;
    std::memcpy(&v, in.data() + offset, sizeof(T));
    return v;
}

struct ParsedFile {
    nlohmann::json manifest;
    std::string payload;
};

ParsedFile parse_file(const fs::path& path) {
    const std::string bytes = io::read_file(path);
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw LoadError(path.string() + ": not a PEN model file");
    }
    const auto version = get<std::uint32_t>(bytes, sizeof(kMagic));
    if (version != kModelFormatVersion) {
        throw LoadError(path.string() + ": model format version " + std::to_string(version) + ", expected " +
                        std::to_string(kModelFormatVersion));
    }
    const auto manifest_len = get<std::uint64_t>(bytes, sizeof(kMagic) + sizeof(std::uint32_t));
    if (manifest_len > bytes.size() - kHeaderSize) {
        throw LoadError(path.string() + ": checksum mismatch (file truncated inside the manifest)");
    }
    ParsedFile parsed;
    try {
        parsed.manifest = nlohmann::json::parse(bytes.substr(kHeaderSize, manifest_len));
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(path.string() + ": unreadable manifest: " + e.what());
    }
    parsed.payload = bytes.substr(kHeaderSize + manifest_len);
    const auto expected = parsed.manifest.value("payload_sha256", std::string{});
    const auto found = sha256_hex(parsed.payload);
    if (found != expected) {
        throw LoadError(path.string() + ": checksum mismatch (payload sha256 " + found + ", manifest records " +
                        expected + "); the file is truncated or corrupted");
    }
    return parsed;
}

ModelManifest manifest_from_json(const nlohmann::json& j, const fs::path& path) {
    try {
        ModelManifest m;
        m.architecture = ArchitectureConfig::from_json(j.at("architecture"));
        m.architecture_hash = j.at("architecture_hash").get<std::string>();
        m.trained_levels = j.at("levels").get<int>();
        m.init_scheme = j.value("init_scheme", std::string{});
        m.training_config_digest = j.value("training_config_digest", std::string{});
        const int d_inp = j.at("d_inp").get<int>();
        if (d_inp != m.architecture.d_inp) {
            throw LoadError(path.string() + ": manifest d_inp " + std::to_string(d_inp) +
                            " contradicts the architecture (d_inp " + std::to_string(m.architecture.d_inp) + ")");
        }
        if (m.trained_levels < 1 || m.trained_levels > m.architecture.max_level) {
            throw LoadError(path.string() + ": manifest claims " + std::to_string(m.trained_levels) +
                            " trained levels, architecture has " + std::to_string(m.architecture.max_level));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(path.string() + ": incomplete manifest: " + e.what());
    } catch (const ConfigError& e) {
        throw LoadError(path.string() + ": invalid architecture in manifest: " + e.what());
    }
}

}  // namespace

nlohmann::json ModelManifest::summary() const {
    return {{"architecture_hash", architecture_hash},
            {"levels", trained_levels},
            {"d_inp", d_inp()},
            {"training_config_digest", training_config_digest}};
}

void save_model(const Predictor& predictor, const ModelManifest& manifest, const fs::path& path) {
    std::string payload;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& p : predictor.parameters()) {
        tensors.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", payload.size()}});
        for (double v : p.tensor.data()) put(payload, static_cast<float>(v));
    }
    const nlohmann::json j = {
        {"format", "pen-model"},
        {"architecture", predictor.architecture().to_json()},
        {"architecture_hash", predictor.architecture_hash()},
        {"levels", manifest.trained_levels},
        {"d_inp", predictor.architecture().d_inp},
        {"init_scheme", manifest.init_scheme},
        {"training_config_digest", manifest.training_config_digest},
        {"dtype", "float32-le"},
        {"tensors", tensors},
        {"payload_bytes", payload.size()},
        {"payload_sha256", sha256_hex(payload)},
    };
    const std::string text = j.dump(1);
    std::string header(kMagic, sizeof(kMagic));
    put(header, kModelFormatVersion);
    put(header, static_cast<std::uint64_t>(text.size()));
    io::atomic_write(
        path,
        [&](std::ostream& out) {
            out.write(header.data(), static_cast<std::streamsize>(header.size()));
            out.write(text.data(), static_cast<std::streamsize>(text.size()));
            out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        },
        true);
}

ModelManifest read_manifest(const fs::path& path) { return manifest_from_json(parse_file(path).manifest, path); }

LoadedModel load_model(const fs::path& path) {
    const auto parsed = parse_file(path);
    auto manifest = manifest_from_json(parsed.manifest, path);
    Predictor predictor(manifest.architecture);
    if (predictor.architecture_hash() != manifest.architecture_hash) {
        throw LoadError(path.string() + ": architecture hash mismatch: manifest records " +
                        manifest.architecture_hash + ", its architecture hashes to " +
                        predictor.architecture_hash());
    }
    auto params = predictor.parameters();
    const auto& listed = parsed.manifest.at("tensors");
    if (listed.size() != params.size()) {
        throw LoadError(path.string() + ": file lists " + std::to_string(listed.size()) + " tensors, architecture has " +
                        std::to_string(params.size()));
    }
    std::size_t offset = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& entry = listed[k];
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<nn::Shape>();
        if (name != params[k].name || shape != params[k].tensor.shape()) {
            throw LoadError(path.string() + ": tensor #" + std::to_string(k) + " is " + name + nn::to_string(shape) +
                            ", expected " + params[k].name + nn::to_string(params[k].tensor.shape()));
        }
        auto data = params[k].tensor.mutable_data();
        if (offset + data.size() * sizeof(float) > parsed.payload.size()) {
            throw LoadError(path.string() + ": payload too short for tensor " + name);
        }
        for (auto& v : data) {
            v = static_cast<double>(get<float>(parsed.payload, offset));
            offset += sizeof(float);
        }
    }
    if (offset != parsed.payload.size()) {
        throw LoadError(path.string() + ": " + std::to_string(parsed.payload.size() - offset) +
                        " trailing payload bytes");
    }
    return {std::move(predictor), std::move(manifest)};
}

LoadedModel load_model(const fs::path& path, const ArchitectureConfig& expected) {
    const auto manifest = read_manifest(path);
    const std::string want = Predictor(expected).architecture_hash();
    if (manifest.architecture_hash != want) {
        throw LoadError(path.string() + ": architecture mismatch: expected hash " + want + " (d_inp " +
                        std::to_string(expected.d_inp) + "), found " + manifest.architecture_hash + " (d_inp " +
                        std::to_string(manifest.d_inp()) + ")");
    }
    return load_model(path);
}

}  // namespace pen
