// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pen/predictor.hpp"

namespace pen {

/// Descriptive part of a model file.
struct ModelManifest {
    ArchitectureConfig architecture;
    std::string architecture_hash;
    int trained_levels = 1;
    std::string init_scheme = "glorot_uniform";
    std::string training_config_digest;  // SHA-256 of the canonical training config, empty if unknown

    [[nodiscard]] int d_inp() const noexcept { return architecture.d_inp; }
    /// The subset served by GET /model.
    [[nodiscard]] nlohmann::json summary() const;
};

struct LoadedModel {
    Predictor predictor;
    ModelManifest manifest;
};

/// File layout:
///   "PENMODEL" | u32 format version | u64 manifest length | manifest JSON | float32 LE payload
/// The manifest lists every tensor (name, shape, offset) and the SHA-256 of the payload.
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Writes atomically (temporary file + rename).
void save_model(const Predictor& predictor, const ModelManifest& manifest, const std::filesystem::path& path);

/// Throws LoadError on bad magic, unknown version, checksum mismatch (including truncation) or an
/// inconsistent manifest.
[[nodiscard]] LoadedModel load_model(const std::filesystem::path& path);
/// As above, and additionally requires the stored architecture to hash to the expected one.
[[nodiscard]] LoadedModel load_model(const std::filesystem::path& path, const ArchitectureConfig& expected);

/// The manifest alone (checksum still verified).
[[nodiscard]] ModelManifest read_manifest(const std::filesystem::path& path);

}  // namespace pen
