// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "pen/model_io.hpp"
#include "pen/predictor.hpp"
#include "pen/rng.hpp"

namespace pen::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("pen-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Narrow d_inp = 8 architecture with two levels; fast enough for every test.
inline ArchitectureConfig tiny_architecture() {
    ArchitectureConfig a;
    a.d_inp = 8;
    a.channels = 2;
    a.dense_widths = {16, 2 * 64};
    a.max_level = 2;
    return a;
}

inline ModelManifest manifest_for(const Predictor& p, int levels = 1) {
    ModelManifest m;
    m.architecture = p.architecture();
    m.architecture_hash = p.architecture_hash();
    m.trained_levels = levels;
    return m;
}

inline std::filesystem::path write_tiny_model(const std::filesystem::path& path, std::uint64_t seed = 1) {
    Rng rng(seed);
    const Predictor p(tiny_architecture(), rng);
    save_model(p, manifest_for(p), path);
    return path;
}

}  // namespace pen::testing
