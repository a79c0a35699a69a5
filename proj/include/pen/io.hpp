// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pen/domain.hpp"

namespace pen::io {

/// Runs `writer` on a temporary sibling of `path` and renames it into place on success.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer,
                  bool binary = false);
void atomic_write_text(const std::filesystem::path& path, std::string_view text);

/// {"level", "d", "d_inp", "x"}.
[[nodiscard]] nlohmann::json geometry_to_json(const DensityField& field);
[[nodiscard]] DensityField geometry_from_json(const nlohmann::json& j, double x_min = kDefaultXMin);
void write_geometry(const DensityField& field, const std::filesystem::path& path);
[[nodiscard]] DensityField read_geometry(const std::filesystem::path& path, double x_min = kDefaultXMin);

/// Grayscale images, row 0 at the top, density 1 black and 0 white, one pixel per element
/// enlarged by `scale`.
void write_pgm(const DensityField& field, const std::filesystem::path& path, int scale = 1);
void write_png(const DensityField& field, const std::filesystem::path& path, int scale = 1);

/// Whole file as a string; throws LoadError if unreadable.
[[nodiscard]] std::string read_file(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace pen::io
