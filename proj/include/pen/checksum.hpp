// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <string_view>

namespace pen {

/// Lower-case hex SHA-256 digest.
[[nodiscard]] std::string sha256_hex(std::span<const unsigned char> bytes);
[[nodiscard]] std::string sha256_hex(std::string_view text);

}  // namespace pen
