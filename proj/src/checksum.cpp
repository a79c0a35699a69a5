// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/checksum.hpp"

#include <array>
#include <cstdio>

#include <openssl/evp.h>

namespace pen {

std::string sha256_hex(std::span<const unsigned char> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        std::array<char, 3> buf{};
        std::snprintf(buf.data(), buf.size(), "%02x", digest[i]);
        hex += buf.data();
    }
    return hex;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

}  // namespace pen
