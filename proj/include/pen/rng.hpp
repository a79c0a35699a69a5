// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pen {

/// Seedable generator whose stream is identical on every platform.
///
/// Wraps std::mt19937_64 (fully specified by the standard) and maps its raw output to reals and
/// bounded integers without the implementation-defined std distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 5489u) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform on {0, ..., n-1} (rejection sampling, unbiased).
    std::uint64_t uniform_int(std::uint64_t n);

    /// Textual engine state; restore() continues the identical stream.
    [[nodiscard]] std::string state() const;
    void restore(const std::string& state);

    friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pen
