// Copyright 2026 The PEN Authors
// SPDX-License-Identifier: Apache-2.0

#include "pen/rng.hpp"

#include <limits>
#include <sstream>

#include "pen/errors.hpp"

namespace pen {

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_int over an empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r = 0;
    do {
        r = engine_();
    } while (r >= limit);
    return r % n;
}

std::string Rng::state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::restore(const std::string& state) {
    std::istringstream in(state);
    std::mt19937_64 engine;
    in >> engine;
    if (in.fail()) throw LoadError("corrupt random generator state");
    engine_ = engine;
}

}  // namespace pen
