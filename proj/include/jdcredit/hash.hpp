#pragma once

#include <cstdint>
#include <string_view>

namespace jdcredit {

/// 64-bit FNV-1a. Used for seed derivation and content fingerprints, not security.
class Fnv1a {
public:
    Fnv1a& update(std::string_view bytes) noexcept
    {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    [[nodiscard]] std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

[[nodiscard]] inline std::uint64_t fnv1a(std::string_view bytes) noexcept { return Fnv1a{}.update(bytes).digest(); }

} // namespace jdcredit
