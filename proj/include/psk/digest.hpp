#ifndef PSK_DIGEST_HPP
#define PSK_DIGEST_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace psk {

// 256-bit content digest. Stable across runs and platforms (SHA-256, no
// randomized seeding), so digests may be persisted and compared between
// processes.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const Digest&) const = default;
    auto operator<=>(const Digest&) const = default;

    std::string hex() const;
    static Digest from_hex(std::string_view hex);
};

// Digest of raw bytes with a domain tag. Values of different kinds never
// collide because the tag is hashed first.
Digest digest_bytes(std::string_view domain_tag, std::string_view payload);

} // namespace psk

#endif
