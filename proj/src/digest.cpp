#include "psk/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace psk {

static char hex_digit(unsigned v) { return v < 10 ? char('0' + v) : char('a' + v - 10); }

std::string Digest::hex() const {
    std::string out;
    out.reserve(64);
    for (auto b : bytes) {
        out.push_back(hex_digit(b >> 4));
        out.push_back(hex_digit(b & 0xF));
    }
    return out;
}

static unsigned unhex(char c) {
    if (c >= '0' && c <= '9') return unsigned(c - '0');
    if (c >= 'a' && c <= 'f') return unsigned(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return unsigned(c - 'A' + 10);
    throw std::invalid_argument("bad hex digit in digest");
}

Digest Digest::from_hex(std::string_view hex) {
    if (hex.size() != 64) throw std::invalid_argument("digest hex must be 64 chars");
    Digest d;
    for (size_t i = 0; i < 32; ++i)
        d.bytes[i] = std::uint8_t((unhex(hex[2 * i]) << 4) | unhex(hex[2 * i + 1]));
    return d;
}

Digest digest_bytes(std::string_view domain_tag, std::string_view payload) {
    Digest d;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    unsigned len = 0;
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, domain_tag.data(), domain_tag.size()) == 1 &&
              EVP_DigestUpdate(ctx, "\x1f", 1) == 1 &&
              EVP_DigestUpdate(ctx, payload.data(), payload.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, d.bytes.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok || len != 32) throw std::runtime_error("sha256 failed");
    return d;
}

} // namespace psk
