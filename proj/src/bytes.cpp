#include "haze/bytes.hpp"

#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

namespace haze {

void append_u32(Bytes& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void append_u64(Bytes& out, uint64_t v) {
    append_u32(out, static_cast<uint32_t>(v >> 32));
    append_u32(out, static_cast<uint32_t>(v));
}

void append_field(Bytes& out, std::span<const uint8_t> field) {
    append_u32(out, static_cast<uint32_t>(field.size()));
    out.insert(out.end(), field.begin(), field.end());
}

void append_field(Bytes& out, std::string_view field) {
    append_u32(out, static_cast<uint32_t>(field.size()));
    out.insert(out.end(), field.begin(), field.end());
}

void append_mpz(Bytes& out, const mpz_class& v) {
    Bytes b = mpz_to_bytes(v);
    append_field(out, b);
}

Bytes mpz_to_bytes(const mpz_class& v) {
    if (v == 0) return {};
    size_t count = 0;
    Bytes out((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
    mpz_export(out.data(), &count, 1, 1, 1, 0, v.get_mpz_t());
    out.resize(count);
    return out;
}

mpz_class mpz_from_bytes(std::span<const uint8_t> b) {
    mpz_class v;
    if (!b.empty()) mpz_import(v.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
    return v;
}

std::string to_hex(std::span<const uint8_t> b) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(b.size() * 2);
    for (uint8_t c : b) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

static int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit");
}

Bytes from_hex(std::string_view h) {
    if (h.size() % 2 != 0) throw std::invalid_argument("odd hex length");
    Bytes out(h.size() / 2);
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<uint8_t>(hex_nibble(h[2 * i]) << 4 | hex_nibble(h[2 * i + 1]));
    return out;
}

std::string mpz_to_hex(const mpz_class& v) {
    return v.get_str(16);
}

mpz_class mpz_from_hex(const std::string& h) {
    return mpz_class(h, 16);
}

void sha256(std::span<const uint8_t> data, uint8_t* out32) {
    SHA256(data.data(), data.size(), out32);
}

Bytes hash_expand(std::span<const uint8_t> transcript, size_t n) {
    Bytes out;
    out.reserve(n + 32);
    Bytes block;
    block.reserve(transcript.size() + 4);
    uint32_t counter = 0;
    while (out.size() < n) {
        block.clear();
        append_u32(block, counter++);
        block.insert(block.end(), transcript.begin(), transcript.end());
        uint8_t digest[32];
        sha256(block, digest);
        out.insert(out.end(), digest, digest + 32);
    }
    out.resize(n);
    return out;
}

}  // namespace haze
