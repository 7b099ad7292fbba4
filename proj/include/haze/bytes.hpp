#ifndef HAZE_BYTES_HPP_
#define HAZE_BYTES_HPP_

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace haze {

using Bytes = std::vector<uint8_t>;

// Canonical encoding used everywhere a value enters a hash transcript or an
// envelope payload: big-endian magnitude, each field prefixed by a 32-bit
// big-endian length so concatenations parse unambiguously.
void append_u32(Bytes& out, uint32_t v);
void append_u64(Bytes& out, uint64_t v);
void append_field(Bytes& out, std::span<const uint8_t> field);
void append_field(Bytes& out, std::string_view field);
void append_mpz(Bytes& out, const mpz_class& v);

Bytes mpz_to_bytes(const mpz_class& v);      // magnitude only, v >= 0
mpz_class mpz_from_bytes(std::span<const uint8_t> b);

std::string to_hex(std::span<const uint8_t> b);
Bytes from_hex(std::string_view h);

std::string mpz_to_hex(const mpz_class& v);
mpz_class mpz_from_hex(const std::string& h);

// SHA-256 of `data`; `out32` must point at 32 writable bytes.
void sha256(std::span<const uint8_t> data, uint8_t* out32);

// Counter-mode SHA-256 expansion of a transcript into `n` bytes.
Bytes hash_expand(std::span<const uint8_t> transcript, size_t n);

}  // namespace haze

#endif  // HAZE_BYTES_HPP_
