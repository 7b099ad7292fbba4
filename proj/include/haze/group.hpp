#ifndef HAZE_GROUP_HPP_
#define HAZE_GROUP_HPP_

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "haze/bytes.hpp"
#include "haze/errors.hpp"
#include "haze/rng.hpp"

namespace haze {

// Prime-order subgroup of Z_p^* with p = 2qk + 1, q prime, g of order q.
struct GroupParams {
    mpz_class p;
    mpz_class q;
    mpz_class k;
    mpz_class g;
    int bits = 0;  // size label of q
};

// Hard-coded vetted presets; 512 is the test default and not production grade.
GroupParams preset_params(int bits);

// Structure verification: p = 2qk + 1, p and q probable primes, g != 1,
// g^q = 1. Throws ConfigError on any violation.
void check_params(const GroupParams& params);

struct Scalar {
    mpz_class v;  // always in [0, q)
    bool operator==(const Scalar&) const = default;
};

struct GroupElement {
    mpz_class v;  // in [1, p), order-q subgroup member
    bool operator==(const GroupElement&) const = default;
};

struct PublicKey {
    GroupElement h;  // g^sk, sk never materialized anywhere
    bool operator==(const PublicKey&) const = default;
};

struct KeyShare {
    int index = 0;           // authority id in [1, A]
    Scalar s;                // secret share
    GroupElement commitment; // g^s
};

// Exponential El Gamal pair (g^r, g^m * h^r).
struct Ciphertext {
    GroupElement a;
    GroupElement b;
    bool operator==(const Ciphertext&) const = default;
};

Bytes element_bytes(const GroupElement& e);
Bytes ciphertext_bytes(const Ciphertext& c);

class Group {
public:
    explicit Group(GroupParams params);

    const GroupParams& params() const { return params_; }

    // Raw subgroup arithmetic.
    GroupElement one() const { return GroupElement{1}; }
    GroupElement mul(const GroupElement& a, const GroupElement& b) const;
    GroupElement inv(const GroupElement& a) const;
    GroupElement pow(const GroupElement& base, const mpz_class& e) const;
    GroupElement pow_g(const mpz_class& e) const;  // e may be negative
    bool is_member(const GroupElement& e) const;   // full order-q check

    Scalar scalar(const mpz_class& v) const;       // reduce mod q
    Scalar random_scalar(Rng& rng) const;
    Scalar random_nonzero_scalar(Rng& rng) const;
    Scalar scalar_add(const Scalar& a, const Scalar& b) const;
    Scalar scalar_sub(const Scalar& a, const Scalar& b) const;
    Scalar scalar_mul(const Scalar& a, const Scalar& b) const;

    // g^m for signed m with |m| < q/2; negative m via modular inverse.
    GroupElement encode_exponent(long m) const;

    Ciphertext encrypt(const PublicKey& pk, long m, const Scalar& r) const;
    Ciphertext encrypt_random(const PublicKey& pk, long m, Rng& rng) const;
    // r = 0 gives the publicly checkable trivial encryption.
    Ciphertext trivial_encrypt(long m) const;

    Ciphertext add(const Ciphertext& c1, const Ciphertext& c2) const;
    Ciphertext negate(const Ciphertext& c) const;
    Ciphertext sub(const Ciphertext& c1, const Ciphertext& c2) const;
    Ciphertext reencrypt(const PublicKey& pk, const Ciphertext& c, const Scalar& r) const;

    // Raw a^{s_k} for a decryption share; the proof lives in zk.hpp.
    GroupElement share_value(const KeyShare& share, const Ciphertext& c) const;

    // Lagrange-combines >= t shares into a^{sk} and returns b / a^{sk} = g^m.
    // Never extracts m; callers compare against encode_exponent or identity.
    GroupElement combine_shares(const Ciphertext& c,
                                std::span<const std::pair<int, GroupElement>> shares,
                                int t) const;

    // Deterministic challenge in [0, q); callers prepend a domain tag field.
    Scalar hash_to_scalar(std::span<const uint8_t> transcript) const;

private:
    void check_context(const GroupElement& e) const;

    GroupParams params_;
};

}  // namespace haze

#endif  // HAZE_GROUP_HPP_
