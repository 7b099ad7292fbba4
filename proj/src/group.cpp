#include "haze/group.hpp"

#include <set>

namespace haze {

Bytes element_bytes(const GroupElement& e) {
    Bytes out;
    append_mpz(out, e.v);
    return out;
}

Bytes ciphertext_bytes(const Ciphertext& c) {
    Bytes out;
    append_mpz(out, c.a.v);
    append_mpz(out, c.b.v);
    return out;
}

Group::Group(GroupParams params) : params_(std::move(params)) {
    check_params(params_);
}

void Group::check_context(const GroupElement& e) const {
    if (e.v <= 0 || e.v >= params_.p)
        throw ContextError("group element outside [1, p): wrong parameter context?");
}

GroupElement Group::mul(const GroupElement& a, const GroupElement& b) const {
    check_context(a);
    check_context(b);
    mpz_class r = a.v * b.v;
    r %= params_.p;
    return GroupElement{r};
}

GroupElement Group::inv(const GroupElement& a) const {
    check_context(a);
    mpz_class r;
    if (mpz_invert(r.get_mpz_t(), a.v.get_mpz_t(), params_.p.get_mpz_t()) == 0)
        throw ContextError("non-invertible group element");
    return GroupElement{r};
}

GroupElement Group::pow(const GroupElement& base, const mpz_class& e) const {
    check_context(base);
    mpz_class r;
    if (e >= 0) {
        mpz_powm(r.get_mpz_t(), base.v.get_mpz_t(), e.get_mpz_t(), params_.p.get_mpz_t());
        return GroupElement{r};
    }
    mpz_class mag = -e;
    mpz_powm(r.get_mpz_t(), base.v.get_mpz_t(), mag.get_mpz_t(), params_.p.get_mpz_t());
    return inv(GroupElement{r});
}

GroupElement Group::pow_g(const mpz_class& e) const {
    return pow(GroupElement{params_.g}, e);
}

bool Group::is_member(const GroupElement& e) const {
    if (e.v <= 0 || e.v >= params_.p) return false;
    mpz_class r;
    mpz_powm(r.get_mpz_t(), e.v.get_mpz_t(), params_.q.get_mpz_t(), params_.p.get_mpz_t());
    return r == 1;
}

Scalar Group::scalar(const mpz_class& v) const {
    mpz_class r = v % params_.q;
    if (r < 0) r += params_.q;
    return Scalar{r};
}

Scalar Group::random_scalar(Rng& rng) const {
    return Scalar{rng.below(params_.q)};
}

Scalar Group::random_nonzero_scalar(Rng& rng) const {
    mpz_class v;
    do {
        v = rng.below(params_.q);
    } while (v == 0);
    return Scalar{v};
}

Scalar Group::scalar_add(const Scalar& a, const Scalar& b) const {
    return scalar(a.v + b.v);
}

Scalar Group::scalar_sub(const Scalar& a, const Scalar& b) const {
    return scalar(a.v - b.v);
}

Scalar Group::scalar_mul(const Scalar& a, const Scalar& b) const {
    return scalar(a.v * b.v);
}

GroupElement Group::encode_exponent(long m) const {
    mpz_class mag(m < 0 ? -m : m);
    if (2 * mag >= params_.q)
        throw EncodingError("plaintext magnitude exceeds q/2");
    return pow_g(mpz_class(m));
}

Ciphertext Group::encrypt(const PublicKey& pk, long m, const Scalar& r) const {
    GroupElement a = pow_g(r.v);
    GroupElement b = mul(encode_exponent(m), pow(pk.h, r.v));
    return Ciphertext{a, b};
}

Ciphertext Group::encrypt_random(const PublicKey& pk, long m, Rng& rng) const {
    return encrypt(pk, m, random_scalar(rng));
}

Ciphertext Group::trivial_encrypt(long m) const {
    return Ciphertext{one(), encode_exponent(m)};
}

Ciphertext Group::add(const Ciphertext& c1, const Ciphertext& c2) const {
    return Ciphertext{mul(c1.a, c2.a), mul(c1.b, c2.b)};
}

Ciphertext Group::negate(const Ciphertext& c) const {
    return Ciphertext{inv(c.a), inv(c.b)};
}

Ciphertext Group::sub(const Ciphertext& c1, const Ciphertext& c2) const {
    return add(c1, negate(c2));
}

Ciphertext Group::reencrypt(const PublicKey& pk, const Ciphertext& c, const Scalar& r) const {
    return add(c, encrypt(pk, 0, r));
}

GroupElement Group::share_value(const KeyShare& share, const Ciphertext& c) const {
    return pow(c.a, share.s.v);
}

GroupElement Group::combine_shares(const Ciphertext& c,
                                   std::span<const std::pair<int, GroupElement>> shares,
                                   int t) const {
    if (static_cast<int>(shares.size()) < t)
        throw InsufficientSharesError(static_cast<int>(shares.size()), t);
    std::set<int> seen;
    for (const auto& [idx, value] : shares) {
        if (!seen.insert(idx).second)
            throw ProtocolError("duplicate share index " + std::to_string(idx));
    }

    // Interpolate a^{sk} at x = 0 in the exponent.
    GroupElement a_sk = one();
    for (size_t i = 0; i < shares.size(); ++i) {
        mpz_class num(1), den(1);
        mpz_class xi(shares[i].first);
        for (size_t j = 0; j < shares.size(); ++j) {
            if (j == i) continue;
            mpz_class xj(shares[j].first);
            num = num * xj % params_.q;
            mpz_class diff = (xj - xi) % params_.q;
            if (diff < 0) diff += params_.q;
            den = den * diff % params_.q;
        }
        mpz_class den_inv;
        if (mpz_invert(den_inv.get_mpz_t(), den.get_mpz_t(), params_.q.get_mpz_t()) == 0)
            throw ProtocolError("degenerate share indices");
        mpz_class lambda = num * den_inv % params_.q;
        a_sk = mul(a_sk, pow(shares[i].second, lambda));
    }
    return mul(c.b, inv(a_sk));
}

Scalar Group::hash_to_scalar(std::span<const uint8_t> transcript) const {
    // 128 extra bits make the mod-q bias negligible.
    size_t nbytes = (static_cast<size_t>(params_.bits) + 128 + 7) / 8;
    Bytes wide = hash_expand(transcript, nbytes);
    return scalar(mpz_from_bytes(wide));
}

}  // namespace haze
