#include "haze/rng.hpp"

#include <cstring>

namespace haze {

Rng::Rng(uint64_t seed) {
    Bytes t;
    append_field(t, "haze.rng.root");
    append_u64(t, seed);
    sha256(t, material_.data());
    init_state();
}

Rng::Rng(const std::array<uint8_t, 32>& material) : material_(material) {
    init_state();
}

Rng::~Rng() {
    if (owns_state_) gmp_randclear(state_);
}

Rng::Rng(Rng&& other) noexcept : material_(other.material_) {
    if (other.owns_state_) {
        std::memcpy(&state_, &other.state_, sizeof(state_));
        owns_state_ = true;
        other.owns_state_ = false;
    }
}

Rng& Rng::operator=(Rng&& other) noexcept {
    if (this != &other) {
        if (owns_state_) gmp_randclear(state_);
        material_ = other.material_;
        owns_state_ = false;
        if (other.owns_state_) {
            std::memcpy(&state_, &other.state_, sizeof(state_));
            owns_state_ = true;
            other.owns_state_ = false;
        }
    }
    return *this;
}

void Rng::init_state() {
    gmp_randinit_mt(state_);
    owns_state_ = true;
    mpz_class seed = mpz_from_bytes(material_);
    gmp_randseed(state_, seed.get_mpz_t());
}

Rng Rng::derive(std::string_view label, uint64_t a, uint64_t b, uint64_t c) const {
    Bytes t;
    append_field(t, std::span<const uint8_t>(material_.data(), material_.size()));
    append_field(t, label);
    append_u64(t, a);
    append_u64(t, b);
    append_u64(t, c);
    std::array<uint8_t, 32> child{};
    sha256(t, child.data());
    return Rng(child);
}

mpz_class Rng::below(const mpz_class& bound) {
    mpz_class out;
    mpz_urandomm(out.get_mpz_t(), state_, bound.get_mpz_t());
    return out;
}

uint64_t Rng::u64(uint64_t bound) {
    mpz_class b(static_cast<unsigned long>(bound));
    return below(b).get_ui();
}

bool Rng::bit() {
    return u64(2) == 1;
}

std::vector<uint32_t> Rng::permutation(size_t n) {
    std::vector<uint32_t> p(n);
    for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
    for (size_t i = n; i > 1; --i) {
        size_t j = u64(i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

}  // namespace haze
