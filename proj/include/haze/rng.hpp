#ifndef HAZE_RNG_HPP_
#define HAZE_RNG_HPP_

#include <gmp.h>
#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "haze/bytes.hpp"

namespace haze {

// Deterministic seedable randomness source. Every random choice in the whole
// protocol flows through one of these, so a run is a pure function of its
// seeds. Child streams are derived by hashing the parent material with a
// label plus indices; parallel code derives one child per task up front and
// never shares a stream across tasks.
class Rng {
public:
    explicit Rng(uint64_t seed);
    explicit Rng(const std::array<uint8_t, 32>& material);
    ~Rng();

    Rng(const Rng&) = delete;
    Rng& operator=(const Rng&) = delete;
    Rng(Rng&& other) noexcept;
    Rng& operator=(Rng&& other) noexcept;

    Rng derive(std::string_view label, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) const;

    // Uniform in [0, bound). bound must be positive.
    mpz_class below(const mpz_class& bound);
    uint64_t u64(uint64_t bound);
    bool bit();

    // Uniformly random permutation of {0, ..., n-1} (Fisher-Yates).
    std::vector<uint32_t> permutation(size_t n);

private:
    void init_state();

    std::array<uint8_t, 32> material_{};
    gmp_randstate_t state_;
    bool owns_state_ = false;
};

}  // namespace haze

#endif  // HAZE_RNG_HPP_
