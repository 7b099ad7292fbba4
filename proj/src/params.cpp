#include "haze/group.hpp"

namespace haze {

// Vetted subgroup parameters, p = 2qk + 1 with q prime of exactly `bits`
// bits. Derived deterministically: q = next_prime(floor(sqrt(2) * 2^(bits-1))),
// k the smallest positive integer making p prime, g = 2^(2k) mod p.
// check_params() re-verifies the structure at load.

namespace {

struct PresetHex {
    int bits;
    const char* p;
    const char* q;
    unsigned long k;
    const char* g;
};

const PresetHex kPresets[] = {
    {512,
     "29e56549c794b8c3a1b64e1ec8e58c9e539007232c430eb3cddfbaade69db12e2d9af152ba973babc8cb"
     "322363c9847cf4d3bff7d125f788fc470c4b4dd825da4d5",
     "b504f333f9de6484597d89b3754abe9f1d6f60ba893ba84ced17ac85833399154afc83043ab8a2c3a8b1"
     "fe6fdc83db390f74a85e439c7b4a780487363dfa2869",
     474,
     "24911748d9605ed883e0add5d0ae9856e890018b479d56bff37e71fbbb1ed79b924cce0c251d41f47e70"
     "85349143aa4a56035166fcbc2a0af28c010543a9e1022c3"},
    {1024,
     "46b5ef004d9adf43b2f509ca19d13276277f81c8dd9b4dbe0c9d3f64274027cc514aa32da6f01f946de5"
     "8763b22381a24a0991c4d269202916e1c4d13035b764f214922cd60c683a986e311586ed841c5b2d6da8"
     "accd3b2a035c319c9a8c8e8c39ab75dfe293d75a3f5c8ec63f833a3e73c6630e0f571a7253a84eb5bc59"
     "4f135d",
     "b504f333f9de6484597d89b3754abe9f1d6f60ba893ba84ced17ac85833399154afc83043ab8a2c3a8b1"
     "fe6fdc83db390f74a85e439c7b4a780487363dfa2768d2202e8742af1f4e53059c6011bc337bcab1bc91"
     "1688458a460abc722f7c4e33c6d5a8a38bb7e9dccb2a634331f3c84df52f120f836e582eeaa4a0899040"
     "ca6f",
     50,
     "10000000000000000000000000"},
    {2048,
     "25a747968fb98268879d5ce49425cc2698df6adecd0ba8c200512ca2c58a7b97add90640a136e7db32d7"
     "062cc49e6d599e7704059b904ca53d76f120086448b28db531ada29eed430ac4eac6fbb065b57fe97879"
     "2defd8770311bbb2c0609b44451bf15404d001652d429125ba23f56a37400a81ba16b3d7c24ebe649d41"
     "7a13ff612aca88a2a35e532d0511580b9c280ccf7a7fc756b7ec7fb11996b4f1d5e4e4f642c36a1ff190"
     "1164902eac831ee56e0d24d2c4cb9675630edc7038c4377dc2d9d27e8f660e8da0d95c7e3619e8f0f23e"
     "fe3d18bead613f551a4c0ac8c4bb93ef31e71e85b31332a92889abfd95935badec987fd1877415de1f1a"
     "82224def9a5",
     "b504f333f9de6484597d89b3754abe9f1d6f60ba893ba84ced17ac85833399154afc83043ab8a2c3a8b1"
     "fe6fdc83db390f74a85e439c7b4a780487363dfa2768d2202e8742af1f4e53059c6011bc337bcab1bc91"
     "1688458a460abc722f7c4e33c6d5a8a38bb7e9dccb2a634331f3c84df52f120f836e582eeaa4a0899040"
     "ca4a81394ab6d8fd0efdf4d3a02cebc93e0c4264dabcd528b651b8cf341b6f8236c70104dc01fe32352f"
     "332a5e9f7bda1ebff6a1be3fca221307dea06241f7aa81c2c1fcbddea2f7dc3318838a2eaff5f3b2d24f"
     "4a763facb882fdfe170fd3b1f780f9acce41797f2805c246785e929570235fcf8f7bca3ea33b4d7c60a5"
     "e633f145",
     426,
     "100000000000000000000000000000000000000000000000000000000000000000000000000000000000"
     "000000000000000000000000000000000000000000000000000000000000000000000000000000000000"
     "0000000000000000000000000000000000000000000000"},
};

}  // namespace

GroupParams preset_params(int bits) {
    for (const PresetHex& preset : kPresets) {
        if (preset.bits != bits) continue;
        GroupParams params;
        params.p = mpz_class(preset.p, 16);
        params.q = mpz_class(preset.q, 16);
        params.k = mpz_class(preset.k);
        params.g = mpz_class(preset.g, 16);
        params.bits = bits;
        return params;
    }
    throw ConfigError("unknown group preset: " + std::to_string(bits) +
                      " (choose 512, 1024, or 2048)");
}

void check_params(const GroupParams& params) {
    if (params.p != 2 * params.q * params.k + 1)
        throw ConfigError("group params: p != 2qk + 1");
    if (mpz_probab_prime_p(params.q.get_mpz_t(), 25) == 0)
        throw ConfigError("group params: q is composite");
    if (mpz_probab_prime_p(params.p.get_mpz_t(), 25) == 0)
        throw ConfigError("group params: p is composite");
    if (params.g <= 1 || params.g >= params.p)
        throw ConfigError("group params: generator out of range");
    mpz_class gq;
    mpz_powm(gq.get_mpz_t(), params.g.get_mpz_t(), params.q.get_mpz_t(), params.p.get_mpz_t());
    if (gq != 1) throw ConfigError("group params: generator order is not q");
    if (mpz_sizeinbase(params.q.get_mpz_t(), 2) != static_cast<size_t>(params.bits))
        throw ConfigError("group params: q has wrong bit length");
}

}  // namespace haze
