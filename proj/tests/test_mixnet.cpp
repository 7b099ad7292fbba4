#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "haze/mixnet.hpp"
#include "test_util.hpp"

using namespace haze;

namespace {
const Group& test_group() {
    static Group g(preset_params(512));
    return g;
}

const Lineage kLineage{Lineage::Purpose::noise, 0, 0};

std::vector<long> decrypt_batch(const Group& g, const testutil::ThresholdKey& key,
                                const MixBatch& batch, long lo, long hi) {
    std::vector<long> out;
    for (const Ciphertext& c : batch.items)
        out.push_back(testutil::decrypt_small(g, key, c, lo, hi));
    return out;
}

std::vector<MixerParty> honest_mixers(const Group& g, const PublicKey& pk, int count,
                                      int lambda) {
    std::vector<MixerParty> mixers;
    for (int id = 1; id <= count; ++id)
        mixers.push_back(MixerParty{id, [&g, pk, lambda](const MixBatch& b, Rng& rng) {
                                        return mix(g, pk, b, lambda, rng);
                                    }});
    return mixers;
}
}  // namespace

TEST_CASE("initial batch is trivially encrypted") {
    const Group& g = test_group();

    std::vector<long> zero_one{0, 1};
    MixBatch batch = initial_batch(g, zero_one, kLineage);
    CHECK(batch.items[0] == Ciphertext{g.one(), g.one()});
    CHECK(batch.items[1] == Ciphertext{g.one(), GroupElement{g.params().g}});
    CHECK(batch.stage == 0);

    MixBatch empty = initial_batch(g, std::vector<long>{}, kLineage);
    CHECK(empty.items.empty());
    CHECK(empty.stage == 0);

    // delta = 0.1 noise support
    std::vector<long> wide;
    for (long v = -4; v <= 5; ++v) wide.push_back(v);
    CHECK(initial_batch(g, wide, kLineage).items.size() == 10);
}

TEST_CASE("mix preserves the plaintext multiset") {
    const Group& g = test_group();
    Rng rng(7);
    auto key = testutil::make_threshold_key(g, 3, 2, rng);

    std::vector<long> values{-2, 0, 3, 3, 7};
    MixBatch batch = initial_batch(g, values, kLineage);
    MixOutcome out = mix(g, key.pk, batch, 4, rng);
    CHECK(out.batch.stage == 1);
    CHECK(verify_mix(g, key.pk, batch, out.batch, out.proof, 1));

    std::vector<long> decrypted = decrypt_batch(g, key, out.batch, -8, 8);
    std::vector<long> sorted_values = values;
    std::sort(sorted_values.begin(), sorted_values.end());
    std::sort(decrypted.begin(), decrypted.end());
    CHECK(decrypted == sorted_values);
}

TEST_CASE("different seeds give different orderings") {
    const Group& g = test_group();
    Rng setup(8);
    auto key = testutil::make_threshold_key(g, 2, 2, setup);
    std::vector<long> values{0, 1, 2, 3};
    MixBatch batch = initial_batch(g, values, kLineage);

    std::map<std::vector<long>, int> orderings;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(9000 + seed);
        MixOutcome out = mix(g, key.pk, batch, 1, rng);
        orderings[decrypt_batch(g, key, out.batch, 0, 3)]++;
    }
    CHECK(orderings.size() > 1);
    // 4! = 24 permutations; with 100 draws most should appear
    CHECK(orderings.size() >= 15);
}

TEST_CASE("single item batch mixes to the same plaintext") {
    const Group& g = test_group();
    Rng rng(10);
    auto key = testutil::make_threshold_key(g, 2, 2, rng);
    MixBatch batch = initial_batch(g, std::vector<long>{5}, kLineage);
    MixOutcome out = mix(g, key.pk, batch, 2, rng);
    CHECK(verify_mix(g, key.pk, batch, out.batch, out.proof, 1));
    CHECK(testutil::decrypt_small(g, key, out.batch.items[0]) == 5);
}

TEST_CASE("verify_mix policy checks") {
    const Group& g = test_group();
    Rng rng(11);
    auto key = testutil::make_threshold_key(g, 2, 2, rng);
    MixBatch batch = initial_batch(g, std::vector<long>{0, 1, 2}, kLineage);
    MixOutcome out = mix(g, key.pk, batch, 5, rng);

    CHECK(verify_mix(g, key.pk, batch, out.batch, out.proof, 1));
    // vacuous proof refused
    MixOutcome empty_proof = out;
    empty_proof.proof.shadows.clear();
    empty_proof.proof.openings.clear();
    CHECK_FALSE(verify_mix(g, key.pk, batch, empty_proof.batch, empty_proof.proof, 1));
    // policy floor
    CHECK_FALSE(verify_mix(g, key.pk, batch, out.batch, out.proof, 6));
    // lineage mismatch is structural
    MixBatch other = out.batch;
    other.lineage.road = 1;
    CHECK_FALSE(verify_mix(g, key.pk, batch, other, out.proof, 1));
}

TEST_CASE("tampering detection rates") {
    const Group& g = test_group();
    Rng setup(12);
    auto key = testutil::make_threshold_key(g, 2, 2, setup);
    std::vector<long> values{0, 1, 2};
    MixBatch batch = initial_batch(g, values, kLineage);

    SUBCASE("honest mixes always accepted") {
        for (int trial = 0; trial < 100; ++trial) {
            Rng rng(13000 + trial);
            MixOutcome out = mix(g, key.pk, batch, 10, rng);
            REQUIRE(verify_mix(g, key.pk, batch, out.batch, out.proof, 10));
        }
    }

    SUBCASE("lambda = 10: at most one escape in 100 trials") {
        int rejected = 0;
        for (int trial = 0; trial < 100; ++trial) {
            Rng rng(14000 + trial);
            MixOutcome out = tampered_mix(g, key.pk, batch, 10, rng);
            if (!verify_mix(g, key.pk, batch, out.batch, out.proof, 10)) ++rejected;
        }
        CHECK(rejected >= 99);
    }

    SUBCASE("lambda = 5: rejection rate within 3 sigma of 1 - 2^-5") {
        const int trials = 200;
        int rejected = 0;
        for (int trial = 0; trial < trials; ++trial) {
            Rng rng(15000 + trial);
            MixOutcome out = tampered_mix(g, key.pk, batch, 5, rng);
            if (!verify_mix(g, key.pk, batch, out.batch, out.proof, 5)) ++rejected;
        }
        double p_escape = 1.0 / 32;
        double sigma = std::sqrt(trials * p_escape * (1 - p_escape));
        CHECK(rejected >= trials - trials * p_escape - 3 * sigma);
    }
}

TEST_CASE("chain: happy path, exclusion, failure") {
    const Group& g = test_group();
    Rng setup(16);
    auto key = testutil::make_threshold_key(g, 3, 2, setup);
    std::vector<long> values{0, 1, 2, 3};
    MixBatch batch = initial_batch(g, values, kLineage);

    SUBCASE("three honest authorities: stage 3") {
        Rng rng(17);
        auto mixers = honest_mixers(g, key.pk, 3, 4);
        ChainResult chain = run_chain(g, key.pk, batch, mixers, 1, rng);
        CHECK(chain.output.stage == 3);
        CHECK(chain.excluded.empty());
        for (const HopRecord& hop : chain.transcript.hops) CHECK(hop.accepted);
        std::vector<long> decrypted = decrypt_batch(g, key, chain.output, 0, 3);
        std::sort(decrypted.begin(), decrypted.end());
        CHECK(decrypted == values);
        // composed permutation audit matches the actual outputs
        for (size_t i = 0; i < values.size(); ++i)
            CHECK(testutil::decrypt_small(g, key,
                                          chain.output.items[chain.composed_perm[i]]) ==
                  static_cast<long>(i));
    }

    SUBCASE("middle authority tampers: excluded, chain completes at stage 2") {
        Rng rng(18);
        std::vector<MixerParty> mixers = honest_mixers(g, key.pk, 3, 10);
        mixers[1].fn = [&g, &key](const MixBatch& b, Rng& r) {
            return tampered_mix(g, key.pk, b, 10, r);
        };
        ChainResult chain = run_chain(g, key.pk, batch, mixers, 1, rng);
        CHECK(chain.output.stage == 2);
        CHECK(chain.excluded == std::vector<int>{2});
        std::vector<long> decrypted = decrypt_batch(g, key, chain.output, 0, 3);
        std::sort(decrypted.begin(), decrypted.end());
        CHECK(decrypted == values);
    }

    SUBCASE("all hops fail: chain failure") {
        Rng rng(19);
        std::vector<MixerParty> mixers;
        mixers.push_back(MixerParty{1, [&g, &key](const MixBatch& b, Rng& r) {
                                        return tampered_mix(g, key.pk, b, 10, r);
                                    }});
        CHECK_THROWS_AS(run_chain(g, key.pk, batch, mixers, 1, rng), ChainFailureError);
        CHECK_THROWS_AS(
            run_chain(g, key.pk, batch, std::vector<MixerParty>{}, 1, rng),
            ChainFailureError);
    }
}

TEST_CASE("multiset preservation, exhaustive for n <= 10") {
    const Group& g = test_group();
    Rng setup(20);
    auto key = testutil::make_threshold_key(g, 2, 2, setup);
    for (size_t n : {1u, 2u, 5u, 10u}) {
        std::vector<long> values;
        for (size_t i = 0; i < n; ++i) values.push_back(static_cast<long>(i) - 2);
        MixBatch batch = initial_batch(g, values, kLineage);
        Rng rng(21 + n);
        auto mixers = honest_mixers(g, key.pk, 2, 2);
        ChainResult chain = run_chain(g, key.pk, batch, mixers, 1, rng);
        std::vector<long> decrypted = decrypt_batch(g, key, chain.output, -3, 10);
        std::sort(decrypted.begin(), decrypted.end());
        std::vector<long> expected = values;
        std::sort(expected.begin(), expected.end());
        CHECK(decrypted == expected);
    }
}

TEST_CASE("unlinkability: output position of a fixed input is uniform") {
    const Group& g = test_group();
    Rng setup(22);
    auto key = testutil::make_threshold_key(g, 2, 2, setup);
    std::vector<long> values{0, 1, 2, 3};
    MixBatch batch = initial_batch(g, values, kLineage);

    auto chi_square_positions = [&](bool with_tamperer) {
        const int runs = 1000;
        std::vector<int> counts(values.size(), 0);
        for (int run = 0; run < runs; ++run) {
            Rng rng(23000 + run);
            std::vector<MixerParty> mixers = honest_mixers(g, key.pk, 3, 1);
            if (with_tamperer)
                mixers[1].fn = [&g, &key](const MixBatch& b, Rng& r) {
                    return tampered_mix(g, key.pk, b, 5, r);
                };
            ChainResult chain = run_chain(g, key.pk, batch, mixers, 1, rng);
            // track where input 0 ends up via the composed permutation
            ++counts[chain.composed_perm[0]];
        }
        double expected = static_cast<double>(runs) / counts.size();
        double chi2 = 0;
        for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
        return chi2;
    };

    // 3 degrees of freedom, p = 0.001 cutoff
    CHECK(chi_square_positions(false) < 16.27);
    // distribution unchanged when one mixer is excluded along the way
    CHECK(chi_square_positions(true) < 16.27);
}
