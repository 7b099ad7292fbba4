#ifndef HAZE_MIXNET_HPP_
#define HAZE_MIXNET_HPP_

#include <functional>
#include <string>
#include <vector>

#include "haze/group.hpp"
#include "haze/rng.hpp"

namespace haze {

// Every chain serves exactly one purpose for one tally cell; batches carry
// the tag so a chain output cannot be replayed elsewhere.
struct Lineage {
    enum class Purpose { noise, candidates };
    Purpose purpose = Purpose::noise;
    int road = 0;
    int category = 0;
    bool operator==(const Lineage&) const = default;
};

struct MixBatch {
    std::vector<Ciphertext> items;
    int stage = 0;  // number of accepted mixes applied
    Lineage lineage;
};

// Cut-and-choose argument: lambda shadow shuffles of the input; each
// challenge bit opens either the shadow itself (bit 0) or the composition
// taking the shadow to the actual output (bit 1). A mixer that changed the
// plaintext multiset survives with probability 2^-lambda.
struct ShuffleProof {
    struct Opening {
        std::vector<uint32_t> perm;  // out[perm[i]] = in[i]
        std::vector<Scalar> rands;
    };
    std::vector<std::vector<Ciphertext>> shadows;  // lambda x n
    std::vector<Opening> openings;                 // lambda entries
};

struct MixOutcome {
    MixBatch batch;
    ShuffleProof proof;
    std::vector<uint32_t> perm;  // mixer-private, for harness audits only
};

// Trivial (r = 0) encryptions in the given order; publicly recomputable.
MixBatch initial_batch(const Group& group, std::span<const long> values, Lineage lineage);

MixOutcome mix(const Group& group, const PublicKey& pk, const MixBatch& batch, int lambda,
               Rng& rng);

// Fault-injection mixer: performs an honest mix, then replaces one output
// item with a fresh encryption of 7 and forges a proof by guessing the
// challenge bits. Passes verification with probability 2^-lambda.
MixOutcome tampered_mix(const Group& group, const PublicKey& pk, const MixBatch& batch,
                        int lambda, Rng& rng);

bool verify_mix(const Group& group, const PublicKey& pk, const MixBatch& before,
                const MixBatch& after, const ShuffleProof& proof, int min_rounds);

using MixerFn = std::function<MixOutcome(const MixBatch&, Rng&)>;

struct MixerParty {
    int id = 0;
    MixerFn fn;
};

struct HopRecord {
    int mixer = 0;
    MixBatch output;
    ShuffleProof proof;
    bool accepted = false;
};

struct ChainTranscript {
    MixBatch input;
    std::vector<HopRecord> hops;
};

struct ChainResult {
    MixBatch output;
    ChainTranscript transcript;
    std::vector<int> excluded;           // mixers whose hop failed verification
    std::vector<uint32_t> composed_perm; // harness audit: input index -> output position
};

// Sequential chain: each party mixes the current batch; a hop that fails
// verification is discarded (the next party re-runs from the last good
// batch) and the mixer is reported excluded. Throws ChainFailureError when
// no hop succeeds.
ChainResult run_chain(const Group& group, const PublicKey& pk, const MixBatch& input,
                      std::span<const MixerParty> mixers, int lambda_min, Rng& rng);

}  // namespace haze

#endif  // HAZE_MIXNET_HPP_
