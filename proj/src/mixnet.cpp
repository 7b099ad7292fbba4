#include "haze/mixnet.hpp"

#include <algorithm>

namespace haze {

namespace {

void append_lineage(Bytes& t, const Lineage& lineage) {
    append_u32(t, lineage.purpose == Lineage::Purpose::noise ? 0 : 1);
    append_u32(t, static_cast<uint32_t>(lineage.road));
    append_u32(t, static_cast<uint32_t>(lineage.category));
}

void append_items(Bytes& t, const std::vector<Ciphertext>& items) {
    append_u32(t, static_cast<uint32_t>(items.size()));
    for (const Ciphertext& c : items) {
        append_mpz(t, c.a.v);
        append_mpz(t, c.b.v);
    }
}

// Challenge bits bind the key, lineage, both batches and every shadow.
std::vector<bool> challenge_bits(const Group& group, const PublicKey& pk,
                                 const MixBatch& before, const MixBatch& after,
                                 const std::vector<std::vector<Ciphertext>>& shadows) {
    Bytes t;
    append_field(t, "haze.mix");
    append_mpz(t, pk.h.v);
    append_lineage(t, before.lineage);
    append_u32(t, static_cast<uint32_t>(before.stage));
    append_items(t, before.items);
    append_items(t, after.items);
    for (const auto& s : shadows) append_items(t, s);
    (void)group;
    Bytes stream = hash_expand(t, (shadows.size() + 7) / 8);
    std::vector<bool> bits(shadows.size());
    for (size_t i = 0; i < bits.size(); ++i) bits[i] = (stream[i / 8] >> (i % 8)) & 1;
    return bits;
}

bool is_permutation(const std::vector<uint32_t>& perm, size_t n) {
    if (perm.size() != n) return false;
    std::vector<bool> hit(n, false);
    for (uint32_t p : perm) {
        if (p >= n || hit[p]) return false;
        hit[p] = true;
    }
    return true;
}

struct ShuffleSecret {
    std::vector<uint32_t> perm;
    std::vector<Scalar> rands;
};

// out[perm[i]] = reencrypt(in[i], rands[i])
std::vector<Ciphertext> apply_shuffle(const Group& group, const PublicKey& pk,
                                      const std::vector<Ciphertext>& in,
                                      const ShuffleSecret& s) {
    std::vector<Ciphertext> out(in.size());
    for (size_t i = 0; i < in.size(); ++i)
        out[s.perm[i]] = group.reencrypt(pk, in[i], s.rands[i]);
    return out;
}

ShuffleSecret random_shuffle_secret(const Group& group, size_t n, Rng& rng) {
    ShuffleSecret s;
    s.perm = rng.permutation(n);
    s.rands.reserve(n);
    for (size_t i = 0; i < n; ++i) s.rands.push_back(group.random_scalar(rng));
    return s;
}

}  // namespace

MixBatch initial_batch(const Group& group, std::span<const long> values, Lineage lineage) {
    MixBatch batch;
    batch.lineage = lineage;
    batch.stage = 0;
    batch.items.reserve(values.size());
    for (long v : values) batch.items.push_back(group.trivial_encrypt(v));
    return batch;
}

MixOutcome mix(const Group& group, const PublicKey& pk, const MixBatch& batch, int lambda,
               Rng& rng) {
    const size_t n = batch.items.size();
    ShuffleSecret actual = random_shuffle_secret(group, n, rng);

    MixOutcome out;
    out.batch.lineage = batch.lineage;
    out.batch.stage = batch.stage + 1;
    out.batch.items = apply_shuffle(group, pk, batch.items, actual);
    out.perm = actual.perm;

    std::vector<ShuffleSecret> shadow_secrets;
    shadow_secrets.reserve(lambda);
    out.proof.shadows.reserve(lambda);
    for (int l = 0; l < lambda; ++l) {
        shadow_secrets.push_back(random_shuffle_secret(group, n, rng));
        out.proof.shadows.push_back(apply_shuffle(group, pk, batch.items, shadow_secrets.back()));
    }

    std::vector<bool> bits = challenge_bits(group, pk, batch, out.batch, out.proof.shadows);
    out.proof.openings.resize(lambda);
    for (int l = 0; l < lambda; ++l) {
        const ShuffleSecret& shadow = shadow_secrets[l];
        ShuffleProof::Opening& opening = out.proof.openings[l];
        if (!bits[l]) {
            opening.perm = shadow.perm;
            opening.rands = shadow.rands;
        } else {
            // composition shadow -> output: tau[shadow.perm[i]] = actual.perm[i],
            // with difference randomness actual.rands[i] - shadow.rands[i]
            opening.perm.resize(n);
            opening.rands.resize(n);
            for (size_t i = 0; i < n; ++i) {
                opening.perm[shadow.perm[i]] = actual.perm[i];
                opening.rands[shadow.perm[i]] =
                    group.scalar_sub(actual.rands[i], shadow.rands[i]);
            }
        }
    }
    return out;
}

MixOutcome tampered_mix(const Group& group, const PublicKey& pk, const MixBatch& batch,
                        int lambda, Rng& rng) {
    const size_t n = batch.items.size();
    ShuffleSecret actual = random_shuffle_secret(group, n, rng);

    MixOutcome out;
    out.batch.lineage = batch.lineage;
    out.batch.stage = batch.stage + 1;
    out.batch.items = apply_shuffle(group, pk, batch.items, actual);
    out.perm = actual.perm;
    if (n > 0) out.batch.items[rng.u64(n)] = group.encrypt_random(pk, 7, rng);

    // Forge: guess each challenge bit, then build the only opening that can
    // satisfy it. The real bits are fixed by the transcript afterwards.
    std::vector<bool> guesses(lambda);
    for (int l = 0; l < lambda; ++l) guesses[l] = rng.bit();

    out.proof.shadows.resize(lambda);
    out.proof.openings.resize(lambda);
    for (int l = 0; l < lambda; ++l) {
        if (!guesses[l]) {
            ShuffleSecret shadow = random_shuffle_secret(group, n, rng);
            out.proof.shadows[l] = apply_shuffle(group, pk, batch.items, shadow);
            out.proof.openings[l].perm = shadow.perm;
            out.proof.openings[l].rands = shadow.rands;
        } else {
            ShuffleSecret back = random_shuffle_secret(group, n, rng);
            // shadow[j] = after[tau[j]] - Enc(0; d[j]) so the bit-1 check holds
            std::vector<Ciphertext> shadow(n);
            for (size_t j = 0; j < n; ++j)
                shadow[j] = group.sub(out.batch.items[back.perm[j]],
                                      group.encrypt(pk, 0, back.rands[j]));
            out.proof.shadows[l] = std::move(shadow);
            out.proof.openings[l].perm = back.perm;
            out.proof.openings[l].rands = back.rands;
        }
    }
    return out;
}

bool verify_mix(const Group& group, const PublicKey& pk, const MixBatch& before,
                const MixBatch& after, const ShuffleProof& proof, int min_rounds) {
    const size_t n = before.items.size();
    if (after.items.size() != n) return false;
    if (!(after.lineage == before.lineage)) return false;
    if (after.stage != before.stage + 1) return false;
    if (proof.shadows.size() != proof.openings.size()) return false;
    if (static_cast<int>(proof.shadows.size()) < std::max(min_rounds, 1)) return false;

    std::vector<bool> bits = challenge_bits(group, pk, before, after, proof.shadows);
    for (size_t l = 0; l < proof.shadows.size(); ++l) {
        const std::vector<Ciphertext>& shadow = proof.shadows[l];
        const ShuffleProof::Opening& opening = proof.openings[l];
        if (shadow.size() != n) return false;
        if (!is_permutation(opening.perm, n)) return false;
        if (opening.rands.size() != n) return false;
        if (!bits[l]) {
            // shadow must be a correct reencryption shuffle of `before`
            for (size_t i = 0; i < n; ++i)
                if (!(shadow[opening.perm[i]] ==
                      group.reencrypt(pk, before.items[i], opening.rands[i])))
                    return false;
        } else {
            // composition must take the shadow onto `after`
            for (size_t j = 0; j < n; ++j)
                if (!(after.items[opening.perm[j]] ==
                      group.reencrypt(pk, shadow[j], opening.rands[j])))
                    return false;
        }
    }
    return true;
}

ChainResult run_chain(const Group& group, const PublicKey& pk, const MixBatch& input,
                      std::span<const MixerParty> mixers, int lambda_min, Rng& rng) {
    if (mixers.empty()) throw ChainFailureError("mix chain has no live authorities");

    ChainResult result;
    result.transcript.input = input;
    result.composed_perm.resize(input.items.size());
    for (size_t i = 0; i < input.items.size(); ++i)
        result.composed_perm[i] = static_cast<uint32_t>(i);

    MixBatch current = input;
    for (size_t h = 0; h < mixers.size(); ++h) {
        Rng hop_rng = rng.derive("hop", h, static_cast<uint64_t>(mixers[h].id));
        MixOutcome outcome = mixers[h].fn(current, hop_rng);
        bool ok = verify_mix(group, pk, current, outcome.batch, outcome.proof, lambda_min);
        result.transcript.hops.push_back(
            HopRecord{mixers[h].id, outcome.batch, outcome.proof, ok});
        if (ok) {
            for (uint32_t& pos : result.composed_perm) pos = outcome.perm[pos];
            current = std::move(outcome.batch);
        } else {
            result.excluded.push_back(mixers[h].id);
        }
    }
    if (current.stage == input.stage)
        throw ChainFailureError("every hop of the mix chain failed verification");
    result.output = std::move(current);
    return result;
}

}  // namespace haze
