#include "haze/zk.hpp"

namespace haze {

namespace {

Scalar eq_exp_challenge(const Group& group,
                        const std::pair<GroupElement, GroupElement>& bases,
                        const std::pair<GroupElement, GroupElement>& images,
                        const GroupElement& t1, const GroupElement& t2,
                        std::span<const uint8_t> context) {
    Bytes t;
    append_field(t, "haze.eqexp");
    append_field(t, context);
    append_mpz(t, bases.first.v);
    append_mpz(t, bases.second.v);
    append_mpz(t, images.first.v);
    append_mpz(t, images.second.v);
    append_mpz(t, t1.v);
    append_mpz(t, t2.v);
    return group.hash_to_scalar(t);
}

Scalar binary_challenge(const Group& group, const PublicKey& pk, const Ciphertext& c,
                        const BinaryVoteProof& p) {
    Bytes t;
    append_field(t, "haze.binvote");
    append_mpz(t, pk.h.v);
    append_mpz(t, c.a.v);
    append_mpz(t, c.b.v);
    append_mpz(t, p.t1_0.v);
    append_mpz(t, p.t2_0.v);
    append_mpz(t, p.t1_1.v);
    append_mpz(t, p.t2_1.v);
    return group.hash_to_scalar(t);
}

}  // namespace

EqExpProof prove_eq_exp(const Group& group, const Scalar& witness,
                        const std::pair<GroupElement, GroupElement>& bases,
                        const std::pair<GroupElement, GroupElement>& images,
                        std::span<const uint8_t> context, Rng& rng) {
    Scalar w = group.random_scalar(rng);
    EqExpProof proof;
    proof.t1 = group.pow(bases.first, w.v);
    proof.t2 = group.pow(bases.second, w.v);
    proof.challenge = eq_exp_challenge(group, bases, images, proof.t1, proof.t2, context);
    proof.response = group.scalar_add(w, group.scalar_mul(proof.challenge, witness));
    return proof;
}

bool verify_eq_exp(const Group& group, const EqExpProof& proof,
                   const std::pair<GroupElement, GroupElement>& bases,
                   const std::pair<GroupElement, GroupElement>& images,
                   std::span<const uint8_t> context) {
    Scalar c = eq_exp_challenge(group, bases, images, proof.t1, proof.t2, context);
    if (!(c == proof.challenge)) return false;
    GroupElement lhs1 = group.pow(bases.first, proof.response.v);
    GroupElement rhs1 = group.mul(proof.t1, group.pow(images.first, c.v));
    if (!(lhs1 == rhs1)) return false;
    GroupElement lhs2 = group.pow(bases.second, proof.response.v);
    GroupElement rhs2 = group.mul(proof.t2, group.pow(images.second, c.v));
    return lhs2 == rhs2;
}

BinaryVoteProof prove_binary(const Group& group, const PublicKey& pk, const Ciphertext& c,
                             int m, const Scalar& r, Rng& rng) {
    // Branch statements: m=0 is (a, b) = (g^r, h^r); m=1 is (a, b/g) = (g^r, h^r).
    const GroupElement g{group.params().g};
    GroupElement b0 = c.b;
    GroupElement b1 = group.mul(c.b, group.inv(g));

    BinaryVoteProof p;
    Scalar w = group.random_scalar(rng);
    Scalar c_fake = group.random_scalar(rng);
    Scalar z_fake = group.random_scalar(rng);

    if (m == 0) {
        // simulate branch 1
        p.t1_1 = group.mul(group.pow_g(z_fake.v), group.pow(c.a, -c_fake.v));
        p.t2_1 = group.mul(group.pow(pk.h, z_fake.v), group.pow(b1, -c_fake.v));
        p.t1_0 = group.pow_g(w.v);
        p.t2_0 = group.pow(pk.h, w.v);
    } else {
        // simulate branch 0
        p.t1_0 = group.mul(group.pow_g(z_fake.v), group.pow(c.a, -c_fake.v));
        p.t2_0 = group.mul(group.pow(pk.h, z_fake.v), group.pow(b0, -c_fake.v));
        p.t1_1 = group.pow_g(w.v);
        p.t2_1 = group.pow(pk.h, w.v);
    }

    Scalar challenge = binary_challenge(group, pk, c, p);
    Scalar c_real = group.scalar_sub(challenge, c_fake);
    Scalar z_real = group.scalar_add(w, group.scalar_mul(c_real, r));

    if (m == 0) {
        p.c0 = c_real;
        p.z0 = z_real;
        p.c1 = c_fake;
        p.z1 = z_fake;
    } else {
        p.c1 = c_real;
        p.z1 = z_real;
        p.c0 = c_fake;
        p.z0 = z_fake;
    }
    return p;
}

bool verify_binary(const Group& group, const PublicKey& pk, const Ciphertext& c,
                   const BinaryVoteProof& proof) {
    const GroupElement g{group.params().g};
    Scalar challenge = binary_challenge(group, pk, c, proof);
    if (!(group.scalar_add(proof.c0, proof.c1) == challenge)) return false;

    GroupElement b0 = c.b;
    GroupElement b1 = group.mul(c.b, group.inv(g));

    if (!(group.pow_g(proof.z0.v) == group.mul(proof.t1_0, group.pow(c.a, proof.c0.v))))
        return false;
    if (!(group.pow(pk.h, proof.z0.v) == group.mul(proof.t2_0, group.pow(b0, proof.c0.v))))
        return false;
    if (!(group.pow_g(proof.z1.v) == group.mul(proof.t1_1, group.pow(c.a, proof.c1.v))))
        return false;
    return group.pow(pk.h, proof.z1.v) == group.mul(proof.t2_1, group.pow(b1, proof.c1.v));
}

BallotProof prove_ballot(const Group& group, const PublicKey& pk,
                         const std::vector<Ciphertext>& cells,
                         std::optional<size_t> real_index,
                         const std::vector<Scalar>& rands, Rng& rng) {
    BallotProof proof;
    proof.votes.reserve(cells.size());
    Ciphertext sum = group.trivial_encrypt(0);
    Scalar r_sum = group.scalar(0);
    for (size_t i = 0; i < cells.size(); ++i) {
        int m = (real_index && *real_index == i) ? 1 : 0;
        proof.votes.push_back(prove_binary(group, pk, cells[i], m, rands[i], rng));
        sum = group.add(sum, cells[i]);
        r_sum = group.scalar_add(r_sum, rands[i]);
    }
    proof.sum = prove_binary(group, pk, sum, real_index ? 1 : 0, r_sum, rng);
    return proof;
}

bool verify_ballot(const Group& group, const PublicKey& pk,
                   const std::vector<Ciphertext>& cells, const BallotProof& proof) {
    if (proof.votes.size() != cells.size()) return false;  // malformed
    Ciphertext sum = group.trivial_encrypt(0);
    for (size_t i = 0; i < cells.size(); ++i) {
        if (!verify_binary(group, pk, cells[i], proof.votes[i])) return false;
        sum = group.add(sum, cells[i]);
    }
    return verify_binary(group, pk, sum, proof.sum);
}

DecryptionShare decryption_share(const Group& group, const KeyShare& share,
                                 const Ciphertext& c, Rng& rng) {
    DecryptionShare ds;
    ds.index = share.index;
    ds.value = group.share_value(share, c);
    Bytes context = ciphertext_bytes(c);
    ds.proof = prove_eq_exp(group, share.s, {GroupElement{group.params().g}, c.a},
                            {share.commitment, ds.value}, context, rng);
    return ds;
}

bool verify_decryption_share(const Group& group, const DecryptionShare& ds,
                             const GroupElement& share_commitment, const Ciphertext& c) {
    Bytes context = ciphertext_bytes(c);
    return verify_eq_exp(group, ds.proof, {GroupElement{group.params().g}, c.a},
                         {share_commitment, ds.value}, context);
}

}  // namespace haze
