#ifndef HAZE_ZK_HPP_
#define HAZE_ZK_HPP_

#include <optional>
#include <utility>
#include <vector>

#include "haze/group.hpp"
#include "haze/rng.hpp"

namespace haze {

// Chaum-Pedersen proof of a common exponent: y1 = g1^w and y2 = g2^w.
// Used for threshold decryption shares and PET blinding contributions.
struct EqExpProof {
    GroupElement t1;
    GroupElement t2;
    Scalar challenge;
    Scalar response;
};

EqExpProof prove_eq_exp(const Group& group, const Scalar& witness,
                        const std::pair<GroupElement, GroupElement>& bases,
                        const std::pair<GroupElement, GroupElement>& images,
                        std::span<const uint8_t> context, Rng& rng);

bool verify_eq_exp(const Group& group, const EqExpProof& proof,
                   const std::pair<GroupElement, GroupElement>& bases,
                   const std::pair<GroupElement, GroupElement>& images,
                   std::span<const uint8_t> context);

// Disjunctive proof that a ciphertext encrypts 0 or 1, without revealing
// which. Branch 0 covers m = 0, branch 1 covers m = 1; the two branch
// challenges must sum to the Fiat-Shamir challenge of the whole transcript.
struct BinaryVoteProof {
    GroupElement t1_0, t2_0;
    GroupElement t1_1, t2_1;
    Scalar c0, c1;
    Scalar z0, z1;
};

BinaryVoteProof prove_binary(const Group& group, const PublicKey& pk, const Ciphertext& c,
                             int m, const Scalar& r, Rng& rng);

bool verify_binary(const Group& group, const PublicKey& pk, const Ciphertext& c,
                   const BinaryVoteProof& proof);

// Ballot validity: every vote is 0 or 1 and the votes sum to 0 or 1.
// `votes` has one proof per ciphertext; `sum` covers the homomorphic total.
struct BallotProof {
    std::vector<BinaryVoteProof> votes;
    BinaryVoteProof sum;
};

// cells are the flattened N*C ciphertexts, rands their encryption nonces,
// real_index the position of the single 1-vote (nullopt for all zeros).
BallotProof prove_ballot(const Group& group, const PublicKey& pk,
                         const std::vector<Ciphertext>& cells,
                         std::optional<size_t> real_index,
                         const std::vector<Scalar>& rands, Rng& rng);

bool verify_ballot(const Group& group, const PublicKey& pk,
                   const std::vector<Ciphertext>& cells, const BallotProof& proof);

// Threshold decryption share with its correctness proof:
// value = a^{s_k} and log_g(commitment) = log_a(value).
struct DecryptionShare {
    int index = 0;
    GroupElement value;
    EqExpProof proof;
};

DecryptionShare decryption_share(const Group& group, const KeyShare& share,
                                 const Ciphertext& c, Rng& rng);

bool verify_decryption_share(const Group& group, const DecryptionShare& ds,
                             const GroupElement& share_commitment, const Ciphertext& c);

}  // namespace haze

#endif  // HAZE_ZK_HPP_
