#ifndef HAZE_DKG_HPP_
#define HAZE_DKG_HPP_

#include <vector>

#include "haze/group.hpp"
#include "haze/rng.hpp"

namespace haze {

// One dealer's contribution: Feldman commitments to its polynomial
// coefficients plus the evaluation f(j) for every receiver j in [1, A].
struct Dealing {
    int dealer = 0;
    std::vector<GroupElement> coeff_commitments;  // g^{a_0} .. g^{a_{t-1}}
    std::vector<Scalar> shares_out;               // shares_out[j-1] = f(j)
};

struct DkgTranscript {
    std::vector<Dealing> dealings;   // accepted dealings only
    std::vector<int> qualified;      // dealer ids, ascending
    std::vector<int> excluded;       // dealer ids with any inconsistent share
    PublicKey public_key;
    std::vector<GroupElement> share_commitments;  // g^{s_j} for j in [1, A]
};

struct DkgResult {
    DkgTranscript transcript;
    std::vector<KeyShare> key_shares;  // one per authority j in [1, A]
};

Dealing deal(const Group& group, int dealer, int parties, int t, Rng& rng);

// Feldman evaluation of a commitment vector at index j (g^{f(j)}).
GroupElement feldman_eval(const Group& group, const std::vector<GroupElement>& commitments,
                          int j);

// Accept iff g^{shares_out[receiver]} matches the Feldman evaluation.
// Structural defects (wrong vector sizes, bad ids) also reject.
bool verify_dealing(const Group& group, const Dealing& dealing, int receiver, int parties,
                    int t);

// Excludes dealers with any rejected share, requires >= t qualified dealers,
// sums surviving shares into per-authority keys.
DkgResult finalize(const Group& group, const std::vector<Dealing>& dealings, int parties,
                   int t);

}  // namespace haze

#endif  // HAZE_DKG_HPP_
