#include "haze/dkg.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace haze {

Dealing deal(const Group& group, int dealer, int parties, int t, Rng& rng) {
    if (t < 1 || t > parties)
        throw ConfigError("dkg threshold " + std::to_string(t) + " out of range for " +
                          std::to_string(parties) + " parties");

    std::vector<mpz_class> coeffs;
    coeffs.reserve(t);
    for (int i = 0; i < t; ++i) coeffs.push_back(group.random_scalar(rng).v);

    Dealing d;
    d.dealer = dealer;
    d.coeff_commitments.reserve(t);
    for (const mpz_class& a : coeffs) d.coeff_commitments.push_back(group.pow_g(a));

    d.shares_out.reserve(parties);
    for (int j = 1; j <= parties; ++j) {
        mpz_class x(j), acc(0);
        for (int i = t - 1; i >= 0; --i) acc = (acc * x + coeffs[i]) % group.params().q;
        d.shares_out.push_back(group.scalar(acc));
    }
    return d;
}

GroupElement feldman_eval(const Group& group, const std::vector<GroupElement>& commitments,
                          int j) {
    GroupElement acc = group.one();
    mpz_class ji(1);
    mpz_class x(j);
    for (const GroupElement& c : commitments) {
        acc = group.mul(acc, group.pow(c, ji));
        ji = ji * x % group.params().q;
    }
    return acc;
}

bool verify_dealing(const Group& group, const Dealing& dealing, int receiver, int parties,
                    int t) {
    if (dealing.dealer < 1 || dealing.dealer > parties) return false;
    if (receiver < 1 || receiver > parties) return false;
    if (static_cast<int>(dealing.coeff_commitments.size()) != t) return false;
    if (static_cast<int>(dealing.shares_out.size()) != parties) return false;
    const Scalar& share = dealing.shares_out[receiver - 1];
    return group.pow_g(share.v) == feldman_eval(group, dealing.coeff_commitments, receiver);
}

DkgResult finalize(const Group& group, const std::vector<Dealing>& dealings, int parties,
                   int t) {
    std::set<int> seen;
    for (const Dealing& d : dealings)
        if (!seen.insert(d.dealer).second)
            throw ProtocolError("dealer " + std::to_string(d.dealer) + " dealt twice");

    DkgResult out;
    for (const Dealing& d : dealings) {
        bool ok = true;
        for (int j = 1; j <= parties && ok; ++j)
            ok = verify_dealing(group, d, j, parties, t);
        if (ok) {
            out.transcript.dealings.push_back(d);
            out.transcript.qualified.push_back(d.dealer);
        } else {
            out.transcript.excluded.push_back(d.dealer);
        }
    }
    std::sort(out.transcript.qualified.begin(), out.transcript.qualified.end());
    std::sort(out.transcript.excluded.begin(), out.transcript.excluded.end());

    if (static_cast<int>(out.transcript.qualified.size()) < t) {
        std::string who;
        for (int id : out.transcript.excluded) who += " " + std::to_string(id);
        throw DkgFailureError("dkg failed: only " +
                              std::to_string(out.transcript.qualified.size()) +
                              " qualified dealers of " + std::to_string(t) +
                              " required; excluded:" + who);
    }

    GroupElement pk = group.one();
    for (const Dealing& d : out.transcript.dealings)
        pk = group.mul(pk, d.coeff_commitments[0]);
    out.transcript.public_key = PublicKey{pk};

    for (int j = 1; j <= parties; ++j) {
        mpz_class s(0);
        GroupElement commitment = group.one();
        for (const Dealing& d : out.transcript.dealings) {
            s += d.shares_out[j - 1].v;
            commitment = group.mul(commitment, feldman_eval(group, d.coeff_commitments, j));
        }
        Scalar sj = group.scalar(s);
        out.key_shares.push_back(KeyShare{j, sj, commitment});
        out.transcript.share_commitments.push_back(commitment);
    }
    return out;
}

}  // namespace haze
