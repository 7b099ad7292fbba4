#include "haze/tally.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace haze {

NoiseSet build_noise_set(double delta) {
    if (!(delta > 0.0) || delta > 1.0)
        throw ConfigError("delta must be in (0, 1]");
    // 1e-9 guards against 1/(2*delta) landing just below an integer in
    // binary floating point (e.g. delta = 0.1).
    long bound = static_cast<long>(std::floor(1.0 / (2.0 * delta) + 1e-9));
    if (bound < 1)
        throw ConfigError("delta too large: floor(1/(2*delta)) must be >= 1");
    NoiseSet out;
    out.delta = delta;
    out.values.reserve(2 * bound);
    for (long q = -bound + 1; q <= bound; ++q) out.values.push_back(q);
    return out;
}

Probability dp_mechanism_oracle(long sum, long threshold, const NoiseSet& noise) {
    long hits = 0;
    for (long q : noise.values)
        if (sum + q >= threshold) ++hits;
    return Probability{hits, static_cast<long>(noise.values.size())};
}

TallyGrid aggregate_votes(const Group& group, const PublicKey& pk,
                          std::span<const BallotSubmission> ballots, int roads, int categories,
                          ExecMode mode, std::vector<Exclusion>* exclusions) {
    const size_t n = ballots.size();
    const size_t cells = static_cast<size_t>(roads) * categories;

    std::vector<uint8_t> valid(n, 0);
    if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (size_t j = 0; j < n; ++j) {
            valid[j] = ballots[j].cells.size() == cells &&
                       verify_ballot(group, pk, ballots[j].cells, ballots[j].proof);
        }
    } else {
        for (size_t j = 0; j < n; ++j) {
            valid[j] = ballots[j].cells.size() == cells &&
                       verify_ballot(group, pk, ballots[j].cells, ballots[j].proof);
        }
    }

    TallyGrid grid;
    grid.roads = roads;
    grid.categories = categories;
    grid.cells.assign(cells, group.trivial_encrypt(0));
    for (size_t j = 0; j < n; ++j) {
        if (!valid[j]) {
            if (exclusions)
                exclusions->push_back(Exclusion{ballots[j].user, "ballot proof rejected"});
            continue;
        }
        ++grid.verified_users;
        for (size_t i = 0; i < cells; ++i)
            grid.cells[i] = group.add(grid.cells[i], ballots[j].cells[i]);
    }
    return grid;
}

NoiseChains generate_noise_chains(const Group& group, const PublicKey& pk,
                                  const NoiseSet& noise, int roads, int categories,
                                  std::span<const MixerParty> mixers, int lambda_min,
                                  ExecMode mode, const Rng& rng) {
    const size_t cells = static_cast<size_t>(roads) * categories;
    NoiseChains out;
    out.chains.resize(cells);

    auto run_cell = [&](size_t idx) {
        int road = static_cast<int>(idx) / categories;
        int category = static_cast<int>(idx) % categories;
        Lineage lineage{Lineage::Purpose::noise, road, category};
        MixBatch input = initial_batch(group, noise.values, lineage);
        Rng cell_rng = rng.derive("noise-chain", idx);
        out.chains[idx] = run_chain(group, pk, input, mixers, lambda_min, cell_rng);
    };

    if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (size_t idx = 0; idx < cells; ++idx) run_cell(idx);
    } else {
        for (size_t idx = 0; idx < cells; ++idx) run_cell(idx);
    }

    std::set<int> excluded;
    for (const ChainResult& c : out.chains)
        excluded.insert(c.excluded.begin(), c.excluded.end());
    out.excluded_mixers.assign(excluded.begin(), excluded.end());
    return out;
}

TallyGrid add_noise(const Group& group, const TallyGrid& grid,
                    std::span<const MixBatch> noise_batches) {
    if (noise_batches.size() != grid.cells.size())
        throw ProtocolError("noise batch count does not match grid");
    TallyGrid out = grid;
    for (int i = 0; i < grid.roads; ++i) {
        for (int c = 0; c < grid.categories; ++c) {
            const MixBatch& batch = noise_batches[grid.index(i, c)];
            if (batch.lineage.purpose != Lineage::Purpose::noise || batch.lineage.road != i ||
                batch.lineage.category != c)
                throw ProtocolError("noise batch lineage mismatch at cell (" +
                                    std::to_string(i) + ", " + std::to_string(c) + ")");
            if (batch.stage < 1)
                throw ProtocolError("noise batch was never mixed");
            if (batch.items.empty())
                throw ProtocolError("empty noise batch");
            out.at(i, c) = group.add(grid.at(i, c), batch.items[0]);
        }
    }
    return out;
}

PetContribution make_pet_contribution(const Group& group, int authority, const Ciphertext& d,
                                      Rng& rng) {
    Scalar z = group.random_nonzero_scalar(rng);
    PetContribution out;
    out.authority = authority;
    out.blinded = Ciphertext{group.pow(d.a, z.v), group.pow(d.b, z.v)};
    Bytes context = ciphertext_bytes(d);
    append_field(context, "pet.blind");
    out.proof = prove_eq_exp(group, z, {d.a, d.b}, {out.blinded.a, out.blinded.b}, context, rng);
    return out;
}

bool verify_pet_contribution(const Group& group, const PetContribution& contribution,
                             const Ciphertext& d) {
    Bytes context = ciphertext_bytes(d);
    append_field(context, "pet.blind");
    return verify_eq_exp(group, contribution.proof, {d.a, d.b},
                         {contribution.blinded.a, contribution.blinded.b}, context);
}

bool pet_difference(const Group& group, const Ciphertext& d,
                    std::span<const KeyShare> live, int t, const Rng& rng,
                    PetTranscript* transcript, std::span<const int> corrupt_contributors) {
    if (static_cast<int>(live.size()) < t)
        throw InsufficientSharesError(static_cast<int>(live.size()), t);

    PetTranscript local;
    PetTranscript& rec = transcript ? *transcript : local;
    rec.difference = d;

    Ciphertext blinded{group.one(), group.one()};
    int accepted = 0;
    for (const KeyShare& share : live) {
        Rng blind_rng = rng.derive("pet-blind", static_cast<uint64_t>(share.index));
        PetContribution contribution = make_pet_contribution(group, share.index, d, blind_rng);
        if (std::find(corrupt_contributors.begin(), corrupt_contributors.end(), share.index) !=
            corrupt_contributors.end())
            contribution.proof.response = group.scalar_add(contribution.proof.response,
                                                           group.scalar(1));
        rec.contributions.push_back(contribution);
        if (verify_pet_contribution(group, contribution, d)) {
            blinded = group.add(blinded, contribution.blinded);
            ++accepted;
        } else {
            rec.excluded_contributors.push_back(share.index);
        }
    }
    if (accepted == 0) throw ProtocolError("no valid PET blinding contribution");
    rec.blinded = blinded;

    std::vector<std::pair<int, GroupElement>> share_values;
    for (const KeyShare& share : live) {
        Rng dec_rng = rng.derive("pet-decrypt", static_cast<uint64_t>(share.index));
        DecryptionShare ds = decryption_share(group, share, blinded, dec_rng);
        rec.shares.push_back(ds);
        if (verify_decryption_share(group, ds, share.commitment, blinded))
            share_values.emplace_back(ds.index, ds.value);
        else
            rec.excluded_decrypters.push_back(ds.index);
    }

    rec.combined = group.combine_shares(blinded, share_values, t);
    rec.equal = rec.combined == group.one();
    return rec.equal;
}

bool pet(const Group& group, const Ciphertext& e, long m, std::span<const KeyShare> live,
         int t, const Rng& rng, PetTranscript* transcript) {
    Ciphertext d = group.sub(e, group.trivial_encrypt(m));
    return pet_difference(group, d, live, t, rng, transcript);
}

bool inequality_test(const Group& group, const PublicKey& pk, const Ciphertext& e_noised,
                     long threshold, long noise_min, std::span<const KeyShare> live, int t,
                     std::span<const MixerParty> mixers, int lambda_min, Lineage cell,
                     const Rng& rng, InequalityAudit* audit) {
    if (threshold < 1) throw ConfigError("threshold must be >= 1");

    InequalityAudit local;
    InequalityAudit& rec = audit ? *audit : local;
    for (long v = noise_min; v < threshold; ++v) rec.candidates.push_back(v);

    cell.purpose = Lineage::Purpose::candidates;
    MixBatch input = initial_batch(group, rec.candidates, cell);
    Rng chain_rng = rng.derive("candidate-chain");
    rec.chain = run_chain(group, pk, input, mixers, lambda_min, chain_rng);

    // PET the noised tally against every mixed candidate; no short-circuit,
    // every candidate position is tested exactly once.
    bool matched = false;
    for (size_t idx = 0; idx < rec.chain.output.items.size(); ++idx) {
        Ciphertext d = group.sub(e_noised, rec.chain.output.items[idx]);
        PetTranscript pet_rec;
        bool equal = pet_difference(group, d, live, t, rng.derive("pet", idx), &pet_rec);
        rec.pets.push_back(std::move(pet_rec));
        matched = matched || equal;
    }
    rec.above = !matched;
    return rec.above;
}

ReportResult report(const Group& group, const PublicKey& pk, const TallyGrid& noised,
                    std::span<const long> thresholds, long noise_min,
                    std::span<const KeyShare> live, int t, std::span<const MixerParty> mixers,
                    int lambda_min, int epoch, ExecMode mode, const Rng& rng) {
    if (static_cast<int>(thresholds.size()) != noised.roads)
        throw ConfigError("need one threshold per road");

    const size_t cells = noised.cells.size();
    ReportResult out;
    out.report.epoch = epoch;
    out.cells.resize(cells);

    auto run_cell = [&](size_t idx) {
        int road = static_cast<int>(idx) / noised.categories;
        int category = static_cast<int>(idx) % noised.categories;
        Lineage cell{Lineage::Purpose::candidates, road, category};
        inequality_test(group, pk, noised.cells[idx], thresholds[road], noise_min, live, t,
                        mixers, lambda_min, cell, rng.derive("report-cell", idx),
                        &out.cells[idx]);
    };

    if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (size_t idx = 0; idx < cells; ++idx) run_cell(idx);
    } else {
        for (size_t idx = 0; idx < cells; ++idx) run_cell(idx);
    }

    std::set<int> excluded;
    for (size_t idx = 0; idx < cells; ++idx) {
        if (out.cells[idx].above)
            out.report.reported.emplace_back(static_cast<int>(idx) / noised.categories,
                                             static_cast<int>(idx) % noised.categories);
        excluded.insert(out.cells[idx].chain.excluded.begin(),
                        out.cells[idx].chain.excluded.end());
    }
    out.excluded_mixers.assign(excluded.begin(), excluded.end());
    return out;
}

std::vector<std::pair<int, int>> oracle_report(std::span<const long> tallies,
                                               std::span<const long> noise,
                                               std::span<const long> thresholds, int roads,
                                               int categories) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < roads; ++i)
        for (int c = 0; c < categories; ++c) {
            size_t idx = static_cast<size_t>(i) * categories + c;
            if (tallies[idx] + noise[idx] >= thresholds[i]) out.emplace_back(i, c);
        }
    return out;
}

}  // namespace haze
