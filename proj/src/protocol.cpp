#include "haze/protocol.hpp"

#include <algorithm>
#include <cstdio>

namespace haze {

int ProtocolConfig::threshold_t() const {
    int def = authorities / 2 + 1;  // strict majority
    if (threshold_override) {
        if (*threshold_override < 1 || *threshold_override > def)
            throw ConfigError("threshold override must be in [1, " + std::to_string(def) + "]");
        return *threshold_override;
    }
    return def;
}

void ProtocolConfig::validate() const {
    if (roads < 1) throw ConfigError("need at least one road segment");
    if (categories.empty()) throw ConfigError("need at least one observation category");
    for (size_t c = 0; c < categories.size(); ++c) {
        if (!(categories[c].lo < categories[c].hi))
            throw ConfigError("category " + std::to_string(c) + " is empty");
        if (c > 0 && categories[c].lo < categories[c - 1].hi)
            throw ConfigError("categories overlap or are out of order");
    }
    if (static_cast<int>(thresholds.size()) != roads)
        throw ConfigError("need one threshold per road segment");
    for (long t : thresholds)
        if (t < 1) throw ConfigError("thresholds must be >= 1");
    if (users < 1) throw ConfigError("need at least one user");
    if (authorities < 1) throw ConfigError("need at least one authority");
    if (authorities > users) throw ConfigError("authority count exceeds user count");
    if (lambda_min < 1) throw ConfigError("lambda_min must be >= 1");
    if (lambda < lambda_min) throw ConfigError("lambda below lambda_min");
    build_noise_set(delta);          // validates delta
    preset_params(group_bits);       // validates preset label
    threshold_t();                   // validates override range
    if (threshold_override)
        std::fprintf(stderr,
                     "warning: decryption threshold lowered to %d (default %d); "
                     "test use only\n",
                     *threshold_override, authorities / 2 + 1);
}

std::string phase_name(Phase phase) {
    switch (phase) {
        case Phase::Setup: return "setup";
        case Phase::Upload: return "upload";
        case Phase::Aggregation: return "aggregation";
        case Phase::Done: return "done";
    }
    return "?";
}

void Bus::send(int sender, Phase phase, Bytes payload, int recipient, bool private_payload) {
    Envelope env;
    env.sender = sender;
    env.phase = phase;
    env.recipient = recipient;
    env.private_payload = private_payload;
    env.payload = std::move(payload);

    Bytes sig_input;
    append_field(sig_input, "haze.sig");
    append_u64(sig_input, static_cast<uint64_t>(sender));
    append_u32(sig_input, static_cast<uint32_t>(phase));
    append_field(sig_input, env.payload);
    uint8_t digest[32];
    sha256(sig_input, digest);
    env.signature = to_hex(std::span<const uint8_t>(digest, 16));
    log_.push_back(std::move(env));
}

std::vector<const Bytes*> Bus::server_visible_payloads() const {
    std::vector<const Bytes*> out;
    for (const Envelope& env : log_)
        if (!env.private_payload) out.push_back(&env.payload);
    return out;
}

std::vector<int> select_authorities(uint64_t beacon_seed, int users, int count) {
    if (count > users) throw ConfigError("cannot select more authorities than users");
    std::vector<std::pair<Bytes, int>> keyed;
    keyed.reserve(users);
    for (int id = 0; id < users; ++id) {
        Bytes t;
        append_field(t, "haze.beacon");
        append_u64(t, beacon_seed);
        append_u64(t, static_cast<uint64_t>(id));
        Bytes digest(32);
        sha256(t, digest.data());
        keyed.emplace_back(std::move(digest), id);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(keyed[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Index of the category containing value, or nullopt (abstain).
std::optional<int> category_of(const ProtocolConfig& config, double value) {
    for (size_t c = 0; c < config.categories.size(); ++c)
        if (value >= config.categories[c].lo && value < config.categories[c].hi)
            return static_cast<int>(c);
    return std::nullopt;
}

void check_observation(const ProtocolConfig& config, const UserObservation& obs) {
    if (obs.road < 0 || obs.road >= config.roads)
        throw ConfigError("observation road " + std::to_string(obs.road) + " out of range");
    if (obs.user < 0 || obs.user >= config.users)
        throw ConfigError("observation user " + std::to_string(obs.user) + " out of range");
}

}  // namespace

BallotWithProof build_ballot(const Group& group, const PublicKey& pk,
                             const UserObservation& obs, const ProtocolConfig& config,
                             Rng& rng) {
    check_observation(config, obs);
    const int n = config.roads, c = config.category_count();
    std::optional<int> cat = category_of(config, obs.value);
    std::optional<size_t> real;
    if (cat) real = static_cast<size_t>(obs.road) * c + *cat;

    BallotWithProof out;
    out.ballot.roads = n;
    out.ballot.categories = c;
    std::vector<Scalar> rands;
    rands.reserve(static_cast<size_t>(n) * c);
    for (size_t i = 0; i < static_cast<size_t>(n) * c; ++i) {
        rands.push_back(group.random_scalar(rng));
        long m = (real && *real == i) ? 1 : 0;
        out.ballot.cells.push_back(group.encrypt(pk, m, rands.back()));
    }
    out.proof = prove_ballot(group, pk, out.ballot.cells, real, rands, rng);
    return out;
}

BallotWithProof build_malformed_ballot(const Group& group, const PublicKey& pk,
                                       const UserObservation& obs,
                                       const ProtocolConfig& config, BallotFault fault,
                                       Rng& rng) {
    check_observation(config, obs);
    const int n = config.roads, c = config.category_count();
    const size_t cells = static_cast<size_t>(n) * c;
    int cat = category_of(config, obs.value).value_or(0);
    size_t real = static_cast<size_t>(obs.road) * c + cat;

    if (fault == BallotFault::proof_mismatch) {
        BallotWithProof out = build_ballot(group, pk, obs, config, rng);
        out.ballot.cells[0] = group.reencrypt(pk, out.ballot.cells[0], group.random_scalar(rng));
        return out;
    }

    std::vector<long> votes(cells, 0);
    switch (fault) {
        case BallotFault::vote_two:
            votes[real] = 2;
            break;
        case BallotFault::two_roads: {
            if (n < 2) throw ConfigError("two_roads fault needs at least two roads");
            votes[real] = 1;
            size_t other = static_cast<size_t>((obs.road + 1) % n) * c + cat;
            votes[other] = 1;
            break;
        }
        case BallotFault::two_categories: {
            if (c < 2) throw ConfigError("two_categories fault needs at least two categories");
            votes[real] = 1;
            size_t other = static_cast<size_t>(obs.road) * c + (cat + 1) % c;
            votes[other] = 1;
            break;
        }
        case BallotFault::proof_mismatch:
            break;  // handled above
    }

    BallotWithProof out;
    out.ballot.roads = n;
    out.ballot.categories = c;
    std::vector<Scalar> rands;
    rands.reserve(cells);
    Scalar r_sum = group.scalar(0);
    Ciphertext sum = group.trivial_encrypt(0);
    for (size_t i = 0; i < cells; ++i) {
        rands.push_back(group.random_scalar(rng));
        out.ballot.cells.push_back(group.encrypt(pk, votes[i], rands.back()));
        r_sum = group.scalar_add(r_sum, rands.back());
        sum = group.add(sum, out.ballot.cells[i]);
    }
    // The cheater claims every vote and the total are in {0,1}; proofs over
    // the false statements cannot verify.
    for (size_t i = 0; i < cells; ++i) {
        int claimed = votes[i] > 0 ? 1 : 0;
        out.proof.votes.push_back(
            prove_binary(group, pk, out.ballot.cells[i], claimed, rands[i], rng));
    }
    out.proof.sum = prove_binary(group, pk, sum, 1, r_sum, rng);
    return out;
}

Bytes serialize_ballot_payload(const Ballot& ballot, const BallotProof& proof) {
    Bytes out;
    append_field(out, "ballot");
    append_u32(out, static_cast<uint32_t>(ballot.roads));
    append_u32(out, static_cast<uint32_t>(ballot.categories));
    for (const Ciphertext& c : ballot.cells) {
        append_mpz(out, c.a.v);
        append_mpz(out, c.b.v);
    }
    auto put_binary = [&out](const BinaryVoteProof& p) {
        append_mpz(out, p.t1_0.v);
        append_mpz(out, p.t2_0.v);
        append_mpz(out, p.t1_1.v);
        append_mpz(out, p.t2_1.v);
        append_mpz(out, p.c0.v);
        append_mpz(out, p.c1.v);
        append_mpz(out, p.z0.v);
        append_mpz(out, p.z1.v);
    };
    append_u32(out, static_cast<uint32_t>(proof.votes.size()));
    for (const BinaryVoteProof& p : proof.votes) put_binary(p);
    put_binary(proof.sum);
    return out;
}

Bytes serialize_batch_payload(const MixBatch& batch) {
    Bytes out;
    append_field(out, "batch");
    append_u32(out, batch.lineage.purpose == Lineage::Purpose::noise ? 0 : 1);
    append_u32(out, static_cast<uint32_t>(batch.lineage.road));
    append_u32(out, static_cast<uint32_t>(batch.lineage.category));
    append_u32(out, static_cast<uint32_t>(batch.stage));
    for (const Ciphertext& c : batch.items) {
        append_mpz(out, c.a.v);
        append_mpz(out, c.b.v);
    }
    return out;
}

Bytes serialize_report_payload(const StatReport& report) {
    Bytes out;
    append_field(out, "report");
    append_u32(out, static_cast<uint32_t>(report.epoch));
    for (const auto& [road, cat] : report.reported) {
        append_u32(out, static_cast<uint32_t>(road));
        append_u32(out, static_cast<uint32_t>(cat));
    }
    return out;
}

EpochRunner::EpochRunner(ProtocolConfig config, FaultSchedule faults, int epoch_id)
    : config_(std::move(config)),
      faults_(std::move(faults)),
      rng_(Rng(config_.seed).derive("epoch", static_cast<uint64_t>(epoch_id))) {
    config_.validate();
    for (const auto& [id, phase] : faults_.drop_authority) {
        (void)phase;
        if (id < 0 || id >= config_.users)
            throw ConfigError("fault names unknown party " + std::to_string(id));
    }
    for (const auto& [id, mode] : faults_.malform_ballot) {
        (void)mode;
        if (id < 0 || id >= config_.users)
            throw ConfigError("fault names unknown party " + std::to_string(id));
    }
    for (int id : faults_.tamper_mix)
        if (id < 0 || id >= config_.users)
            throw ConfigError("fault names unknown party " + std::to_string(id));
    for (int id : faults_.corrupt_dealing)
        if (id < 0 || id >= config_.users)
            throw ConfigError("fault names unknown party " + std::to_string(id));
    group_ = std::make_unique<Group>(preset_params(config_.group_bits));
    state_.epoch = epoch_id;
}

void EpochRunner::require_phase(Phase expected, const char* op) const {
    if (state_.current != expected)
        throw ProtocolError(std::string(op) + " called in phase " +
                            phase_name(state_.current) + ", expected " +
                            phase_name(expected));
}

bool EpochRunner::dropped_at_or_before(int user, Phase phase) const {
    auto it = faults_.drop_authority.find(user);
    return it != faults_.drop_authority.end() &&
           static_cast<int>(it->second) <= static_cast<int>(phase);
}

std::vector<int> EpochRunner::live_slots() const {
    std::vector<int> slots;
    for (size_t k = 0; k < authority_users_.size(); ++k) {
        int user = authority_users_[k];
        if (std::find(state_.live_authorities.begin(), state_.live_authorities.end(), user) !=
            state_.live_authorities.end())
            slots.push_back(static_cast<int>(k) + 1);
    }
    return slots;
}

std::vector<MixerParty> EpochRunner::make_mixers(const std::vector<int>& slots) const {
    std::vector<MixerParty> mixers;
    const Group& group = *group_;
    const PublicKey pk = public_key_;
    int lambda = config_.lambda;
    for (int slot : slots) {
        int user = authority_users_[slot - 1];
        bool cheat = faults_.tamper_mix.count(user) > 0;
        mixers.push_back(MixerParty{
            slot, [&group, pk, lambda, cheat](const MixBatch& batch, Rng& rng) {
                return cheat ? tampered_mix(group, pk, batch, lambda, rng)
                             : mix(group, pk, batch, lambda, rng);
            }});
    }
    return mixers;
}

void EpochRunner::run_setup() {
    require_phase(Phase::Setup, "run_setup");
    authority_users_ = select_authorities(config_.beacon_seed, config_.users,
                                          config_.authorities);

    // Authorities dropped during setup never produce a dealing.
    std::vector<Dealing> dealings;
    const int A = config_.authorities;
    const int t = config_.threshold_t();
    for (int slot = 1; slot <= A; ++slot) {
        int user = authority_users_[slot - 1];
        if (dropped_at_or_before(user, Phase::Setup)) continue;
        Rng dealer_rng = rng_.derive("deal", static_cast<uint64_t>(slot));
        Dealing d = deal(*group_, slot, A, t, dealer_rng);
        if (faults_.corrupt_dealing.count(user) > 0)
            d.shares_out[0] = group_->scalar_add(d.shares_out[0], group_->scalar(1));

        Bytes commit_payload;
        append_field(commit_payload, "dealing");
        append_u32(commit_payload, static_cast<uint32_t>(slot));
        for (const GroupElement& c : d.coeff_commitments) append_mpz(commit_payload, c.v);
        bus_.send(user, Phase::Setup, std::move(commit_payload));
        for (int j = 1; j <= A; ++j) {
            Bytes share_payload;
            append_field(share_payload, "dealing-share");
            append_mpz(share_payload, d.shares_out[j - 1].v);
            bus_.send(user, Phase::Setup, std::move(share_payload),
                      authority_users_[j - 1], /*private=*/true);
        }
        dealings.push_back(std::move(d));
    }

    DkgResult dkg = finalize(*group_, dealings, A, t);
    dkg_transcript_ = std::move(dkg.transcript);
    key_shares_ = std::move(dkg.key_shares);
    public_key_ = dkg_transcript_.public_key;
    audit_.dkg_excluded = dkg_transcript_.excluded;

    Bytes pk_payload;
    append_field(pk_payload, "public-key");
    append_mpz(pk_payload, public_key_.h.v);
    bus_.send(-1, Phase::Setup, std::move(pk_payload));

    state_.live_authorities.clear();
    for (int slot = 1; slot <= A; ++slot) {
        int user = authority_users_[slot - 1];
        bool excluded = std::find(dkg_transcript_.excluded.begin(),
                                  dkg_transcript_.excluded.end(),
                                  slot) != dkg_transcript_.excluded.end();
        if (!excluded && !dropped_at_or_before(user, Phase::Setup))
            state_.live_authorities.push_back(user);
    }
    state_.current = Phase::Upload;
}

void EpochRunner::run_upload(std::span<const UserObservation> observations) {
    require_phase(Phase::Upload, "run_upload");
    std::erase_if(state_.live_authorities,
                  [this](int user) { return dropped_at_or_before(user, Phase::Upload); });
    std::set<int> seen;
    for (const UserObservation& obs : observations) {
        if (dropped_at_or_before(obs.user, Phase::Upload)) continue;
        Rng user_rng = rng_.derive("user", static_cast<uint64_t>(obs.user));

        auto fault = faults_.malform_ballot.find(obs.user);
        BallotWithProof bwp =
            fault == faults_.malform_ballot.end()
                ? build_ballot(*group_, public_key_, obs, config_, user_rng)
                : build_malformed_ballot(*group_, public_key_, obs, config_, fault->second,
                                         user_rng);
        bus_.send(obs.user, Phase::Upload, serialize_ballot_payload(bwp.ballot, bwp.proof));

        // Server relays everything; authorities accept one ballot per signer.
        if (seen.insert(obs.user).second) {
            submissions_.push_back(
                BallotSubmission{obs.user, std::move(bwp.ballot.cells), std::move(bwp.proof)});
        } else {
            audit_.duplicate_users.push_back(obs.user);
        }

        if (faults_.duplicate_ballot.count(obs.user) > 0) {
            Rng dup_rng = rng_.derive("user-dup", static_cast<uint64_t>(obs.user));
            BallotWithProof dup = build_ballot(*group_, public_key_, obs, config_, dup_rng);
            bus_.send(obs.user, Phase::Upload, serialize_ballot_payload(dup.ballot, dup.proof));
            audit_.duplicate_users.push_back(obs.user);
        }
    }
    state_.current = Phase::Aggregation;
}

StatReport EpochRunner::run_aggregation(ExecMode mode) {
    require_phase(Phase::Aggregation, "run_aggregation");

    std::erase_if(state_.live_authorities,
                  [this](int user) { return dropped_at_or_before(user, Phase::Aggregation); });
    std::vector<int> slots = live_slots();
    int min_live = (config_.authorities + 1) / 2;
    if (static_cast<int>(slots.size()) < min_live)
        throw ProtocolError("epoch abort: " + std::to_string(slots.size()) + " of " +
                            std::to_string(config_.authorities) +
                            " authorities live, need at least " + std::to_string(min_live));
    const int t = config_.threshold_t();

    // Drop ballots with invalid proofs, homomorphically sum the rest.
    tally_ = aggregate_votes(*group_, public_key_, submissions_, config_.roads,
                             config_.category_count(), mode, &audit_.excluded_ballots);

    // One verified mix chain over the noise set per cell.
    noise_set_ = build_noise_set(config_.delta);
    std::vector<MixerParty> mixers = make_mixers(slots);
    noise_chains_ = generate_noise_chains(*group_, public_key_, noise_set_, config_.roads,
                                          config_.category_count(), mixers,
                                          config_.lambda_min, mode, rng_.derive("noise"));
    for (const ChainResult& chain : noise_chains_.chains)
        for (const HopRecord& hop : chain.transcript.hops)
            bus_.send(authority_users_[hop.mixer - 1], Phase::Aggregation,
                      serialize_batch_payload(hop.output));
    for (int slot : noise_chains_.excluded_mixers) {
        audit_.excluded_mixers.push_back(slot);
        std::erase(state_.live_authorities, authority_users_[slot - 1]);
    }

    // Perturb each tally with the first item of its mixed batch.
    std::vector<MixBatch> batches;
    batches.reserve(noise_chains_.chains.size());
    for (const ChainResult& chain : noise_chains_.chains) batches.push_back(chain.output);
    noised_ = add_noise(*group_, tally_, batches);

    // Threshold-test every cell and assemble the report.
    slots = live_slots();
    std::vector<KeyShare> live_shares;
    for (int slot : slots) live_shares.push_back(key_shares_[slot - 1]);
    std::vector<MixerParty> report_mixers = make_mixers(slots);
    report_ = haze::report(*group_, public_key_, noised_, config_.thresholds,
                           noise_set_.min_value(), live_shares, t, report_mixers,
                           config_.lambda_min, state_.epoch, mode, rng_.derive("report"));
    for (const InequalityAudit& cell : report_.cells) {
        for (const HopRecord& hop : cell.chain.transcript.hops)
            bus_.send(authority_users_[hop.mixer - 1], Phase::Aggregation,
                      serialize_batch_payload(hop.output));
        for (const PetTranscript& pet : cell.pets) {
            for (const PetContribution& contribution : pet.contributions) {
                Bytes payload;
                append_field(payload, "pet-blind");
                append_mpz(payload, contribution.blinded.a.v);
                append_mpz(payload, contribution.blinded.b.v);
                bus_.send(authority_users_[contribution.authority - 1], Phase::Aggregation,
                          std::move(payload));
            }
            for (const DecryptionShare& ds : pet.shares) {
                Bytes payload;
                append_field(payload, "pet-share");
                append_mpz(payload, ds.value.v);
                bus_.send(authority_users_[ds.index - 1], Phase::Aggregation,
                          std::move(payload));
            }
        }
    }
    for (int slot : report_.excluded_mixers) {
        if (std::find(audit_.excluded_mixers.begin(), audit_.excluded_mixers.end(), slot) ==
            audit_.excluded_mixers.end())
            audit_.excluded_mixers.push_back(slot);
        std::erase(state_.live_authorities, authority_users_[slot - 1]);
    }

    // Omniscient accounting: which noise value landed at position 0.
    audit_.realized_noise.clear();
    for (const ChainResult& chain : noise_chains_.chains) {
        long value = 0;
        for (size_t i = 0; i < chain.composed_perm.size(); ++i)
            if (chain.composed_perm[i] == 0) value = noise_set_.values[i];
        audit_.realized_noise.push_back(value);
    }

    bus_.send(state_.live_authorities.empty() ? -1 : state_.live_authorities.front(),
              Phase::Aggregation, serialize_report_payload(report_.report));
    state_.current = Phase::Done;
    report_ready_ = true;
    return report_.report;
}

StatReport EpochRunner::run_all(std::span<const UserObservation> observations, ExecMode mode) {
    run_setup();
    run_upload(observations);
    return run_aggregation(mode);
}

}  // namespace haze
