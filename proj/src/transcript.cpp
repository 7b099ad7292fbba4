#include "haze/transcript.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace haze {

using nlohmann::json;

namespace {

json hex(const mpz_class& v) { return mpz_to_hex(v); }
mpz_class unhex(const json& j) { return mpz_from_hex(j.get<std::string>()); }

json ct_json(const Ciphertext& c) { return json::array({hex(c.a.v), hex(c.b.v)}); }
Ciphertext ct_parse(const json& j) {
    return Ciphertext{GroupElement{unhex(j[0])}, GroupElement{unhex(j[1])}};
}

json binary_proof_json(const BinaryVoteProof& p) {
    return json{{"t10", hex(p.t1_0.v)}, {"t20", hex(p.t2_0.v)}, {"t11", hex(p.t1_1.v)},
                {"t21", hex(p.t2_1.v)}, {"c0", hex(p.c0.v)},    {"c1", hex(p.c1.v)},
                {"z0", hex(p.z0.v)},    {"z1", hex(p.z1.v)}};
}

BinaryVoteProof binary_proof_parse(const json& j) {
    BinaryVoteProof p;
    p.t1_0.v = unhex(j.at("t10"));
    p.t2_0.v = unhex(j.at("t20"));
    p.t1_1.v = unhex(j.at("t11"));
    p.t2_1.v = unhex(j.at("t21"));
    p.c0.v = unhex(j.at("c0"));
    p.c1.v = unhex(j.at("c1"));
    p.z0.v = unhex(j.at("z0"));
    p.z1.v = unhex(j.at("z1"));
    return p;
}

json ballot_proof_json(const BallotProof& p) {
    json votes = json::array();
    for (const BinaryVoteProof& v : p.votes) votes.push_back(binary_proof_json(v));
    return json{{"votes", std::move(votes)}, {"sum", binary_proof_json(p.sum)}};
}

BallotProof ballot_proof_parse(const json& j) {
    BallotProof p;
    for (const json& v : j.at("votes")) p.votes.push_back(binary_proof_parse(v));
    p.sum = binary_proof_parse(j.at("sum"));
    return p;
}

json eq_exp_json(const EqExpProof& p) {
    return json{{"t1", hex(p.t1.v)},
                {"t2", hex(p.t2.v)},
                {"c", hex(p.challenge.v)},
                {"z", hex(p.response.v)}};
}

EqExpProof eq_exp_parse(const json& j) {
    EqExpProof p;
    p.t1.v = unhex(j.at("t1"));
    p.t2.v = unhex(j.at("t2"));
    p.challenge.v = unhex(j.at("c"));
    p.response.v = unhex(j.at("z"));
    return p;
}

json items_json(const std::vector<Ciphertext>& items) {
    json out = json::array();
    for (const Ciphertext& c : items) out.push_back(ct_json(c));
    return out;
}

std::vector<Ciphertext> items_parse(const json& j) {
    std::vector<Ciphertext> out;
    for (const json& c : j) out.push_back(ct_parse(c));
    return out;
}

json shuffle_proof_json(const ShuffleProof& p) {
    json shadows = json::array();
    for (const auto& s : p.shadows) shadows.push_back(items_json(s));
    json openings = json::array();
    for (const auto& o : p.openings) {
        json rands = json::array();
        for (const Scalar& r : o.rands) rands.push_back(hex(r.v));
        openings.push_back(json{{"perm", o.perm}, {"rands", std::move(rands)}});
    }
    return json{{"shadows", std::move(shadows)}, {"openings", std::move(openings)}};
}

ShuffleProof shuffle_proof_parse(const json& j) {
    ShuffleProof p;
    for (const json& s : j.at("shadows")) p.shadows.push_back(items_parse(s));
    for (const json& o : j.at("openings")) {
        ShuffleProof::Opening opening;
        opening.perm = o.at("perm").get<std::vector<uint32_t>>();
        for (const json& r : o.at("rands")) opening.rands.push_back(Scalar{unhex(r)});
        p.openings.push_back(std::move(opening));
    }
    return p;
}

json hops_json(const ChainTranscript& chain) {
    json out = json::array();
    for (const HopRecord& hop : chain.hops)
        out.push_back(json{{"mixer", hop.mixer},
                           {"accepted", hop.accepted},
                           {"output", items_json(hop.output.items)},
                           {"stage", hop.output.stage},
                           {"proof", shuffle_proof_json(hop.proof)}});
    return out;
}

json pet_json(const PetTranscript& pet) {
    json contributions = json::array();
    for (const PetContribution& c : pet.contributions)
        contributions.push_back(json{{"authority", c.authority},
                                     {"blinded", ct_json(c.blinded)},
                                     {"proof", eq_exp_json(c.proof)}});
    json shares = json::array();
    for (const DecryptionShare& s : pet.shares)
        shares.push_back(json{{"index", s.index},
                              {"value", hex(s.value.v)},
                              {"proof", eq_exp_json(s.proof)}});
    return json{{"difference", ct_json(pet.difference)},
                {"contributions", std::move(contributions)},
                {"excluded_contributors", pet.excluded_contributors},
                {"blinded", ct_json(pet.blinded)},
                {"shares", std::move(shares)},
                {"excluded_decrypters", pet.excluded_decrypters},
                {"combined", hex(pet.combined.v)},
                {"equal", pet.equal}};
}

}  // namespace

json report_to_json(const StatReport& report) {
    json reported = json::array();
    for (const auto& [road, cat] : report.reported) reported.push_back(json::array({road, cat}));
    return json{{"epoch", report.epoch}, {"reported", std::move(reported)}};
}

StatReport report_from_json(const json& j) {
    StatReport out;
    out.epoch = j.at("epoch").get<int>();
    for (const json& pair : j.at("reported"))
        out.reported.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    return out;
}

json build_transcript(const EpochRunner& epoch) {
    const ProtocolConfig& config = epoch.config();
    json categories = json::array();
    for (const CategoryRange& c : config.categories)
        categories.push_back(json::array({c.lo, c.hi}));

    json t;
    t["format"] = "haze-epoch-v1";
    t["epoch"] = epoch.state().epoch;
    t["config"] = json{{"roads", config.roads},
                       {"categories", std::move(categories)},
                       {"thresholds", config.thresholds},
                       {"delta", config.delta},
                       {"users", config.users},
                       {"authorities", config.authorities},
                       {"lambda", config.lambda},
                       {"lambda_min", config.lambda_min},
                       {"group_bits", config.group_bits},
                       {"seed", config.seed},
                       {"beacon_seed", config.beacon_seed},
                       {"threshold", config.threshold_t()}};
    t["authorities"] = epoch.authorities();

    const DkgTranscript& dkg = epoch.dkg_transcript();
    json dealings = json::array();
    for (const Dealing& d : dkg.dealings) {
        json commitments = json::array();
        for (const GroupElement& c : d.coeff_commitments) commitments.push_back(hex(c.v));
        dealings.push_back(json{{"dealer", d.dealer}, {"commitments", std::move(commitments)}});
    }
    json share_commitments = json::array();
    for (const GroupElement& c : dkg.share_commitments) share_commitments.push_back(hex(c.v));
    t["dkg"] = json{{"dealings", std::move(dealings)},
                    {"qualified", dkg.qualified},
                    {"excluded", dkg.excluded},
                    {"share_commitments", std::move(share_commitments)},
                    {"public_key", hex(dkg.public_key.h.v)}};

    json ballots = json::array();
    for (const BallotSubmission& b : epoch.submissions()) {
        bool included = true;
        std::string reason;
        for (const Exclusion& e : epoch.audit().excluded_ballots) {
            if (e.user == b.user) {
                included = false;
                reason = e.reason;
            }
        }
        json entry = json{{"user", b.user},
                          {"cells", items_json(b.cells)},
                          {"proof", ballot_proof_json(b.proof)},
                          {"included", included}};
        if (!included) entry["reason"] = reason;
        ballots.push_back(std::move(entry));
    }
    t["ballots"] = std::move(ballots);
    t["duplicates"] = epoch.audit().duplicate_users;

    t["tally"] = items_json(epoch.tally().cells);
    t["noise"] = json{{"delta", epoch.noise_set().delta}, {"values", epoch.noise_set().values}};

    json noise_chains = json::array();
    const NoiseChains& chains = epoch.noise_chains();
    for (size_t idx = 0; idx < chains.chains.size(); ++idx) {
        int road = static_cast<int>(idx) / config.category_count();
        int cat = static_cast<int>(idx) % config.category_count();
        noise_chains.push_back(json{{"road", road},
                                    {"category", cat},
                                    {"hops", hops_json(chains.chains[idx].transcript)}});
    }
    t["noise_chains"] = std::move(noise_chains);
    t["noised_tally"] = items_json(epoch.noised_tally().cells);

    json cells = json::array();
    const ReportResult& rep = epoch.report_result();
    for (size_t idx = 0; idx < rep.cells.size(); ++idx) {
        const InequalityAudit& cell = rep.cells[idx];
        int road = static_cast<int>(idx) / config.category_count();
        int cat = static_cast<int>(idx) % config.category_count();
        json pets = json::array();
        for (const PetTranscript& pet : cell.pets) pets.push_back(pet_json(pet));
        cells.push_back(json{{"road", road},
                             {"category", cat},
                             {"candidates", cell.candidates},
                             {"hops", hops_json(cell.chain.transcript)},
                             {"pets", std::move(pets)},
                             {"above", cell.above}});
    }
    t["cells"] = std::move(cells);
    t["report"] = report_to_json(epoch.report());

    json envelopes = json::array();
    for (const Envelope& env : epoch.bus().log()) {
        json e = json{{"sender", env.sender},
                      {"phase", phase_name(env.phase)},
                      {"recipient", env.recipient},
                      {"private", env.private_payload},
                      {"signature", env.signature},
                      {"length", env.payload.size()}};
        if (!env.private_payload) e["payload"] = to_hex(env.payload);
        envelopes.push_back(std::move(e));
    }
    t["server_log"] = std::move(envelopes);
    return t;
}

namespace {

// Replays a chain's hop records: accepted hops must verify, rejected hops
// must not, and the surviving batch is returned.
MixBatch check_chain(const Group& group, const PublicKey& pk, const json& hops,
                     const MixBatch& input, int lambda_min, const std::string& label,
                     VerifyResult& result) {
    MixBatch current = input;
    for (size_t h = 0; h < hops.size(); ++h) {
        const json& hop = hops[h];
        MixBatch output;
        output.items = items_parse(hop.at("output"));
        output.stage = hop.at("stage").get<int>();
        output.lineage = current.lineage;
        ShuffleProof proof = shuffle_proof_parse(hop.at("proof"));
        bool accepted = hop.at("accepted").get<bool>();
        bool verifies = verify_mix(group, pk, current, output, proof, lambda_min);
        if (accepted && !verifies)
            result.fail(label + " hop " + std::to_string(h) + " by authority " +
                        std::to_string(hop.at("mixer").get<int>()) +
                        ": accepted mix fails verification");
        if (!accepted && verifies)
            result.fail(label + " hop " + std::to_string(h) + " by authority " +
                        std::to_string(hop.at("mixer").get<int>()) +
                        ": rejected mix verifies (honest authority excluded)");
        if (accepted) current = std::move(output);
    }
    return current;
}

}  // namespace

VerifyResult verify_transcript(const json& t) {
    VerifyResult result;
    if (t.value("format", "") != std::string("haze-epoch-v1")) {
        result.fail("unknown transcript format");
        return result;
    }

    const json& config = t.at("config");
    Group group(preset_params(config.at("group_bits").get<int>()));
    const int roads = config.at("roads").get<int>();
    const int categories = config.at("categories").size();
    const int tdec = config.at("threshold").get<int>();
    const int lambda_min = config.at("lambda_min").get<int>();
    std::vector<long> thresholds = config.at("thresholds").get<std::vector<long>>();
    PublicKey pk{GroupElement{unhex(t.at("dkg").at("public_key"))}};

    // Key material: public key and share commitments against the dealings.
    {
        const json& dkg = t.at("dkg");
        GroupElement expected_pk = group.one();
        std::vector<std::vector<GroupElement>> commitment_sets;
        for (const json& d : dkg.at("dealings")) {
            std::vector<GroupElement> commitments;
            for (const json& c : d.at("commitments")) commitments.push_back(GroupElement{unhex(c)});
            expected_pk = group.mul(expected_pk, commitments[0]);
            commitment_sets.push_back(std::move(commitments));
        }
        if (!(expected_pk == pk.h))
            result.fail("public key does not match qualified dealings");
        const json& share_commitments = dkg.at("share_commitments");
        for (size_t j = 0; j < share_commitments.size(); ++j) {
            GroupElement expected = group.one();
            for (const auto& commitments : commitment_sets)
                expected = group.mul(expected,
                                     feldman_eval(group, commitments, static_cast<int>(j) + 1));
            if (!(expected == GroupElement{unhex(share_commitments[j])}))
                result.fail("share commitment for authority " + std::to_string(j + 1) +
                            " does not match dealings");
        }
    }

    // Ballots and the running tally.
    std::vector<Ciphertext> tally(static_cast<size_t>(roads) * categories,
                                  group.trivial_encrypt(0));
    for (const json& b : t.at("ballots")) {
        int user = b.at("user").get<int>();
        std::vector<Ciphertext> cells = items_parse(b.at("cells"));
        BallotProof proof = ballot_proof_parse(b.at("proof"));
        bool included = b.at("included").get<bool>();
        bool verifies = cells.size() == tally.size() && verify_ballot(group, pk, cells, proof);
        if (included && !verifies)
            result.fail("ballot of user " + std::to_string(user) +
                        " included but proof fails");
        if (!included && verifies)
            result.fail("ballot of user " + std::to_string(user) +
                        " excluded but proof verifies");
        if (included && verifies)
            for (size_t i = 0; i < tally.size(); ++i) tally[i] = group.add(tally[i], cells[i]);
    }
    std::vector<Ciphertext> stated_tally = items_parse(t.at("tally"));
    if (!(stated_tally == tally)) result.fail("tally does not equal sum of included ballots");

    // Noise chains and the noised tally.
    std::vector<long> noise_values = t.at("noise").at("values").get<std::vector<long>>();
    std::vector<Ciphertext> noised(tally.size());
    for (const json& chain : t.at("noise_chains")) {
        int road = chain.at("road").get<int>();
        int cat = chain.at("category").get<int>();
        size_t idx = static_cast<size_t>(road) * categories + cat;
        Lineage lineage{Lineage::Purpose::noise, road, cat};
        MixBatch input = initial_batch(group, noise_values, lineage);
        std::string label =
            "noise chain (" + std::to_string(road) + "," + std::to_string(cat) + ")";
        MixBatch output = check_chain(group, pk, chain.at("hops"), input, lambda_min, label,
                                      result);
        if (output.stage == 0) {
            result.fail(label + ": no accepted hops");
            continue;
        }
        noised[idx] = group.add(stated_tally[idx], output.items[0]);
    }
    std::vector<Ciphertext> stated_noised = items_parse(t.at("noised_tally"));
    if (!(stated_noised == noised))
        result.fail("noised tally does not equal tally plus first mixed noise");

    // Per-cell candidate chains, PETs, and the reported set.
    std::vector<std::pair<int, int>> expected_report;
    for (const json& cell : t.at("cells")) {
        int road = cell.at("road").get<int>();
        int cat = cell.at("category").get<int>();
        size_t idx = static_cast<size_t>(road) * categories + cat;
        std::string label = "cell (" + std::to_string(road) + "," + std::to_string(cat) + ")";

        std::vector<long> candidates = cell.at("candidates").get<std::vector<long>>();
        std::vector<long> expected_candidates;
        for (long v = noise_values.front(); v < thresholds[road]; ++v)
            expected_candidates.push_back(v);
        if (candidates != expected_candidates)
            result.fail(label + ": candidate set is not {noise_min..T-1}");

        Lineage lineage{Lineage::Purpose::candidates, road, cat};
        MixBatch input = initial_batch(group, candidates, lineage);
        MixBatch output = check_chain(group, pk, cell.at("hops"), input, lambda_min,
                                      label + " candidate chain", result);
        if (output.stage == 0) {
            result.fail(label + ": candidate chain has no accepted hops");
            continue;
        }

        const json& pets = cell.at("pets");
        if (pets.size() != output.items.size()) {
            result.fail(label + ": PET count does not match candidate count");
            continue;
        }
        bool matched = false;
        for (size_t k = 0; k < pets.size(); ++k) {
            const json& pet = pets[k];
            std::string plabel = label + " pet " + std::to_string(k);
            Ciphertext d = ct_parse(pet.at("difference"));
            if (!(d == group.sub(stated_noised[idx], output.items[k])))
                result.fail(plabel + ": difference is not noised tally minus candidate");

            Ciphertext blinded{group.one(), group.one()};
            for (const json& cj : pet.at("contributions")) {
                PetContribution contribution;
                contribution.authority = cj.at("authority").get<int>();
                contribution.blinded = ct_parse(cj.at("blinded"));
                contribution.proof = eq_exp_parse(cj.at("proof"));
                if (verify_pet_contribution(group, contribution, d))
                    blinded = group.add(blinded, contribution.blinded);
                else
                    result.fail(plabel + ": blinding by authority " +
                                std::to_string(contribution.authority) +
                                " has an invalid proof");
            }
            if (!(blinded == ct_parse(pet.at("blinded"))))
                result.fail(plabel + ": blinded product mismatch");

            std::vector<std::pair<int, GroupElement>> share_values;
            for (const json& sj : pet.at("shares")) {
                DecryptionShare ds;
                ds.index = sj.at("index").get<int>();
                ds.value = GroupElement{unhex(sj.at("value"))};
                ds.proof = eq_exp_parse(sj.at("proof"));
                GroupElement commitment{
                    unhex(t.at("dkg").at("share_commitments")[ds.index - 1])};
                if (verify_decryption_share(group, ds, commitment, blinded))
                    share_values.emplace_back(ds.index, ds.value);
                else
                    result.fail(plabel + ": decryption share of authority " +
                                std::to_string(ds.index) + " has an invalid proof");
            }
            if (static_cast<int>(share_values.size()) < tdec) {
                result.fail(plabel + ": fewer than threshold valid decryption shares");
                continue;
            }
            GroupElement combined = group.combine_shares(blinded, share_values, tdec);
            if (!(combined == GroupElement{unhex(pet.at("combined"))}))
                result.fail(plabel + ": combined decryption mismatch");
            bool equal = combined == group.one();
            if (equal != pet.at("equal").get<bool>())
                result.fail(plabel + ": equality verdict mismatch");
            matched = matched || equal;
        }
        bool above = !matched;
        if (above != cell.at("above").get<bool>())
            result.fail(label + ": above-threshold verdict mismatch");
        if (above) expected_report.emplace_back(road, cat);
    }

    std::sort(expected_report.begin(), expected_report.end());
    StatReport stated = report_from_json(t.at("report"));
    if (stated.reported != expected_report)
        result.fail("reported set does not match per-cell verdicts");
    return result;
}

}  // namespace haze
