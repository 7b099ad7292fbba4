#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "haze/protocol.hpp"
#include "haze/transcript.hpp"
#include "test_util.hpp"

using namespace haze;

namespace {

ProtocolConfig small_config() {
    ProtocolConfig config;
    config.roads = 2;
    config.categories = {{0, 30}, {30, 60}};
    config.thresholds = {2, 2};
    config.delta = 0.5;
    config.users = 6;
    config.authorities = 3;
    config.lambda = 4;
    config.lambda_min = 1;
    config.group_bits = 512;
    config.seed = 11;
    config.beacon_seed = 7;
    return config;
}

std::vector<UserObservation> small_observations() {
    // tallies: (0,0)=3, (0,1)=1, (1,0)=2, (1,1)=0
    return {
        {0, 0, 10}, {1, 0, 12}, {2, 0, 25}, {3, 0, 40}, {4, 1, 5}, {5, 1, 15},
    };
}

std::vector<long> observation_tallies(const ProtocolConfig& config,
                                      std::span<const UserObservation> observations) {
    std::vector<long> tallies(static_cast<size_t>(config.roads) * config.category_count(), 0);
    for (const UserObservation& obs : observations)
        for (int c = 0; c < config.category_count(); ++c)
            if (obs.value >= config.categories[c].lo && obs.value < config.categories[c].hi) {
                ++tallies[static_cast<size_t>(obs.road) * config.category_count() + c];
                break;
            }
    return tallies;
}

}  // namespace

TEST_CASE("authority selection is public and fair") {
    CHECK(select_authorities(42, 10, 4) == select_authorities(42, 10, 4));
    CHECK(select_authorities(1, 5, 5) == std::vector<int>{0, 1, 2, 3, 4});
    CHECK_THROWS_AS(select_authorities(1, 3, 4), ConfigError);

    // each user selected about A/M of the time
    const int users = 10, picked = 3, beacons = 1000;
    std::vector<int> hits(users, 0);
    for (int b = 0; b < beacons; ++b)
        for (int id : select_authorities(b, users, picked)) ++hits[id];
    double expected = static_cast<double>(picked) / users * beacons;
    double sigma = std::sqrt(beacons * 0.3 * 0.7);
    for (int id = 0; id < users; ++id) {
        CHECK(hits[id] > expected - 3 * sigma);
        CHECK(hits[id] < expected + 3 * sigma);
    }
}

TEST_CASE("ballot construction matches the voting rule") {
    static Group g(preset_params(512));
    Rng rng(99);
    auto key = testutil::make_threshold_key(g, 1, 1, rng);  // single-share decryption oracle

    ProtocolConfig probe = small_config();
    probe.categories = {{0, 30}, {30, 60}, {60, 90}};
    probe.thresholds = {2, 2};
    UserObservation obs{0, 0, 18};  // 18 mph -> category 0 of road 0
    Rng brng(100);
    BallotWithProof bwp = build_ballot(g, key.pk, obs, probe, brng);
    CHECK(verify_ballot(g, key.pk, bwp.ballot.cells, bwp.proof));
    std::vector<long> plain;
    for (const Ciphertext& c : bwp.ballot.cells)
        plain.push_back(testutil::decrypt_small(g, key, c, 0, 1));
    CHECK(plain == std::vector<long>{1, 0, 0, 0, 0, 0});  // {1,0,0} on road 0, zeros elsewhere

    UserObservation cat1{0, 0, 42};
    BallotWithProof b2 = build_ballot(g, key.pk, cat1, probe, brng);
    plain.clear();
    for (const Ciphertext& c : b2.ballot.cells)
        plain.push_back(testutil::decrypt_small(g, key, c, 0, 1));
    CHECK(plain == std::vector<long>{0, 1, 0, 0, 0, 0});

    // abstain: value outside all categories
    UserObservation fast{0, 1, 200};
    BallotWithProof b3 = build_ballot(g, key.pk, fast, probe, brng);
    CHECK(verify_ballot(g, key.pk, b3.ballot.cells, b3.proof));
    for (const Ciphertext& c : b3.ballot.cells)
        CHECK(testutil::decrypt_small(g, key, c, 0, 1) == 0);

    UserObservation bad_road{0, 9, 18};
    CHECK_THROWS_AS(build_ballot(g, key.pk, bad_road, probe, brng), ConfigError);
}

TEST_CASE("setup: dkg over the bus with fault injection") {
    ProtocolConfig config = small_config();
    config.users = 8;
    config.authorities = 4;

    SUBCASE("honest setup establishes a key and advances the phase") {
        EpochRunner runner(config);
        runner.run_setup();
        CHECK(runner.state().current == Phase::Upload);
        CHECK(runner.state().live_authorities.size() == 4);
        CHECK(runner.dkg_transcript().qualified.size() == 4);
    }

    SUBCASE("one corrupt dealer is excluded, key still established") {
        FaultSchedule faults;
        faults.corrupt_dealing.insert(select_authorities(config.beacon_seed, 8, 4)[1]);
        EpochRunner runner(config, faults);
        runner.run_setup();
        CHECK(runner.dkg_transcript().qualified.size() == 3);
        CHECK(runner.state().live_authorities.size() == 3);
    }

    SUBCASE("three corrupt dealers of four abort the epoch") {
        FaultSchedule faults;
        auto picked = select_authorities(config.beacon_seed, 8, 4);
        faults.corrupt_dealing = {picked[0], picked[1], picked[2]};
        EpochRunner runner(config, faults);
        CHECK_THROWS_AS(runner.run_setup(), DkgFailureError);
    }

    SUBCASE("unknown party in a fault is a configuration error") {
        FaultSchedule faults;
        faults.tamper_mix.insert(99);
        CHECK_THROWS_AS(EpochRunner(config, faults), ConfigError);
    }
}

TEST_CASE("upload: relay, dedup, malformed ballots") {
    ProtocolConfig config = small_config();
    auto observations = small_observations();

    SUBCASE("five honest users, five submissions") {
        EpochRunner runner(config);
        runner.run_setup();
        runner.run_upload(observations);
        CHECK(runner.submissions().size() == observations.size());
        CHECK(runner.state().current == Phase::Aggregation);
    }

    SUBCASE("double submission: first wins") {
        FaultSchedule faults;
        faults.duplicate_ballot.insert(2);
        EpochRunner runner(config, faults);
        runner.run_setup();
        runner.run_upload(observations);
        CHECK(runner.submissions().size() == observations.size());
        CHECK(runner.audit().duplicate_users == std::vector<int>{2});
    }

    SUBCASE("malformed ballots are relayed, then excluded in aggregation") {
        FaultSchedule faults;
        faults.malform_ballot[1] = BallotFault::vote_two;
        faults.malform_ballot[4] = BallotFault::proof_mismatch;
        EpochRunner runner(config, faults);
        runner.run_setup();
        runner.run_upload(observations);
        CHECK(runner.submissions().size() == observations.size());  // relayed
        runner.run_aggregation();
        REQUIRE(runner.audit().excluded_ballots.size() == 2);
        std::vector<int> excluded{runner.audit().excluded_ballots[0].user,
                                  runner.audit().excluded_ballots[1].user};
        std::sort(excluded.begin(), excluded.end());
        CHECK(excluded == std::vector<int>{1, 4});
    }
}

TEST_CASE("aggregation: report equals the plaintext oracle") {
    ProtocolConfig config = small_config();
    auto observations = small_observations();
    EpochRunner runner(config);
    StatReport report = runner.run_all(observations);

    std::vector<long> tallies = observation_tallies(config, observations);
    auto expected = oracle_report(tallies, runner.audit().realized_noise, config.thresholds,
                                  config.roads, config.category_count());
    CHECK(report.reported == expected);
}

TEST_CASE("fault tolerance boundary at A = 4") {
    ProtocolConfig config = small_config();
    config.users = 8;
    config.authorities = 4;
    auto observations = small_observations();
    auto picked = select_authorities(config.beacon_seed, config.users, config.authorities);

    SUBCASE("one authority dropped after upload: epoch completes") {
        FaultSchedule faults;
        faults.drop_authority[picked[0]] = Phase::Aggregation;
        EpochRunner runner(config, faults);
        CHECK_NOTHROW(runner.run_all(observations));
        CHECK(runner.state().current == Phase::Done);
    }

    SUBCASE("two dropped: abort with the named insufficient-shares error") {
        FaultSchedule faults;
        faults.drop_authority[picked[0]] = Phase::Aggregation;
        faults.drop_authority[picked[1]] = Phase::Aggregation;
        EpochRunner runner(config, faults);
        runner.run_setup();
        runner.run_upload(observations);
        CHECK_THROWS_AS(runner.run_aggregation(), InsufficientSharesError);
    }

    SUBCASE("three dropped: protocol-level abort before decryption") {
        FaultSchedule faults;
        for (int i = 0; i < 3; ++i) faults.drop_authority[picked[i]] = Phase::Aggregation;
        EpochRunner runner(config, faults);
        runner.run_setup();
        runner.run_upload(observations);
        CHECK_THROWS_AS(runner.run_aggregation(), ProtocolError);
    }
}

TEST_CASE("tampering mixer is excluded; epoch still completes") {
    ProtocolConfig config = small_config();
    config.users = 8;
    config.authorities = 4;
    config.lambda = 10;
    auto observations = small_observations();
    auto picked = select_authorities(config.beacon_seed, config.users, config.authorities);

    FaultSchedule faults;
    faults.tamper_mix.insert(picked[2]);
    EpochRunner runner(config, faults);
    StatReport report = runner.run_all(observations);
    CHECK_FALSE(runner.audit().excluded_mixers.empty());

    std::vector<long> tallies = observation_tallies(config, observations);
    auto expected = oracle_report(tallies, runner.audit().realized_noise, config.thresholds,
                                  config.roads, config.category_count());
    CHECK(report.reported == expected);
}

TEST_CASE("phase machine rejects out-of-order operations") {
    ProtocolConfig config = small_config();
    auto observations = small_observations();

    EpochRunner runner(config);
    CHECK_THROWS_AS(runner.run_upload(observations), ProtocolError);
    CHECK_THROWS_AS(runner.run_aggregation(), ProtocolError);
    runner.run_setup();
    CHECK_THROWS_AS(runner.run_setup(), ProtocolError);
    runner.run_upload(observations);
    CHECK_THROWS_AS(runner.run_upload(observations), ProtocolError);  // upload closed
    runner.run_aggregation();
    CHECK_THROWS_AS(runner.run_aggregation(), ProtocolError);
}

TEST_CASE("determinism: identical runs, identical transcripts; parallel agrees") {
    ProtocolConfig config = small_config();
    auto observations = small_observations();

    EpochRunner a(config);
    a.run_all(observations);
    EpochRunner b(config);
    b.run_all(observations);
    std::string ta = build_transcript(a).dump();
    std::string tb = build_transcript(b).dump();
    CHECK(ta == tb);

    EpochRunner c(config);
    c.run_all(observations, ExecMode::parallel);
    CHECK(ta == build_transcript(c).dump());
}

TEST_CASE("fresh keys per epoch under fresh beacons") {
    ProtocolConfig config = small_config();
    EpochRunner e0(config, {}, 0);
    e0.run_setup();
    ProtocolConfig next = config;
    next.beacon_seed = config.beacon_seed + 1;
    EpochRunner e1(next, {}, 1);
    e1.run_setup();
    CHECK_FALSE(e0.public_key() == e1.public_key());
}

TEST_CASE("server log is oblivious: no tally plaintext marker appears") {
    ProtocolConfig config = small_config();
    config.users = 7;
    config.thresholds = {2, 2};
    // rig: all seven users vote cell (0,0); tally = 7 is above every
    // candidate value, so its encoding must never hit the wire
    std::vector<UserObservation> observations;
    for (int u = 0; u < 7; ++u) observations.push_back(UserObservation{u, 0, 10});

    EpochRunner runner(config);
    runner.run_all(observations);

    const Group& g = runner.group();
    long tally = 7;
    long noised = tally + runner.audit().realized_noise[0];
    std::vector<Bytes> markers;
    markers.push_back(element_bytes(g.encode_exponent(tally)));
    markers.push_back(element_bytes(g.encode_exponent(noised)));

    for (const Bytes* payload : runner.bus().server_visible_payloads()) {
        for (const Bytes& marker : markers) {
            auto it = std::search(payload->begin(), payload->end(), marker.begin(),
                                  marker.end());
            CHECK(it == payload->end());
        }
    }
    // sanity: the markers would be found if leaked
    Bytes leak = element_bytes(g.encode_exponent(tally));
    auto it = std::search(leak.begin(), leak.end(), markers[0].begin(), markers[0].end());
    CHECK(it == leak.begin());
}

TEST_CASE("transcript round-trip: honest verifies, tampered named") {
    ProtocolConfig config = small_config();
    auto observations = small_observations();
    EpochRunner runner(config);
    runner.run_all(observations);
    nlohmann::json transcript = build_transcript(runner);

    VerifyResult honest = verify_transcript(transcript);
    for (const std::string& f : honest.failures) INFO(f);
    CHECK(honest.ok);

    SUBCASE("swapping two mixed items in an accepted hop is detected") {
        nlohmann::json tampered = transcript;
        auto& hop = tampered["noise_chains"][0]["hops"][0];
        std::swap(hop["output"][0], hop["output"][1]);
        VerifyResult result = verify_transcript(tampered);
        CHECK_FALSE(result.ok);
        bool named = false;
        for (const std::string& f : result.failures)
            if (f.find("noise chain (0,0) hop 0") != std::string::npos) named = true;
        CHECK(named);
    }

    SUBCASE("flipping the report is detected") {
        nlohmann::json tampered = transcript;
        tampered["report"]["reported"] = nlohmann::json::array();
        if (transcript["report"]["reported"].empty())
            tampered["report"]["reported"].push_back(nlohmann::json::array({0, 0}));
        VerifyResult result = verify_transcript(tampered);
        CHECK_FALSE(result.ok);
    }

    SUBCASE("a faulted run still produces a verifying transcript") {
        // rejected hops and excluded ballots are part of the public record;
        // the auditor confirms the exclusions were justified
        ProtocolConfig faulted = small_config();
        faulted.users = 8;
        faulted.authorities = 4;
        faulted.lambda = 10;
        auto picked = select_authorities(faulted.beacon_seed, 8, 4);
        FaultSchedule faults;
        faults.tamper_mix.insert(picked[1]);
        faults.malform_ballot[0] = BallotFault::two_categories;
        EpochRunner bad(faulted, faults);
        bad.run_all(small_observations());
        VerifyResult audited = verify_transcript(build_transcript(bad));
        for (const std::string& f : audited.failures) INFO(f);
        CHECK(audited.ok);
    }

    SUBCASE("excluding an honest ballot is detected") {
        nlohmann::json tampered = transcript;
        tampered["ballots"][0]["included"] = false;
        // tally no longer matches either, but the wrong exclusion itself is named
        VerifyResult result = verify_transcript(tampered);
        CHECK_FALSE(result.ok);
        bool named = false;
        for (const std::string& f : result.failures)
            if (f.find("excluded but proof verifies") != std::string::npos) named = true;
        CHECK(named);
    }
}
