#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "haze/harness.hpp"

using namespace haze;

namespace {

ProtocolConfig tiny_config() {
    ProtocolConfig config;
    config.roads = 2;
    config.categories = {{0, 30}, {30, 60}};
    config.thresholds = {2, 2};
    config.delta = 0.5;
    config.users = 8;
    config.authorities = 3;
    config.lambda = 4;
    config.group_bits = 512;
    config.seed = 5;
    config.beacon_seed = 6;
    return config;
}

std::string write_temp(const std::string& name, const std::string& content) {
    std::filesystem::path path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("csv ingestion") {
    SUBCASE("well-formed file") {
        std::string path = write_temp("haze_ok.csv",
                                      "user_id,timestamp,segment_id,speed_mph\n"
                                      "0,10,1,42.5\n"
                                      "1,12,0,7\n"
                                      "2,90,1,61\n");
        IngestResult result = ingest_csv(path);
        CHECK(result.records.size() == 3);
        CHECK(result.row_errors.empty());
        CHECK(result.records[0].speed_mph == doctest::Approx(42.5));
    }

    SUBCASE("bad rows are reported, good rows kept") {
        std::string path = write_temp("haze_mixed.csv",
                                      "user_id,timestamp,segment_id,speed_mph\n"
                                      "0,10,1,-5\n"
                                      "not,a,row,at all\n"
                                      "1,12,0,30\n");
        IngestResult result = ingest_csv(path);
        CHECK(result.records.size() == 1);
        CHECK(result.row_errors.size() == 2);
    }

    SUBCASE("file-level failures") {
        std::string empty = write_temp("haze_empty.csv", "");
        CHECK_THROWS_AS(ingest_csv(empty), ConfigError);
        std::string bad_header = write_temp("haze_h.csv", "a,b,c,d\n0,1,2,3\n");
        CHECK_THROWS_AS(ingest_csv(bad_header), ConfigError);
        std::string no_valid = write_temp("haze_nv.csv",
                                          "user_id,timestamp,segment_id,speed_mph\nx,y,z,w\n");
        CHECK_THROWS_AS(ingest_csv(no_valid), ConfigError);
        CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv"), ConfigError);
    }
}

TEST_CASE("synthetic traffic") {
    ProtocolConfig config = tiny_config();
    config.users = 100;
    config.roads = 10;
    config.thresholds.assign(10, 2);

    SUBCASE("uniform profile spreads users over segments") {
        SynthProfile profile;
        profile.windows = 1;
        auto records = synth_traffic(config, 1, profile);
        CHECK(records.size() == 100);
        std::map<int, int> per_segment;
        for (const auto& rec : records) ++per_segment[rec.segment];
        double sigma = std::sqrt(100 * 0.1 * 0.9);
        for (const auto& [seg, count] : per_segment) {
            CHECK(count > 10 - 3 * sigma);
            CHECK(count < 10 + 3 * sigma);
        }
    }

    SUBCASE("congested profile pins the requested share") {
        SynthProfile profile;
        profile.kind = SynthProfile::Kind::congested;
        profile.segment = 3;
        profile.fraction = 0.5;
        profile.windows = 1;
        auto records = synth_traffic(config, 2, profile);
        int on_segment = 0;
        for (const auto& rec : records)
            if (rec.segment == 3) ++on_segment;
        CHECK(on_segment >= 50);
    }

    SUBCASE("same seed, same records") {
        SynthProfile profile;
        profile.windows = 3;
        auto a = synth_traffic(config, 7, profile);
        auto b = synth_traffic(config, 7, profile);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].user == b[i].user);
            CHECK(a[i].timestamp == b[i].timestamp);
            CHECK(a[i].segment == b[i].segment);
            CHECK(a[i].speed_mph == b[i].speed_mph);
        }
    }
}

TEST_CASE("epoch windows") {
    ProtocolConfig config = tiny_config();

    SUBCASE("empty window: vacuous metrics") {
        EpochOutput out = run_epoch_window({}, 0, 60, config, EpochMode::oracle, 0);
        CHECK(out.result.ground_truth.empty());
        CHECK(out.result.reported.reported.empty());
        CHECK(out.result.precision == 1.0);
        CHECK(out.result.recall == 1.0);
    }

    SUBCASE("latest record per user wins") {
        std::vector<TrajectoryRecord> records{
            {0, 5, 0, 10},  // overwritten by the later record
            {0, 50, 1, 40},
            {1, 20, 0, 12},
        };
        EpochOutput out = run_epoch_window(records, 0, 60, config, EpochMode::oracle, 0);
        // user 0 voted (1,1), user 1 voted (0,0)
        CHECK(out.tallies == std::vector<long>{1, 0, 0, 1});
    }

    SUBCASE("crypto and oracle agree given the realized noise") {
        std::vector<TrajectoryRecord> records;
        for (int u = 0; u < 8; ++u)
            records.push_back(TrajectoryRecord{u, 10 + u, u % 2, u < 5 ? 10.0 : 40.0});
        EpochOutput crypto = run_epoch_window(records, 0, 60, config, EpochMode::crypto, 0);
        auto expected = oracle_report(crypto.tallies, crypto.realized_noise, config.thresholds,
                                      config.roads, config.category_count());
        CHECK(crypto.result.reported.reported == expected);
        CHECK_FALSE(crypto.transcript_json.is_null());
    }

    SUBCASE("report frequency matches the exact mechanism probability") {
        ProtocolConfig freq = tiny_config();
        freq.users = 4;
        std::vector<TrajectoryRecord> records;
        for (int u = 0; u < 4; ++u) records.push_back(TrajectoryRecord{u, 1, 0, 10});

        NoiseSet noise = build_noise_set(freq.delta);
        auto frequency = [&](long threshold, int trials) {
            ProtocolConfig c = freq;
            c.thresholds = {threshold, threshold};
            int reported = 0;
            for (int trial = 0; trial < trials; ++trial) {
                c.seed = 1000 + trial;
                EpochOutput out = run_epoch_window(records, 0, 60, c, EpochMode::oracle, 0);
                for (const auto& cell : out.result.reported.reported)
                    if (cell == std::pair<int, int>{0, 0}) ++reported;
            }
            return reported;
        };

        // T = M: with noise {0, 1} the mechanism reports with certainty
        CHECK(dp_mechanism_oracle(4, 4, noise) == Probability{2, 2});
        CHECK(frequency(4, 50) == 50);

        // T = M + 1: exactly the q = 1 half of the noise set reports
        Probability exact = dp_mechanism_oracle(4, 5, noise);
        CHECK(exact == Probability{1, 2});
        const int trials = 400;
        int reported = frequency(5, trials);
        double p = static_cast<double>(exact.num) / exact.den;
        double sigma = std::sqrt(trials * p * (1 - p));
        CHECK(reported > trials * p - 3 * sigma);
        CHECK(reported < trials * p + 3 * sigma);
    }
}

TEST_CASE("evaluation summary") {
    EpochResult perfect;
    perfect.precision = 1.0;
    perfect.recall = 1.0;
    std::vector<EpochResult> one{perfect};
    EvalRow row = evaluate(0.5, one);
    CHECK(row.precision == 1.0);
    CHECK(row.recall == 1.0);
    CHECK(row.epochs == 1);

    std::vector<EvalRow> rows{row};
    std::string csv = summary_csv(rows);
    CHECK(csv.find("delta,precision,recall,epochs") == 0);
    CHECK(csv.find("0.500000,1.000000,1.000000,1") != std::string::npos);

    CHECK_THROWS_AS(evaluate(0.5, {}), ConfigError);
}

TEST_CASE("sweep: recall at delta 0.5 is structurally perfect") {
    // noise at delta = 0.5 is never negative, so nothing true is missed
    ProtocolConfig config = tiny_config();
    config.users = 60;
    config.roads = 4;
    config.thresholds.assign(4, 3);

    SynthProfile profile;
    profile.kind = SynthProfile::Kind::congested;
    profile.segment = 0;
    profile.fraction = 0.3;
    profile.windows = 10;
    auto records = synth_traffic(config, 3, profile);

    config.delta = 0.5;
    auto results = run_windows(records, config, profile.windows, profile.window_seconds,
                               EpochMode::oracle);
    EvalRow row = evaluate(0.5, results);
    CHECK(row.recall == 1.0);

    config.delta = 0.1;
    auto low = run_windows(records, config, profile.windows, profile.window_seconds,
                           EpochMode::oracle);
    EvalRow low_row = evaluate(0.1, low);
    CHECK(low_row.recall <= row.recall);
}

TEST_CASE("config json round-trip and traffic spec") {
    ProtocolConfig config = tiny_config();
    nlohmann::json j = config_to_json(config);
    ProtocolConfig back = config_from_json(j);
    CHECK(back.roads == config.roads);
    CHECK(back.thresholds == config.thresholds);
    CHECK(back.delta == config.delta);
    CHECK(back.users == config.users);
    CHECK(back.seed == config.seed);

    nlohmann::json bad = j;
    bad["authorities"] = 99;  // A > M
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);

    nlohmann::json scalar_threshold = j;
    scalar_threshold["thresholds"] = 3;
    ProtocolConfig expanded = config_from_json(scalar_threshold);
    CHECK(expanded.thresholds == std::vector<long>{3, 3});

    nlohmann::json with_traffic = j;
    with_traffic["traffic"] = {{"source", "synth"},
                               {"profile", "congested"},
                               {"segment", 1},
                               {"fraction", 0.4},
                               {"windows", 5}};
    TrafficSpec spec = traffic_from_json(with_traffic);
    CHECK(spec.profile.kind == SynthProfile::Kind::congested);
    CHECK(spec.profile.segment == 1);
    CHECK(spec.profile.windows == 5);

    with_traffic["traffic"]["source"] = "teleport";
    CHECK_THROWS_AS(traffic_from_json(with_traffic), ConfigError);
}
