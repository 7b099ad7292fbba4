#include "haze/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace haze {

using nlohmann::json;

IngestResult ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "user_id,timestamp,segment_id,speed_mph")
        throw ConfigError(path + ": expected header user_id,timestamp,segment_id,speed_mph");

    IngestResult out;
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        TrajectoryRecord rec;
        char trailing = 0;
        int got = std::sscanf(line.c_str(), "%d,%ld,%d,%lf%c", &rec.user, &rec.timestamp,
                              &rec.segment, &rec.speed_mph, &trailing);
        if (got < 4 || got == 5) {
            out.row_errors.push_back("row " + std::to_string(row) + ": unparseable: " + line);
            continue;
        }
        if (rec.speed_mph < 0) {
            out.row_errors.push_back("row " + std::to_string(row) + ": negative speed");
            continue;
        }
        if (rec.segment < 0 || rec.user < 0) {
            out.row_errors.push_back("row " + std::to_string(row) + ": negative id");
            continue;
        }
        out.records.push_back(rec);
    }
    if (out.records.empty())
        throw ConfigError(path + ": no valid rows (" + std::to_string(out.row_errors.size()) +
                          " rejected)");
    return out;
}

std::vector<TrajectoryRecord> synth_traffic(const ProtocolConfig& config, uint64_t seed,
                                            const SynthProfile& profile) {
    const double lo = config.categories.front().lo;
    const double hi = config.categories.back().hi;
    const double congested_hi = config.categories.front().hi;
    const int congested_count =
        profile.kind == SynthProfile::Kind::congested
            ? static_cast<int>(config.users * profile.fraction + 0.999999)
            : 0;

    Rng rng = Rng(seed).derive("synth");
    std::vector<TrajectoryRecord> out;
    for (int w = 0; w < profile.windows; ++w) {
        Rng wrng = rng.derive("window", static_cast<uint64_t>(w));
        for (int u = 0; u < config.users; ++u) {
            if (profile.participation < 1.0 &&
                wrng.u64(1000000) >= static_cast<uint64_t>(profile.participation * 1000000))
                continue;
            TrajectoryRecord rec;
            rec.user = u;
            rec.timestamp = w * profile.window_seconds +
                            static_cast<long>(wrng.u64(profile.window_seconds));
            if (u < congested_count) {
                // pinned to the jammed segment at category-0 speeds
                rec.segment = profile.segment;
                rec.speed_mph = lo + (congested_hi - lo) * wrng.u64(10000) / 10000.0;
            } else {
                int seg = static_cast<int>(wrng.u64(config.roads));
                if (profile.kind == SynthProfile::Kind::congested && config.roads > 1) {
                    seg = static_cast<int>(wrng.u64(config.roads - 1));
                    if (seg >= profile.segment) ++seg;
                }
                rec.segment = seg;
                rec.speed_mph = lo + (hi - lo) * wrng.u64(10000) / 10000.0;
            }
            out.push_back(rec);
        }
    }
    return out;
}

namespace {

// Latest record per user inside [t0, t1), mapped to observations.
std::vector<UserObservation> window_observations(const std::vector<TrajectoryRecord>& records,
                                                 long t0, long t1,
                                                 const ProtocolConfig& config) {
    std::map<int, TrajectoryRecord> latest;
    for (const TrajectoryRecord& rec : records) {
        if (rec.timestamp < t0 || rec.timestamp >= t1) continue;
        if (rec.user < 0 || rec.user >= config.users) continue;
        if (rec.segment < 0 || rec.segment >= config.roads) continue;
        auto [it, inserted] = latest.try_emplace(rec.user, rec);
        if (!inserted && rec.timestamp >= it->second.timestamp) it->second = rec;
    }
    std::vector<UserObservation> out;
    out.reserve(latest.size());
    for (const auto& [user, rec] : latest)
        out.push_back(UserObservation{user, rec.segment, rec.speed_mph});
    return out;
}

std::vector<long> exact_tallies(std::span<const UserObservation> observations,
                                const ProtocolConfig& config) {
    std::vector<long> tallies(static_cast<size_t>(config.roads) * config.category_count(), 0);
    for (const UserObservation& obs : observations) {
        for (int c = 0; c < config.category_count(); ++c) {
            if (obs.value >= config.categories[c].lo && obs.value < config.categories[c].hi) {
                ++tallies[static_cast<size_t>(obs.road) * config.category_count() + c];
                break;
            }
        }
    }
    return tallies;
}

void fill_metrics(EpochResult& result) {
    std::vector<std::pair<int, int>> hits;
    std::set_intersection(result.reported.reported.begin(), result.reported.reported.end(),
                          result.ground_truth.begin(), result.ground_truth.end(),
                          std::back_inserter(hits));
    result.precision = result.reported.reported.empty()
                           ? 1.0
                           : static_cast<double>(hits.size()) / result.reported.reported.size();
    result.recall = result.ground_truth.empty()
                        ? 1.0
                        : static_cast<double>(hits.size()) / result.ground_truth.size();
}

}  // namespace

EpochOutput run_epoch_window(const std::vector<TrajectoryRecord>& records, long t0, long t1,
                             const ProtocolConfig& config, EpochMode mode, int epoch_id,
                             ExecMode exec, const FaultSchedule& faults) {
    if (t1 <= t0) throw ConfigError("empty epoch window");
    std::vector<UserObservation> observations = window_observations(records, t0, t1, config);

    EpochOutput out;
    out.tallies = exact_tallies(observations, config);
    for (int i = 0; i < config.roads; ++i)
        for (int c = 0; c < config.category_count(); ++c)
            if (out.tallies[static_cast<size_t>(i) * config.category_count() + c] >=
                config.thresholds[i])
                out.result.ground_truth.emplace_back(i, c);

    if (mode == EpochMode::oracle) {
        NoiseSet noise = build_noise_set(config.delta);
        Rng rng = Rng(config.seed).derive("oracle-epoch", static_cast<uint64_t>(epoch_id));
        out.realized_noise.resize(out.tallies.size());
        for (size_t idx = 0; idx < out.tallies.size(); ++idx)
            out.realized_noise[idx] = noise.values[rng.u64(noise.values.size())];
        out.result.reported.epoch = epoch_id;
        out.result.reported.reported =
            oracle_report(out.tallies, out.realized_noise, config.thresholds, config.roads,
                          config.category_count());
    } else {
        ProtocolConfig epoch_config = config;
        epoch_config.beacon_seed = config.beacon_seed + static_cast<uint64_t>(epoch_id);
        EpochRunner runner(epoch_config, faults, epoch_id);
        out.result.reported = runner.run_all(observations, exec);
        out.realized_noise = runner.audit().realized_noise;
        out.transcript_json = build_transcript(runner);
    }

    out.report_json = report_to_json(out.result.reported);
    fill_metrics(out.result);
    return out;
}

std::vector<EpochResult> run_windows(const std::vector<TrajectoryRecord>& records,
                                     const ProtocolConfig& config, int windows,
                                     long window_seconds, EpochMode mode, ExecMode exec) {
    std::vector<std::vector<TrajectoryRecord>> buckets(windows);
    for (const TrajectoryRecord& rec : records) {
        long w = rec.timestamp / window_seconds;
        if (w >= 0 && w < windows) buckets[w].push_back(rec);
    }
    std::vector<EpochResult> out;
    out.reserve(windows);
    for (int w = 0; w < windows; ++w) {
        long t0 = w * window_seconds;
        out.push_back(run_epoch_window(buckets[w], t0, t0 + window_seconds, config, mode, w,
                                       exec)
                          .result);
    }
    return out;
}

EvalRow evaluate(double delta, std::span<const EpochResult> results) {
    if (results.empty()) throw ConfigError("evaluate needs at least one epoch");
    EvalRow row;
    row.delta = delta;
    row.epochs = static_cast<int>(results.size());
    double p = 0, r = 0;
    for (const EpochResult& result : results) {
        p += result.precision;
        r += result.recall;
    }
    row.precision = p / results.size();
    row.recall = r / results.size();
    return row;
}

std::string summary_csv(std::span<const EvalRow> rows) {
    std::string out = "delta,precision,recall,epochs\n";
    char line[128];
    for (const EvalRow& row : rows) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%d\n", row.delta, row.precision,
                      row.recall, row.epochs);
        out += line;
    }
    return out;
}

ProtocolConfig config_from_json(const json& j) {
    ProtocolConfig config;
    config.roads = j.at("roads").get<int>();
    for (const json& c : j.at("categories"))
        config.categories.push_back(CategoryRange{c[0].get<double>(), c[1].get<double>()});
    if (j.at("thresholds").is_array())
        config.thresholds = j.at("thresholds").get<std::vector<long>>();
    else
        config.thresholds.assign(config.roads, j.at("thresholds").get<long>());
    config.delta = j.at("delta").get<double>();
    config.users = j.at("users").get<int>();
    config.authorities = j.at("authorities").get<int>();
    config.lambda = j.value("lambda", 40);
    config.lambda_min = j.value("lambda_min", 1);
    config.group_bits = j.value("group_bits", 512);
    config.seed = j.value("seed", uint64_t{0});
    config.beacon_seed = j.value("beacon_seed", uint64_t{0});
    if (j.contains("threshold_override"))
        config.threshold_override = j.at("threshold_override").get<int>();
    config.validate();
    return config;
}

json config_to_json(const ProtocolConfig& config) {
    json categories = json::array();
    for (const CategoryRange& c : config.categories)
        categories.push_back(json::array({c.lo, c.hi}));
    json j{{"roads", config.roads},
           {"categories", std::move(categories)},
           {"thresholds", config.thresholds},
           {"delta", config.delta},
           {"users", config.users},
           {"authorities", config.authorities},
           {"lambda", config.lambda},
           {"lambda_min", config.lambda_min},
           {"group_bits", config.group_bits},
           {"seed", config.seed},
           {"beacon_seed", config.beacon_seed}};
    if (config.threshold_override) j["threshold_override"] = *config.threshold_override;
    return j;
}

TrafficSpec traffic_from_json(const json& j) {
    TrafficSpec spec;
    if (!j.contains("traffic")) return spec;
    const json& t = j.at("traffic");
    std::string source = t.value("source", "synth");
    if (source == "csv") {
        spec.source = TrafficSpec::Source::csv;
        spec.csv_path = t.at("path").get<std::string>();
    } else if (source != "synth") {
        throw ConfigError("traffic.source must be synth or csv");
    }
    std::string profile = t.value("profile", "uniform");
    if (profile == "congested")
        spec.profile.kind = SynthProfile::Kind::congested;
    else if (profile != "uniform")
        throw ConfigError("traffic.profile must be uniform or congested");
    spec.profile.segment = t.value("segment", 0);
    spec.profile.fraction = t.value("fraction", 0.5);
    spec.profile.windows = t.value("windows", 100);
    spec.profile.window_seconds = t.value("window_seconds", long{60});
    spec.profile.participation = t.value("participation", 1.0);
    if (spec.profile.windows < 1) throw ConfigError("traffic.windows must be >= 1");
    if (spec.profile.window_seconds < 1) throw ConfigError("traffic.window_seconds must be >= 1");
    return spec;
}

}  // namespace haze
