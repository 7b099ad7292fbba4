#ifndef HAZE_HARNESS_HPP_
#define HAZE_HARNESS_HPP_

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "haze/protocol.hpp"
#include "haze/transcript.hpp"

namespace haze {

struct TrajectoryRecord {
    int user = 0;
    long timestamp = 0;  // seconds
    int segment = 0;
    double speed_mph = 0;
};

struct IngestResult {
    std::vector<TrajectoryRecord> records;
    std::vector<std::string> row_errors;  // per-row diagnostics, row kept out
};

// Header must be exactly `user_id,timestamp,segment_id,speed_mph`. Bad rows
// are reported and skipped; the call fails only when nothing parses.
IngestResult ingest_csv(const std::string& path);

struct SynthProfile {
    enum class Kind { uniform, congested };
    Kind kind = Kind::uniform;
    int segment = 0;        // congested segment
    double fraction = 0.5;  // deterministic share of users pinned to it
    int windows = 100;
    long window_seconds = 60;
    double participation = 1.0;  // per-user per-window reporting probability
};

std::vector<TrajectoryRecord> synth_traffic(const ProtocolConfig& config, uint64_t seed,
                                            const SynthProfile& profile);

struct EpochResult {
    StatReport reported;
    std::vector<std::pair<int, int>> ground_truth;  // exact tally >= T_i
    double precision = 1.0;
    double recall = 1.0;
};

enum class EpochMode { oracle, crypto };

struct EpochOutput {
    EpochResult result;
    std::vector<long> tallies;        // exact per-cell counts (evaluation only)
    std::vector<long> realized_noise; // per-cell noise the mechanism drew
    nlohmann::json report_json;
    nlohmann::json transcript_json;   // crypto mode only, null otherwise
};

// One Setup/Upload/Aggregation invocation over the latest record per user
// inside [t0, t1). Oracle mode samples the DP mechanism directly; crypto
// mode runs the full protocol. Ground truth is exact thresholding.
EpochOutput run_epoch_window(const std::vector<TrajectoryRecord>& records, long t0, long t1,
                             const ProtocolConfig& config, EpochMode mode, int epoch_id,
                             ExecMode exec = ExecMode::serial,
                             const FaultSchedule& faults = {});

// Buckets records by window once, then runs every epoch; the driver for
// sweeps where scanning all records per window would dominate.
std::vector<EpochResult> run_windows(const std::vector<TrajectoryRecord>& records,
                                     const ProtocolConfig& config, int windows,
                                     long window_seconds, EpochMode mode,
                                     ExecMode exec = ExecMode::serial);

struct EvalRow {
    double delta = 0;
    double precision = 1.0;  // mean over epochs
    double recall = 1.0;
    int epochs = 0;
};

EvalRow evaluate(double delta, std::span<const EpochResult> results);
std::string summary_csv(std::span<const EvalRow> rows);

// Config file handling (mirrors ProtocolConfig plus a traffic section).
ProtocolConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ProtocolConfig& config);

struct TrafficSpec {
    enum class Source { synth, csv };
    Source source = Source::synth;
    SynthProfile profile;
    std::string csv_path;
};

TrafficSpec traffic_from_json(const nlohmann::json& j);

}  // namespace haze

#endif  // HAZE_HARNESS_HPP_
