#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "haze/harness.hpp"
#include "haze/transcript.hpp"

using namespace haze;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 const std::string& mode_name, bool parallel, int windows_override,
                 std::optional<uint64_t> seed_override) {
    json config_json = load_json(config_path);
    ProtocolConfig config = config_from_json(config_json);
    if (seed_override) config.seed = *seed_override;
    TrafficSpec traffic = traffic_from_json(config_json);

    std::vector<TrajectoryRecord> records;
    if (traffic.source == TrafficSpec::Source::csv) {
        IngestResult ingest = ingest_csv(traffic.csv_path);
        for (const std::string& err : ingest.row_errors) std::cerr << err << "\n";
        records = std::move(ingest.records);
    } else {
        records = synth_traffic(config, config.seed, traffic.profile);
    }

    int windows = windows_override > 0 ? windows_override : traffic.profile.windows;
    EpochMode mode = mode_name == "oracle" ? EpochMode::oracle : EpochMode::crypto;
    ExecMode exec = parallel ? ExecMode::parallel : ExecMode::serial;

    std::filesystem::create_directories(out_dir);
    std::vector<EpochResult> results;
    for (int w = 0; w < windows; ++w) {
        long t0 = w * traffic.profile.window_seconds;
        long t1 = t0 + traffic.profile.window_seconds;
        EpochOutput epoch = run_epoch_window(records, t0, t1, config, mode, w, exec);
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03d", w);
        std::filesystem::path dir = std::filesystem::path(out_dir) / name;
        std::filesystem::create_directories(dir);
        write_file(dir / "report.json", epoch.report_json.dump(2) + "\n");
        if (mode == EpochMode::crypto)
            write_file(dir / "transcript.json", epoch.transcript_json.dump() + "\n");
        results.push_back(epoch.result);
    }

    EvalRow row = evaluate(config.delta, results);
    std::vector<EvalRow> rows{row};
    write_file(std::filesystem::path(out_dir) / "summary.csv", summary_csv(rows));
    json summary{{"delta", row.delta},
                 {"precision", row.precision},
                 {"recall", row.recall},
                 {"epochs", row.epochs},
                 {"mode", mode_name}};
    write_file(std::filesystem::path(out_dir) / "summary.json", summary.dump(2) + "\n");
    std::printf("%d epoch(s), mode %s: precision %.4f recall %.4f\n", row.epochs,
                mode_name.c_str(), row.precision, row.recall);
    return 0;
}

int cmd_eval_dp(std::vector<double> deltas, bool sweep, int users, long threshold, int trials,
                uint64_t seed) {
    if (sweep) deltas = {0.5, 0.25, 0.1};
    if (deltas.empty()) throw ConfigError("give --delta at least once or use --sweep");

    std::printf("delta,users,threshold,exact,empirical,trials,max_dp_diff,bound_ok\n");
    for (double delta : deltas) {
        NoiseSet noise = build_noise_set(delta);
        Probability exact = dp_mechanism_oracle(users, threshold, noise);

        Rng rng = Rng(seed).derive("eval-dp");
        long hits = 0;
        for (int i = 0; i < trials; ++i) {
            long q = noise.values[rng.u64(noise.values.size())];
            if (users + q >= threshold) ++hits;
        }

        // largest |P(report | s+1) - P(report | s)| over the sum range
        long max_num = 0;
        for (long s = 0; s <= users; ++s) {
            long diff = dp_mechanism_oracle(s + 1, threshold, noise).num -
                        dp_mechanism_oracle(s, threshold, noise).num;
            max_num = std::max(max_num, diff < 0 ? -diff : diff);
        }
        double max_diff = static_cast<double>(max_num) / noise.values.size();
        bool ok = max_diff <= delta + 1e-12;
        std::printf("%.6f,%d,%ld,%ld/%ld,%.6f,%d,%.6f,%s\n", delta, users, threshold, exact.num,
                    exact.den, static_cast<double>(hits) / trials, trials, max_diff,
                    ok ? "yes" : "no");
    }
    return 0;
}

int cmd_verify(const std::string& transcript_path) {
    json transcript;
    try {
        transcript = load_json(transcript_path);
    } catch (const json::exception& e) {
        std::cerr << "cannot parse " << transcript_path << ": " << e.what() << "\n";
        return 2;
    }
    VerifyResult result = verify_transcript(transcript);
    if (result.ok) {
        std::printf("transcript verifies: all proofs, mix hops, and tallies check out\n");
        return 0;
    }
    for (const std::string& failure : result.failures)
        std::cerr << "verification failure: " << failure << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"haze: privacy-preserving traffic statistics over threshold El Gamal"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run epochs over synthetic or CSV traffic");
    std::string config_path, out_dir, mode = "crypto";
    bool parallel = false;
    int windows_override = -1;
    uint64_t seed_value = 0;
    bool seed_given = false;
    sim->add_option("--config", config_path, "protocol config JSON")->required();
    sim->add_option("--out", out_dir, "output directory")->required();
    sim->add_option("--mode", mode, "oracle or crypto")
        ->check(CLI::IsMember({"oracle", "crypto"}));
    sim->add_flag("--parallel", parallel, "use the OpenMP aggregation kernels");
    sim->add_option("--windows", windows_override, "override window count");
    sim->add_option("--seed", seed_value, "override config seed")
        ->each([&seed_given](const std::string&) { seed_given = true; });

    auto* dp = app.add_subcommand("eval-dp", "evaluate the DP mechanism without cryptography");
    std::vector<double> deltas;
    bool sweep = false;
    int users = 20, trials = 1000;
    long threshold = 11;
    uint64_t dp_seed = 1;
    dp->add_option("--delta", deltas, "noise parameter, repeatable");
    dp->add_flag("--sweep", sweep, "use deltas 0.5, 0.25, 0.1");
    dp->add_option("--users", users, "vote count for the probed cell");
    dp->add_option("--threshold", threshold, "report threshold T");
    dp->add_option("--trials", trials, "empirical sample count");
    dp->add_option("--seed", dp_seed, "sampling seed");

    auto* ver = app.add_subcommand("verify", "re-verify an epoch transcript offline");
    std::string transcript_path;
    ver->add_option("--transcript", transcript_path, "transcript.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, out_dir, mode, parallel, windows_override,
                                seed_given ? std::optional<uint64_t>(seed_value) : std::nullopt);
        if (dp->parsed()) return cmd_eval_dp(deltas, sweep, users, threshold, trials, dp_seed);
        if (ver->parsed()) return cmd_verify(transcript_path);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
