#ifndef HAZE_TRANSCRIPT_HPP_
#define HAZE_TRANSCRIPT_HPP_

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

#include "haze/protocol.hpp"

namespace haze {

// Full public record of one epoch: key material commitments, ballots and
// proofs, every mix hop, every PET, and the report. Everything an offline
// auditor needs to re-check the run without any secret.
nlohmann::json build_transcript(const EpochRunner& epoch);

nlohmann::json report_to_json(const StatReport& report);
StatReport report_from_json(const nlohmann::json& j);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> failures;
    void fail(std::string what) {
        ok = false;
        failures.push_back(std::move(what));
    }
};

VerifyResult verify_transcript(const nlohmann::json& transcript);

}  // namespace haze

#endif  // HAZE_TRANSCRIPT_HPP_
