#ifndef HAZE_PROTOCOL_HPP_
#define HAZE_PROTOCOL_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "haze/dkg.hpp"
#include "haze/group.hpp"
#include "haze/mixnet.hpp"
#include "haze/tally.hpp"
#include "haze/zk.hpp"

namespace haze {

struct CategoryRange {
    double lo = 0;
    double hi = 0;  // half-open [lo, hi)
};

struct ProtocolConfig {
    int roads = 0;                         // N
    std::vector<CategoryRange> categories; // C speed ranges, mph
    std::vector<long> thresholds;          // per-road T_i
    double delta = 0.5;
    int users = 0;        // M
    int authorities = 0;  // A
    int lambda = 40;      // shuffle-proof rounds per mix
    int lambda_min = 1;   // verifier refuses proofs with fewer rounds
    int group_bits = 512;
    uint64_t seed = 0;
    uint64_t beacon_seed = 0;
    // Test-only: lowers the decryption threshold below the honest-majority
    // default floor(A/2)+1. Logged with a warning when set.
    std::optional<int> threshold_override;

    int category_count() const { return static_cast<int>(categories.size()); }
    int threshold_t() const;
    void validate() const;
};

struct UserObservation {
    int user = 0;
    int road = 0;      // r(j)
    double value = 0;  // s(j), speed in mph
};

struct Ballot {
    int roads = 0;
    int categories = 0;
    std::vector<Ciphertext> cells;  // row-major N x C
};

enum class Phase { Setup, Upload, Aggregation, Done };

std::string phase_name(Phase phase);

struct Envelope {
    int sender = 0;  // user id, or -1 for the server
    Phase phase = Phase::Setup;
    int recipient = -1;          // -1: broadcast relayed to everyone
    bool private_payload = false;  // point-to-point; server sees length only
    Bytes payload;
    std::string signature;  // placeholder over (sender, phase, payload)
};

// In-memory server relay. Delivery is FIFO in send order, messages are never
// dropped; the log is what the (untrusted) server gets to see.
class Bus {
public:
    void send(int sender, Phase phase, Bytes payload, int recipient = -1,
              bool private_payload = false);
    const std::vector<Envelope>& log() const { return log_; }
    // Payload bytes the server can read: broadcasts only.
    std::vector<const Bytes*> server_visible_payloads() const;

private:
    std::vector<Envelope> log_;
};

// Deterministic public authority selection: sort users by
// hash(beacon || user id), take the first `count`.
std::vector<int> select_authorities(uint64_t beacon_seed, int users, int count);

// Encrypt one observation into an N x C ballot with validity proof.
// A value matching no category yields the all-zero (abstain) ballot.
struct BallotWithProof {
    Ballot ballot;
    BallotProof proof;
};

BallotWithProof build_ballot(const Group& group, const PublicKey& pk,
                             const UserObservation& obs, const ProtocolConfig& config,
                             Rng& rng);

enum class BallotFault { vote_two, two_roads, two_categories, proof_mismatch };

BallotWithProof build_malformed_ballot(const Group& group, const PublicKey& pk,
                                       const UserObservation& obs,
                                       const ProtocolConfig& config, BallotFault fault,
                                       Rng& rng);

struct FaultSchedule {
    std::map<int, Phase> drop_authority;        // user id -> phase it goes dark
    std::map<int, BallotFault> malform_ballot;  // user id -> corruption mode
    std::set<int> tamper_mix;                   // user ids that cheat when mixing
    std::set<int> corrupt_dealing;              // user ids dealing inconsistent shares
    std::set<int> duplicate_ballot;             // user ids submitting twice
};

struct PhaseState {
    Phase current = Phase::Setup;
    std::vector<int> live_authorities;  // user ids, shrinks only
    int epoch = 0;
};

// Everything the omniscient simulation knows that protocol participants must
// not publish: realized noise, exclusion records, per-run accounting.
struct EpochAudit {
    std::vector<long> realized_noise;        // per cell, from composed permutations
    std::vector<Exclusion> excluded_ballots;
    std::vector<int> duplicate_users;
    std::vector<int> excluded_mixers;        // authority slots
    std::vector<int> dkg_excluded;           // dealer slots
};

// Drives one full epoch: Setup (authority selection + DKG), Upload,
// Aggregation. Deterministic given (config, faults, epoch id).
class EpochRunner {
public:
    EpochRunner(ProtocolConfig config, FaultSchedule faults = {}, int epoch_id = 0);

    void run_setup();
    void run_upload(std::span<const UserObservation> observations);
    StatReport run_aggregation(ExecMode mode = ExecMode::serial);

    StatReport run_all(std::span<const UserObservation> observations,
                       ExecMode mode = ExecMode::serial);

    const ProtocolConfig& config() const { return config_; }
    const Group& group() const { return *group_; }
    const PublicKey& public_key() const { return public_key_; }
    const std::vector<int>& authorities() const { return authority_users_; }
    const PhaseState& state() const { return state_; }
    const Bus& bus() const { return bus_; }
    const EpochAudit& audit() const { return audit_; }
    const DkgTranscript& dkg_transcript() const { return dkg_transcript_; }
    const std::vector<BallotSubmission>& submissions() const { return submissions_; }
    const TallyGrid& tally() const { return tally_; }
    const TallyGrid& noised_tally() const { return noised_; }
    const NoiseChains& noise_chains() const { return noise_chains_; }
    const ReportResult& report_result() const { return report_; }
    const StatReport& report() const { return report_.report; }
    const NoiseSet& noise_set() const { return noise_set_; }

private:
    void require_phase(Phase expected, const char* op) const;
    std::vector<int> live_slots() const;  // 1-based authority slots still live
    std::vector<MixerParty> make_mixers(const std::vector<int>& slots) const;
    bool dropped_at_or_before(int user, Phase phase) const;

    ProtocolConfig config_;
    FaultSchedule faults_;
    std::unique_ptr<Group> group_;
    Rng rng_;
    Bus bus_;
    PhaseState state_;

    std::vector<int> authority_users_;  // slot k (1-based) -> user id
    PublicKey public_key_;
    std::vector<KeyShare> key_shares_;  // per slot
    DkgTranscript dkg_transcript_;
    NoiseSet noise_set_;

    std::vector<BallotSubmission> submissions_;
    TallyGrid tally_;
    NoiseChains noise_chains_;
    TallyGrid noised_;
    ReportResult report_;
    EpochAudit audit_;
    bool report_ready_ = false;
};

// Canonical payload encodings shared by the bus and the transcript format.
Bytes serialize_ballot_payload(const Ballot& ballot, const BallotProof& proof);
Bytes serialize_batch_payload(const MixBatch& batch);
Bytes serialize_report_payload(const StatReport& report);

}  // namespace haze

#endif  // HAZE_PROTOCOL_HPP_
