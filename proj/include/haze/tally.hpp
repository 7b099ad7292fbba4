#ifndef HAZE_TALLY_HPP_
#define HAZE_TALLY_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "haze/group.hpp"
#include "haze/mixnet.hpp"
#include "haze/rng.hpp"
#include "haze/zk.hpp"

namespace haze {

enum class ExecMode { serial, parallel };

// The uniform noise support {-floor(1/(2*delta))+1, ..., floor(1/(2*delta))}.
struct NoiseSet {
    double delta = 0;
    std::vector<long> values;
    long min_value() const { return values.front(); }
    long max_value() const { return values.back(); }
};

NoiseSet build_noise_set(double delta);

// Exact probability that the mechanism reports, |{q : sum + q >= T}| / |N|.
// Plaintext-only reference used for DP verification and evaluation.
struct Probability {
    long num = 0;
    long den = 1;
    bool operator==(const Probability&) const = default;
};

Probability dp_mechanism_oracle(long sum, long threshold, const NoiseSet& noise);

// A user's encrypted ballot as it arrives at the authorities.
struct BallotSubmission {
    int user = 0;
    std::vector<Ciphertext> cells;  // row-major roads x categories
    BallotProof proof;
};

struct Exclusion {
    int user = 0;
    std::string reason;
};

struct TallyGrid {
    int roads = 0;
    int categories = 0;
    std::vector<Ciphertext> cells;  // row-major running sums
    int verified_users = 0;

    size_t index(int road, int category) const {
        return static_cast<size_t>(road) * categories + category;
    }
    const Ciphertext& at(int road, int category) const { return cells[index(road, category)]; }
    Ciphertext& at(int road, int category) { return cells[index(road, category)]; }
};

// Drops ballots whose proof fails (logged), homomorphically sums the rest
// per cell.
TallyGrid aggregate_votes(const Group& group, const PublicKey& pk,
                          std::span<const BallotSubmission> ballots, int roads, int categories,
                          ExecMode mode, std::vector<Exclusion>* exclusions);

// One independent mix chain over the noise set per cell.
struct NoiseChains {
    std::vector<ChainResult> chains;  // row-major per cell
    std::vector<int> excluded_mixers;
};

NoiseChains generate_noise_chains(const Group& group, const PublicKey& pk,
                                  const NoiseSet& noise, int roads, int categories,
                                  std::span<const MixerParty> mixers, int lambda_min,
                                  ExecMode mode, const Rng& rng);

// Adds position 0 of each cell's mixed noise batch to the tally. Rejects
// batches whose lineage does not name exactly that cell.
TallyGrid add_noise(const Group& group, const TallyGrid& grid,
                    std::span<const MixBatch> noise_batches);

// Distributed plaintext-equality test on a difference ciphertext d:
// each live authority blinds d by a fresh nonzero exponent with a
// correctness proof, the blinded product is threshold-decrypted, and the
// plaintext is compared against the identity. Reveals only the bit.
struct PetContribution {
    int authority = 0;
    Ciphertext blinded;
    EqExpProof proof;
};

struct PetTranscript {
    Ciphertext difference;
    std::vector<PetContribution> contributions;
    std::vector<int> excluded_contributors;
    Ciphertext blinded;  // product over accepted contributions
    std::vector<DecryptionShare> shares;
    std::vector<int> excluded_decrypters;
    GroupElement combined;
    bool equal = false;
};

PetContribution make_pet_contribution(const Group& group, int authority, const Ciphertext& d,
                                      Rng& rng);
bool verify_pet_contribution(const Group& group, const PetContribution& contribution,
                             const Ciphertext& d);

bool pet_difference(const Group& group, const Ciphertext& d,
                    std::span<const KeyShare> live, int t, const Rng& rng,
                    PetTranscript* transcript = nullptr,
                    std::span<const int> corrupt_contributors = {});

// Equality of a ciphertext against a known value m (PET on e - Enc(m; 0)).
bool pet(const Group& group, const Ciphertext& e, long m, std::span<const KeyShare> live,
         int t, const Rng& rng, PetTranscript* transcript = nullptr);

// Threshold comparison without decryption. The candidate set extends down
// to the minimum possible noised value: {noise_min, ..., T-1} is mixed, the
// noised tally is PETed against every mixed candidate, and the cell is above
// threshold iff nothing matched.
struct InequalityAudit {
    std::vector<long> candidates;
    ChainResult chain;
    std::vector<PetTranscript> pets;
    bool above = false;
};

bool inequality_test(const Group& group, const PublicKey& pk, const Ciphertext& e_noised,
                     long threshold, long noise_min, std::span<const KeyShare> live, int t,
                     std::span<const MixerParty> mixers, int lambda_min, Lineage cell,
                     const Rng& rng, InequalityAudit* audit = nullptr);

// Inequality test over every cell of the grid.
struct StatReport {
    int epoch = 0;
    std::vector<std::pair<int, int>> reported;  // (road, category), sorted
    bool operator==(const StatReport&) const = default;
};

struct ReportResult {
    StatReport report;
    std::vector<InequalityAudit> cells;  // row-major
    std::vector<int> excluded_mixers;
};

ReportResult report(const Group& group, const PublicKey& pk, const TallyGrid& noised,
                    std::span<const long> thresholds, long noise_min,
                    std::span<const KeyShare> live, int t, std::span<const MixerParty> mixers,
                    int lambda_min, int epoch, ExecMode mode, const Rng& rng);

// Plaintext reference of the full report step, given realized noise values.
std::vector<std::pair<int, int>> oracle_report(std::span<const long> tallies,
                                               std::span<const long> noise,
                                               std::span<const long> thresholds, int roads,
                                               int categories);

}  // namespace haze

#endif  // HAZE_TALLY_HPP_
