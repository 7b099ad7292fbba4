#ifndef HAZE_ERRORS_HPP_
#define HAZE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace haze {

// Bad preset label, invalid delta, threshold exceeding party count, ...
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Plaintext outside the signed range |m| < q/2.
struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mixing values from different group parameter sets.
struct ContextError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fewer decryption shares than the threshold requires.
struct InsufficientSharesError : std::runtime_error {
    InsufficientSharesError(int have_, int need_)
        : std::runtime_error("insufficient shares: have " + std::to_string(have_) +
                             ", need " + std::to_string(need_) + " (missing " +
                             std::to_string(need_ - have_) + ")"),
          have(have_),
          need(need_) {}
    int have;
    int need;
};

// Key generation could not qualify enough dealers.
struct DkgFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No live authority was able to complete a mix chain.
struct ChainFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Phase-machine or lineage violations inside a protocol run.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace haze

#endif  // HAZE_ERRORS_HPP_
