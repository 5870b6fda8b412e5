#pragma once

#include <stdexcept>
#include <string>

namespace linksim {

// Invalid or inconsistent configuration. The message names the offending
// field or key.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A transfer was requested between GPUs that share no link.
struct routing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Text outside the supported 7-bit character set.
struct encoding_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed bitstream (length not a whole number of symbols, oversized
// length field, ...).
struct framing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The receiver scanned max_slots without seeing a preamble.
struct sync_timeout_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A decoded length header points past the end of the observation window.
struct truncation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace linksim
