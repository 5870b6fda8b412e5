#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "linksim/sim.hpp"

namespace linksim {

struct ProbeSample {
    uint64_t timestamp = 0;    // probe issue time, simulated cycles
    int64_t latency_cycles = 0;
};

struct Trace {
    std::vector<ProbeSample> samples;
    uint64_t probe_bytes = 256;
    uint64_t period = 0;
    uint64_t seed = 0;
    std::string label; // optional workload class name
};

struct Calibration {
    double mu_idle = 0.0;
    double mu_busy = 0.0;
    double sigma_idle = 0.0;
    double sigma_busy = 0.0;
    double threshold = 0.0;
};

// The spy: issues small peer-to-peer copies and reads congestion off their
// measured durations.
class ProbeAgent {
public:
    ProbeAgent(int src_gpu, int dst_gpu, uint64_t probe_bytes = 256);

    int src_gpu() const { return src_; }
    int dst_gpu() const { return dst_; }
    uint64_t probe_bytes() const { return probe_bytes_; }

    // One probe at the current simulated time; advances the simulation past
    // its completion.
    ProbeSample issue_probe(Simulator& sim) const;

    // floor(duration / period) probes on the fixed grid now, now + period, ...
    // Probes are issued on the grid regardless of earlier completions.
    Trace record_trace(Simulator& sim, uint64_t duration, uint64_t period) const;

    // n_idle probes on a quiet link, then n_busy probes each fully overlapped
    // by one busy_payload_bytes transfer in the opposite direction. Threshold
    // defaults to the midpoint of the two means.
    Calibration calibrate(Simulator& sim, int n_idle, int n_busy,
                          std::optional<double> threshold_override = std::nullopt,
                          uint64_t busy_payload_bytes = 1310720) const;

private:
    int src_;
    int dst_;
    uint64_t probe_bytes_;
};

// CSV with header `timestamp_cycles,latency_cycles` plus a `label` column
// when the trace is tagged.
std::string trace_to_csv(const Trace& trace);

} // namespace linksim
