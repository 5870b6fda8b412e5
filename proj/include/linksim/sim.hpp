#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "linksim/errors.hpp"
#include "linksim/rng.hpp"

namespace linksim {

// Probe latency response to link traffic:
//   latency = idle_base + contention_cycles_per_byte * contending_bytes + noise
// with the two defaults pinned so that an idle probe reads 28356 cycles and a
// probe fully overlapped by one 1.25 MB copy reads 68368.
struct LatencyModel {
    double idle_base_cycles = 28356.0;
    double contention_cycles_per_byte = 40012.0 / 1310720.0;
    double noise_sigma_cycles = 8800.0;
    uint64_t rng_seed = 1;
};

// Whether traffic on the opposite-direction sublink counts toward probe
// contention. Peer copies generate traffic both ways, so Link is the default;
// Direction restricts contention to the probe's own sublink.
enum class ContentionScope { Link, Direction };

struct TopologySpec {
    int gpu_count = 2;
    std::vector<std::pair<int, int>> link_pairs = {{0, 1}};
    double bytes_per_cycle = 64.0;
    double clock_hz = 1.38e9;
    LatencyModel latency;
    ContentionScope contention_scope = ContentionScope::Link;
};

// One bidirectional link: two directed sublinks at the same rate.
struct Link {
    int endpoint_a = 0;
    int endpoint_b = 0;
    double bytes_per_cycle = 0.0;
};

class Topology {
public:
    explicit Topology(TopologySpec spec);

    int gpu_count() const { return spec_.gpu_count; }
    const std::vector<Link>& links() const { return links_; }
    double clock_hz() const { return spec_.clock_hz; }
    const LatencyModel& latency() const { return spec_.latency; }
    ContentionScope contention_scope() const { return spec_.contention_scope; }

    // Index into links(), or nullopt when the GPUs are not directly connected.
    std::optional<std::size_t> link_between(int gpu_a, int gpu_b) const;

private:
    TopologySpec spec_;
    std::vector<Link> links_;
};

Topology build_topology(const TopologySpec& spec);

struct TransferRequest {
    int src_gpu = 0;
    int dst_gpu = 0;
    uint64_t bytes = 0;
    uint64_t issue_time = 0;
    std::string tag; // "probe" | "covert-sender" | "workload"
};

using TransferHandle = uint64_t;

struct ActiveTransfer {
    TransferRequest request;
    uint64_t start_cycle = 0;
    uint64_t end_cycle = 0;
};

struct CompletionEvent {
    TransferHandle handle = 0;
    uint64_t end_cycle = 0;
};

// Cycles to move `bytes` over a sublink at `bytes_per_cycle`, rounded up,
// never less than one cycle.
uint64_t nominal_duration_cycles(uint64_t bytes, double bytes_per_cycle);

// Deterministic single-timeline simulator. Transfers complete at their
// nominal duration; congestion shows up only in probe latencies, so probes
// observe the link without perturbing it.
class Simulator {
public:
    explicit Simulator(Topology topology);

    const Topology& topology() const { return topo_; }
    uint64_t now() const { return now_; }

    TransferHandle schedule_transfer(const TransferRequest& req);

    // Advances to t, returning completions ordered by (end_cycle, insertion).
    std::vector<CompletionEvent> run_until(uint64_t t);

    // Overlap-weighted bytes of transfers on `link_index` intersecting
    // [window_start, window_end):
    //   sum over transfers of bytes * overlap(window, active) / duration.
    // Both sublinks count under ContentionScope::Link; `sublink_dst` narrows
    // to one direction under ContentionScope::Direction.
    double contending_bytes(std::size_t link_index, uint64_t window_start,
                            uint64_t window_end,
                            std::optional<TransferHandle> exclude = std::nullopt,
                            std::optional<int> sublink_dst = std::nullopt) const;

    // Schedules `probe` with duration equal to its modelled latency and
    // returns that latency in whole cycles, floored at the probe's nominal
    // transfer time (so never below one cycle).
    int64_t probe_latency(const TransferRequest& probe);

    const ActiveTransfer& transfer(TransferHandle h) const { return transfers_.at(h); }
    std::size_t transfer_count() const { return transfers_.size(); }

    // Window length used for probe contention: the probe's nominal idle
    // duration, i.e. the idle-base latency in whole cycles.
    uint64_t probe_window_cycles() const;

private:
    void validate_request(const TransferRequest& req, std::size_t& link_out) const;

    Topology topo_;
    uint64_t now_ = 0;
    std::vector<ActiveTransfer> transfers_;

    // Per-link handles sorted by (start_cycle, handle) plus the longest
    // duration seen, so window queries can binary-search a candidate range.
    struct LinkOccupancy {
        std::vector<TransferHandle> by_start;
        uint64_t max_duration = 0;
    };
    std::vector<LinkOccupancy> occupancy_;

    using PendingEntry = std::pair<uint64_t, TransferHandle>; // (end, handle)
    std::priority_queue<PendingEntry, std::vector<PendingEntry>, std::greater<>> pending_;

    GaussianStream noise_;
};

} // namespace linksim
