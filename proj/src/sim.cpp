#include "linksim/sim.hpp"

#include <algorithm>
#include <cmath>

namespace linksim {

Topology::Topology(TopologySpec spec) : spec_(std::move(spec)) {
    if (spec_.gpu_count < 2) {
        throw config_error("gpu_count: need at least 2 GPUs, got " +
                           std::to_string(spec_.gpu_count));
    }
    if (spec_.bytes_per_cycle <= 0.0) {
        throw config_error("bytes_per_cycle: must be > 0");
    }
    if (spec_.clock_hz <= 0.0) {
        throw config_error("clock_hz: must be > 0");
    }
    if (spec_.latency.idle_base_cycles <= 0.0) {
        throw config_error("idle_base_cycles: must be > 0");
    }
    if (spec_.latency.contention_cycles_per_byte < 0.0) {
        throw config_error("contention_cycles_per_byte: must be >= 0");
    }
    if (spec_.latency.noise_sigma_cycles < 0.0) {
        throw config_error("noise_sigma_cycles: must be >= 0");
    }
    if (spec_.link_pairs.empty()) {
        throw config_error("links: at least one link required");
    }
    for (auto [a, b] : spec_.link_pairs) {
        if (a == b) {
            throw config_error("links: self-link " + std::to_string(a) + "-" +
                               std::to_string(b) + " not allowed");
        }
        if (a < 0 || a >= spec_.gpu_count || b < 0 || b >= spec_.gpu_count) {
            throw config_error("links: unknown GPU id in pair " + std::to_string(a) +
                               "-" + std::to_string(b));
        }
        for (const Link& existing : links_) {
            int lo = std::min(a, b), hi = std::max(a, b);
            int elo = std::min(existing.endpoint_a, existing.endpoint_b);
            int ehi = std::max(existing.endpoint_a, existing.endpoint_b);
            if (lo == elo && hi == ehi) {
                throw config_error("links: duplicate link " + std::to_string(a) + "-" +
                                   std::to_string(b));
            }
        }
        links_.push_back(Link{a, b, spec_.bytes_per_cycle});
    }
}

std::optional<std::size_t> Topology::link_between(int gpu_a, int gpu_b) const {
    for (std::size_t i = 0; i < links_.size(); ++i) {
        const Link& l = links_[i];
        if ((l.endpoint_a == gpu_a && l.endpoint_b == gpu_b) ||
            (l.endpoint_a == gpu_b && l.endpoint_b == gpu_a)) {
            return i;
        }
    }
    return std::nullopt;
}

Topology build_topology(const TopologySpec& spec) { return Topology(spec); }

uint64_t nominal_duration_cycles(uint64_t bytes, double bytes_per_cycle) {
    double cycles = std::ceil(static_cast<double>(bytes) / bytes_per_cycle);
    if (cycles < 1.0) {
        return 1;
    }
    return static_cast<uint64_t>(cycles);
}

Simulator::Simulator(Topology topology)
    : topo_(std::move(topology)),
      occupancy_(topo_.links().size()),
      noise_(topo_.latency().rng_seed) {}

void Simulator::validate_request(const TransferRequest& req, std::size_t& link_out) const {
    if (req.src_gpu == req.dst_gpu) {
        throw routing_error("transfer src_gpu equals dst_gpu (" +
                            std::to_string(req.src_gpu) + ")");
    }
    if (req.bytes == 0) {
        throw config_error("bytes: transfer size must be >= 1");
    }
    auto link = topo_.link_between(req.src_gpu, req.dst_gpu);
    if (!link) {
        throw routing_error("no link between GPU " + std::to_string(req.src_gpu) +
                            " and GPU " + std::to_string(req.dst_gpu));
    }
    if (req.issue_time < now_) {
        throw config_error("issue_time: " + std::to_string(req.issue_time) +
                           " is before current simulated time " + std::to_string(now_));
    }
    link_out = *link;
}

TransferHandle Simulator::schedule_transfer(const TransferRequest& req) {
    std::size_t link_index = 0;
    validate_request(req, link_index);

    const uint64_t duration =
        nominal_duration_cycles(req.bytes, topo_.links()[link_index].bytes_per_cycle);
    const TransferHandle handle = transfers_.size();
    transfers_.push_back(ActiveTransfer{req, req.issue_time, req.issue_time + duration});

    LinkOccupancy& occ = occupancy_[link_index];
    auto pos = std::upper_bound(
        occ.by_start.begin(), occ.by_start.end(), req.issue_time,
        [this](uint64_t t, TransferHandle h) { return t < transfers_[h].start_cycle; });
    occ.by_start.insert(pos, handle);
    occ.max_duration = std::max(occ.max_duration, duration);

    pending_.push({req.issue_time + duration, handle});
    return handle;
}

std::vector<CompletionEvent> Simulator::run_until(uint64_t t) {
    if (t < now_) {
        throw config_error("run_until: target " + std::to_string(t) +
                           " is before current simulated time " + std::to_string(now_));
    }
    std::vector<CompletionEvent> events;
    while (!pending_.empty() && pending_.top().first <= t) {
        auto [end, handle] = pending_.top();
        pending_.pop();
        events.push_back(CompletionEvent{handle, end});
    }
    now_ = t;
    return events;
}

double Simulator::contending_bytes(std::size_t link_index, uint64_t window_start,
                                   uint64_t window_end,
                                   std::optional<TransferHandle> exclude,
                                   std::optional<int> sublink_dst) const {
    if (window_start >= window_end) {
        throw config_error("contending window: start must precede end");
    }
    const LinkOccupancy& occ = occupancy_.at(link_index);

    // Candidates: start < window_end and start + max_duration > window_start.
    const uint64_t earliest =
        window_start > occ.max_duration ? window_start - occ.max_duration : 0;
    auto lo = std::lower_bound(
        occ.by_start.begin(), occ.by_start.end(), earliest,
        [this](TransferHandle h, uint64_t t) { return transfers_[h].start_cycle < t; });
    auto hi = std::lower_bound(
        occ.by_start.begin(), occ.by_start.end(), window_end,
        [this](TransferHandle h, uint64_t t) { return transfers_[h].start_cycle < t; });

    double total = 0.0;
    for (auto it = lo; it != hi; ++it) {
        const TransferHandle h = *it;
        if (exclude && h == *exclude) {
            continue;
        }
        const ActiveTransfer& tr = transfers_[h];
        if (sublink_dst && tr.request.dst_gpu != *sublink_dst) {
            continue;
        }
        const uint64_t s = std::max(tr.start_cycle, window_start);
        const uint64_t e = std::min(tr.end_cycle, window_end);
        if (e <= s) {
            continue;
        }
        const uint64_t overlap = e - s;
        const uint64_t duration = tr.end_cycle - tr.start_cycle;
        total += static_cast<double>(tr.request.bytes) * static_cast<double>(overlap) /
                 static_cast<double>(duration);
    }
    return total;
}

uint64_t Simulator::probe_window_cycles() const {
    auto w = static_cast<int64_t>(std::llround(topo_.latency().idle_base_cycles));
    return w < 1 ? 1 : static_cast<uint64_t>(w);
}

int64_t Simulator::probe_latency(const TransferRequest& probe) {
    std::size_t link_index = 0;
    validate_request(probe, link_index);

    const LatencyModel& model = topo_.latency();
    const uint64_t window_start = probe.issue_time;
    const uint64_t window_end = window_start + probe_window_cycles();

    std::optional<int> sublink;
    if (topo_.contention_scope() == ContentionScope::Direction) {
        sublink = probe.dst_gpu;
    }
    const double contending =
        contending_bytes(link_index, window_start, window_end, std::nullopt, sublink);

    double latency = model.idle_base_cycles + model.contention_cycles_per_byte * contending;
    if (model.noise_sigma_cycles > 0.0) {
        latency += noise_.next(model.noise_sigma_cycles);
    }
    // Noise can draw below the time the wire needs for the probe's own bytes;
    // a transfer can never beat its nominal duration.
    const auto floor_cycles = static_cast<int64_t>(
        nominal_duration_cycles(probe.bytes, topo_.links()[link_index].bytes_per_cycle));
    int64_t cycles = std::llround(latency);
    if (cycles < floor_cycles) {
        cycles = floor_cycles;
    }

    TransferRequest stored = probe;
    stored.tag = "probe";
    const TransferHandle handle = transfers_.size();
    transfers_.push_back(
        ActiveTransfer{stored, probe.issue_time, probe.issue_time + static_cast<uint64_t>(cycles)});
    LinkOccupancy& occ = occupancy_[link_index];
    auto pos = std::upper_bound(
        occ.by_start.begin(), occ.by_start.end(), probe.issue_time,
        [this](uint64_t t, TransferHandle h) { return t < transfers_[h].start_cycle; });
    occ.by_start.insert(pos, handle);
    occ.max_duration = std::max(occ.max_duration, static_cast<uint64_t>(cycles));
    pending_.push({probe.issue_time + static_cast<uint64_t>(cycles), handle});

    return cycles;
}

} // namespace linksim
