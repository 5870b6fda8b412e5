#include "linksim/probe.hpp"

#include <cmath>

namespace linksim {

ProbeAgent::ProbeAgent(int src_gpu, int dst_gpu, uint64_t probe_bytes)
    : src_(src_gpu), dst_(dst_gpu), probe_bytes_(probe_bytes) {
    if (probe_bytes_ == 0) {
        throw config_error("probe_bytes: must be >= 1");
    }
}

ProbeSample ProbeAgent::issue_probe(Simulator& sim) const {
    const uint64_t issue = sim.now();
    TransferRequest req{src_, dst_, probe_bytes_, issue, "probe"};
    const int64_t latency = sim.probe_latency(req);
    sim.run_until(issue + static_cast<uint64_t>(latency));
    return ProbeSample{issue, latency};
}

Trace ProbeAgent::record_trace(Simulator& sim, uint64_t duration, uint64_t period) const {
    if (period == 0 || period < sim.probe_window_cycles()) {
        throw config_error("period: " + std::to_string(period) +
                           " is smaller than the probe window of " +
                           std::to_string(sim.probe_window_cycles()) + " cycles");
    }
    if (duration < period) {
        throw config_error("duration: must be >= period");
    }

    const uint64_t start = sim.now();
    const uint64_t count = duration / period;
    Trace trace;
    trace.samples.reserve(count);
    trace.probe_bytes = probe_bytes_;
    trace.period = period;
    trace.seed = sim.topology().latency().rng_seed;

    for (uint64_t k = 0; k < count; ++k) {
        const uint64_t t = start + k * period;
        sim.run_until(t);
        TransferRequest req{src_, dst_, probe_bytes_, t, "probe"};
        const int64_t latency = sim.probe_latency(req);
        trace.samples.push_back(ProbeSample{t, latency});
    }
    sim.run_until(start + duration);
    return trace;
}

namespace {

std::pair<double, double> mean_and_stddev(const std::vector<int64_t>& xs) {
    double mean = 0.0;
    for (int64_t x : xs) {
        mean += static_cast<double>(x);
    }
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (int64_t x : xs) {
        const double d = static_cast<double>(x) - mean;
        ss += d * d;
    }
    // sample standard deviation; callers guarantee n >= 2
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

} // namespace

Calibration ProbeAgent::calibrate(Simulator& sim, int n_idle, int n_busy,
                                  std::optional<double> threshold_override,
                                  uint64_t busy_payload_bytes) const {
    if (n_idle < 2) {
        throw config_error("n_idle: need >= 2 samples, got " + std::to_string(n_idle));
    }
    if (n_busy < 2) {
        throw config_error("n_busy: need >= 2 samples, got " + std::to_string(n_busy));
    }

    std::vector<int64_t> idle;
    idle.reserve(static_cast<std::size_t>(n_idle));
    for (int i = 0; i < n_idle; ++i) {
        idle.push_back(issue_probe(sim).latency_cycles);
    }

    std::vector<int64_t> busy;
    busy.reserve(static_cast<std::size_t>(n_busy));
    for (int i = 0; i < n_busy; ++i) {
        // One payload copy in the victim direction, issued with the probe so
        // its whole active interval falls inside the probe window.
        TransferRequest payload{dst_, src_, busy_payload_bytes, sim.now(), "workload"};
        sim.schedule_transfer(payload);
        busy.push_back(issue_probe(sim).latency_cycles);
    }

    Calibration cal;
    auto [mi, si] = mean_and_stddev(idle);
    auto [mb, sb] = mean_and_stddev(busy);
    cal.mu_idle = mi;
    cal.sigma_idle = si;
    cal.mu_busy = mb;
    cal.sigma_busy = sb;
    if (cal.mu_busy <= cal.mu_idle) {
        throw config_error("calibration: busy mean " + std::to_string(cal.mu_busy) +
                           " does not exceed idle mean " + std::to_string(cal.mu_idle));
    }
    cal.threshold = threshold_override ? *threshold_override
                                       : (cal.mu_idle + cal.mu_busy) / 2.0;
    if (cal.threshold <= cal.mu_idle || cal.threshold >= cal.mu_busy) {
        throw config_error("threshold: " + std::to_string(cal.threshold) +
                           " outside (" + std::to_string(cal.mu_idle) + ", " +
                           std::to_string(cal.mu_busy) + ")");
    }
    return cal;
}

std::string trace_to_csv(const Trace& trace) {
    std::string out;
    const bool labeled = !trace.label.empty();
    out += labeled ? "timestamp_cycles,latency_cycles,label\n"
                   : "timestamp_cycles,latency_cycles\n";
    for (const ProbeSample& s : trace.samples) {
        out += std::to_string(s.timestamp);
        out += ',';
        out += std::to_string(s.latency_cycles);
        if (labeled) {
            out += ',';
            out += trace.label;
        }
        out += '\n';
    }
    return out;
}

} // namespace linksim
