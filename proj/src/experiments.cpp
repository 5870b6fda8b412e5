#include "linksim/experiments.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "linksim/csv.hpp"

namespace linksim {

namespace {

const std::set<std::string> kKnownKeys = {
    // topology & latency model
    "gpu_count", "links", "bytes_per_cycle", "clock_hz", "idle_base_cycles",
    "contention_cycles_per_byte", "noise_sigma_cycles", "contention_scope",
    // probe
    "probe_bytes", "probe_period_cycles",
    // covert channel
    "slot_cycles", "payload_bytes", "threshold_cycles", "preamble_len",
    "probes_per_slot", "length_field_bits", "use_length_header", "sync_mode",
    "frame_start_slot", "max_slots",
    // calibration
    "calibrate_idle_samples", "calibrate_busy_samples",
    // fingerprinting
    "window_samples", "traces_per_class", "trace_samples", "knn_k",
    "fingerprint_threshold_cycles",
    // experiment
    "seed", "runs", "message", "payload_bits", "profiles",
};

const std::set<std::string> kProfileFields = {
    "burst_period", "duty", "burst_bytes", "jitter_sigma_cycles", "size_sigma",
};

std::vector<std::string> split_csv_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first != std::string::npos) {
            out.push_back(item.substr(first, last - first + 1));
        }
    }
    return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) {
        return name;
    }
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void check_keys(const KeyValueConfig& cfg) {
    for (const auto& [key, value] : cfg.entries()) {
        if (kKnownKeys.count(key)) {
            continue;
        }
        if (key.rfind("profile.", 0) == 0) {
            const auto rest = key.substr(8);
            const auto dot = rest.find('.');
            if (dot != std::string::npos && dot > 0 &&
                kProfileFields.count(rest.substr(dot + 1))) {
                continue;
            }
        }
        throw config_error("unknown config key '" + key + "'");
    }
}

std::vector<WorkloadProfile> configured_profiles(const KeyValueConfig& cfg,
                                                 double bytes_per_cycle) {
    std::vector<WorkloadProfile> profiles = builtin_profiles(bytes_per_cycle);
    auto find = [&profiles](const std::string& name) -> WorkloadProfile* {
        for (WorkloadProfile& p : profiles) {
            if (p.name == name) {
                return &p;
            }
        }
        return nullptr;
    };

    // Collect names in file order, then apply field overrides.
    std::vector<std::string> custom_names;
    for (const auto& [key, value] : cfg.entries()) {
        if (key.rfind("profile.", 0) != 0) {
            continue;
        }
        const auto rest = key.substr(8);
        const auto name = rest.substr(0, rest.find('.'));
        if (std::find(custom_names.begin(), custom_names.end(), name) == custom_names.end()) {
            custom_names.push_back(name);
        }
    }
    for (const std::string& name : custom_names) {
        const std::string prefix = "profile." + name + ".";
        WorkloadProfile* existing = find(name);
        WorkloadProfile p;
        if (existing) {
            p = *existing;
        } else {
            p.name = name;
        }
        if (cfg.has(prefix + "burst_period")) {
            p.burst_period = cfg.get_u64(prefix + "burst_period", 0);
        }
        if (cfg.has(prefix + "jitter_sigma_cycles")) {
            p.jitter_sigma_cycles = cfg.get_double(prefix + "jitter_sigma_cycles", 0.0);
        }
        if (cfg.has(prefix + "size_sigma")) {
            p.size_sigma = cfg.get_double(prefix + "size_sigma", 0.0);
        }
        const bool has_duty = cfg.has(prefix + "duty");
        const bool has_bytes = cfg.has(prefix + "burst_bytes");
        if (has_duty && has_bytes) {
            throw config_error("profile " + name + ": give duty or burst_bytes, not both");
        }
        if (has_bytes) {
            p.burst_bytes = cfg.get_u64(prefix + "burst_bytes", 0);
            p.duty = static_cast<double>(p.burst_bytes) /
                     (static_cast<double>(p.burst_period) * bytes_per_cycle);
            if (p.duty > 1.0) {
                throw config_error("profile " + name +
                                   ": burst_bytes exceed one period at the link rate");
            }
        } else if (has_duty) {
            const double duty = cfg.get_double(prefix + "duty", 0.0);
            p = profile_from_duty(p.name, p.burst_period, duty, bytes_per_cycle,
                                  p.jitter_sigma_cycles, p.size_sigma);
        } else if (!existing) {
            throw config_error("profile " + name + ": needs duty or burst_bytes");
        }
        validate_profile(p);
        if (existing) {
            *existing = p;
        } else {
            profiles.push_back(p);
        }
    }
    return profiles;
}

} // namespace

std::vector<WorkloadProfile> builtin_profiles(double bytes_per_cycle) {
    return {
        profile_from_duty("rf", 262144, 0.078125, bytes_per_cycle, 2000.0, 0.05),
        profile_from_duty("pme", 131072, 0.15625, bytes_per_cycle, 1000.0, 0.05),
        profile_from_duty("amber20-dhfr", 524288, 0.109375, bytes_per_cycle, 4000.0, 0.10),
        profile_from_duty("amber20-cellulose", 393216, 0.5, bytes_per_cycle, 8000.0, 0.10),
    };
}

SimSetup load_sim_setup(const KeyValueConfig& cfg) {
    check_keys(cfg);

    SimSetup s;
    s.topology.gpu_count = static_cast<int>(cfg.get_i64("gpu_count", 2));
    if (cfg.has("links")) {
        s.topology.link_pairs = cfg.get_link_pairs("links");
    }
    s.topology.bytes_per_cycle = cfg.get_double("bytes_per_cycle", 64.0);
    s.topology.clock_hz = cfg.get_double("clock_hz", 1.38e9);
    s.topology.latency.idle_base_cycles = cfg.get_double("idle_base_cycles", 28356.0);
    s.topology.latency.contention_cycles_per_byte =
        cfg.get_double("contention_cycles_per_byte", 40012.0 / 1310720.0);
    s.topology.latency.noise_sigma_cycles = cfg.get_double("noise_sigma_cycles", 8800.0);
    const std::string scope = cfg.get_string("contention_scope", "link");
    if (scope == "link") {
        s.topology.contention_scope = ContentionScope::Link;
    } else if (scope == "direction") {
        s.topology.contention_scope = ContentionScope::Direction;
    } else {
        throw config_error("contention_scope: expected link or direction, got '" + scope +
                           "'");
    }

    s.channel.probe_bytes = cfg.get_u64("probe_bytes", 256);
    s.channel.slot_cycles = cfg.get_u64("slot_cycles", 0);
    s.channel.payload_bytes = cfg.get_u64("payload_bytes", 1310720);
    s.channel.threshold_cycles = cfg.get_double("threshold_cycles", 55000.0);
    s.threshold_from_config = cfg.has("threshold_cycles");
    s.channel.preamble_len = static_cast<int>(cfg.get_i64("preamble_len", 4));
    s.channel.probes_per_slot = static_cast<int>(cfg.get_i64("probes_per_slot", 1));
    s.channel.length_field_bits = static_cast<int>(cfg.get_i64("length_field_bits", 16));
    s.channel.use_length_header = cfg.get_bool("use_length_header", true);
    s.header_from_config = cfg.has("use_length_header");
    const std::string sync = cfg.get_string("sync_mode", "scan");
    if (sync == "scan") {
        s.channel.sync = SyncMode::Scan;
    } else if (sync == "fixed") {
        s.channel.sync = SyncMode::Fixed;
    } else {
        throw config_error("sync_mode: expected scan or fixed, got '" + sync + "'");
    }
    s.sync_from_config = cfg.has("sync_mode");
    s.channel.frame_start_slot = cfg.get_u64("frame_start_slot", 0);
    s.max_slots = cfg.get_u64("max_slots", 0);

    s.calibrate.idle_samples = static_cast<int>(cfg.get_i64("calibrate_idle_samples", 50));
    s.calibrate.busy_samples = static_cast<int>(cfg.get_i64("calibrate_busy_samples", 50));

    s.fingerprint.probe_period_cycles = cfg.get_u64("probe_period_cycles", 131072);
    s.fingerprint.window_samples = static_cast<int>(cfg.get_i64("window_samples", 256));
    s.fingerprint.traces_per_class = static_cast<int>(cfg.get_i64("traces_per_class", 12));
    s.fingerprint.trace_samples = static_cast<int>(cfg.get_i64("trace_samples", 1024));
    s.fingerprint.knn_k = static_cast<int>(cfg.get_i64("knn_k", 3));
    s.fingerprint.threshold_cycles = cfg.get_double("fingerprint_threshold_cycles", 0.0);
    s.fingerprint.profiles = configured_profiles(cfg, s.topology.bytes_per_cycle);

    s.seed = cfg.get_u64("seed", 1);
    s.runs = static_cast<int>(cfg.get_i64("runs", 5));
    if (cfg.has("message")) {
        s.message = cfg.get_string("message", "");
    }
    if (cfg.has("payload_bits")) {
        s.payload_bits = cfg.get_u64("payload_bits", 0);
    }
    if (cfg.has("profiles")) {
        s.profile_selection = split_csv_list(cfg.get_string("profiles", ""));
    }
    return s;
}

BitStream random_bits(uint64_t seed, uint64_t n) {
    std::mt19937_64 eng(seed);
    BitStream bits;
    bits.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
        bits.push_back(static_cast<uint8_t>(eng() >> 63));
    }
    return bits;
}

namespace {

struct ResolvedExperiment {
    SimSetup setup;
    uint64_t seed = 1;
    int runs = 5;
};

ResolvedExperiment resolve(const ExperimentSpec& spec) {
    if (spec.output_dir.empty()) {
        throw config_error("output_dir: required");
    }
    ResolvedExperiment r;
    r.setup = load_sim_setup(KeyValueConfig::load(spec.config_path));
    if (spec.threshold) {
        r.setup.channel.threshold_cycles = *spec.threshold;
        r.setup.threshold_from_config = true;
    }
    r.seed = spec.seed.value_or(r.setup.seed);
    r.runs = spec.runs.value_or(r.setup.runs);
    if (r.runs < 1) {
        throw config_error("runs: must be >= 1, got " + std::to_string(r.runs));
    }
    return r;
}

std::string describe_mode(ExperimentMode mode) {
    switch (mode) {
    case ExperimentMode::Calibrate: return "calibrate";
    case ExperimentMode::CovertSendReceive: return "covert-send-receive";
    case ExperimentMode::FingerprintGenerate: return "fingerprint-generate";
    case ExperimentMode::FingerprintEval: return "fingerprint-eval";
    }
    return "?";
}

std::string report_header(const ExperimentSpec& spec, uint64_t seed) {
    std::string out;
    out += "mode = " + describe_mode(spec.mode) + "\n";
    out += "config = " + spec.config_path + "\n";
    out += "seed = " + std::to_string(seed) + "\n";
    return out;
}

} // namespace

CalibrateResult run_calibrate(const ExperimentSpec& spec) {
    ResolvedExperiment r = resolve(spec);

    TopologySpec topo_spec = r.setup.topology;
    topo_spec.latency.rng_seed = derive_seed(r.seed, "noise");
    Simulator sim(build_topology(topo_spec));
    ProbeAgent agent(0, 1, r.setup.channel.probe_bytes);

    std::optional<double> override;
    if (r.setup.threshold_from_config) {
        override = r.setup.channel.threshold_cycles;
    }
    const Calibration cal =
        agent.calibrate(sim, r.setup.calibrate.idle_samples, r.setup.calibrate.busy_samples,
                        override, r.setup.channel.payload_bytes);

    std::string kv;
    kv += "mu_idle = " + format_double(cal.mu_idle) + "\n";
    kv += "mu_busy = " + format_double(cal.mu_busy) + "\n";
    kv += "sigma_idle = " + format_double(cal.sigma_idle) + "\n";
    kv += "sigma_busy = " + format_double(cal.sigma_busy) + "\n";
    kv += "threshold = " + format_double(cal.threshold) + "\n";
    write_text_file(join_path(spec.output_dir, "calibration.txt"), kv);

    std::string report = report_header(spec, r.seed);
    report += "idle_samples = " + std::to_string(r.setup.calibrate.idle_samples) + "\n";
    report += "busy_samples = " + std::to_string(r.setup.calibrate.busy_samples) + "\n";
    report += kv;
    const std::string report_path = join_path(spec.output_dir, "report.txt");
    write_text_file(report_path, report);

    return CalibrateResult{cal, report_path};
}

CovertResult run_covert(const ExperimentSpec& spec) {
    ResolvedExperiment r = resolve(spec);

    std::optional<std::string> message = spec.message;
    std::optional<uint64_t> payload_bits = spec.payload_bits;
    if (!message && !payload_bits) {
        message = r.setup.message;
        payload_bits = r.setup.payload_bits;
    }
    if (message && payload_bits) {
        throw config_error("message and payload_bits are mutually exclusive");
    }
    if (!message && !payload_bits) {
        throw config_error("message or payload_bits: one is required");
    }
    if (payload_bits && *payload_bits == 0) {
        throw config_error("payload_bits: must be >= 1");
    }

    ChannelConfig channel = r.setup.channel;
    if (payload_bits) {
        // Bit-error-rate runs measure symbol errors at an agreed frame phase;
        // the length is shared out of band instead of a decoded header.
        if (!r.setup.sync_from_config) {
            channel.sync = SyncMode::Fixed;
        }
        if (!r.setup.header_from_config) {
            channel.use_length_header = false;
        }
        channel.expected_payload_bits = *payload_bits;
    }

    CovertResult result;
    std::string summary = "run,bits,errors,ber,bandwidth_kbps\n";
    double ber_sum = 0.0;
    double kbps_sum = 0.0;

    for (int run = 0; run < r.runs; ++run) {
        const uint64_t run_seed = r.seed + static_cast<uint64_t>(run);
        TopologySpec topo_spec = r.setup.topology;
        topo_spec.latency.rng_seed = derive_seed(run_seed, "noise");
        Topology topo = build_topology(topo_spec);
        Simulator sim(topo);

        const BitStream payload = message
                                      ? encode_text(*message)
                                      : random_bits(derive_seed(run_seed, "payload"),
                                                    *payload_bits);
        const ChannelConfig cfg = resolve_channel_config(channel, topo);
        const BitStream frame = build_frame(payload, cfg);

        sender_run(sim, cfg, frame, 1, 0, 0);
        const uint64_t max_slots =
            r.setup.max_slots > 0
                ? r.setup.max_slots
                : frame.size() + frame.size() / 4 + 16;
        const ReceiverResult rx = receiver_run(sim, cfg, max_slots, 0, 1);

        const uint64_t elapsed = static_cast<uint64_t>(payload.size()) * cfg.slot_cycles;
        const ChannelMetrics metrics =
            compute_metrics(payload, rx.payload, elapsed, topo.clock_hz());

        CovertRunResult run_result;
        run_result.metrics = metrics;
        run_result.frame_start_slot = rx.frame_start_slot;
        run_result.sent = payload;
        run_result.received = rx.payload;
        if (message) {
            try {
                run_result.decoded_text = decode_bits(rx.payload);
            } catch (const framing_error&) {
                run_result.decoded_text = std::nullopt;
            }
        }

        std::string slots_csv = "slot,latency_cycles,decoded_bit\n";
        for (const SlotRecord& rec : rx.slots) {
            slots_csv += std::to_string(rec.slot);
            slots_csv += ',';
            slots_csv += std::to_string(rec.latency_cycles);
            slots_csv += ',';
            slots_csv += std::to_string(rec.decoded_bit);
            slots_csv += '\n';
        }
        write_text_file(join_path(spec.output_dir, "slots_run" + std::to_string(run) + ".csv"),
                        slots_csv);

        summary += std::to_string(run);
        summary += ',';
        summary += std::to_string(metrics.bits_sent);
        summary += ',';
        summary += std::to_string(metrics.bit_errors);
        summary += ',';
        summary += format_double(metrics.ber);
        summary += ',';
        summary += format_double(metrics.bandwidth_kbps);
        summary += '\n';
        ber_sum += metrics.ber;
        kbps_sum += metrics.bandwidth_kbps;
        result.runs.push_back(std::move(run_result));
    }

    result.mean_ber = ber_sum / static_cast<double>(r.runs);
    result.mean_bandwidth_kbps = kbps_sum / static_cast<double>(r.runs);
    uint64_t total_bits = 0;
    uint64_t total_errors = 0;
    for (const CovertRunResult& rr : result.runs) {
        total_bits += rr.metrics.bits_sent;
        total_errors += rr.metrics.bit_errors;
    }
    summary += "mean," + std::to_string(total_bits) + ',' + std::to_string(total_errors) +
               ',' + format_double(result.mean_ber) + ',' +
               format_double(result.mean_bandwidth_kbps) + '\n';
    result.summary_path = join_path(spec.output_dir, "summary.csv");
    write_text_file(result.summary_path, summary);
    if (!result.runs.empty()) {
        result.decoded_text = result.runs.front().decoded_text;
    }

    std::string report = report_header(spec, r.seed);
    report += "runs = " + std::to_string(r.runs) + "\n";
    report += message ? "message = " + *message + "\n"
                      : "payload_bits = " + std::to_string(*payload_bits) + "\n";
    report += "threshold_cycles = " + format_double(channel.threshold_cycles) + "\n";
    report += "mean_ber = " + format_double(result.mean_ber) + "\n";
    report += "mean_bandwidth_kbps = " + format_double(result.mean_bandwidth_kbps) + "\n";
    if (result.decoded_text) {
        report += "decoded_text = " + *result.decoded_text + "\n";
    }
    write_text_file(join_path(spec.output_dir, "report.txt"), report);
    return result;
}

FingerprintResult run_fingerprint(const ExperimentSpec& spec, bool evaluate_model) {
    ResolvedExperiment r = resolve(spec);
    const FingerprintSettings& fp = r.setup.fingerprint;

    if (fp.window_samples < 16) {
        throw config_error("window_samples: must be >= 16");
    }
    if (fp.trace_samples < fp.window_samples) {
        throw config_error("trace_samples: must be >= window_samples");
    }
    if (fp.traces_per_class < 2) {
        throw config_error("traces_per_class: must be >= 2");
    }

    std::vector<std::string> selection =
        !spec.profiles.empty() ? spec.profiles : r.setup.profile_selection;
    std::vector<WorkloadProfile> classes;
    if (selection.empty()) {
        classes = fp.profiles;
    } else {
        for (const std::string& name : selection) {
            bool found = false;
            for (const WorkloadProfile& p : fp.profiles) {
                if (p.name == name) {
                    classes.push_back(p);
                    found = true;
                    break;
                }
            }
            if (!found) {
                throw config_error("profiles: unknown profile '" + name + "'");
            }
        }
    }
    if (classes.size() < 2) {
        throw config_error("profiles: need >= 2 classes, got " +
                           std::to_string(classes.size()));
    }

    const double threshold = fp.threshold_cycles > 0.0 ? fp.threshold_cycles
                                                       : r.setup.channel.threshold_cycles;
    const uint64_t duration =
        static_cast<uint64_t>(fp.trace_samples) * fp.probe_period_cycles;

    FingerprintResult result;
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const WorkloadProfile& profile = classes[ci];
        for (int t = 0; t < fp.traces_per_class; ++t) {
            const uint64_t trace_seed =
                r.seed + static_cast<uint64_t>(ci) * static_cast<uint64_t>(fp.traces_per_class) +
                static_cast<uint64_t>(t);

            TopologySpec topo_spec = r.setup.topology;
            topo_spec.latency.rng_seed = derive_seed(trace_seed, "noise");
            Simulator sim(build_topology(topo_spec));

            for (const TransferRequest& req :
                 generate_workload(profile, derive_seed(trace_seed, "workload"), duration)) {
                sim.schedule_transfer(req);
            }

            ProbeAgent agent(0, 1, r.setup.channel.probe_bytes);
            Trace trace = agent.record_trace(sim, duration, fp.probe_period_cycles);
            trace.label = profile.name;
            trace.seed = trace_seed;
            write_text_file(join_path(spec.output_dir,
                                      "traces/" + profile.name + "_" + std::to_string(t) +
                                          ".csv"),
                            trace_to_csv(trace));

            const int windows = fp.trace_samples / fp.window_samples;
            for (int w = 0; w < windows; ++w) {
                Trace window;
                window.probe_bytes = trace.probe_bytes;
                window.period = trace.period;
                window.seed = trace.seed;
                window.label = trace.label;
                const auto begin =
                    trace.samples.begin() + static_cast<std::ptrdiff_t>(w) * fp.window_samples;
                window.samples.assign(begin, begin + fp.window_samples);
                result.dataset.features.push_back(extract_features(window, threshold));
                result.dataset.labels.push_back(profile.name);
                result.window_parity.push_back(static_cast<int>(trace_seed % 2));
            }
        }
    }

    result.dataset_path = join_path(spec.output_dir, "dataset.csv");
    write_text_file(result.dataset_path, dataset_to_csv(result.dataset));

    std::string report = report_header(spec, r.seed);
    report += "classes =";
    for (const WorkloadProfile& p : classes) {
        report += " " + p.name;
    }
    report += "\n";
    report += "windows = " + std::to_string(result.dataset.features.size()) + "\n";
    report += "threshold_cycles = " + format_double(threshold) + "\n";

    if (evaluate_model) {
        LabeledDataset train_set;
        LabeledDataset test_set;
        for (std::size_t i = 0; i < result.dataset.features.size(); ++i) {
            LabeledDataset& dst = result.window_parity[i] == 0 ? train_set : test_set;
            dst.features.push_back(result.dataset.features[i]);
            dst.labels.push_back(result.dataset.labels[i]);
        }
        const KnnModel model = train(train_set, fp.knn_k);
        result.eval = evaluate(model, test_set);

        write_text_file(join_path(spec.output_dir, "confusion.csv"),
                        confusion_to_csv(*result.eval));
        report += "train_windows = " + std::to_string(train_set.features.size()) + "\n";
        report += "test_windows = " + std::to_string(test_set.features.size()) + "\n";
        report += "knn_k = " + std::to_string(fp.knn_k) + "\n";
        report += "accuracy = " + format_double(result.eval->accuracy) + "\n";
        report += confusion_to_table(*result.eval);
    }
    write_text_file(join_path(spec.output_dir, "report.txt"), report);
    return result;
}

} // namespace linksim
