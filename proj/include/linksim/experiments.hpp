#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "linksim/config.hpp"
#include "linksim/covert.hpp"
#include "linksim/fingerprint.hpp"
#include "linksim/probe.hpp"
#include "linksim/sim.hpp"

namespace linksim {

enum class ExperimentMode { Calibrate, CovertSendReceive, FingerprintGenerate, FingerprintEval };

// One experiment invocation. Optional fields fall back to the config file
// and then to built-in defaults; command-line values win.
struct ExperimentSpec {
    ExperimentMode mode = ExperimentMode::Calibrate;
    std::string config_path;
    std::string output_dir;
    std::optional<uint64_t> seed;
    std::optional<int> runs;
    std::optional<std::string> message;
    std::optional<uint64_t> payload_bits;
    std::vector<std::string> profiles;
    std::optional<double> threshold;
};

struct CalibrateSettings {
    int idle_samples = 50;
    int busy_samples = 50;
};

struct FingerprintSettings {
    uint64_t probe_period_cycles = 131072;
    int window_samples = 256;
    int traces_per_class = 12;
    int trace_samples = 1024;
    int knn_k = 3;
    double threshold_cycles = 0.0; // 0 -> channel threshold
    std::vector<WorkloadProfile> profiles;
};

// Everything a run needs, assembled from one config file. Unknown keys are
// rejected so typos fail loudly.
struct SimSetup {
    TopologySpec topology;
    ChannelConfig channel;
    bool threshold_from_config = false;
    bool sync_from_config = false;
    bool header_from_config = false;
    uint64_t max_slots = 0; // 0 -> sized from the frame
    CalibrateSettings calibrate;
    FingerprintSettings fingerprint;
    uint64_t seed = 1;
    int runs = 5;
    std::optional<std::string> message;
    std::optional<uint64_t> payload_bits;
    std::vector<std::string> profile_selection;
};

SimSetup load_sim_setup(const KeyValueConfig& cfg);

struct CalibrateResult {
    Calibration calibration;
    std::string report_path;
};

struct CovertRunResult {
    ChannelMetrics metrics;
    uint64_t frame_start_slot = 0;
    BitStream sent;
    BitStream received;
    std::optional<std::string> decoded_text;
};

struct CovertResult {
    std::vector<CovertRunResult> runs;
    double mean_ber = 0.0;
    double mean_bandwidth_kbps = 0.0;
    std::optional<std::string> decoded_text; // first run, message mode
    std::string summary_path;
};

struct FingerprintResult {
    LabeledDataset dataset;
    std::vector<int> window_parity; // split key per dataset row, 0 = train
    std::optional<EvalResult> eval;
    std::string dataset_path;
};

CalibrateResult run_calibrate(const ExperimentSpec& spec);
CovertResult run_covert(const ExperimentSpec& spec);
FingerprintResult run_fingerprint(const ExperimentSpec& spec, bool evaluate);

// Random payload of n bits drawn from a seeded engine.
BitStream random_bits(uint64_t seed, uint64_t n);

// The four bundled synthetic workload classes at the given link rate.
std::vector<WorkloadProfile> builtin_profiles(double bytes_per_cycle);

} // namespace linksim
