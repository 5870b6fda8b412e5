#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "linksim/probe.hpp"
#include "linksim/sim.hpp"

namespace linksim {

// Parameterized transfer stream standing in for one benchmark application's
// interconnect traffic: one burst_bytes copy every burst_period cycles, with
// Gaussian start-time jitter and relative size jitter.
struct WorkloadProfile {
    std::string name;
    uint64_t burst_bytes = 0;
    uint64_t burst_period = 0;
    double duty = 0.0; // fraction of the period the burst occupies, (0, 1]
    double jitter_sigma_cycles = 0.0;
    double size_sigma = 0.0; // relative
};

// Profile whose burst size occupies `duty` of each period at the link rate.
WorkloadProfile profile_from_duty(std::string name, uint64_t burst_period, double duty,
                                  double bytes_per_cycle, double jitter_sigma_cycles = 0.0,
                                  double size_sigma = 0.0);

void validate_profile(const WorkloadProfile& profile);

// floor(duration / burst_period) transfers, deterministic in `seed`,
// all src_gpu -> dst_gpu.
std::vector<TransferRequest> generate_workload(const WorkloadProfile& profile, uint64_t seed,
                                               uint64_t duration, int src_gpu = 1,
                                               int dst_gpu = 0);

constexpr std::size_t kFeatureCount = 7;
extern const std::array<const char*, kFeatureCount> kFeatureNames;

struct FeatureVector {
    double mean = 0.0;
    double stddev = 0.0;
    double p10 = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double high_fraction = 0.0;   // share of samples strictly above the threshold
    double dominant_period = 0.0; // autocorrelation peak lag in samples, 0 if none

    std::array<double, kFeatureCount> as_array() const {
        return {mean, stddev, p10, p50, p90, high_fraction, dominant_period};
    }
};

// Statistical summary of a latency trace; requires at least 16 samples.
// Percentiles use linear interpolation; dominant_period is the argmax of the
// unbiased autocorrelation over lags 1..n/2, reported as 0 when the peak
// stays below 0.1.
FeatureVector extract_features(const Trace& trace, double threshold_cycles);

struct LabeledDataset {
    std::vector<FeatureVector> features;
    std::vector<std::string> labels;
};

// k-nearest-neighbor over min-max-normalized features. Constant features
// normalize to 0.
struct KnnModel {
    int k = 3;
    std::array<double, kFeatureCount> feat_min{};
    std::array<double, kFeatureCount> feat_max{};
    std::vector<std::array<double, kFeatureCount>> exemplars; // normalized
    std::vector<std::string> labels;
};

KnnModel train(const LabeledDataset& dataset, int k = 3);

// Majority label among the k nearest exemplars by Euclidean distance.
// Distance ties break toward the earlier exemplar; vote ties toward the
// label with the smaller summed distance.
std::string classify(const KnnModel& model, const FeatureVector& features);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::string> label_order;        // sorted training labels
    std::vector<std::vector<int>> confusion;     // rows true, columns predicted
};

EvalResult evaluate(const KnnModel& model, const LabeledDataset& test);

// One row per example: the feature columns in kFeatureNames order plus a
// trailing label column.
std::string dataset_to_csv(const LabeledDataset& dataset);

std::string confusion_to_csv(const EvalResult& result);
std::string confusion_to_table(const EvalResult& result);

} // namespace linksim
