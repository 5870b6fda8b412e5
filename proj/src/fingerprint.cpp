#include "linksim/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "linksim/csv.hpp"

namespace linksim {

const std::array<const char*, kFeatureCount> kFeatureNames = {
    "mean", "stddev", "p10", "p50", "p90", "high_fraction", "dominant_period"};

WorkloadProfile profile_from_duty(std::string name, uint64_t burst_period, double duty,
                                  double bytes_per_cycle, double jitter_sigma_cycles,
                                  double size_sigma) {
    WorkloadProfile p;
    p.name = std::move(name);
    p.burst_period = burst_period;
    p.duty = duty;
    p.jitter_sigma_cycles = jitter_sigma_cycles;
    p.size_sigma = size_sigma;
    p.burst_bytes = static_cast<uint64_t>(
        std::llround(duty * static_cast<double>(burst_period) * bytes_per_cycle));
    validate_profile(p);
    return p;
}

void validate_profile(const WorkloadProfile& profile) {
    if (profile.name.empty()) {
        throw config_error("profile name: must be non-empty");
    }
    if (profile.burst_bytes == 0) {
        throw config_error("burst_bytes: must be >= 1 (profile " + profile.name + ")");
    }
    if (profile.burst_period == 0) {
        throw config_error("burst_period: must be >= 1 (profile " + profile.name + ")");
    }
    if (!(profile.duty > 0.0 && profile.duty <= 1.0)) {
        throw config_error("duty: must be in (0, 1] (profile " + profile.name + ")");
    }
    if (profile.jitter_sigma_cycles < 0.0 || profile.size_sigma < 0.0) {
        throw config_error("jitter: sigmas must be >= 0 (profile " + profile.name + ")");
    }
}

std::vector<TransferRequest> generate_workload(const WorkloadProfile& profile, uint64_t seed,
                                               uint64_t duration, int src_gpu, int dst_gpu) {
    validate_profile(profile);
    if (duration < profile.burst_period) {
        throw config_error("duration: must be >= burst_period");
    }
    GaussianStream rng(seed);
    const uint64_t count = duration / profile.burst_period;
    std::vector<TransferRequest> requests;
    requests.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        double start = static_cast<double>(i * profile.burst_period);
        if (profile.jitter_sigma_cycles > 0.0) {
            start += rng.next(profile.jitter_sigma_cycles);
        }
        double bytes = static_cast<double>(profile.burst_bytes);
        if (profile.size_sigma > 0.0) {
            bytes *= 1.0 + rng.next(profile.size_sigma);
        }
        TransferRequest req;
        req.src_gpu = src_gpu;
        req.dst_gpu = dst_gpu;
        req.issue_time = start < 0.0 ? 0 : static_cast<uint64_t>(std::llround(start));
        req.bytes = bytes < 1.0 ? 1 : static_cast<uint64_t>(std::llround(bytes));
        req.tag = "workload";
        requests.push_back(std::move(req));
    }
    return requests;
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * (h - static_cast<double>(lo));
}

} // namespace

FeatureVector extract_features(const Trace& trace, double threshold_cycles) {
    const std::size_t n = trace.samples.size();
    if (n < 16) {
        throw config_error("trace: need >= 16 samples, got " + std::to_string(n));
    }

    std::vector<double> x;
    x.reserve(n);
    for (const ProbeSample& s : trace.samples) {
        x.push_back(static_cast<double>(s.latency_cycles));
    }

    FeatureVector f;
    double sum = 0.0;
    std::size_t high = 0;
    for (double v : x) {
        sum += v;
        if (v > threshold_cycles) {
            ++high;
        }
    }
    f.mean = sum / static_cast<double>(n);
    f.high_fraction = static_cast<double>(high) / static_cast<double>(n);

    double ss = 0.0;
    for (double v : x) {
        ss += (v - f.mean) * (v - f.mean);
    }
    const double variance = ss / static_cast<double>(n);
    f.stddev = std::sqrt(variance);

    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    f.p10 = percentile(sorted, 0.10);
    f.p50 = percentile(sorted, 0.50);
    f.p90 = percentile(sorted, 0.90);

    // Unbiased autocorrelation normalized by the variance; a flat trace has
    // no period.
    f.dominant_period = 0.0;
    if (variance > 0.0) {
        double best = 0.0;
        std::size_t best_lag = 0;
        for (std::size_t lag = 1; lag <= n / 2; ++lag) {
            double acc = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i) {
                acc += (x[i] - f.mean) * (x[i + lag] - f.mean);
            }
            const double r = acc / static_cast<double>(n - lag) / variance;
            if (r > best) {
                best = r;
                best_lag = lag;
            }
        }
        if (best >= 0.1) {
            f.dominant_period = static_cast<double>(best_lag);
        }
    }
    return f;
}

namespace {

std::array<double, kFeatureCount> normalize(const KnnModel& model,
                                            const std::array<double, kFeatureCount>& raw) {
    std::array<double, kFeatureCount> out{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const double span = model.feat_max[j] - model.feat_min[j];
        out[j] = span > 0.0 ? (raw[j] - model.feat_min[j]) / span : 0.0;
    }
    return out;
}

} // namespace

KnnModel train(const LabeledDataset& dataset, int k) {
    if (dataset.features.size() != dataset.labels.size()) {
        throw config_error("dataset: feature/label count mismatch");
    }
    if (dataset.features.empty()) {
        throw config_error("dataset: empty");
    }
    if (k < 1 || k % 2 == 0) {
        throw config_error("k: must be odd and >= 1, got " + std::to_string(k));
    }
    if (static_cast<std::size_t>(k) > dataset.features.size()) {
        throw config_error("k: exceeds dataset size");
    }
    const std::set<std::string> classes(dataset.labels.begin(), dataset.labels.end());
    if (classes.size() < 2) {
        throw config_error("dataset: need >= 2 classes, got " +
                           std::to_string(classes.size()));
    }

    KnnModel model;
    model.k = k;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        model.feat_min[j] = dataset.features.front().as_array()[j];
        model.feat_max[j] = model.feat_min[j];
    }
    for (const FeatureVector& f : dataset.features) {
        const auto raw = f.as_array();
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            model.feat_min[j] = std::min(model.feat_min[j], raw[j]);
            model.feat_max[j] = std::max(model.feat_max[j], raw[j]);
        }
    }
    model.exemplars.reserve(dataset.features.size());
    for (const FeatureVector& f : dataset.features) {
        model.exemplars.push_back(normalize(model, f.as_array()));
    }
    model.labels = dataset.labels;
    return model;
}

std::string classify(const KnnModel& model, const FeatureVector& features) {
    if (model.exemplars.empty()) {
        throw config_error("model: not trained");
    }
    const auto query = normalize(model, features.as_array());

    std::vector<std::pair<double, std::size_t>> dist; // (distance, exemplar index)
    dist.reserve(model.exemplars.size());
    for (std::size_t i = 0; i < model.exemplars.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const double d = model.exemplars[i][j] - query[j];
            d2 += d * d;
        }
        dist.emplace_back(std::sqrt(d2), i);
    }
    const auto kth = dist.begin() + std::min<std::size_t>(model.exemplars.size(),
                                                          static_cast<std::size_t>(model.k));
    std::partial_sort(dist.begin(), kth, dist.end()); // ties fall to earlier exemplars

    struct Vote {
        int count = 0;
        double dist_sum = 0.0;
        std::size_t first_index = 0;
    };
    std::map<std::string, Vote> votes;
    for (auto it = dist.begin(); it != kth; ++it) {
        Vote& v = votes[model.labels[it->second]];
        if (v.count == 0) {
            v.first_index = it->second;
        }
        ++v.count;
        v.dist_sum += it->first;
    }

    const std::string* winner = nullptr;
    const Vote* best = nullptr;
    for (const auto& [label, vote] : votes) {
        if (best == nullptr || vote.count > best->count ||
            (vote.count == best->count && vote.dist_sum < best->dist_sum) ||
            (vote.count == best->count && vote.dist_sum == best->dist_sum &&
             vote.first_index < best->first_index)) {
            winner = &label;
            best = &vote;
        }
    }
    return *winner;
}

EvalResult evaluate(const KnnModel& model, const LabeledDataset& test) {
    if (test.features.empty()) {
        throw config_error("test: empty dataset");
    }
    if (test.features.size() != test.labels.size()) {
        throw config_error("test: feature/label count mismatch");
    }

    EvalResult result;
    const std::set<std::string> train_classes(model.labels.begin(), model.labels.end());
    result.label_order.assign(train_classes.begin(), train_classes.end());
    for (const std::string& label : test.labels) {
        if (!train_classes.count(label)) {
            throw config_error("test label '" + label + "' unseen in training");
        }
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < result.label_order.size(); ++i) {
        index[result.label_order[i]] = i;
    }
    result.confusion.assign(result.label_order.size(),
                            std::vector<int>(result.label_order.size(), 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.features.size(); ++i) {
        const std::string predicted = classify(model, test.features[i]);
        result.confusion[index[test.labels[i]]][index[predicted]] += 1;
        if (predicted == test.labels[i]) {
            ++correct;
        }
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(test.features.size());
    return result;
}

std::string dataset_to_csv(const LabeledDataset& dataset) {
    std::string out;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        out += kFeatureNames[j];
        out += ',';
    }
    out += "label\n";
    for (std::size_t i = 0; i < dataset.features.size(); ++i) {
        const auto raw = dataset.features[i].as_array();
        for (double v : raw) {
            out += format_double(v);
            out += ',';
        }
        out += dataset.labels[i];
        out += '\n';
    }
    return out;
}

std::string confusion_to_csv(const EvalResult& result) {
    std::string out = "true_label";
    for (const std::string& label : result.label_order) {
        out += ',';
        out += label;
    }
    out += '\n';
    for (std::size_t i = 0; i < result.label_order.size(); ++i) {
        out += result.label_order[i];
        for (int v : result.confusion[i]) {
            out += ',';
            out += std::to_string(v);
        }
        out += '\n';
    }
    return out;
}

std::string confusion_to_table(const EvalResult& result) {
    std::size_t width = 10;
    for (const std::string& label : result.label_order) {
        width = std::max(width, label.size() + 2);
    }
    auto pad = [width](const std::string& s) {
        return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
    };
    std::string out = pad("true\\pred");
    for (const std::string& label : result.label_order) {
        out += pad(label);
    }
    out += '\n';
    for (std::size_t i = 0; i < result.label_order.size(); ++i) {
        out += pad(result.label_order[i]);
        for (int v : result.confusion[i]) {
            out += pad(std::to_string(v));
        }
        out += '\n';
    }
    return out;
}

} // namespace linksim
