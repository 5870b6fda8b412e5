#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "linksim/csv.hpp"
#include "linksim/experiments.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_dir;
    uint64_t seed = 0;
    bool seed_set = false;
    int runs = 0;
    bool runs_set = false;
    double threshold = 0.0;
    bool threshold_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (key = value lines)")
        ->required();
    cmd->add_option("--out", args.output_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "experiment seed");
    cmd->add_option("--threshold", args.threshold, "decision threshold in cycles");
}

linksim::ExperimentSpec to_spec(const CLI::App* cmd, const CommonArgs& args,
                                linksim::ExperimentMode mode) {
    linksim::ExperimentSpec spec;
    spec.mode = mode;
    spec.config_path = args.config_path;
    spec.output_dir = args.output_dir;
    if (cmd->count("--seed") > 0) {
        spec.seed = args.seed;
    }
    if (cmd->count("--threshold") > 0) {
        spec.threshold = args.threshold;
    }
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic multi-GPU interconnect congestion simulator with "
                 "covert-channel and workload-fingerprinting experiments"};
    app.require_subcommand(1);

    CommonArgs cal_args;
    CLI::App* cal = app.add_subcommand("calibrate",
                                       "measure idle/busy probe statistics and the threshold");
    add_common(cal, cal_args);

    CommonArgs cov_args;
    std::string message;
    uint64_t bits = 0;
    int runs = 0;
    CLI::App* cov = app.add_subcommand("covert-send-receive",
                                       "transmit a message or random payload over the channel");
    add_common(cov, cov_args);
    cov->add_option("--runs", runs, "independent transmissions");
    CLI::Option* msg_opt = cov->add_option("--message", message, "text message to send");
    CLI::Option* bits_opt = cov->add_option("--bits", bits, "random payload length in bits");
    msg_opt->excludes(bits_opt);

    CommonArgs gen_args;
    std::string gen_profiles;
    CLI::App* gen = app.add_subcommand("fingerprint-generate",
                                       "record labeled traces and the feature dataset");
    add_common(gen, gen_args);
    gen->add_option("--profiles", gen_profiles, "comma-separated workload class names");

    CommonArgs eval_args;
    std::string eval_profiles;
    CLI::App* eval = app.add_subcommand("fingerprint-eval",
                                        "generate the dataset, train k-NN and evaluate");
    add_common(eval, eval_args);
    eval->add_option("--profiles", eval_profiles, "comma-separated workload class names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cal->parsed()) {
            auto spec = to_spec(cal, cal_args, linksim::ExperimentMode::Calibrate);
            const auto result = linksim::run_calibrate(spec);
            std::printf("mu_idle = %s\n", linksim::format_double(result.calibration.mu_idle).c_str());
            std::printf("mu_busy = %s\n", linksim::format_double(result.calibration.mu_busy).c_str());
            std::printf("threshold = %s\n",
                        linksim::format_double(result.calibration.threshold).c_str());
        } else if (cov->parsed()) {
            auto spec = to_spec(cov, cov_args, linksim::ExperimentMode::CovertSendReceive);
            if (cov->count("--runs") > 0) {
                spec.runs = runs;
            }
            if (cov->count("--message") > 0) {
                spec.message = message;
            }
            if (cov->count("--bits") > 0) {
                spec.payload_bits = bits;
            }
            const auto result = linksim::run_covert(spec);
            std::printf("mean_ber = %s\n", linksim::format_double(result.mean_ber).c_str());
            std::printf("mean_bandwidth_kbps = %s\n",
                        linksim::format_double(result.mean_bandwidth_kbps).c_str());
            if (result.decoded_text) {
                std::printf("decoded: %s\n", result.decoded_text->c_str());
            }
        } else {
            const bool evaluate = eval->parsed();
            CLI::App* cmd = evaluate ? eval : gen;
            CommonArgs& args = evaluate ? eval_args : gen_args;
            auto spec = to_spec(cmd, args,
                                evaluate ? linksim::ExperimentMode::FingerprintEval
                                         : linksim::ExperimentMode::FingerprintGenerate);
            const std::string& profile_list = evaluate ? eval_profiles : gen_profiles;
            if (cmd->count("--profiles") > 0) {
                std::string item;
                std::size_t pos = 0;
                while (pos <= profile_list.size()) {
                    const auto comma = profile_list.find(',', pos);
                    item = profile_list.substr(pos, comma == std::string::npos
                                                        ? std::string::npos
                                                        : comma - pos);
                    if (!item.empty()) {
                        spec.profiles.push_back(item);
                    }
                    if (comma == std::string::npos) {
                        break;
                    }
                    pos = comma + 1;
                }
            }
            const auto result = linksim::run_fingerprint(spec, evaluate);
            std::printf("windows = %zu\n", result.dataset.features.size());
            if (result.eval) {
                std::printf("accuracy = %s\n",
                            linksim::format_double(result.eval->accuracy).c_str());
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
