// Command-line front end for the one-bit massive MIMO experiments.

#include "obmimo/errors.hpp"
#include "obmimo/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string preset = "desk";
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    int workers = 1;
    bool allow_partial = false;
};

void add_common(CLI::App* sub, CommonArgs& args, bool needs_out) {
    sub->add_option("--config", args.config_path,
                    "Config file overriding preset values")
        ->check(CLI::ExistingFile);
    sub->add_option("--preset", args.preset, "Base configuration (desk or paper)")
        ->check(CLI::IsMember({"desk", "paper"}));
    args.seed_opt = sub->add_option("--seed", args.seed, "Master seed override");
    if (needs_out) {
        sub->add_option("--out", args.out_path, "Output CSV path")->required();
        sub->add_option("--workers", args.workers, "Worker threads")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--allow-partial", args.allow_partial,
                      "Exit 0 even if some cells failed");
    } else {
        sub->add_option("--out", args.out_path,
                        "Write config here instead of stdout");
    }
}

obmimo::ExperimentConfig load_config(const CommonArgs& args) {
    const obmimo::ExperimentConfig base = args.preset == "paper"
                                              ? obmimo::paper_preset()
                                              : obmimo::desk_preset();
    obmimo::ExperimentConfig cfg = base;
    if (!args.config_path.empty())
        cfg = obmimo::parse_config_file(args.config_path, base);
    if (args.seed_opt && args.seed_opt->count() > 0)
        cfg.seed = args.seed;
    return cfg;
}

int run_experiment(obmimo::ExperimentKind kind, const CommonArgs& args) {
    const obmimo::ExperimentConfig cfg = load_config(args);
    obmimo::validate_config(cfg, kind);
    obmimo::RunOptions opt;
    opt.workers = args.workers;

    obmimo::ExperimentResult result;
    switch (kind) {
    case obmimo::ExperimentKind::covariance:
        result = obmimo::run_covariance_experiment(cfg, opt);
        break;
    case obmimo::ExperimentKind::channel:
        result = obmimo::run_channel_experiment(cfg, opt);
        break;
    case obmimo::ExperimentKind::sumrate:
        result = obmimo::run_sumrate_experiment(cfg, opt);
        break;
    }
    obmimo::write_csv(result, args.out_path);

    const int failed = result.failed_records();
    std::printf("%s: %zu records -> %s (%d failed)\n", obmimo::experiment_name(kind),
                result.records.size(), args.out_path.c_str(), failed);
    if (failed > 0 && !args.allow_partial) {
        std::fprintf(stderr,
                     "%d cells failed; re-run with --allow-partial to accept\n",
                     failed);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-bit massive MIMO: covariance, channel and sum-rate experiments"};
    app.require_subcommand(1);

    CommonArgs cov_args, chan_args, rate_args, print_args;
    CLI::App* cov = app.add_subcommand(
        "cov-exp", "Covariance estimation error vs sample count");
    add_common(cov, cov_args, true);
    CLI::App* chan = app.add_subcommand(
        "chan-exp", "Plug-in channel estimation error vs oracle");
    add_common(chan, chan_args, true);
    CLI::App* rate = app.add_subcommand(
        "rate-exp", "Ergodic sum rate of MRC/ZF/BLMMSE receivers");
    add_common(rate, rate_args, true);
    CLI::App* print = app.add_subcommand(
        "print-config", "Print the resolved configuration");
    add_common(print, print_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cov->parsed())
            return run_experiment(obmimo::ExperimentKind::covariance, cov_args);
        if (chan->parsed())
            return run_experiment(obmimo::ExperimentKind::channel, chan_args);
        if (rate->parsed())
            return run_experiment(obmimo::ExperimentKind::sumrate, rate_args);
        if (print->parsed()) {
            const std::string text = obmimo::emit_config(load_config(print_args));
            if (print_args.out_path.empty()) {
                std::fputs(text.c_str(), stdout);
            } else {
                std::FILE* f = std::fopen(print_args.out_path.c_str(), "wb");
                if (!f) {
                    std::fprintf(stderr, "cannot open '%s'\n",
                                 print_args.out_path.c_str());
                    return 2;
                }
                std::fputs(text.c_str(), f);
                std::fclose(f);
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
