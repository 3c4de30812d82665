// Experiment runner for the moduli-flow laboratory.
//
//   mflow <kind> --config PATH [--out DIR] [--checkpoint PATH]
//                [--resume PATH] [--seed N]
//
// Kinds: flow, stability, entropy, gradcheck, willmore-compare.
// Exit codes: 0 ok, 1 validation error, 2 runtime error, 3 blow-up detected.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mflow/experiment.hpp"

namespace {

int report_validation_error(const std::string& what) {
    nlohmann::ordered_json err;
    err["error"] = what;
    err["exit_code"] = mflow::exit_code::validation;
    std::cerr << err.dump() << std::endl;
    return mflow::exit_code::validation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moduli-flow experiment runner"};
    app.require_subcommand(1);

    struct Args {
        std::string config;
        std::string out_dir = ".";
        std::string checkpoint;
        std::string resume;
        std::optional<std::uint64_t> seed;
    };

    const std::vector<std::pair<std::string, mflow::ExperimentKind>> kinds = {
        {"flow", mflow::ExperimentKind::flow},
        {"stability", mflow::ExperimentKind::stability},
        {"entropy", mflow::ExperimentKind::entropy},
        {"gradcheck", mflow::ExperimentKind::gradcheck},
        {"willmore-compare", mflow::ExperimentKind::willmore_compare},
    };

    std::vector<std::shared_ptr<Args>> per_kind;
    for (const auto& [name, kind] : kinds) {
        auto args = std::make_shared<Args>();
        per_kind.push_back(args);
        CLI::App* sub = app.add_subcommand(name, "run a " + name + " experiment");
        sub->add_option("--config", args->config, "experiment config file")->required();
        sub->add_option("--out", args->out_dir, "output directory (default .)");
        sub->add_option("--checkpoint", args->checkpoint, "checkpoint file to write");
        sub->add_option("--resume", args->resume, "checkpoint file to resume from");
        sub->add_option("--seed", args->seed, "seed override");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return mflow::exit_code::validation;
    }

    for (std::size_t i = 0; i < kinds.size(); ++i) {
        if (!app.get_subcommand(kinds[i].first)->parsed()) continue;
        const Args& args = *per_kind[i];
        mflow::ExperimentConfig cfg;
        try {
            cfg = mflow::load_config_file(args.config, kinds[i].second);
        } catch (const mflow::ConfigError& e) {
            return report_validation_error(e.what());
        } catch (const std::ios_base::failure& e) {
            nlohmann::ordered_json err;
            err["error"] = e.what();
            err["exit_code"] = mflow::exit_code::runtime;
            std::cerr << err.dump() << std::endl;
            return mflow::exit_code::runtime;
        }
        mflow::RunOptions opts;
        opts.out_dir = args.out_dir;
        if (!args.checkpoint.empty()) opts.checkpoint_path = args.checkpoint;
        if (!args.resume.empty()) opts.resume_path = args.resume;
        opts.seed_override = args.seed;
        return mflow::run_experiment(cfg, opts);
    }
    return report_validation_error("no subcommand given");
}
