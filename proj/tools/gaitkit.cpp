// Command-line front end: process, evaluate, aggregate, synth, factors, config.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gaitkit/commands.hpp"

namespace cmd = gaitkit::commands;

int main(int argc, char** argv) {
    CLI::App app{"Gait event detection from a trunk-worn IMU"};
    app.require_subcommand(1);

    cmd::ProcessOptions process;
    std::string process_config;
    auto* p = app.add_subcommand("process", "Detect gait events and segments in one recording");
    p->add_option("recording", process.recording, "CSV with header t,ax,ay,az,gx,gy,gz")->required();
    p->add_option("--config", process_config, "key = value pipeline config");
    p->add_option("--out", process.out_dir, "output directory for events.json, segments.json, bouts.json");

    cmd::EvaluateOptions evaluate;
    std::string evaluate_config;
    double window = 0.0;
    auto* e = app.add_subcommand("evaluate", "Match detected events against a reference");
    e->add_option("events", evaluate.events, "events.json from process")->required();
    e->add_option("reference", evaluate.reference, "CSV with header t,kind,side")->required();
    e->add_option("--config", evaluate_config, "pipeline config supplying match_window_s");
    auto* window_opt = e->add_option("--window", window, "tolerance window in seconds, centred on each reference event");
    e->add_option("--out", evaluate.out, "metrics JSON path");

    cmd::AggregateOptions aggregate;
    auto* a = app.add_subcommand("aggregate", "Summarize metrics across tests and participants");
    a->add_option("inputs", aggregate.inputs, "participant=metrics.json pairs")->required();
    a->add_option("--metric", aggregate.metric, "metric to summarize (f1, precision, recall, or an error field)");
    a->add_flag("--two-stage", aggregate.two_stage, "aggregate within participants first, then across");
    a->add_option("--out", aggregate.out, "summary JSON path");

    cmd::SynthOptions synth;
    std::string synth_config;
    std::uint64_t synth_seed = 0;
    auto* s = app.add_subcommand("synth", "Generate a synthetic recording with ground truth");
    s->add_option("--config", synth_config, "key = value synth config");
    auto* seed_opt = s->add_option("--seed", synth_seed, "noise seed, overrides the config");
    s->add_option("--out", synth.out_dir, "output directory");

    cmd::FactorsOptions factors;
    auto* f = app.add_subcommand("factors", "Fit the Bayesian model of F1 against participant factors");
    f->add_option("table", factors.table, "CSV with header f1,age,sex,disease,subject,environment,aid")->required();
    f->add_option("--draws", factors.draws, "posterior draws per chain");
    f->add_option("--warmup", factors.warmup, "warmup iterations per chain");
    f->add_option("--chains", factors.chains, "number of chains");
    f->add_option("--seed", factors.seed, "sampler seed");
    f->add_option("--prior-scale", factors.prior_scale, "scale of the zero-centred effect priors");
    f->add_option("--out", factors.out, "posterior JSON path");

    bool print_defaults = false, for_synth = false;
    std::string check;
    auto* c = app.add_subcommand("config", "Print or check configuration files");
    c->add_flag("--print-defaults", print_defaults, "print every key with its default value");
    c->add_flag("--synth", for_synth, "use the synth config keys instead of the pipeline keys");
    c->add_option("--check", check, "parse and validate a config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        // help and version requests exit 0; every other parse failure is a usage error
        const int code = app.exit(ex);
        return code == 0 ? cmd::kOk : cmd::kUsage;
    }

    return cmd::run_guarded([&]() -> int {
        if (p->parsed()) {
            if (!process_config.empty()) process.config = process_config;
            return cmd::cmd_process(process);
        }
        if (e->parsed()) {
            if (!evaluate_config.empty()) evaluate.config = evaluate_config;
            if (window_opt->count()) evaluate.window_s = window;
            return cmd::cmd_evaluate(evaluate);
        }
        if (a->parsed()) return cmd::cmd_aggregate(aggregate);
        if (s->parsed()) {
            if (!synth_config.empty()) synth.config = synth_config;
            if (seed_opt->count()) synth.seed = synth_seed;
            return cmd::cmd_synth(synth);
        }
        if (f->parsed()) return cmd::cmd_factors(factors);
        if (!check.empty()) {
            if (for_synth) gaitkit::config::load_synth_config(check);
            else gaitkit::config::load_pipeline_config(check);
            std::cout << check << ": ok\n";
            return cmd::kOk;
        }
        if (print_defaults) return cmd::cmd_print_defaults(for_synth, std::cout);
        std::cerr << c->help();
        return cmd::kUsage;
    });
}
