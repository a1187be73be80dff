#ifndef GAITKIT_COMMANDS_HPP
#define GAITKIT_COMMANDS_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gaitkit/config.hpp"
#include "gaitkit/evaluate.hpp"
#include "gaitkit/factors.hpp"
#include "gaitkit/ingest.hpp"
#include "gaitkit/json_io.hpp"
#include "gaitkit/pipeline.hpp"
#include "gaitkit/synth.hpp"

namespace gaitkit::commands {

namespace fs = std::filesystem;
using json_io::json;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Writes through a temporary sibling and renames, so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path() && !path.parent_path().empty()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline PipelineConfig pipeline_config(const std::optional<std::string>& path) {
    return path ? config::load_pipeline_config(*path) : PipelineConfig{};
}

// ---------------------------------------------------------------------------

struct ProcessOptions {
    std::string recording;
    std::optional<std::string> config;
    std::string out_dir = ".";
};

/// recording.csv -> events.json, segments.json, bouts.json
inline int cmd_process(const ProcessOptions& opt, std::ostream& log = std::cerr) {
    const auto cfg = pipeline_config(opt.config);
    const auto rec = load_recording(opt.recording);
    const auto res = run_pipeline(rec, cfg);
    json bouts = json::array();
    for (const auto& b : res.bouts) bouts.push_back(json_io::to_json(b));
    const fs::path dir(opt.out_dir);
    write_atomic(dir / "events.json", dump(json_io::to_json(res.events)));
    write_atomic(dir / "segments.json", dump(json_io::to_json(res.refined)));
    write_atomic(dir / "bouts.json", dump(bouts));
    std::size_t skipped = 0;
    for (const auto& b : res.bouts)
        if (!b.detection) {
            ++skipped;
            log << "bout " << b.bout.start_s << "-" << b.bout.end_s << " s skipped: " << b.skipped << "\n";
        }
    log << opt.recording << ": " << res.eligible.size() << " eligible bouts (" << skipped << " skipped), "
        << res.events.size() << " events\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
    std::string events;
    std::string reference;
    std::optional<std::string> config;
    std::optional<double> window_s;
    std::string out = "metrics.json";
};

inline json evaluate_json(const std::vector<GaitEvent>& detected, const std::vector<GaitEvent>& reference, double window_s) {
    json out = json::array();
    for (auto kind : {EventKind::InitialContact, EventKind::FinalContact})
        out.push_back(json_io::to_json(evaluate_kind(detected, reference, kind, window_s)));
    return out;
}

/// events.json + reference.csv -> metrics.json with one row per event kind.
inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& log = std::cerr) {
    const auto cfg = pipeline_config(opt.config);
    const double window = opt.window_s.value_or(cfg.match_window_s);
    if (!(window > 0.0)) throw ConfigError("--window must be positive");
    const auto detected = json_io::events_from_json(json_io::read_file(opt.events));
    const auto reference = load_reference_events(opt.reference);
    const auto metrics = evaluate_json(detected, reference, window);
    write_atomic(opt.out, dump(metrics));
    for (const auto& m : metrics)
        log << m["kind"].get<std::string>() << ": tp " << m["tp"] << " fp " << m["fp"] << " fn " << m["fn"] << " f1 " << m["f1"] << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct AggregateOptions {
    std::vector<std::string> inputs;  ///< participant=metrics.json
    std::string metric = "f1";
    bool two_stage = false;
    std::string out = "summary.json";
};

/// Per event kind: either two-stage (within participant, then across) or pooled over tests.
inline int cmd_aggregate(const AggregateOptions& opt, std::ostream& log = std::cerr) {
    if (opt.inputs.empty()) throw ConfigError("no metrics files given");
    std::map<EventKind, std::map<std::string, std::vector<double>>> values;
    std::size_t missing = 0;
    for (const auto& spec : opt.inputs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
            throw ConfigError("input '" + spec + "' must look like participant=metrics.json");
        const std::string participant = spec.substr(0, eq);
        for (const auto& row : json_io::metrics_from_json(json_io::read_file(spec.substr(eq + 1)))) {
            const auto v = json_io::metric_value(row.row, opt.metric);
            if (v) values[row.kind][participant].push_back(*v);
            else ++missing;
        }
    }
    if (values.empty()) throw EmptySetError("no '" + opt.metric + "' values found in the inputs");
    json out = json::object();
    for (const auto& [kind, per_participant] : values) {
        AggregateSummary s;
        if (opt.two_stage) {
            s = aggregate_two_stage(per_participant);
        } else {
            std::vector<double> pooled;
            for (const auto& [p, v] : per_participant) pooled.insert(pooled.end(), v.begin(), v.end());
            s = aggregate_across(pooled);
        }
        json j = json_io::to_json(s);
        j["metric"] = opt.metric;
        j["two_stage"] = opt.two_stage;
        j["participants"] = per_participant.size();
        out[std::string(to_string(kind))] = j;
    }
    write_atomic(opt.out, dump(out));
    if (missing) log << missing << " entries had no '" << opt.metric << "' value and were skipped\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

/// recording.csv, reference.csv (for `evaluate`), truth_events.json, truth_segments.json
inline int cmd_synth(const SynthOptions& opt, std::ostream& log = std::cerr) {
    SynthConfig cfg = opt.config ? config::load_synth_config(*opt.config) : SynthConfig{};
    if (opt.seed) cfg.seed = *opt.seed;
    const auto out = generate(cfg);
    const fs::path dir(opt.out_dir);
    std::ostringstream rec, ref;
    write_recording(rec, out.recording);
    write_reference_events(ref, out.events);
    write_atomic(dir / "recording.csv", rec.str());
    write_atomic(dir / "reference.csv", ref.str());
    write_atomic(dir / "truth_events.json", dump(json_io::to_json(out.events)));
    write_atomic(dir / "truth_segments.json", dump(json_io::to_json(out.segments)));
    log << "wrote " << out.recording.size() << " samples and " << out.events.size() << " events to " << dir.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct FactorsOptions {
    std::string table;
    int draws = HmcConfig{}.draws;
    int warmup = HmcConfig{}.warmup;
    int chains = HmcConfig{}.chains;
    std::uint64_t seed = 1;
    double prior_scale = FactorModel::kDefaultPriorScale;
    std::string out = "posterior.json";
};

/// table.csv -> posterior.json with one row per contrast.
inline int cmd_factors(const FactorsOptions& opt, std::ostream& log = std::cerr) {
    const FactorModel model(load_factor_table(opt.table), opt.prior_scale);
    HmcConfig hmc;
    hmc.draws = opt.draws;
    hmc.warmup = opt.warmup;
    hmc.chains = opt.chains;
    hmc.seed = opt.seed;
    const auto sample = sample_posterior(model, hmc);
    const auto rows = contrasts(sample);
    write_atomic(opt.out, dump(json_io::to_json(rows)));
    const double rhat = max_rhat(sample);
    log << model.data().observations.size() << " observations, " << model.n_subjects() << " subjects; "
        << sample.total_draws() << " draws, acceptance " << sample.acceptance_rate() << ", divergences "
        << sample.divergences() << ", max R-hat " << rhat << "\n";
    if (rhat >= 1.05) log << "warning: R-hat >= 1.05; rerun with more --warmup and --draws\n";
    return kOk;
}

// ---------------------------------------------------------------------------

inline int cmd_print_defaults(bool synth, std::ostream& out) {
    if (synth) config::write_synth_config(out);
    else config::write_pipeline_config(out);
    return kOk;
}

/// Maps library errors to exit codes: bad input or options give 2, processing failures 1.
template <class F>
int run_guarded(F&& f, std::ostream& err = std::cerr) {
    try {
        return f();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace gaitkit::commands

#endif
