#include "tunetree_cli/cli.hpp"

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tunetree/command_executor.hpp"
#include "tunetree/persist.hpp"
#include "tunetree/replay.hpp"
#include "tunetree/report.hpp"
#include "tunetree/sensitivity.hpp"
#include "tunetree/workload.hpp"

#ifndef TUNETREE_DEFAULT_DATA_DIR
#define TUNETREE_DEFAULT_DATA_DIR "data"
#endif

namespace tunetree::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

struct BackendOptions {
    std::string kind;
    std::string table;
    std::string model;
    std::optional<std::uint64_t> seed;
    std::string command;
    std::string workdir = ".";
    std::string inject = "properties-file";
    bool parallel_safe = false;
    std::string catalog;
};

struct Backend {
    ExecutorFactory factory;
    std::optional<ReplayTable> table;
};

nlohmann::json read_json(const fs::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(path.string() + ": " + e.what());
    }
}

/// `path` when it exists, else `<data>/<sub>/<path>` with or without `.json`.
fs::path resolve_data_file(const std::string& path, std::string_view sub)
{
    if (fs::exists(path)) return path;
    const fs::path base = data_dir() / sub;
    for (const fs::path& candidate : {base / path, base / (path + ".json")}) {
        if (fs::exists(candidate)) return candidate;
    }
    throw IoFailure("cannot find " + path + " (also looked under " + base.string() + ")");
}

Catalog load_catalog(const std::string& path)
{
    return path.empty() ? builtin_spark_catalog() : catalog_from_json(read_json(resolve_data_file(path, "catalog")));
}

WorkloadModel load_model(const std::string& name, const Catalog& catalog)
{
    for (const auto& m : builtin_models()) {
        if (m.name == name) return m;
    }
    return workload_model_from_json(read_json(resolve_data_file(name, "models")), catalog);
}

void add_backend_options(CLI::App* app, BackendOptions& o)
{
    app->add_option("--backend", o.kind, "Trial backend")->required()->check(CLI::IsMember({"command", "replay", "sim"}));
    app->add_option("--table", o.table, "Replay table file or fixture name (replay backend)");
    app->add_option("--model", o.model, "Built-in model name or model file (sim backend)");
    app->add_option("--seed", o.seed, "Noise seed (sim backend)");
    app->add_option("--cmd", o.command, "Shell command template containing {CONFIG} (command backend)");
    app->add_option("--workdir", o.workdir, "Working directory of the command (command backend)");
    app->add_option("--inject", o.inject, "How the configuration reaches the command (command backend)")
        ->check(CLI::IsMember({"properties-file", "arg-substitution", "environment"}));
    app->add_flag("--parallel-safe", o.parallel_safe, "Allow concurrent command runs (command backend)");
    app->add_option("--catalog", o.catalog, "Catalog file (default: built-in Spark 1.5.2 catalog)");
}

Backend make_backend(const BackendOptions& o, const Catalog& catalog)
{
    const bool has_table = !o.table.empty();
    const bool has_model = !o.model.empty() || o.seed;
    const bool has_command = !o.command.empty() || o.workdir != "." || o.inject != "properties-file" || o.parallel_safe;
    auto refuse = [&](bool present, const char* flags) {
        if (present) throw UsageError(std::string(flags) + " cannot be combined with --backend " + o.kind);
    };

    Backend b;
    if (o.kind == "replay") {
        refuse(has_model, "--model/--seed");
        refuse(has_command, "command backend flags");
        if (!has_table) throw UsageError("--backend replay needs --table");
        b.table = replay_table_from_json(read_json(resolve_data_file(o.table, "replay")), catalog);
        ReplayTable table = *b.table;
        b.factory = [table] { return replay_executor(table); };
    } else if (o.kind == "sim") {
        refuse(has_table, "--table");
        refuse(has_command, "command backend flags");
        if (o.model.empty()) throw UsageError("--backend sim needs --model");
        WorkloadModel model = load_model(o.model, catalog);
        validate(model, catalog);
        const std::uint64_t seed = o.seed.value_or(model.noise.default_seed);
        b.factory = [model, catalog, seed]() -> std::unique_ptr<TrialExecutor> {
            return std::make_unique<SimulatorExecutor>(model, catalog, seed);
        };
    } else {
        refuse(has_table, "--table");
        refuse(has_model, "--model/--seed");
        if (o.command.empty()) throw UsageError("--backend command needs --cmd");
        CommandSpec spec{o.command, o.workdir, parse_injection_mode(o.inject), o.parallel_safe};
        command_executor(spec, catalog);  // surfaces TemplateError before any run
        b.factory = [spec, catalog] { return command_executor(spec, catalog); };
    }
    return b;
}

/// Applies `name=value` pairs on top of `base`.
Configuration apply_sets(Configuration base, const std::vector<std::string>& sets, const Catalog& catalog)
{
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects name=value, got '" + s + "'");
        const std::string name = s.substr(0, eq);
        base.set(name, catalog.at(name).parse(s.substr(eq + 1)), kOriginUser);
    }
    validate(base, catalog);
    return base;
}

Configuration load_properties(const std::string& path, const Catalog& catalog)
{
    if (path.empty()) return {};
    Configuration c = parse_properties(read_text_file(path), catalog);
    validate(c, catalog);
    return c;
}

TuningPlan load_plan(bool canonical, const std::string& path, const Catalog& catalog)
{
    if (canonical == !path.empty()) throw UsageError("give exactly one of --canonical and --plan");
    const fs::path file = canonical ? data_dir() / "plans" / "canonical.json" : fs::path(path);
    return plan_from_json(read_json(file), catalog);
}

bool all_candidates_failed(const SessionTrace& trace)
{
    bool any = false;
    for (const auto& d : trace.decisions) {
        for (const auto& c : d.candidates) {
            if (c.result.ok()) return false;
            any = true;
        }
    }
    return any;
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
}

// ---- tune -------------------------------------------------------------

struct TuneOptions {
    BackendOptions backend;
    std::string plan;
    bool canonical = false;
    std::optional<double> threshold;
    std::string initial;
    std::vector<std::string> sets;
    int reps = 5;
    std::optional<double> timeout;
    std::string out = "tunetree-sessions";
    std::string format = "text";
};

int run_tune(const TuneOptions& o, std::ostream& out, std::ostream& err)
{
    const Catalog catalog = load_catalog(o.backend.catalog);
    TuningPlan plan = load_plan(o.canonical, o.plan, catalog);
    if (o.threshold) plan.threshold = *o.threshold;
    validate(plan, catalog);
    const ReportFormat format = parse_report_format(o.format);

    Backend backend = make_backend(o.backend, catalog);
    Configuration initial = load_properties(o.initial, catalog);
    if (o.initial.empty() && backend.table) initial = Configuration::from(backend.table->initial());
    initial = apply_sets(std::move(initial), o.sets, catalog);

    auto executor = backend.factory();
    SessionTrace trace = run_session(plan, initial, *executor, catalog, SessionOptions{o.reps, o.timeout});
    const bool failed = all_candidates_failed(trace);
    const SessionRecord record = make_record(std::move(trace), plan, catalog, *executor);
    const fs::path dir = save(record, o.out);

    out << render_report(record, format);
    err << "session saved to " << dir.string() << "\n";
    if (failed) {
        err << "every candidate crashed or timed out\n";
        return exit_all_crashed;
    }
    return exit_ok;
}

// ---- sweep ------------------------------------------------------------

struct SweepOptions {
    BackendOptions backend;
    std::string spec;
    std::vector<std::string> params;
    bool all = false;
    std::string baseline;
    std::vector<std::string> sets;
    std::string rule = "half-and-1.5x";
    std::vector<std::string> values;
    int reps = 5;
    std::optional<double> timeout;
    unsigned jobs = 1;
    std::string out;
    std::string format = "text";
};

nlohmann::json trials_json(const SweepSpec& spec, const SweepResult& result)
{
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : result.trials) {
        trials.push_back({{"row", t.row}, {"value", t.value}, {"assignments", to_json(t.assignments)}, {"result", to_json(t.result)}});
    }
    return {{"schema", kSchemaVersion}, {"spec", to_json(spec)}, {"baseline", to_json(result.baseline)}, {"trials", std::move(trials)}};
}

int run_sweep_command(const SweepOptions& o, std::ostream& out, std::ostream& err)
{
    const Catalog catalog = load_catalog(o.backend.catalog);
    SweepSpec spec;
    if (!o.spec.empty()) {
        if (o.all || !o.params.empty()) throw UsageError("--spec cannot be combined with --params or --all");
        spec = sweep_spec_from_json(read_json(o.spec), catalog);
    } else {
        if (o.all == !o.params.empty()) throw UsageError("give exactly one of --params and --all");
        if (o.all) {
            for (const auto& p : catalog.parameters()) spec.parameters.push_back(p.name);
        } else {
            spec.parameters = o.params;
        }
        spec.baseline = load_properties(o.baseline, catalog);
        spec.reps = o.reps;
        spec.timeout_s = o.timeout;
        spec.rule = parse_neighborhood_rule(o.rule);
        for (const auto& v : o.values) {
            const auto eq = v.find('=');
            if (eq == std::string::npos) throw UsageError("--values expects name=v1,v2, got '" + v + "'");
            const std::string name = v.substr(0, eq);
            const auto& def = catalog.at(name);
            std::string rest = v.substr(eq + 1);
            for (std::size_t start = 0; start <= rest.size();) {
                const auto comma = std::min(rest.find(',', start), rest.size());
                spec.explicit_values[name].push_back(def.parse(rest.substr(start, comma - start)));
                start = comma + 1;
            }
        }
    }
    spec.baseline = apply_sets(std::move(spec.baseline), o.sets, catalog);
    validate(spec, catalog);
    const ReportFormat format = parse_report_format(o.format);
    if (format == ReportFormat::properties) throw UsageError("sweep reports are text, csv or json");

    Backend backend = make_backend(o.backend, catalog);
    const SweepResult result = o.jobs > 1 ? run_sweep_parallel(spec, catalog, backend.factory, o.jobs)
                                          : run_sweep(spec, catalog, *backend.factory());
    const auto rows = impact_table(result);

    if (!o.out.empty()) {
        const fs::path dir = o.out;
        ensure_dir(dir);
        write_text_file(dir / "impact.csv", impact_csv(rows));
        write_text_file(dir / "impact.json", impact_json(rows, result.baseline).dump(2) + "\n");
        write_text_file(dir / "trials.json", trials_json(spec, result).dump(2) + "\n");
        err << "sweep written to " << dir.string() << "\n";
    }
    switch (format) {
    case ReportFormat::csv: out << impact_csv(rows); break;
    case ReportFormat::json: out << impact_json(rows, result.baseline).dump(2) << "\n"; break;
    default: out << impact_text(rows, result.baseline); break;
    }
    return exit_ok;
}

// ---- simulate ---------------------------------------------------------

struct SimulateOptions {
    std::string model;
    std::string properties;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool print_model = false;
    bool list = false;
    std::string catalog;
};

int run_simulate(const SimulateOptions& o, std::ostream& out)
{
    if (o.list) {
        for (const auto& m : builtin_models()) out << m.name << "\n";
        return exit_ok;
    }
    if (o.model.empty()) throw UsageError("simulate needs --model (or --list)");
    const Catalog catalog = load_catalog(o.catalog);
    const WorkloadModel model = load_model(o.model, catalog);
    validate(model, catalog);
    if (o.print_model) {
        out << to_json(model).dump(2) << "\n";
        return exit_ok;
    }
    const Configuration config = apply_sets(load_properties(o.properties, catalog), o.sets, catalog);
    const RunOutcome r = evaluate(model, config, catalog, o.seed.value_or(model.noise.default_seed));
    if (r.status == TrialStatus::ok) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
        out << "runtime " << buf << " s\n";
    } else {
        out << to_string(r.status) << "\n";
    }
    return exit_ok;
}

// ---- replay -----------------------------------------------------------

int run_replay(const std::string& path, std::ostream& out, std::ostream& err)
{
    const SessionRecord record = load(path);
    const Catalog catalog = catalog_from_json(record.catalog);
    if (!executor_from_descriptor(record.backend, catalog)->deterministic()) {
        throw UsageError("session " + record.session_id + " used a non-deterministic backend; nothing to compare");
    }
    const SessionTrace again = rerun(record);
    const std::string before = to_json(record.trace).dump(2);
    const std::string after = to_json(again).dump(2);
    if (before == after) {
        out << "session " << record.session_id << " reproduced: " << record.trace.decisions.size()
            << " decisions, final runtime " << format_number(again.final_runtime_s) << " s\n";
        return exit_ok;
    }
    err << "session " << record.session_id << " did not reproduce\n";
    return exit_backend;
}

int dispatch_errors(const std::function<int()>& body, std::ostream& err)
{
    try {
        return body();
    } catch (const UsageError& e) {
        err << "usage: " << e.what() << "\n";
        return exit_usage;
    } catch (const ExecutorFailure& e) {
        err << "backend failure: " << e.what() << "\n";
        return exit_backend;
    } catch (const BaselineFailed& e) {
        err << "error: " << e.what() << "\n";
        return exit_all_crashed;
    } catch (const NoValidValues& e) {
        err << "error: " << e.what() << "\n";
        return exit_all_crashed;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
}

} // namespace

fs::path data_dir()
{
    if (const char* env = std::getenv("TUNETREE_DATA_DIR"); env && *env) return env;
    return TUNETREE_DEFAULT_DATA_DIR;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"tunetree: greedy configuration tuning for Spark-style applications"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1, 1);

    TuneOptions tune;
    auto* tune_cmd = app.add_subcommand("tune", "Run a tuning plan and save the session");
    tune_cmd->add_option("--plan", tune.plan, "Plan file");
    tune_cmd->add_flag("--canonical", tune.canonical, "Use the shipped canonical Spark plan");
    tune_cmd->add_option("--threshold", tune.threshold, "Override the plan's acceptance threshold")
        ->check(CLI::Range(0.0, 0.999999));
    add_backend_options(tune_cmd, tune.backend);
    tune_cmd->add_option("--initial", tune.initial, "Initial configuration (properties file)");
    tune_cmd->add_option("--set", tune.sets, "Initial setting name=value (repeatable)");
    tune_cmd->add_option("--reps", tune.reps, "Repetitions per trial")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--timeout", tune.timeout, "Per-run timeout in seconds")->check(CLI::PositiveNumber);
    tune_cmd->add_option("--out", tune.out, "Directory receiving the session record");
    tune_cmd->add_option("--format", tune.format, "Report printed on stdout")
        ->check(CLI::IsMember({"text", "json", "csv", "properties"}));

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "One-at-a-time sensitivity sweep");
    sweep_cmd->add_option("--params", sweep.params, "Parameters to sweep (comma separated)")->delimiter(',');
    sweep_cmd->add_flag("--all", sweep.all, "Sweep every catalog parameter");
    sweep_cmd->add_option("--spec", sweep.spec, "Sweep document ({\"sweep\": {...}})");
    add_backend_options(sweep_cmd, sweep.backend);
    sweep_cmd->add_option("--baseline", sweep.baseline, "Baseline configuration (properties file)");
    sweep_cmd->add_option("--set", sweep.sets, "Baseline setting name=value (repeatable)");
    sweep_cmd->add_option("--rule", sweep.rule, "Numeric neighbourhood rule")
        ->check(CLI::IsMember({"half-and-1.5x", "explicit"}));
    sweep_cmd->add_option("--values", sweep.values, "Explicit values name=v1,v2 (repeatable)");
    sweep_cmd->add_option("--reps", sweep.reps, "Repetitions per trial")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--timeout", sweep.timeout, "Per-run timeout in seconds")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--jobs", sweep.jobs, "Parallel workers for parallel-safe backends")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep.out, "Directory receiving impact.csv, impact.json and trials.json");
    sweep_cmd->add_option("--format", sweep.format, "Table printed on stdout")->check(CLI::IsMember({"text", "csv", "json"}));

    std::string replay_path;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a saved session and compare the traces");
    replay_cmd->add_option("session", replay_path, "Session directory or record.json")->required();

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Evaluate a workload model for one configuration");
    sim_cmd->add_option("--model", sim.model, "Built-in model name or model file");
    sim_cmd->add_option("--properties", sim.properties, "Configuration (properties file)");
    sim_cmd->add_option("--set", sim.sets, "Setting name=value (repeatable)");
    sim_cmd->add_option("--seed", sim.seed, "Noise seed");
    sim_cmd->add_flag("--print-model", sim.print_model, "Print the model document instead of evaluating");
    sim_cmd->add_flag("--list", sim.list, "List built-in models");
    sim_cmd->add_option("--catalog", sim.catalog, "Catalog file");

    std::string report_path;
    std::string report_format = "text";
    auto* report_cmd = app.add_subcommand("report", "Render a saved session");
    report_cmd->add_option("session", report_path, "Session directory or record.json")->required();
    report_cmd->add_option("--format", report_format, "Output format")
        ->check(CLI::IsMember({"text", "json", "csv", "properties"}));

    std::string plan_path;
    bool plan_canonical = false;
    bool plan_builtin = false;
    std::optional<double> plan_threshold;
    auto* plan_cmd = app.add_subcommand("emit-plan", "Print a plan document");
    plan_cmd->add_flag("--canonical", plan_canonical, "The shipped canonical plan file");
    plan_cmd->add_flag("--builtin", plan_builtin, "The canonical plan compiled into the library");
    plan_cmd->add_option("--plan", plan_path, "Plan file to validate and normalise");
    plan_cmd->add_option("--threshold", plan_threshold, "Override the threshold")->check(CLI::Range(0.0, 0.999999));

    std::string catalog_path;
    auto* catalog_cmd = app.add_subcommand("emit-catalog", "Print the parameter catalog");
    catalog_cmd->add_option("--catalog", catalog_path, "Catalog file to validate and normalise");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    return dispatch_errors(
        [&]() -> int {
            if (*tune_cmd) return run_tune(tune, out, err);
            if (*sweep_cmd) return run_sweep_command(sweep, out, err);
            if (*replay_cmd) return run_replay(replay_path, out, err);
            if (*sim_cmd) return run_simulate(sim, out);
            if (*report_cmd) {
                out << render_report(load(report_path), parse_report_format(report_format));
                return exit_ok;
            }
            if (*plan_cmd) {
                const Catalog catalog = builtin_spark_catalog();
                if (plan_builtin + plan_canonical + !plan_path.empty() != 1) {
                    throw UsageError("give exactly one of --builtin, --canonical and --plan");
                }
                TuningPlan plan = plan_builtin ? canonical_spark_plan(plan_threshold.value_or(0.10))
                                               : load_plan(plan_canonical, plan_path, catalog);
                if (plan_threshold) plan.threshold = *plan_threshold;
                validate(plan, catalog);
                out << to_json(plan).dump(2) << "\n";
                return exit_ok;
            }
            if (*catalog_cmd) {
                out << to_json(load_catalog(catalog_path)).dump(2) << "\n";
                return exit_ok;
            }
            throw UsageError("no subcommand");
        },
        err);
}

} // namespace tunetree::cli
