#include "tunetree/persist.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "tunetree/command_executor.hpp"
#include "tunetree/replay.hpp"
#include "tunetree/report.hpp"
#include "tunetree/workload.hpp"

#ifndef TUNETREE_VERSION
#define TUNETREE_VERSION "0.0.0"
#endif

namespace tunetree {

namespace fs = std::filesystem;

std::string_view tool_version() { return TUNETREE_VERSION; }

std::string new_session_id()
{
    static std::mutex mutex;
    static long long last = 0;
    static std::mt19937_64 rng{std::random_device{}()};

    std::lock_guard lock(mutex);
    const auto now = std::chrono::duration_cast<std::chrono::microseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    last = std::max<long long>(now, last + 1);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%017lld-%08llx", last, static_cast<unsigned long long>(rng() & 0xffffffffULL));
    return buf;
}

std::string utc_timestamp()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

SessionRecord make_record(SessionTrace trace, const TuningPlan& plan, const Catalog& catalog,
                          const TrialExecutor& executor)
{
    return SessionRecord{new_session_id(), utc_timestamp(), std::move(trace), to_json(plan),
                         to_json(catalog), executor.descriptor(), TUNETREE_VERSION};
}

nlohmann::json to_json(const SessionRecord& r)
{
    return {
        {"schema", kSchemaVersion},
        {"session_id", r.session_id},
        {"created", r.created},
        {"tool_version", r.tool_version},
        {"plan", r.plan},
        {"catalog", r.catalog},
        {"backend", r.backend},
        {"trace", to_json(r.trace)},
    };
}

SessionRecord session_record_from_json(const nlohmann::json& doc)
{
    try {
        const auto schema = doc.at("schema").get<std::string>();
        if (schema != kSchemaVersion) {
            throw SchemaVersionMismatch("record schema '" + schema + "' is not " + std::string(kSchemaVersion));
        }
        SessionRecord r;
        r.session_id = doc.at("session_id").get<std::string>();
        r.created = doc.at("created").get<std::string>();
        r.tool_version = doc.at("tool_version").get<std::string>();
        r.plan = doc.at("plan");
        r.catalog = doc.at("catalog");
        r.backend = doc.at("backend");
        r.trace = session_trace_from_json(doc.at("trace"));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(std::string("malformed session record: ") + e.what());
    }
}

std::unique_ptr<TrialExecutor> executor_from_descriptor(const nlohmann::json& d, const Catalog& catalog)
{
    try {
        const auto kind = d.at("kind").get<std::string>();
        if (kind == "replay") return replay_executor(replay_table_from_json(d.at("table"), catalog));
        if (kind == "sim") {
            Catalog own = d.contains("catalog") ? catalog_from_json(d.at("catalog")) : catalog;
            WorkloadModel model = workload_model_from_json(d.at("model"), own);
            return std::make_unique<SimulatorExecutor>(std::move(model), std::move(own), d.at("seed").get<std::uint64_t>());
        }
        if (kind == "command") {
            CommandSpec spec;
            spec.command_template = d.at("template").get<std::string>();
            spec.workdir = d.at("workdir").get<std::string>();
            spec.mode = parse_injection_mode(d.at("inject").get<std::string>());
            spec.parallel_safe = d.value("parallel_safe", false);
            return command_executor(std::move(spec), d.contains("catalog") ? catalog_from_json(d.at("catalog")) : catalog);
        }
        throw DocumentError("unknown backend kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(std::string("malformed backend descriptor: ") + e.what());
    }
}

SessionTrace rerun(const SessionRecord& record)
{
    const Catalog catalog = catalog_from_json(record.catalog);
    const TuningPlan plan = plan_from_json(record.plan, catalog);
    auto executor = executor_from_descriptor(record.backend, catalog);
    return run_session(plan, record.trace.initial, *executor, catalog,
                       SessionOptions{record.trace.reps, record.trace.timeout_s});
}

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoFailure("error while reading " + path.string());
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoFailure("error while writing " + path.string());
}

fs::path save(const SessionRecord& record, const fs::path& root)
{
    if (record.session_id.empty()) throw IoFailure("record has no session id");
    const fs::path dir = root / record.session_id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());

    write_text_file(dir / "record.json", to_json(record).dump(2) + "\n");
    write_text_file(dir / "report.txt", render_report(record, ReportFormat::text));
    write_text_file(dir / "final.properties", render_report(record, ReportFormat::properties));
    return dir;
}

SessionRecord load(const fs::path& path)
{
    const fs::path file = fs::is_directory(path) ? path / "record.json" : path;
    const std::string text = read_text_file(file);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(file.string() + ": " + e.what());
    }
    return session_record_from_json(doc);
}

} // namespace tunetree
