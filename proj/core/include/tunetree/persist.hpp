#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "tunetree/session.hpp"

namespace tunetree {

inline constexpr std::string_view kSchemaVersion = "v1";

/// Everything needed to re-run and re-report a session.
struct SessionRecord {
    std::string session_id;
    std::string created;  // UTC, ISO 8601
    SessionTrace trace;
    nlohmann::json plan;
    nlohmann::json catalog;
    nlohmann::json backend;  // TrialExecutor::descriptor()
    std::string tool_version;

    bool operator==(const SessionRecord&) const = default;
};

/// Version string of the library build.
std::string_view tool_version();

/// Fixed-width microsecond timestamp plus a random hex suffix. Ids from one
/// process are strictly increasing in lexicographic order.
std::string new_session_id();

/// Current UTC time as `YYYY-MM-DDTHH:MM:SSZ`.
std::string utc_timestamp();

/// Fills id, timestamp and version around a finished trace.
SessionRecord make_record(SessionTrace trace, const TuningPlan& plan, const Catalog& catalog,
                          const TrialExecutor& executor);

nlohmann::json to_json(const SessionRecord& record);
/// Throws SchemaVersionMismatch or DocumentError.
SessionRecord session_record_from_json(const nlohmann::json& doc);

/// Writes `<root>/<session_id>/{record.json,report.txt,final.properties}`
/// and returns the session directory. Throws IoFailure.
std::filesystem::path save(const SessionRecord& record, const std::filesystem::path& root);

/// Accepts the session directory or its record.json.
/// Throws IoFailure, SchemaVersionMismatch, DocumentError.
SessionRecord load(const std::filesystem::path& path);

/// Rebuilds the executor a record was produced with from its descriptor.
/// Throws DocumentError for an unknown backend kind.
std::unique_ptr<TrialExecutor> executor_from_descriptor(const nlohmann::json& descriptor, const Catalog& catalog);

/// Runs the recorded plan again from the recorded initial configuration,
/// with the recorded repetitions and timeout.
SessionTrace rerun(const SessionRecord& record);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace tunetree
