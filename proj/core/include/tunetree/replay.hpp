#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tunetree/runner.hpp"

namespace tunetree {

enum class ReplayFallback {
    strict,          // unknown configuration -> MissingEntry
    nearest_subset,  // entry whose assignments form the largest subset of the query
};

std::string_view to_string(ReplayFallback fallback);
ReplayFallback parse_replay_fallback(std::string_view text);

struct ReplayEntry {
    Assignments assignments;
    RunOutcome outcome;  // ok or crash

    bool operator==(const ReplayEntry&) const = default;
};

/// Recorded configuration -> runtime mapping.
class ReplayTable {
public:
    ReplayTable() = default;
    /// Requires an entry for `initial`; throws DocumentError otherwise.
    ReplayTable(std::string name, std::vector<ReplayEntry> entries, ReplayFallback fallback,
                Assignments initial = {}, std::string notes = {});

    const std::string& name() const noexcept { return name_; }
    const std::vector<ReplayEntry>& entries() const noexcept { return entries_; }
    ReplayFallback fallback() const noexcept { return fallback_; }
    const Assignments& initial() const noexcept { return initial_; }
    const std::string& default_digest() const noexcept { return default_digest_; }
    const std::string& notes() const noexcept { return notes_; }

    /// Exact digest match first, then the fallback rule. Ties among equally
    /// large subsets go to the lexicographically smallest canonical text.
    /// Throws MissingEntry.
    const ReplayEntry& lookup(const Assignments& query) const;

    bool operator==(const ReplayTable& other) const
    {
        return name_ == other.name_ && entries_ == other.entries_ && fallback_ == other.fallback_ &&
               initial_ == other.initial_ && notes_ == other.notes_;
    }

private:
    std::string name_;
    std::vector<ReplayEntry> entries_;
    ReplayFallback fallback_ = ReplayFallback::strict;
    Assignments initial_;
    std::string notes_;
    std::string default_digest_;
    std::map<std::string, std::size_t> by_digest_;
};

nlohmann::json to_json(const ReplayTable& table);
/// `{name, fallback?, initial?, notes?, entries: [{assignments, outcome: {"runtime": s} | "crash"}]}`.
ReplayTable replay_table_from_json(const nlohmann::json& doc, const Catalog& catalog);

class ReplayExecutor final : public TrialExecutor {
public:
    explicit ReplayExecutor(ReplayTable table) : table_(std::move(table)) {}

    RunOutcome measure(const Configuration& config, std::optional<double> timeout_s) override;
    bool deterministic() const override { return true; }
    bool parallel_safe() const override { return true; }
    std::string backend() const override { return "replay:" + table_.name(); }
    nlohmann::json descriptor() const override;

    const ReplayTable& table() const noexcept { return table_; }

private:
    ReplayTable table_;
};

std::unique_ptr<TrialExecutor> replay_executor(ReplayTable table);

} // namespace tunetree
