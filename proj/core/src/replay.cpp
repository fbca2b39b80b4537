#include "tunetree/replay.hpp"

namespace tunetree {

namespace {

bool is_subset(const Assignments& small, const Assignments& big)
{
    for (const auto& [k, v] : small) {
        auto it = big.find(k);
        if (it == big.end() || !values_equal(it->second, v)) return false;
    }
    return true;
}

} // namespace

std::string_view to_string(ReplayFallback fallback)
{
    return fallback == ReplayFallback::strict ? "strict" : "nearest-subset";
}

ReplayFallback parse_replay_fallback(std::string_view text)
{
    if (text == "strict") return ReplayFallback::strict;
    if (text == "nearest-subset") return ReplayFallback::nearest_subset;
    throw DocumentError("unknown replay fallback '" + std::string(text) + "'");
}

ReplayTable::ReplayTable(std::string name, std::vector<ReplayEntry> entries, ReplayFallback fallback,
                         Assignments initial, std::string notes)
    : name_(std::move(name))
    , entries_(std::move(entries))
    , fallback_(fallback)
    , initial_(std::move(initial))
    , notes_(std::move(notes))
    , default_digest_(digest(initial_))
{
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].outcome.status == TrialStatus::timeout) {
            throw DocumentError("replay table " + name_ + ": outcomes are runtimes or crash");
        }
        if (!by_digest_.emplace(digest(entries_[i].assignments), i).second) {
            throw DocumentError("replay table " + name_ + ": duplicate entry " + canonical_text(entries_[i].assignments));
        }
    }
    if (!by_digest_.contains(default_digest_)) {
        throw DocumentError("replay table " + name_ + " has no entry for its initial configuration");
    }
}

const ReplayEntry& ReplayTable::lookup(const Assignments& query) const
{
    if (auto it = by_digest_.find(digest(query)); it != by_digest_.end()) return entries_[it->second];
    if (fallback_ == ReplayFallback::strict) {
        throw MissingEntry("replay table " + name_ + " has no entry for {" + canonical_text(query) + "}");
    }
    const ReplayEntry* best = nullptr;
    std::string best_text;
    for (const auto& e : entries_) {
        if (!is_subset(e.assignments, query)) continue;
        std::string text = canonical_text(e.assignments);
        if (!best || e.assignments.size() > best->assignments.size() ||
            (e.assignments.size() == best->assignments.size() && text < best_text)) {
            best = &e;
            best_text = std::move(text);
        }
    }
    if (!best) throw MissingEntry("replay table " + name_ + ": no subset entry matches {" + canonical_text(query) + "}");
    return *best;
}

nlohmann::json to_json(const ReplayTable& table)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : table.entries()) {
        nlohmann::json outcome = e.outcome.status == TrialStatus::crash ? nlohmann::json("crash")
                                                                        : nlohmann::json{{"runtime", e.outcome.seconds}};
        entries.push_back({{"assignments", to_json(e.assignments)}, {"outcome", std::move(outcome)}});
    }
    nlohmann::json j{
        {"name", table.name()},
        {"fallback", to_string(table.fallback())},
        {"initial", to_json(table.initial())},
        {"entries", std::move(entries)},
    };
    if (!table.notes().empty()) j["notes"] = table.notes();
    return j;
}

ReplayTable replay_table_from_json(const nlohmann::json& doc, const Catalog& catalog)
{
    try {
        std::vector<ReplayEntry> entries;
        for (const auto& je : doc.at("entries")) {
            ReplayEntry e;
            e.assignments = assignments_from_json(je.at("assignments"), catalog);
            const auto& jo = je.at("outcome");
            if (jo.is_string() && jo.get<std::string>() == "crash") {
                e.outcome = RunOutcome::crash();
            } else if (jo.is_object() && jo.contains("runtime")) {
                const double s = jo.at("runtime").get<double>();
                if (!(s > 0.0)) throw DocumentError("replay runtime must be positive");
                e.outcome = RunOutcome::ok(s);
            } else {
                throw DocumentError("replay outcome must be {\"runtime\": s} or \"crash\", got " + jo.dump());
            }
            entries.push_back(std::move(e));
        }
        Assignments initial;
        if (doc.contains("initial")) initial = assignments_from_json(doc.at("initial"), catalog);
        return ReplayTable(doc.at("name").get<std::string>(), std::move(entries),
                           parse_replay_fallback(doc.value("fallback", "strict")), std::move(initial),
                           doc.value("notes", ""));
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(std::string("malformed replay table: ") + e.what());
    }
}

RunOutcome ReplayExecutor::measure(const Configuration& config, std::optional<double> timeout_s)
{
    RunOutcome out = table_.lookup(config.settings).outcome;
    if (out.status == TrialStatus::ok && timeout_s && out.seconds > *timeout_s) return RunOutcome::timeout();
    return out;
}

nlohmann::json ReplayExecutor::descriptor() const
{
    return {{"kind", "replay"}, {"table", to_json(table_)}};
}

std::unique_ptr<TrialExecutor> replay_executor(ReplayTable table)
{
    return std::make_unique<ReplayExecutor>(std::move(table));
}

} // namespace tunetree
