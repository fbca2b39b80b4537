#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunetree/plan.hpp"
#include "tunetree/runner.hpp"

namespace tunetree {

enum class Verdict { improved_beyond_threshold, below_threshold, worse, crashed, timeout };

std::string_view to_string(Verdict verdict);
Verdict parse_verdict(std::string_view text);

inline constexpr std::string_view kNoCandidate = "none";

struct CandidateTrial {
    std::string label;
    TrialResult result;

    bool operator==(const CandidateTrial&) const = default;
};

/// What happened at one plan node on one branch.
struct Decision {
    std::string node_id;
    std::string branch;     // node ids from the root, joined by '/'
    std::string candidate;  // accepted label, or "none"
    double baseline_s = 0.0;  // running best the candidates were judged against
    double threshold = 0.0;
    std::vector<CandidateTrial> candidates;
    bool accepted = false;
    Verdict reason = Verdict::worse;

    bool operator==(const Decision&) const = default;

    /// Accepted candidate, or else the best ok one, or else the first.
    const CandidateTrial* headline() const;
};

/// Full audit log of a tuning session.
struct SessionTrace {
    std::string plan_id;
    double threshold = 0.0;
    int reps = 1;
    std::optional<double> timeout_s;
    Configuration initial;
    TrialResult baseline;
    std::vector<Decision> decisions;
    Configuration final_configuration;
    double final_runtime_s = 0.0;
    std::string final_branch;
    std::size_t executor_calls = 0;

    bool operator==(const SessionTrace&) const = default;

    std::size_t accepted_count() const;
};

struct SessionOptions {
    int reps = 5;
    std::optional<double> timeout_s;
};

/// Greedy traversal. The initial configuration is measured first; every
/// node then tries its candidates on top of the branch's current
/// configuration and keeps the fastest one whose median beats the running
/// best by more than the threshold. Accepted settings flow to children.
/// Crashed, timed-out and infeasible candidates are never accepted.
///
/// Throws PlanInvalid, ValidationError (initial), BaselineFailed,
/// ExecutorFailure.
SessionTrace run_session(const TuningPlan& plan, const Configuration& initial, TrialExecutor& executor,
                         const Catalog& catalog, const SessionOptions& options = {});

struct OracleResult {
    Configuration configuration;
    double runtime_s = 0.0;
    std::size_t reachable = 0;  // configurations enumerated
};

/// Exhaustive search over every accept/skip pattern of the plan, measured
/// with a deterministic executor. Test oracle for the greedy walk.
/// Throws SearchSpaceTooLarge above `limit` configurations.
OracleResult exhaustive_oracle(const TuningPlan& plan, const Configuration& initial, TrialExecutor& executor,
                               const Catalog& catalog, std::size_t limit = 10'000);

nlohmann::json to_json(const Decision& decision);
Decision decision_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionTrace& trace);
SessionTrace session_trace_from_json(const nlohmann::json& j);

} // namespace tunetree
