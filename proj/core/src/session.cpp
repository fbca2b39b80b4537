#include "tunetree/session.hpp"

#include <functional>
#include <map>

namespace tunetree {

namespace {

struct BranchState {
    Configuration config;
    double best_s = 0.0;
};

struct Leaf {
    BranchState state;
    std::string branch;
};

Verdict rejection_reason(const Decision& d)
{
    bool any_ok = false;
    bool any_crash = false;
    for (const auto& c : d.candidates) {
        if (c.result.ok()) {
            any_ok = true;
            if (*c.result.median < d.baseline_s) return Verdict::below_threshold;
        } else if (c.result.status == TrialStatus::crash) {
            any_crash = true;
        }
    }
    if (any_ok) return Verdict::worse;
    return any_crash ? Verdict::crashed : Verdict::timeout;
}

} // namespace

std::string_view to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::improved_beyond_threshold: return "improved-beyond-threshold";
    case Verdict::below_threshold: return "below-threshold";
    case Verdict::worse: return "worse";
    case Verdict::crashed: return "crashed";
    case Verdict::timeout: return "timeout";
    }
    return "?";
}

Verdict parse_verdict(std::string_view text)
{
    for (auto v : {Verdict::improved_beyond_threshold, Verdict::below_threshold, Verdict::worse, Verdict::crashed,
                   Verdict::timeout}) {
        if (to_string(v) == text) return v;
    }
    throw DocumentError("unknown verdict '" + std::string(text) + "'");
}

const CandidateTrial* Decision::headline() const
{
    if (candidates.empty()) return nullptr;
    const CandidateTrial* best = nullptr;
    for (const auto& c : candidates) {
        if (accepted && c.label == candidate) return &c;
        if (c.result.ok() && (!best || *c.result.median < *best->result.median)) best = &c;
    }
    return best ? best : &candidates.front();
}

std::size_t SessionTrace::accepted_count() const
{
    std::size_t n = 0;
    for (const auto& d : decisions) n += d.accepted ? 1 : 0;
    return n;
}

SessionTrace run_session(const TuningPlan& plan, const Configuration& initial, TrialExecutor& executor,
                         const Catalog& catalog, const SessionOptions& options)
{
    validate(plan, catalog);
    validate(initial, catalog);
    if (options.reps < 1) throw Error("repetitions must be positive");

    CountingExecutor counted(executor);
    SessionTrace trace;
    trace.plan_id = plan.id;
    trace.threshold = plan.threshold;
    trace.reps = options.reps;
    trace.timeout_s = options.timeout_s;
    trace.initial = initial;
    trace.baseline = measure_median(counted, initial, options.reps, options.timeout_s);
    if (!trace.baseline.ok()) {
        throw BaselineFailed("initial configuration did not complete (" + std::string(to_string(trace.baseline.status)) + ")");
    }

    std::vector<Leaf> leaves;
    std::function<void(const std::string&, const BranchState&, const std::string&)> visit =
        [&](const std::string& id, const BranchState& state, const std::string& parent_branch) {
            const PlanNode& node = plan.nodes.at(id);
            const std::string branch = parent_branch.empty() ? id : parent_branch + "/" + id;
            const double threshold = plan.threshold_for(node);

            Decision d;
            d.node_id = id;
            d.branch = branch;
            d.candidate = std::string(kNoCandidate);
            d.baseline_s = state.best_s;
            d.threshold = threshold;

            std::optional<std::size_t> pick;
            for (const auto& bundle : node.candidates) {
                TrialResult result;
                try {
                    const Configuration trial = overlay(state.config, bundle, id, catalog);
                    result = measure_median(counted, trial, options.reps, options.timeout_s);
                } catch (const ValidationError& e) {
                    Configuration attempted = state.config;
                    for (const auto& [k, v] : bundle.assignments) attempted.set(k, v, id);
                    result = infeasible_result(attempted, options.reps, executor.backend(),
                                               std::string("infeasible: ") + e.what());
                }
                const bool improving = result.ok() && *result.median < state.best_s * (1.0 - threshold);
                if (improving && (!pick || *result.median < *d.candidates[*pick].result.median)) pick = d.candidates.size();
                d.candidates.push_back({bundle.label, std::move(result)});
            }

            BranchState next = state;
            if (pick) {
                const auto& chosen = d.candidates[*pick];
                d.accepted = true;
                d.reason = Verdict::improved_beyond_threshold;
                d.candidate = chosen.label;
                next.config = chosen.result.configuration;
                next.best_s = *chosen.result.median;
            } else {
                d.reason = rejection_reason(d);
            }
            trace.decisions.push_back(std::move(d));

            if (node.children.empty()) {
                leaves.push_back({next, branch});
            } else {
                for (const auto& child : node.children) visit(child, next, branch);
            }
        };

    const BranchState start{initial, *trace.baseline.median};
    for (const auto& root : plan.roots) visit(root, start, "");

    const Leaf* best = nullptr;
    for (const auto& leaf : leaves) {
        if (!best || leaf.state.best_s < best->state.best_s) best = &leaf;
    }
    if (best) {
        trace.final_configuration = best->state.config;
        trace.final_runtime_s = best->state.best_s;
        trace.final_branch = best->branch;
    } else {
        trace.final_configuration = initial;
        trace.final_runtime_s = *trace.baseline.median;
    }
    trace.executor_calls = counted.calls();
    return trace;
}

OracleResult exhaustive_oracle(const TuningPlan& plan, const Configuration& initial, TrialExecutor& executor,
                               const Catalog& catalog, std::size_t limit)
{
    if (!executor.deterministic()) throw Error("exhaustive oracle requires a deterministic executor");
    validate(plan, catalog);
    validate(initial, catalog);
    const std::size_t size = reachable_count(plan);
    if (size > limit) {
        throw SearchSpaceTooLarge("plan " + plan.id + " reaches " + std::to_string(size) + " configurations (limit " +
                                  std::to_string(limit) + ")");
    }

    std::map<std::string, RunOutcome> cache;
    auto runtime_of = [&](const Configuration& c) {
        const auto key = digest(c);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, executor.measure(c, std::nullopt)).first;
        return it->second;
    };

    OracleResult result;
    std::optional<double> best;
    auto consider = [&](const Configuration& c) {
        ++result.reachable;
        const RunOutcome out = runtime_of(c);
        if (out.status == TrialStatus::ok && (!best || out.seconds < *best)) {
            best = out.seconds;
            result.configuration = c;
        }
    };

    if (plan.roots.empty()) {
        consider(initial);
    } else {
        for (const auto& path : plan_paths(plan)) {
            std::function<void(std::size_t, const Configuration&, bool)> walk = [&](std::size_t depth, const Configuration& c,
                                                                                     bool feasible) {
                if (depth == path.size()) {
                    if (feasible) consider(c);
                    else ++result.reachable;
                    return;
                }
                const PlanNode& node = plan.nodes.at(path[depth]);
                walk(depth + 1, c, feasible);
                for (const auto& bundle : node.candidates) {
                    if (!feasible) {
                        walk(depth + 1, c, false);
                        continue;
                    }
                    try {
                        walk(depth + 1, overlay(c, bundle, node.id, catalog), true);
                    } catch (const ValidationError&) {
                        walk(depth + 1, c, false);
                    }
                }
            };
            walk(0, initial, true);
        }
    }
    if (!best) throw BaselineFailed("no reachable configuration completed");
    result.runtime_s = *best;
    return result;
}

nlohmann::json to_json(const Decision& d)
{
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : d.candidates) cands.push_back({{"label", c.label}, {"result", to_json(c.result)}});
    return {
        {"node", d.node_id},
        {"branch", d.branch},
        {"candidate", d.candidate},
        {"baseline_s", d.baseline_s},
        {"threshold", d.threshold},
        {"candidates", std::move(cands)},
        {"accepted", d.accepted},
        {"reason", to_string(d.reason)},
    };
}

Decision decision_from_json(const nlohmann::json& j)
{
    Decision d;
    d.node_id = j.at("node").get<std::string>();
    d.branch = j.at("branch").get<std::string>();
    d.candidate = j.at("candidate").get<std::string>();
    d.baseline_s = j.at("baseline_s").get<double>();
    d.threshold = j.at("threshold").get<double>();
    for (const auto& jc : j.at("candidates")) {
        d.candidates.push_back({jc.at("label").get<std::string>(), trial_result_from_json(jc.at("result"))});
    }
    d.accepted = j.at("accepted").get<bool>();
    d.reason = parse_verdict(j.at("reason").get<std::string>());
    return d;
}

nlohmann::json to_json(const SessionTrace& t)
{
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& d : t.decisions) decisions.push_back(to_json(d));
    return {
        {"plan_id", t.plan_id},
        {"threshold", t.threshold},
        {"reps", t.reps},
        {"timeout_s", t.timeout_s ? nlohmann::json(*t.timeout_s) : nlohmann::json(nullptr)},
        {"initial", to_json(t.initial)},
        {"baseline", to_json(t.baseline)},
        {"decisions", std::move(decisions)},
        {"final_configuration", to_json(t.final_configuration)},
        {"final_runtime_s", t.final_runtime_s},
        {"final_branch", t.final_branch},
        {"executor_calls", t.executor_calls},
    };
}

SessionTrace session_trace_from_json(const nlohmann::json& j)
{
    SessionTrace t;
    t.plan_id = j.at("plan_id").get<std::string>();
    t.threshold = j.at("threshold").get<double>();
    t.reps = j.at("reps").get<int>();
    if (j.contains("timeout_s") && !j.at("timeout_s").is_null()) t.timeout_s = j.at("timeout_s").get<double>();
    t.initial = configuration_from_json(j.at("initial"));
    t.baseline = trial_result_from_json(j.at("baseline"));
    for (const auto& jd : j.at("decisions")) t.decisions.push_back(decision_from_json(jd));
    t.final_configuration = configuration_from_json(j.at("final_configuration"));
    t.final_runtime_s = j.at("final_runtime_s").get<double>();
    t.final_branch = j.at("final_branch").get<std::string>();
    t.executor_calls = j.at("executor_calls").get<std::size_t>();
    return t;
}

} // namespace tunetree
