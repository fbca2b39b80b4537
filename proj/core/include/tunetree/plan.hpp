#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunetree/configuration.hpp"

namespace tunetree {

/// One test run of a tuning plan: one or two candidate bundles tried
/// against the branch's current configuration.
struct PlanNode {
    std::string id;
    std::vector<SettingBundle> candidates;
    std::vector<std::string> children;
    std::string note;
    std::optional<double> threshold;  // overrides the plan threshold

    bool operator==(const PlanNode&) const = default;
};

/// DAG of plan nodes. Higher nodes are tried first; accepted settings flow
/// to children.
struct TuningPlan {
    std::string id;
    std::map<std::string, PlanNode> nodes;
    std::vector<std::string> roots;
    double threshold = 0.0;  // minimum relative improvement to accept

    bool operator==(const TuningPlan&) const = default;

    double threshold_for(const PlanNode& node) const { return node.threshold.value_or(threshold); }
};

/// Checks structure (acyclic, resolvable, reachable, 1-2 uniquely labelled
/// candidates, thresholds in [0, 1)) and that every bundle is valid against
/// the catalog. Throws PlanInvalid.
void validate(const TuningPlan& plan, const Catalog& catalog);

/// Root-to-leaf node paths. Throws PlanInvalid on a cycle.
std::vector<std::vector<std::string>> plan_paths(const TuningPlan& plan);

/// Number of configurations reachable by some accept/skip pattern: summed
/// over root-to-leaf paths, the product of (candidates + 1) per node.
std::size_t reachable_count(const TuningPlan& plan);

/// The six-node Spark chain: serializer, shuffle manager (tungsten-sort+lzf
/// or hash+consolidation), shuffle compression, memory fractions (0.4/0.4 or
/// 0.1/0.7), spill compression, file buffer (48k or 15k). Ten candidate
/// configurations in total.
TuningPlan canonical_spark_plan(double threshold);

nlohmann::json to_json(const TuningPlan& plan);
/// `{id, threshold, roots, nodes: {id: {candidates: [{label, assignments}], children, note, threshold?}}}`.
/// Validates against the catalog.
TuningPlan plan_from_json(const nlohmann::json& doc, const Catalog& catalog);

} // namespace tunetree
