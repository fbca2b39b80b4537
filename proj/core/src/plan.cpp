#include "tunetree/plan.hpp"

#include <functional>
#include <set>

namespace tunetree {

namespace {

enum class Mark { unvisited, active, done };

void check_threshold(double t, const std::string& where)
{
    if (!(t >= 0.0 && t < 1.0)) throw PlanInvalid(where + ": threshold must lie in [0, 1)");
}

} // namespace

std::vector<std::vector<std::string>> plan_paths(const TuningPlan& plan)
{
    std::vector<std::vector<std::string>> paths;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    std::function<void(const std::string&)> walk = [&](const std::string& id) {
        auto it = plan.nodes.find(id);
        if (it == plan.nodes.end()) throw PlanInvalid("plan " + plan.id + ": unknown node '" + id + "'");
        if (!on_stack.insert(id).second) throw PlanInvalid("plan " + plan.id + ": cycle through '" + id + "'");
        stack.push_back(id);
        if (it->second.children.empty()) {
            paths.push_back(stack);
        } else {
            for (const auto& child : it->second.children) walk(child);
        }
        stack.pop_back();
        on_stack.erase(id);
    };
    for (const auto& root : plan.roots) walk(root);
    return paths;
}

void validate(const TuningPlan& plan, const Catalog& catalog)
{
    const std::string where = "plan " + plan.id;
    check_threshold(plan.threshold, where);
    if (plan.nodes.empty() != plan.roots.empty()) throw PlanInvalid(where + ": roots and nodes must both be empty or both set");

    for (const auto& [id, node] : plan.nodes) {
        if (id != node.id) throw PlanInvalid(where + ": node key '" + id + "' differs from its id '" + node.id + "'");
        if (node.candidates.empty() || node.candidates.size() > 2) {
            throw PlanInvalid(where + ": node " + id + " must carry one or two candidates");
        }
        if (node.candidates.size() == 2 && node.candidates[0].label == node.candidates[1].label) {
            throw PlanInvalid(where + ": node " + id + " has duplicate candidate labels");
        }
        if (node.threshold) check_threshold(*node.threshold, where + " node " + id);
        for (const auto& c : node.candidates) {
            try {
                validate(c, catalog);
            } catch (const ValidationError& e) {
                throw PlanInvalid(where + ": node " + id + " candidate " + c.label + ": " + e.what());
            }
        }
        for (const auto& child : node.children) {
            if (!plan.nodes.contains(child)) throw PlanInvalid(where + ": node " + id + " has unknown child '" + child + "'");
        }
    }

    // Cycle check over the whole graph, then reachability from the roots.
    std::map<std::string, Mark> mark;
    std::function<void(const std::string&)> dfs = [&](const std::string& id) {
        auto& m = mark[id];
        if (m == Mark::active) throw PlanInvalid(where + ": cycle through '" + id + "'");
        if (m == Mark::done) return;
        m = Mark::active;
        for (const auto& child : plan.nodes.at(id).children) dfs(child);
        mark[id] = Mark::done;
    };
    for (const auto& root : plan.roots) {
        if (!plan.nodes.contains(root)) throw PlanInvalid(where + ": unknown root '" + root + "'");
        dfs(root);
    }
    for (const auto& [id, node] : plan.nodes) {
        if (mark[id] != Mark::done) throw PlanInvalid(where + ": node " + id + " is not reachable from a root");
    }
}

std::size_t reachable_count(const TuningPlan& plan)
{
    if (plan.roots.empty()) return 1;
    std::size_t total = 0;
    for (const auto& path : plan_paths(plan)) {
        std::size_t n = 1;
        for (const auto& id : path) n *= plan.nodes.at(id).candidates.size() + 1;
        total += n;
    }
    return total;
}

TuningPlan canonical_spark_plan(double threshold)
{
    check_threshold(threshold, "canonical plan");

    auto node = [](std::string id, std::vector<SettingBundle> candidates, std::string next, std::string note) {
        PlanNode n{std::move(id), std::move(candidates), {}, std::move(note), std::nullopt};
        if (!next.empty()) n.children.push_back(std::move(next));
        return n;
    };
    const auto kb = [](double v) { return Value(v); };

    TuningPlan plan;
    plan.id = "canonical-spark";
    plan.threshold = threshold;
    plan.roots = {"n1-serializer"};
    std::vector<PlanNode> chain{
        node("n1-serializer", {{"kryo", {{"spark.serializer", std::string("kryo")}}}}, "n2-manager",
             "Largest single effect; every later test runs on top of the result."),
        node("n2-manager",
             {{"tungsten-sort+lzf", {{"spark.shuffle.manager", std::string("tungsten-sort")},
                                     {"spark.io.compression.codec", std::string("lzf")}}},
              {"hash+consolidate", {{"spark.shuffle.manager", std::string("hash")},
                                    {"spark.shuffle.consolidateFiles", true}}}},
             "n3-shuffle-compress",
             "tungsten-sort pairs with lzf; hash is only tried with file consolidation."),
        node("n3-shuffle-compress", {{"no-compress", {{"spark.shuffle.compress", false}}}}, "n4-memory",
             "High impact in both directions depending on network versus CPU cost."),
        node("n4-memory",
             {{"0.4/0.4", {{"spark.shuffle.memoryFraction", 0.4}, {"spark.storage.memoryFraction", 0.4}}},
              {"0.1/0.7", {{"spark.shuffle.memoryFraction", 0.1}, {"spark.storage.memoryFraction", 0.7}}}},
             "n5-spill-compress", "Shuffle/storage split; tied to the cluster's memory."),
        node("n5-spill-compress", {{"no-spill-compress", {{"spark.shuffle.spill.compress", false}}}}, "n6-file-buffer",
             "Follows the memory split it interacts with."),
        node("n6-file-buffer", {{"48k", {{"spark.shuffle.file.buffer", kb(48)}}}, {"15k", {{"spark.shuffle.file.buffer", kb(15)}}}},
             "", "Small effect; drop this node for an eight-run variant. 48k is a pinned choice, not a measured one."),
    };
    for (auto& n : chain) {
        auto id = n.id;
        plan.nodes.emplace(std::move(id), std::move(n));
    }
    return plan;
}

nlohmann::json to_json(const TuningPlan& plan)
{
    nlohmann::json nodes = nlohmann::json::object();
    for (const auto& [id, node] : plan.nodes) {
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& c : node.candidates) cands.push_back(to_json(c));
        nlohmann::json jn{{"candidates", std::move(cands)}, {"children", node.children}, {"note", node.note}};
        if (node.threshold) jn["threshold"] = *node.threshold;
        nodes[id] = std::move(jn);
    }
    return {{"id", plan.id}, {"threshold", plan.threshold}, {"roots", plan.roots}, {"nodes", std::move(nodes)}};
}

TuningPlan plan_from_json(const nlohmann::json& doc, const Catalog& catalog)
{
    try {
        TuningPlan plan;
        plan.id = doc.value("id", "plan");
        plan.threshold = doc.at("threshold").get<double>();
        plan.roots = doc.at("roots").get<std::vector<std::string>>();
        for (const auto& [id, jn] : doc.at("nodes").items()) {
            PlanNode n;
            n.id = id;
            for (const auto& jc : jn.at("candidates")) {
                SettingBundle b;
                b.label = jc.at("label").get<std::string>();
                try {
                    b.assignments = assignments_from_json(jc.at("assignments"), catalog);
                } catch (const ValidationError& e) {
                    throw PlanInvalid("plan " + plan.id + ": node " + id + ": " + e.what());
                }
                n.candidates.push_back(std::move(b));
            }
            n.children = jn.value("children", std::vector<std::string>{});
            n.note = jn.value("note", "");
            if (jn.contains("threshold")) n.threshold = jn.at("threshold").get<double>();
            plan.nodes.emplace(id, std::move(n));
        }
        validate(plan, catalog);
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw PlanInvalid(std::string("malformed plan document: ") + e.what());
    }
}

} // namespace tunetree
