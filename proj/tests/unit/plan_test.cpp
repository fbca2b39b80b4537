#include <gtest/gtest.h>

#include "support.hpp"
#include "tunetree/plan.hpp"

using namespace tunetree;

namespace {

const Catalog& spark() {
    static const Catalog c = builtin_spark_catalog();
    return c;
}

SettingBundle bundle(std::string label, Assignments a) { return {std::move(label), std::move(a)}; }

PlanNode node(std::string id, std::vector<SettingBundle> cands, std::vector<std::string> children = {}) {
    return PlanNode{std::move(id), std::move(cands), std::move(children), "", std::nullopt};
}

TuningPlan two_node_plan() {
    TuningPlan p;
    p.id = "t";
    p.threshold = 0.1;
    p.roots = {"a"};
    p.nodes.emplace("a", node("a", {bundle("kryo", {{"spark.serializer", std::string("kryo")}})}, {"b"}));
    p.nodes.emplace("b", node("b", {bundle("lz4", {{"spark.io.compression.codec", std::string("lz4")}})}));
    return p;
}

std::size_t total_candidates(const TuningPlan& p) {
    std::size_t n = 0;
    for (const auto& [id, nd] : p.nodes) n += nd.candidates.size();
    return n;
}

} // namespace

TEST(CanonicalPlan, SixNodesNineCandidates) {
    const auto p = canonical_spark_plan(0.10);
    EXPECT_EQ(p.nodes.size(), 6u);
    EXPECT_EQ(total_candidates(p), 9u);
    EXPECT_DOUBLE_EQ(p.threshold, 0.10);
    EXPECT_NO_THROW(validate(p, spark()));
}

TEST(CanonicalPlan, ZeroThresholdSameShape) {
    const auto p0 = canonical_spark_plan(0.0);
    auto p10 = canonical_spark_plan(0.10);
    p10.threshold = 0.0;
    EXPECT_EQ(p0, p10);
}

TEST(CanonicalPlan, LinearChainInRationaleOrder) {
    const auto p = canonical_spark_plan(0.05);
    ASSERT_EQ(p.roots, (std::vector<std::string>{"n1-serializer"}));
    const auto paths = plan_paths(p);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_EQ(paths[0], (std::vector<std::string>{"n1-serializer", "n2-manager", "n3-shuffle-compress", "n4-memory",
                                                  "n5-spill-compress", "n6-file-buffer"}));
}

TEST(CanonicalPlan, NodeContents) {
    const auto p = canonical_spark_plan(0.05);
    const auto& n2 = p.nodes.at("n2-manager");
    ASSERT_EQ(n2.candidates.size(), 2u);
    EXPECT_EQ(n2.candidates[0].assignments,
              (Assignments{{"spark.shuffle.manager", std::string("tungsten-sort")}, {"spark.io.compression.codec", std::string("lzf")}}));
    EXPECT_EQ(n2.candidates[1].assignments.size(), 2u);
    EXPECT_EQ(n2.candidates[1].assignments,
              (Assignments{{"spark.shuffle.manager", std::string("hash")}, {"spark.shuffle.consolidateFiles", true}}));
    const auto& n4 = p.nodes.at("n4-memory");
    EXPECT_EQ(n4.candidates[0].assignments,
              (Assignments{{"spark.shuffle.memoryFraction", 0.4}, {"spark.storage.memoryFraction", 0.4}}));
    EXPECT_EQ(n4.candidates[1].assignments,
              (Assignments{{"spark.shuffle.memoryFraction", 0.1}, {"spark.storage.memoryFraction", 0.7}}));
    const auto& n6 = p.nodes.at("n6-file-buffer");
    EXPECT_EQ(n6.candidates[0].assignments, (Assignments{{"spark.shuffle.file.buffer", 48.0}}));
    EXPECT_EQ(n6.candidates[1].assignments, (Assignments{{"spark.shuffle.file.buffer", 15.0}}));
}

TEST(CanonicalPlan, RejectsBadThreshold) {
    EXPECT_THROW(canonical_spark_plan(1.0), PlanInvalid);
    EXPECT_THROW(canonical_spark_plan(-0.1), PlanInvalid);
}

TEST(ReachableCount, CanonicalIs216) {
    EXPECT_EQ(reachable_count(canonical_spark_plan(0.1)), 216u);
}

TEST(ReachableCount, EmptyPlanIsOne) {
    TuningPlan p;
    EXPECT_EQ(reachable_count(p), 1u);
}

TEST(PlanValidate, AcceptsSmallPlan) {
    EXPECT_NO_THROW(validate(two_node_plan(), spark()));
}

TEST(PlanValidate, ThresholdOutOfRange) {
    auto p = two_node_plan();
    p.threshold = 1.0;
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
    p.threshold = 0.1;
    p.nodes.at("a").threshold = -0.01;
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
}

TEST(PlanValidate, CandidateCount) {
    auto p = two_node_plan();
    p.nodes.at("b").candidates.clear();
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
    p = two_node_plan();
    auto& c = p.nodes.at("b").candidates;
    c.push_back(bundle("lzf", {{"spark.io.compression.codec", std::string("lzf")}}));
    c.push_back(bundle("snappy", {{"spark.io.compression.codec", std::string("snappy")}}));
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
}

TEST(PlanValidate, DuplicateLabels) {
    auto p = two_node_plan();
    p.nodes.at("b").candidates.push_back(bundle("lz4", {{"spark.io.compression.codec", std::string("lzf")}}));
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
}

TEST(PlanValidate, InvalidBundle) {
    auto p = two_node_plan();
    p.nodes.at("b").candidates[0].assignments = {{"spark.shuffle.memoryFraction", 0.7}, {"spark.storage.memoryFraction", 0.7}};
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
}

TEST(PlanValidate, UnknownChildOrRoot) {
    auto p = two_node_plan();
    p.nodes.at("b").children = {"zz"};
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
    p = two_node_plan();
    p.roots.push_back("zz");
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
}

TEST(PlanValidate, Cycle) {
    auto p = two_node_plan();
    p.nodes.at("b").children = {"a"};
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
    EXPECT_THROW(plan_paths(p), PlanInvalid);
}

TEST(PlanValidate, UnreachableNode) {
    auto p = two_node_plan();
    p.nodes.emplace("c", node("c", {bundle("x", {{"spark.rdd.compress", true}})}));
    EXPECT_THROW(validate(p, spark()), PlanInvalid);
}

TEST(PlanPaths, DiamondHasTwoPaths) {
    TuningPlan p;
    p.id = "d";
    p.roots = {"a"};
    const SettingBundle x = bundle("x", {{"spark.rdd.compress", true}});
    p.nodes.emplace("a", node("a", {x}, {"b", "c"}));
    p.nodes.emplace("b", node("b", {x}, {"d"}));
    p.nodes.emplace("c", node("c", {x}, {"d"}));
    p.nodes.emplace("d", node("d", {x}));
    EXPECT_NO_THROW(validate(p, spark()));
    EXPECT_EQ(plan_paths(p).size(), 2u);
    EXPECT_EQ(reachable_count(p), 16u);
}

TEST(PlanJson, RoundTrip) {
    auto p = canonical_spark_plan(0.05);
    p.nodes.at("n3-shuffle-compress").threshold = 0.2;
    EXPECT_EQ(plan_from_json(to_json(p), spark()), p);
}

TEST(PlanJson, MalformedDocument) {
    EXPECT_THROW(plan_from_json(nlohmann::json::parse(R"({"roots": []})"), spark()), PlanInvalid);
    auto j = to_json(canonical_spark_plan(0.1));
    j["nodes"]["n1-serializer"]["candidates"][0]["assignments"]["spark.serializer"] = "fast";
    EXPECT_THROW(plan_from_json(j, spark()), PlanInvalid);
}

TEST(PlanRandom, GeneratedChainsValidate) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto p = test::random_chain_plan(rng, spark(), 0.0);
        EXPECT_NO_THROW(validate(p, spark()));
        EXPECT_EQ(plan_paths(p).size(), 1u);
    }
}
