// Randomised invariants that cut across modules.
#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "tunetree/report.hpp"
#include "tunetree/sensitivity.hpp"

using namespace tunetree;

namespace {

const Catalog& spark() {
    static const Catalog c = builtin_spark_catalog();
    return c;
}

} // namespace

TEST(PropertiesRoundTrip, EmitParseValidate) {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 1000; ++i) {
        const auto c = test::random_configuration(rng, spark());
        const auto text = to_properties(c, spark());
        const auto back = parse_properties(text, spark());
        ASSERT_EQ(back.settings, c.settings) << text;
        EXPECT_NO_THROW(validate(back, spark()));
        EXPECT_EQ(to_properties(back, spark()), text);
        EXPECT_EQ(digest(back), digest(c));
    }
}

TEST(PropertiesRoundTrip, LinesAreSortedByName) {
    std::mt19937_64 rng(102);
    for (int i = 0; i < 200; ++i) {
        const auto text = to_properties(test::random_configuration(rng, spark()), spark());
        std::vector<std::string> names;
        for (std::size_t pos = 0; pos < text.size();) {
            const auto nl = text.find('\n', pos);
            names.push_back(text.substr(pos, text.find(' ', pos) - pos));
            pos = nl + 1;
        }
        EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
    }
}

TEST(DisplayParse, EveryValueRoundTrips) {
    std::mt19937_64 rng(103);
    for (const auto& def : spark().parameters()) {
        for (int i = 0; i < 50; ++i) {
            const auto v = test::random_value(rng, def);
            EXPECT_TRUE(values_equal(def.parse(def.display(v)), v)) << def.name;
            EXPECT_TRUE(values_equal(def.parse(def.render(v)), v)) << def.name;
            EXPECT_TRUE(values_equal(def.from_json(value_to_json(v)), v)) << def.name;
        }
    }
}

TEST(SessionInvariants, FinalNeverSlowerThanBaseline) {
    std::mt19937_64 rng(104);
    for (int i = 0; i < 200; ++i) {
        const auto plan = test::random_chain_plan(rng, spark(), std::uniform_real_distribution<double>(0.0, 0.2)(rng));
        SimulatorExecutor ex(test::random_interacting_model(rng, spark()), spark());
        const auto t = run_session(plan, {}, ex, spark(), {1, std::nullopt});
        EXPECT_LE(t.final_runtime_s, *t.baseline.median);
        EXPECT_GE(improvement(t).fraction, 0.0);
        EXPECT_NO_THROW(validate(t.final_configuration, spark()));
        EXPECT_EQ(session_trace_from_json(to_json(t)), t);
    }
}

TEST(SweepInvariants, RowsCoverRequestedParametersOnce) {
    std::mt19937_64 rng(105);
    std::vector<std::string> names;
    for (const auto& d : spark().parameters()) names.push_back(d.name);
    for (int i = 0; i < 100; ++i) {
        std::vector<std::string> pick;
        for (const auto& n : names) {
            if (rng() % 2) pick.push_back(n);
        }
        SweepSpec spec;
        spec.parameters = pick;
        const auto rows = sweep_rows(spec, spark());
        std::set<std::string> covered;
        for (const auto& r : rows) {
            for (const auto& p : r.parameters) EXPECT_TRUE(covered.insert(p).second) << p;
            EXPECT_FALSE(r.candidates.empty());
        }
        for (const auto& p : pick) EXPECT_TRUE(covered.contains(p)) << p;
    }
}
