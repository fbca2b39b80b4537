// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "tunetree/command_executor.hpp"
#include "tunetree/report.hpp"
#include "tunetree/sensitivity.hpp"

using namespace tunetree;

namespace {

// Pinned tolerances and limits.
constexpr double kCaseStudyWallLimitS = 1.0;
constexpr double kAggregateImprovementTarget = 21.0;
constexpr double kAggregateImprovementTolerance = 1.0;
constexpr std::size_t kCanonicalCallBudget = 11;
constexpr double kSeparableRelativeTolerance = 1e-12;
constexpr int kSeparableModels = 100;
constexpr int kInteractingModels = 100;
constexpr double kOracleWallLimitS = 30.0;
constexpr double kImpactTarget = 0.14;
constexpr double kImpactTolerance = 0.005;
constexpr int kScaleTables = 1000;
constexpr double kScaleRelativeTolerance = 1e-12;
constexpr int kRoundTripConfigurations = 1000;
constexpr double kStubRuntimeToleranceS = 0.1;
constexpr double kStubWallLimitS = 60.0;
constexpr int kStubReps = 3;
constexpr double kStubThreshold = 0.05;

const std::string kShuffleMem = "spark.shuffle.memoryFraction";
const std::string kStorageMem = "spark.storage.memoryFraction";

const Catalog& spark() {
    static const Catalog c = builtin_spark_catalog();
    return c;
}

/// Collects failed expectations for one criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& s) { notes_.push_back(s); }
    const std::vector<std::string>& failures() const { return failures_; }
    std::string summary() const {
        std::string out;
        for (const auto& n : notes_) out += (out.empty() ? "" : "; ") + n;
        return out;
    }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

bool is_starved(const Configuration& c) {
    auto it = c.settings.find(kShuffleMem);
    auto jt = c.settings.find(kStorageMem);
    return it != c.settings.end() && jt != c.settings.end() && it->second == Value(0.1) && jt->second == Value(0.7);
}

SessionTrace replay_session(const std::string& table, double threshold) {
    ReplayExecutor ex(test::load_replay(table, spark()));
    return run_session(canonical_spark_plan(threshold), {}, ex, spark());
}

// ---------------------------------------------------------------------------

void criterion_sortbykey(Checks& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto t = replay_session("casestudy-sortbykey.json", 0.10);
    const double wall = seconds_since(start);
    const Assignments expected{{"spark.serializer", std::string("kryo")},
                               {"spark.shuffle.manager", std::string("hash")},
                               {"spark.shuffle.consolidateFiles", true},
                               {kShuffleMem, 0.4},
                               {kStorageMem, 0.4}};
    c.expect(t.final_configuration.settings == expected, "final configuration " + canonical_text(t.final_configuration.settings));
    c.expect(t.baseline.median == 218.0, "baseline");
    c.expect(t.final_runtime_s == 120.0, "final runtime");
    c.expect(improvement(t).text_percent() == 44, "improvement");
    c.expect(wall < kCaseStudyWallLimitS, "wall time " + fmt(wall));
    c.note("218 s -> " + format_number(t.final_runtime_s) + " s, " + std::to_string(improvement(t).text_percent()) + "%, " +
           fmt(wall, 4) + " s");
}

void criterion_kmeans(Checks& c) {
    const auto t = replay_session("casestudy-kmeans.json", 0.10);
    const Assignments expected{{kShuffleMem, 0.1}, {kStorageMem, 0.7}, {"spark.shuffle.spill.compress", false}};
    c.expect(t.final_configuration.settings == expected, "final configuration " + canonical_text(t.final_configuration.settings));
    c.expect(!t.final_configuration.settings.contains("spark.serializer"), "serializer accepted");
    c.expect(!t.decisions.empty() && t.decisions[0].node_id == "n1-serializer" && !t.decisions[0].accepted, "serializer node");
    c.expect(t.baseline.median == 654.0 && t.final_runtime_s == 54.0, "runtimes");
    const double pct = 100.0 * improvement(t).fraction;
    c.expect(pct > 91.0, "improvement " + fmt(pct));
    c.note("654 s -> " + format_number(t.final_runtime_s) + " s, " + fmt(pct, 1) + "%");
}

void criterion_aggregate(Checks& c) {
    const auto t = replay_session("casestudy-aggregate.json", 0.05);
    const Assignments expected{{"spark.shuffle.manager", std::string("hash")},
                               {"spark.shuffle.consolidateFiles", true},
                               {kShuffleMem, 0.1},
                               {kStorageMem, 0.7}};
    c.expect(t.final_configuration.settings == expected, "final configuration " + canonical_text(t.final_configuration.settings));
    c.expect(t.baseline.median == 77.5, "baseline");
    const double pct = 100.0 * improvement(t).fraction;
    c.expect(std::abs(pct - kAggregateImprovementTarget) <= kAggregateImprovementTolerance, "improvement " + fmt(pct));
    c.note("77.5 s -> " + format_number(t.final_runtime_s) + " s, " + fmt(pct, 2) + "%");
}

void criterion_budget(Checks& c) {
    std::size_t sessions = 0;
    std::size_t worst = 0;
    auto run = [&](TrialExecutor& inner, double threshold, const Configuration& initial) {
        CountingExecutor counting(inner);
        const auto t = run_session(canonical_spark_plan(threshold), initial, counting, spark());
        ++sessions;
        worst = std::max(worst, counting.calls());
        c.expect(counting.calls() <= kCanonicalCallBudget, inner.backend() + " used " + std::to_string(counting.calls()) + " calls");
        c.expect(t.executor_calls == counting.calls(), inner.backend() + " trace call count");
    };
    for (const auto& [table, threshold] : std::vector<std::pair<std::string, double>>{
             {"casestudy-sortbykey.json", 0.10}, {"casestudy-kmeans.json", 0.10}, {"casestudy-aggregate.json", 0.05}}) {
        ReplayExecutor ex(test::load_replay(table, spark()));
        run(ex, threshold, {});
    }
    for (const char* table : {"sortbykey.json", "shuffling.json", "kmeans100m.json", "kmeans200m.json"}) {
        for (double threshold : {0.0, 0.05, 0.10}) {
            ReplayExecutor ex(test::load_replay(table, spark()));
            run(ex, threshold, {});
        }
    }
    for (const auto& m : builtin_models()) {
        for (double threshold : {0.0, 0.05, 0.10, 0.20}) {
            SimulatorExecutor ex(m, spark());
            run(ex, threshold, {});
        }
    }
    std::mt19937_64 rng(404);
    for (int i = 0; i < 50; ++i) {
        SimulatorExecutor ex(test::random_interacting_model(rng, spark()), spark());
        run(ex, std::uniform_real_distribution<double>(0.0, 0.2)(rng), {});
    }
    c.note(std::to_string(sessions) + " sessions, max " + std::to_string(worst) + " calls");
}

void criterion_oracle(Checks& c) {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    double worst_separable = 0.0;
    for (int i = 0; i < kSeparableModels; ++i) {
        SimulatorExecutor ex(test::random_separable_model(rng, spark()), spark());
        const auto plan = canonical_spark_plan(0.0);
        const auto greedy = run_session(plan, {}, ex, spark(), {1, std::nullopt});
        const auto oracle = exhaustive_oracle(plan, {}, ex, spark());
        const double rel = std::abs(greedy.final_runtime_s - oracle.runtime_s) / oracle.runtime_s;
        worst_separable = std::max(worst_separable, rel);
        c.expect(rel <= kSeparableRelativeTolerance, "separable model " + std::to_string(i) + " differs by " + fmt(rel, 15));
    }
    double max_gap = 0.0;
    double sum_gap = 0.0;
    int suboptimal = 0;
    for (int i = 0; i < kInteractingModels; ++i) {
        SimulatorExecutor ex(test::random_interacting_model(rng, spark()), spark());
        const auto plan = canonical_spark_plan(0.0);
        const auto greedy = run_session(plan, {}, ex, spark(), {1, std::nullopt});
        const auto oracle = exhaustive_oracle(plan, {}, ex, spark());
        const double gap = (greedy.final_runtime_s - oracle.runtime_s) / oracle.runtime_s;
        c.expect(gap >= -kSeparableRelativeTolerance, "interacting model " + std::to_string(i) + " beat the oracle");
        max_gap = std::max(max_gap, gap);
        sum_gap += std::max(gap, 0.0);
        suboptimal += gap > kSeparableRelativeTolerance;
    }
    const double wall = seconds_since(start);
    c.expect(wall < kOracleWallLimitS, "wall time " + fmt(wall));
    c.note("separable max rel diff " + fmt(worst_separable, 15));
    c.note("interacting gap mean " + fmt(100.0 * sum_gap / kInteractingModels, 3) + "% max " + fmt(100.0 * max_gap, 3) + "% (" +
           std::to_string(suboptimal) + "/" + std::to_string(kInteractingModels) + " suboptimal)");
    c.note(fmt(wall, 2) + " s");
}

void criterion_sensitivity(Checks& c) {
    ReplayExecutor ex(test::load_replay("sortbykey.json", spark()));
    SweepSpec spec;
    spec.parameters = {"spark.shuffle.manager"};
    spec.baseline = Configuration::from({{"spark.serializer", std::string("kryo")}});
    spec.reps = 3;
    const auto rows = impact_table(run_sweep(spec, spark(), ex));
    c.expect(rows.size() == 1, "row count");
    const double mad = rows.empty() ? -1.0 : rows[0].mean_abs_deviation;
    c.expect(std::abs(mad - kImpactTarget) <= kImpactTolerance, "mean abs deviation " + fmt(mad, 6));

    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> runtime(0.5, 2000.0);
    double worst = 0.0;
    for (int i = 0; i < kScaleTables; ++i) {
        const double base = runtime(rng);
        const double k = std::uniform_real_distribution<double>(1e-3, 1e3)(rng);
        std::vector<SweepTrial> plain, scaled;
        const int n = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int v = 0; v < n; ++v) {
            const double m = runtime(rng);
            TrialResult a;
            a.median = m;
            a.runtimes = {m};
            TrialResult b;
            b.median = m * k;
            b.runtimes = {m * k};
            plain.push_back({"p", std::to_string(v), {}, a});
            scaled.push_back({"p", std::to_string(v), {}, b});
        }
        TrialResult base_a, base_b;
        base_a.median = base;
        base_b.median = base * k;
        const double x = impact_table(plain, base_a)[0].mean_abs_deviation;
        const double y = impact_table(scaled, base_b)[0].mean_abs_deviation;
        const double rel = x == 0.0 ? std::abs(y) : std::abs(x - y) / x;
        worst = std::max(worst, rel);
    }
    c.expect(worst <= kScaleRelativeTolerance, "scale invariance " + fmt(worst, 15));
    c.note("MAD " + fmt(mad, 6) + ", scale worst rel " + fmt(worst, 15));
}

void criterion_crash(Checks& c) {
    ReplayExecutor ex(test::load_replay("sortbykey.json", spark()));
    SweepSpec spec;
    for (const auto& d : spark().parameters()) spec.parameters.push_back(d.name);
    spec.baseline = Configuration::from({{"spark.serializer", std::string("kryo")}});
    spec.reps = 3;
    const auto sweep = run_sweep(spec, spark(), ex);
    const auto rows = impact_table(sweep);
    const ImpactRow* memory = nullptr;
    for (const auto& r : rows) {
        if (r.parameter == "spark.shuffle/storage.memoryFraction") memory = &r;
    }
    c.expect(memory != nullptr, "memory row missing");
    if (memory) {
        bool crash_marked = false;
        for (const auto& v : memory->values) {
            if (v.value == "0.1/0.7") crash_marked = v.status == TrialStatus::crash && !v.deviation;
        }
        c.expect(crash_marked, "0.1/0.7 not marked crash");
        c.expect(memory->crashed_value_present, "crash flag");
        c.expect(std::abs(memory->mean_abs_deviation - 11.0 / 150.0) < 1e-12, "crashed value not excluded from the mean");
        c.note("memory row MAD " + fmt(memory->mean_abs_deviation, 6));
    }

    int sessions = 0;
    auto never_accepts_starved = [&](const SessionTrace& t) {
        ++sessions;
        for (const auto& d : t.decisions) {
            for (const auto& cand : d.candidates) {
                if (!cand.result.ok() && d.accepted && cand.label == d.candidate) c.expect(false, "accepted a failed candidate");
            }
        }
    };
    for (double threshold : {0.0, 0.05, 0.10}) {
        ReplayExecutor table(test::load_replay("sortbykey.json", spark()));
        const auto t = run_session(canonical_spark_plan(threshold), spec.baseline, table, spark());
        never_accepts_starved(t);
        c.expect(!is_starved(t.final_configuration), "sortbykey session accepted 0.1/0.7");
    }
    const auto cs = replay_session("casestudy-sortbykey.json", 0.10);
    never_accepts_starved(cs);
    c.expect(!is_starved(cs.final_configuration), "case study accepted 0.1/0.7");
    std::mt19937_64 rng(707);
    for (int i = 0; i < 100; ++i) {
        SimulatorExecutor sim(test::random_interacting_model(rng, spark()), spark());
        never_accepts_starved(run_session(canonical_spark_plan(0.0), {}, sim, spark(), {1, std::nullopt}));
    }
    c.note(std::to_string(sessions) + " sessions checked");
}

void criterion_round_trips(Checks& c) {
    std::mt19937_64 rng(808);
    int mismatches = 0;
    for (int i = 0; i < kRoundTripConfigurations; ++i) {
        const auto config = test::random_configuration(rng, spark());
        try {
            const auto back = parse_properties(to_properties(config, spark()), spark());
            validate(back, spark());
            mismatches += back.settings != config.settings;
        } catch (const Error&) {
            ++mismatches;
        }
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " properties mismatches");

    const auto root = test::scratch_dir("acceptance-records");
    int records = 0;
    for (const auto& [table, threshold] : std::vector<std::pair<std::string, double>>{
             {"casestudy-sortbykey.json", 0.10}, {"casestudy-kmeans.json", 0.10}, {"casestudy-aggregate.json", 0.05}}) {
        ReplayExecutor ex(test::load_replay(table, spark()));
        const auto plan = canonical_spark_plan(threshold);
        const auto record = make_record(run_session(plan, {}, ex, spark()), plan, spark(), ex);
        const auto loaded = load(save(record, root));
        c.expect(loaded == record, table + " save/load");
        const auto again = rerun(loaded);
        c.expect(to_json(again).dump() == to_json(record.trace).dump(), table + " replay not byte-identical");
        ++records;
    }
    c.note(std::to_string(kRoundTripConfigurations) + " configurations, " + std::to_string(records) + " records");
}

void criterion_command(Checks& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto plan = canonical_spark_plan(kStubThreshold);
    CommandSpec spec;
    spec.command_template = "sh " + shell_quote((test::fixtures_dir() / "stub_job.sh").string()) + " {CONFIG}";
    CommandExecutor ex(spec, spark());
    const auto t = run_session(plan, {}, ex, spark(), {kStubReps, 10.0});

    test::FunctionExecutor model([](const Configuration& cfg) {
        const auto s = test::stub_job_seconds(cfg);
        return s ? RunOutcome::ok(*s) : RunOutcome::crash();
    });
    const auto optimum = exhaustive_oracle(plan, {}, model, spark());
    const double wall = seconds_since(start);

    c.expect(t.final_configuration.settings == optimum.configuration.settings,
             "converged to " + canonical_text(t.final_configuration.settings));
    c.expect(std::abs(t.final_runtime_s - optimum.runtime_s) <= kStubRuntimeToleranceS, "final runtime " + fmt(t.final_runtime_s));
    c.expect(wall < kStubWallLimitS, "wall time " + fmt(wall));
    c.note("optimum " + fmt(optimum.runtime_s) + " s over " + std::to_string(optimum.reachable) + " configurations, measured " +
           fmt(t.final_runtime_s) + " s, " + fmt(wall, 1) + " s wall");
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<void(Checks&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "case study sort-by-key", criterion_sortbykey},
        {2, "case study k-means", criterion_kmeans},
        {3, "case study aggregate-by-key", criterion_aggregate},
        {4, "executor call budget", criterion_budget},
        {5, "greedy against exhaustive oracle", criterion_oracle},
        {6, "sensitivity math", criterion_sensitivity},
        {7, "crash handling", criterion_crash},
        {8, "round trips", criterion_round_trips},
        {9, "command backend convergence", criterion_command},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Checks checks;
        try {
            cr.run(checks);
        } catch (const std::exception& e) {
            checks.expect(false, std::string("exception: ") + e.what());
        }
        const bool ok = checks.failures().empty();
        failed += !ok;
        std::printf("%s %d %s: %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name, checks.summary().c_str());
        for (const auto& f : checks.failures()) std::printf("    %s\n", f.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
