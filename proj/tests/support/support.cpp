#include "support.hpp"

#include <algorithm>
#include <atomic>

#include <unistd.h>

namespace tunetree::test {

namespace fs = std::filesystem;

fs::path data_dir() { return TUNETREE_TEST_DATA_DIR; }
fs::path fixtures_dir() { return TUNETREE_TEST_FIXTURES_DIR; }

fs::path scratch_dir(const std::string& tag)
{
    static std::atomic<int> counter{0};
    const fs::path dir = fs::temp_directory_path() /
                         ("tunetree-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ReplayTable load_replay(const std::string& name, const Catalog& catalog)
{
    return replay_table_from_json(nlohmann::json::parse(read_text_file(data_dir() / "replay" / name)), catalog);
}

Value random_value(std::mt19937_64& rng, const ParameterDef& def)
{
    switch (def.kind) {
    case ParamKind::boolean:
        return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    case ParamKind::enumerated:
        return def.values[std::uniform_int_distribution<std::size_t>(0, def.values.size() - 1)(rng)];
    case ParamKind::numeric:
        break;
    }
    if (def.numeric.unit == Unit::fraction) {
        const auto lo = static_cast<long>(std::ceil(def.numeric.min * 1000));
        const auto hi = static_cast<long>(std::floor(def.numeric.max * 1000));
        return static_cast<double>(std::uniform_int_distribution<long>(lo, hi)(rng)) / 1000.0;
    }
    const auto lo = static_cast<long>(std::ceil(def.numeric.min));
    const auto hi = static_cast<long>(std::floor(def.numeric.max));
    return static_cast<double>(std::uniform_int_distribution<long>(lo, hi)(rng));
}

Configuration random_configuration(std::mt19937_64& rng, const Catalog& catalog)
{
    for (;;) {
        Configuration c;
        for (const auto& def : catalog.parameters()) {
            if (std::bernoulli_distribution(0.5)(rng)) c.set(def.name, random_value(rng, def));
        }
        if (!check(c, catalog)) return c;
    }
}

namespace {

constexpr const char* kShuffleMem = "spark.shuffle.memoryFraction";
constexpr const char* kStorageMem = "spark.storage.memoryFraction";

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Assignments random_bundle(std::mt19937_64& rng, const Catalog& catalog, const std::vector<std::string>& keys)
{
    // Each bundle is feasible by itself; overlays from different nodes can still combine into an infeasible one.
    for (;;) {
        Assignments a;
        for (const auto& k : keys) a[k] = random_value(rng, catalog.at(k));
        if (a.contains(kShuffleMem) && a.contains(kStorageMem)) {
            const double s = std::get<double>(a[kShuffleMem]);
            a[kStorageMem] = std::floor((1.0 - s) * uniform(rng, 0.0, 1.0) * 1000) / 1000;
        }
        if (!check(a, catalog)) return a;
    }
}

void add_numeric_terms(std::mt19937_64& rng, const ParameterDef& def, WorkloadModel& m)
{
    PiecewiseTerm t{def.name, {}, "random"};
    const int n = std::uniform_int_distribution<int>(2, 4)(rng);
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(std::get<double>(random_value(rng, def)));
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double x : xs) t.points.emplace_back(x, uniform(rng, 0.5, 1.5));
    if (!t.points.empty()) m.terms.emplace_back(std::move(t));
}

} // namespace

TuningPlan random_chain_plan(std::mt19937_64& rng, const Catalog& catalog, double threshold)
{
    std::vector<std::vector<std::string>> units;
    for (const auto& def : catalog.parameters()) {
        if (def.name == kStorageMem) continue;
        if (def.name == kShuffleMem) units.push_back({kShuffleMem, kStorageMem});
        else units.push_back({def.name});
    }
    std::shuffle(units.begin(), units.end(), rng);

    TuningPlan plan;
    plan.id = "random-chain";
    plan.threshold = threshold;
    const int nodes = std::uniform_int_distribution<int>(1, 6)(rng);
    std::size_t next_unit = 0;
    std::string previous;
    for (int i = 0; i < nodes && next_unit < units.size(); ++i) {
        std::vector<std::string> keys = units[next_unit++];
        if (next_unit < units.size() && std::bernoulli_distribution(0.3)(rng)) {
            keys.insert(keys.end(), units[next_unit].begin(), units[next_unit].end());
            ++next_unit;
        }
        PlanNode node;
        node.id = "n" + std::to_string(i + 1);
        const int cands = std::uniform_int_distribution<int>(1, 2)(rng);
        for (int c = 0; c < cands; ++c) node.candidates.push_back({"c" + std::to_string(c), random_bundle(rng, catalog, keys)});
        if (previous.empty()) plan.roots.push_back(node.id);
        else plan.nodes.at(previous).children.push_back(node.id);
        previous = node.id;
        plan.nodes.emplace(node.id, std::move(node));
    }
    return plan;
}

WorkloadModel random_separable_model(std::mt19937_64& rng, const Catalog& catalog)
{
    WorkloadModel m;
    m.name = "random-separable";
    m.base_runtime_s = uniform(rng, 10.0, 1000.0);
    for (const auto& def : catalog.parameters()) {
        switch (def.kind) {
        case ParamKind::boolean:
            for (bool v : {true, false}) {
                if (std::bernoulli_distribution(0.7)(rng)) m.terms.emplace_back(FactorTerm{{def.name, v}, uniform(rng, 0.5, 1.5), "random"});
            }
            break;
        case ParamKind::enumerated:
            for (const auto& v : def.values) {
                if (std::bernoulli_distribution(0.7)(rng)) {
                    m.terms.emplace_back(FactorTerm{{def.name, Value(v)}, uniform(rng, 0.5, 1.5), "random"});
                }
            }
            break;
        case ParamKind::numeric:
            add_numeric_terms(rng, def, m);
            break;
        }
    }
    return m;
}

WorkloadModel random_interacting_model(std::mt19937_64& rng, const Catalog& catalog)
{
    WorkloadModel m = random_separable_model(rng, catalog);
    m.name = "random-interacting";
    const auto& params = catalog.parameters();
    auto pick_match = [&]() {
        const auto& def = params[std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(rng)];
        return ValueMatch{def.name, random_value(rng, def)};
    };
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int i = 0; i < n; ++i) {
        ValueMatch a = pick_match();
        ValueMatch b = pick_match();
        if (a.parameter == b.parameter) continue;
        m.terms.emplace_back(InteractionTerm{std::move(a), std::move(b), uniform(rng, 0.3, 1.7), "random"});
    }
    if (std::bernoulli_distribution(0.3)(rng)) {
        m.terms.emplace_back(CrashRegion{{Condition{kShuffleMem, Comparison::le, 0.1}}, "random crash"});
    }
    return m;
}

std::optional<double> stub_job_seconds(const Configuration& config)
{
    auto is = [&](const char* name, const Value& v) {
        auto it = config.settings.find(name);
        return it != config.settings.end() && it->second == v;
    };
    double t = 0.6;
    if (is("spark.serializer", std::string("kryo"))) t -= 0.15;
    if (is("spark.shuffle.manager", std::string("hash")) && is("spark.shuffle.consolidateFiles", true)) t -= 0.1;
    if (is("spark.shuffle.manager", std::string("tungsten-sort")) && is("spark.io.compression.codec", std::string("lzf"))) t -= 0.05;
    if (is("spark.shuffle.compress", false)) t += 0.3;
    if (is(kShuffleMem, 0.1) && is(kStorageMem, 0.7)) return std::nullopt;
    if (is(kShuffleMem, 0.4) && is(kStorageMem, 0.4)) t -= 0.1;
    if (is("spark.shuffle.spill.compress", false)) t += 0.05;
    if (is("spark.shuffle.file.buffer", 48.0)) t -= 0.05;
    if (is("spark.shuffle.file.buffer", 15.0)) t += 0.05;
    return t;
}

} // namespace tunetree::test
