#include "tunetree/workload.hpp"

#include <algorithm>
#include <cmath>

namespace tunetree {

namespace {

bool matches(const ValueMatch& m, const Configuration& config, const Catalog& catalog)
{
    return values_equal(effective_value(config, catalog.at(m.parameter)), m.value);
}

std::string_view to_string(Comparison op)
{
    switch (op) {
    case Comparison::lt: return "<";
    case Comparison::le: return "<=";
    case Comparison::eq: return "==";
    case Comparison::ge: return ">=";
    case Comparison::gt: return ">";
    }
    return "?";
}

Comparison parse_comparison(std::string_view s)
{
    if (s == "<") return Comparison::lt;
    if (s == "<=") return Comparison::le;
    if (s == "==") return Comparison::eq;
    if (s == ">=") return Comparison::ge;
    if (s == ">") return Comparison::gt;
    throw DocumentError("unknown comparison '" + std::string(s) + "'");
}

bool holds(const Condition& c, const Configuration& config, const Catalog& catalog)
{
    const Value v = effective_value(config, catalog.at(c.parameter));
    if (c.op == Comparison::eq) return values_equal(v, c.value);
    const auto* lhs = std::get_if<double>(&v);
    const auto* rhs = std::get_if<double>(&c.value);
    if (!lhs || !rhs) return false;
    switch (c.op) {
    case Comparison::lt: return *lhs < *rhs;
    case Comparison::le: return *lhs <= *rhs;
    case Comparison::ge: return *lhs >= *rhs;
    case Comparison::gt: return *lhs > *rhs;
    case Comparison::eq: break;
    }
    return false;
}

double interpolate(const std::vector<std::pair<double, double>>& points, double x)
{
    if (x <= points.front().first) return points.front().second;
    if (x >= points.back().first) return points.back().second;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto [x1, y1] = points[i];
        if (x <= x1) {
            const auto [x0, y0] = points[i - 1];
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    return points.back().second;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

nlohmann::json match_to_json(const ValueMatch& m) { return {{"parameter", m.parameter}, {"value", value_to_json(m.value)}}; }

ValueMatch match_from_json(const nlohmann::json& j, const Catalog& catalog)
{
    const auto name = j.at("parameter").get<std::string>();
    return {name, catalog.at(name).from_json(j.at("value"))};
}

void check_factor(double f, const std::string& where)
{
    if (!(f > 0.0) || !std::isfinite(f)) throw DocumentError(where + ": factors must be positive");
}

// -- built-in calibration -------------------------------------------------

FactorTerm factor(std::string p, Value v, double f, std::string note = {})
{
    return FactorTerm{{std::move(p), std::move(v)}, f, std::move(note)};
}

PiecewiseTerm piecewise(std::string p, std::vector<std::pair<double, double>> pts, std::string note = {})
{
    return PiecewiseTerm{std::move(p), std::move(pts), std::move(note)};
}

WorkloadModel shuffle_heavy()
{
    // Calibrated on a sort-heavy job whose Kryo run takes 150 s of a 200 s default.
    WorkloadModel m;
    m.name = "shuffle-heavy";
    m.base_runtime_s = 200.0;
    m.noise = {0.0, 42};
    m.terms = {
        factor("spark.serializer", std::string("kryo"), 0.75, "Kryo cuts roughly a quarter of the runtime"),
        factor("spark.shuffle.manager", std::string("hash"), 0.85, "hash shuffle ~127 s against a 150 s Kryo baseline"),
        factor("spark.shuffle.manager", std::string("tungsten-sort"), 0.87, "tungsten-sort ~131 s against 150 s"),
        factor("spark.shuffle.compress", false, 2.375, "uncompressed shuffle more than doubles the runtime"),
        factor("spark.io.compression.codec", std::string("lz4"), 1.01, "codecs perform about the same"),
        factor("spark.io.compression.codec", std::string("lzf"), 0.99, "codecs perform about the same"),
        factor("spark.shuffle.consolidateFiles", true, 0.97, "few shuffle files, small gain"),
        InteractionTerm{{"spark.shuffle.manager", std::string("hash")}, {"spark.shuffle.consolidateFiles", true}, 0.97,
                        "consolidation offsets hash's many open files"},
        piecewise("spark.shuffle.memoryFraction", {{0.2, 1.0}, {0.4, 0.93}},
                  "piecewise-linear shape is a modelling choice; 0.4 gives ~139 s of 150 s"),
        CrashRegion{{{"spark.shuffle.memoryFraction", Comparison::le, 0.1},
                     {"spark.storage.memoryFraction", Comparison::ge, 0.7}},
                    "starved shuffle memory crashes the job"},
        piecewise("spark.reducer.maxSizeInFlight", {{24.0, 0.993}, {48.0, 1.0}}, "24m slightly faster, 96m unchanged"),
        piecewise("spark.shuffle.file.buffer", {{15.0, 1.02}, {32.0, 1.0}, {48.0, 0.933}}, "larger buffer ~140 s of 150 s"),
        factor("spark.shuffle.spill.compress", false, 1.01, "few spills"),
        factor("spark.shuffle.io.preferDirectBufs", false, 1.04),
        factor("spark.rdd.compress", true, 1.03, "cache fits in memory; compression only costs CPU"),
    };
    return m;
}

WorkloadModel cpu_bound()
{
    // Iterative compute job: shuffle plays a minor role, every effect stays under 10 %.
    WorkloadModel m;
    m.name = "cpu-bound";
    m.base_runtime_s = 60.0;
    m.noise = {0.0, 42};
    m.terms = {
        factor("spark.serializer", std::string("kryo"), 0.99),
        factor("spark.shuffle.manager", std::string("hash"), 1.02),
        factor("spark.shuffle.manager", std::string("tungsten-sort"), 0.985),
        factor("spark.shuffle.compress", false, 1.01, "little shuffle data, so compression barely matters"),
        factor("spark.io.compression.codec", std::string("lz4"), 1.015),
        factor("spark.io.compression.codec", std::string("lzf"), 1.02),
        factor("spark.shuffle.consolidateFiles", true, 0.98),
        factor("spark.rdd.compress", true, 1.01),
        factor("spark.shuffle.io.preferDirectBufs", false, 1.005),
        factor("spark.shuffle.spill.compress", false, 0.995),
        piecewise("spark.shuffle.memoryFraction", {{0.0, 1.03}, {0.2, 1.0}, {1.0, 0.97}}),
        piecewise("spark.storage.memoryFraction", {{0.0, 0.98}, {0.6, 1.0}, {1.0, 1.02}}),
        piecewise("spark.reducer.maxSizeInFlight", {{1.0, 1.03}, {48.0, 1.0}, {2048.0, 0.98}}),
        piecewise("spark.shuffle.file.buffer", {{1.0, 1.03}, {32.0, 1.0}, {1024.0, 0.99}}),
    };
    return m;
}

WorkloadModel memory_tight()
{
    // Input larger than executor memory: spills are constant and buffers matter.
    WorkloadModel m;
    m.name = "memory-tight";
    m.base_runtime_s = 900.0;
    m.noise = {0.0, 42};
    m.terms = {
        factor("spark.serializer", std::string("kryo"), 0.9, "Kryo about 10 % faster"),
        factor("spark.shuffle.manager", std::string("hash"), 1.245, "hash degrades when shuffle input exceeds memory"),
        factor("spark.shuffle.manager", std::string("tungsten-sort"), 0.89),
        factor("spark.shuffle.compress", false, 2.82, "uncompressed shuffle greatly increases completion time"),
        factor("spark.io.compression.codec", std::string("lz4"), 1.245, "lz4 adds about a quarter"),
        factor("spark.shuffle.consolidateFiles", true, 1.05),
        factor("spark.shuffle.spill.compress", false, 1.06),
        factor("spark.shuffle.io.preferDirectBufs", false, 1.099),
        factor("spark.rdd.compress", true, 1.02),
        piecewise("spark.shuffle.file.buffer", {{15.0, 1.166}, {32.0, 1.0}, {64.0, 0.99}},
                  "small buffers mean more seeks and syscalls; 15k costs ~17 %"),
        piecewise("spark.reducer.maxSizeInFlight", {{48.0, 1.0}, {512.0, 1.05}}),
        CrashRegion{{{"spark.shuffle.memoryFraction", Comparison::le, 0.1}}, "not enough shuffle memory"},
        CrashRegion{{{"spark.reducer.maxSizeInFlight", Comparison::ge, 512.0}}, "fetch buffers exhaust the heap"},
    };
    return m;
}

} // namespace

double term_factor(const EffectTerm& term, const Configuration& config, const Catalog& catalog)
{
    return std::visit(
        [&](const auto& t) -> double {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, FactorTerm>) {
                return matches(t.when, config, catalog) ? t.factor : 1.0;
            } else if constexpr (std::is_same_v<T, PiecewiseTerm>) {
                const Value v = effective_value(config, catalog.at(t.parameter));
                const auto* x = std::get_if<double>(&v);
                return x ? interpolate(t.points, *x) : 1.0;
            } else if constexpr (std::is_same_v<T, InteractionTerm>) {
                return matches(t.first, config, catalog) && matches(t.second, config, catalog) ? t.factor : 1.0;
            } else {
                return 1.0;
            }
        },
        term);
}

bool in_crash_region(const CrashRegion& region, const Configuration& config, const Catalog& catalog)
{
    return std::all_of(region.when.begin(), region.when.end(),
                       [&](const Condition& c) { return holds(c, config, catalog); });
}

double jitter(const NoiseSpec& noise, const Configuration& config, std::uint64_t seed)
{
    if (noise.amplitude == 0.0) return 0.0;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(config.settings)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    const std::uint64_t bits = splitmix64(seed ^ splitmix64(h));
    const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
    return noise.amplitude * (2.0 * unit - 1.0);
}

RunOutcome evaluate(const WorkloadModel& model, const Configuration& config, const Catalog& catalog, std::uint64_t seed)
{
    for (const auto& term : model.terms) {
        if (const auto* crash = std::get_if<CrashRegion>(&term); crash && in_crash_region(*crash, config, catalog)) {
            return RunOutcome::crash();
        }
    }
    double runtime = model.base_runtime_s;
    for (const auto& term : model.terms) runtime *= term_factor(term, config, catalog);
    return RunOutcome::ok(runtime * (1.0 + jitter(model.noise, config, seed)));
}

void validate(const WorkloadModel& model, const Catalog& catalog)
{
    const std::string where = "model " + model.name;
    check_factor(model.base_runtime_s, where + " base runtime");
    if (model.noise.amplitude < 0.0 || model.noise.amplitude >= 1.0) {
        throw DocumentError(where + ": noise amplitude must lie in [0, 1)");
    }
    auto known = [&](const std::string& p) {
        if (!catalog.find(p)) throw DocumentError(where + ": unknown parameter " + p);
    };
    for (const auto& term : model.terms) {
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, FactorTerm>) {
                    known(t.when.parameter);
                    check_factor(t.factor, where);
                } else if constexpr (std::is_same_v<T, PiecewiseTerm>) {
                    known(t.parameter);
                    if (catalog.at(t.parameter).kind != ParamKind::numeric) {
                        throw DocumentError(where + ": piecewise term over non-numeric " + t.parameter);
                    }
                    if (t.points.empty()) throw DocumentError(where + ": piecewise term without points");
                    for (std::size_t i = 0; i < t.points.size(); ++i) {
                        check_factor(t.points[i].second, where);
                        if (i > 0 && !(t.points[i].first > t.points[i - 1].first)) {
                            throw DocumentError(where + ": piecewise points must be strictly increasing");
                        }
                    }
                } else if constexpr (std::is_same_v<T, InteractionTerm>) {
                    known(t.first.parameter);
                    known(t.second.parameter);
                    check_factor(t.factor, where);
                } else {
                    if (t.when.empty()) throw DocumentError(where + ": crash region without conditions");
                    for (const auto& c : t.when) known(c.parameter);
                }
            },
            term);
    }
}

std::vector<WorkloadModel> builtin_models() { return {shuffle_heavy(), cpu_bound(), memory_tight()}; }

WorkloadModel builtin_model(std::string_view name)
{
    for (auto& m : builtin_models()) {
        if (m.name == name) return m;
    }
    throw DocumentError("unknown built-in model '" + std::string(name) + "'");
}

nlohmann::json to_json(const WorkloadModel& model)
{
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& term : model.terms) {
        nlohmann::json j = std::visit(
            [](const auto& t) -> nlohmann::json {
                using T = std::decay_t<decltype(t)>;
                nlohmann::json out;
                if constexpr (std::is_same_v<T, FactorTerm>) {
                    out = {{"type", "factor"}, {"parameter", t.when.parameter}, {"value", value_to_json(t.when.value)},
                           {"factor", t.factor}};
                } else if constexpr (std::is_same_v<T, PiecewiseTerm>) {
                    nlohmann::json pts = nlohmann::json::array();
                    for (const auto& [x, f] : t.points) pts.push_back({x, f});
                    out = {{"type", "piecewise"}, {"parameter", t.parameter}, {"points", std::move(pts)}};
                } else if constexpr (std::is_same_v<T, InteractionTerm>) {
                    out = {{"type", "interaction"}, {"first", match_to_json(t.first)}, {"second", match_to_json(t.second)},
                           {"factor", t.factor}};
                } else {
                    nlohmann::json when = nlohmann::json::array();
                    for (const auto& c : t.when) {
                        when.push_back({{"parameter", c.parameter}, {"op", to_string(c.op)}, {"value", value_to_json(c.value)}});
                    }
                    out = {{"type", "crash"}, {"when", std::move(when)}};
                }
                if (!t.note.empty()) out["note"] = t.note;
                return out;
            },
            term);
        terms.push_back(std::move(j));
    }
    return {
        {"name", model.name},
        {"base_runtime_s", model.base_runtime_s},
        {"noise", {{"amplitude", model.noise.amplitude}, {"default_seed", model.noise.default_seed}}},
        {"terms", std::move(terms)},
    };
}

WorkloadModel workload_model_from_json(const nlohmann::json& doc, const Catalog& catalog)
{
    try {
        WorkloadModel m;
        m.name = doc.at("name").get<std::string>();
        m.base_runtime_s = doc.at("base_runtime_s").get<double>();
        if (doc.contains("noise")) {
            m.noise.amplitude = doc.at("noise").value("amplitude", 0.0);
            m.noise.default_seed = doc.at("noise").value("default_seed", std::uint64_t{0});
        }
        for (const auto& jt : doc.at("terms")) {
            const auto type = jt.at("type").get<std::string>();
            const auto note = jt.value("note", "");
            if (type == "factor") {
                m.terms.emplace_back(FactorTerm{match_from_json(jt, catalog), jt.at("factor").get<double>(), note});
            } else if (type == "piecewise") {
                PiecewiseTerm t{jt.at("parameter").get<std::string>(), {}, note};
                for (const auto& p : jt.at("points")) t.points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
                m.terms.emplace_back(std::move(t));
            } else if (type == "interaction") {
                m.terms.emplace_back(InteractionTerm{match_from_json(jt.at("first"), catalog),
                                                     match_from_json(jt.at("second"), catalog),
                                                     jt.at("factor").get<double>(), note});
            } else if (type == "crash") {
                CrashRegion r{{}, note};
                for (const auto& jc : jt.at("when")) {
                    const auto name = jc.at("parameter").get<std::string>();
                    r.when.push_back({name, parse_comparison(jc.at("op").get<std::string>()),
                                      catalog.at(name).from_json(jc.at("value"))});
                }
                m.terms.emplace_back(std::move(r));
            } else {
                throw DocumentError("unknown term type '" + type + "'");
            }
        }
        validate(m, catalog);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(std::string("malformed model document: ") + e.what());
    }
}

SimulatorExecutor::SimulatorExecutor(WorkloadModel model, Catalog catalog, std::uint64_t seed)
    : model_(std::move(model))
    , catalog_(std::move(catalog))
    , seed_(seed)
{
    validate(model_, catalog_);
}

SimulatorExecutor::SimulatorExecutor(WorkloadModel model, Catalog catalog)
    : SimulatorExecutor(model, std::move(catalog), model.noise.default_seed)
{
}

RunOutcome SimulatorExecutor::measure(const Configuration& config, std::optional<double> timeout_s)
{
    const std::uint64_t seed = deterministic() ? seed_ : seed_ + calls_++;
    RunOutcome out = evaluate(model_, config, catalog_, seed);
    if (out.status == TrialStatus::ok && timeout_s && out.seconds > *timeout_s) return RunOutcome::timeout();
    return out;
}

nlohmann::json SimulatorExecutor::descriptor() const
{
    return {{"kind", "sim"}, {"model", to_json(model_)}, {"seed", seed_}, {"catalog", to_json(catalog_)}};
}

} // namespace tunetree
