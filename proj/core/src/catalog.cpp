#include "tunetree/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

namespace tunetree {

namespace {

constexpr double kEps = 1e-12;

bool is_whole_unit(Unit unit) { return unit != Unit::fraction; }

bool on_grid(Unit unit, double v)
{
    if (is_whole_unit(unit)) {
        return std::floor(v) == v;
    }
    const double scaled = v * 1000.0;
    return std::abs(scaled - std::round(scaled)) <= 1e-9;
}

std::string_view unit_suffix(Unit unit)
{
    switch (unit) {
    case Unit::bytes: return "b";
    case Unit::kilobytes: return "k";
    case Unit::megabytes: return "m";
    case Unit::fraction: return "";
    }
    return "";
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string describe(const Value& v) { return canonical_value(v); }

} // namespace

std::string_view to_string(ValidationRule rule)
{
    switch (rule) {
    case ValidationRule::unknown_parameter: return "UnknownParameter";
    case ValidationRule::illegal_value: return "IllegalValue";
    case ValidationRule::constraint_violation: return "ConstraintViolation";
    }
    return "?";
}

ValidationError::ValidationError(ValidationRule rule, std::string parameter, const std::string& detail)
    : Error(std::string(to_string(rule)) + ": " + parameter + (detail.empty() ? "" : " (" + detail + ")"))
    , rule_(rule)
    , parameter_(std::move(parameter))
{
}

std::string_view to_string(ParamKind kind)
{
    switch (kind) {
    case ParamKind::boolean: return "boolean";
    case ParamKind::enumerated: return "enumerated";
    case ParamKind::numeric: return "numeric";
    }
    return "?";
}

std::string_view to_string(Unit unit)
{
    switch (unit) {
    case Unit::bytes: return "bytes";
    case Unit::kilobytes: return "kilobytes";
    case Unit::megabytes: return "megabytes";
    case Unit::fraction: return "fraction";
    }
    return "?";
}

ParamKind parse_kind(std::string_view text)
{
    if (text == "boolean") return ParamKind::boolean;
    if (text == "enumerated") return ParamKind::enumerated;
    if (text == "numeric") return ParamKind::numeric;
    throw DocumentError("unknown parameter kind '" + std::string(text) + "'");
}

Unit parse_unit(std::string_view text)
{
    if (text == "bytes") return Unit::bytes;
    if (text == "kilobytes") return Unit::kilobytes;
    if (text == "megabytes") return Unit::megabytes;
    if (text == "fraction") return Unit::fraction;
    throw DocumentError("unknown unit '" + std::string(text) + "'");
}

std::string format_number(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }
    return std::string(buf, end);
}

std::string canonical_value(const Value& value)
{
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, double>) {
                return format_number(v);
            } else {
                return v;
            }
        },
        value);
}

bool values_equal(const Value& a, const Value& b) { return a == b; }

nlohmann::json value_to_json(const Value& value)
{
    return std::visit([](const auto& v) { return nlohmann::json(v); }, value);
}

Value value_from_json(const nlohmann::json& j)
{
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw DocumentError("value must be a boolean, number or string, got " + j.dump());
}

bool ParameterDef::accepts(const Value& value) const
{
    switch (kind) {
    case ParamKind::boolean:
        return std::holds_alternative<bool>(value);
    case ParamKind::enumerated: {
        const auto* s = std::get_if<std::string>(&value);
        return s && std::find(values.begin(), values.end(), *s) != values.end();
    }
    case ParamKind::numeric: {
        const auto* d = std::get_if<double>(&value);
        if (!d || !std::isfinite(*d)) return false;
        return *d >= numeric.min - kEps && *d <= numeric.max + kEps && on_grid(numeric.unit, *d);
    }
    }
    return false;
}

std::string ParameterDef::display(const Value& value) const
{
    if (kind != ParamKind::numeric) return canonical_value(value);
    const auto* d = std::get_if<double>(&value);
    if (!d) return canonical_value(value);
    if (numeric.unit == Unit::fraction) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", *d);
        std::string s = buf;
        while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
        return s;
    }
    return format_number(*d) + std::string(unit_suffix(numeric.unit));
}

std::string ParameterDef::render(const Value& value) const
{
    if (kind == ParamKind::enumerated) {
        if (const auto* s = std::get_if<std::string>(&value)) {
            if (auto it = rendering.find(*s); it != rendering.end()) return it->second;
        }
    }
    return display(value);
}

Value ParameterDef::parse(std::string_view text) const
{
    const auto bad = [&] { return ValidationError(ValidationRule::illegal_value, name, "cannot parse '" + std::string(text) + "'"); };
    Value v;
    switch (kind) {
    case ParamKind::boolean:
        if (text == "true") v = true;
        else if (text == "false") v = false;
        else throw bad();
        break;
    case ParamKind::enumerated: {
        std::string s(text);
        for (const auto& [raw, rendered] : rendering) {
            if (rendered == text) s = raw;
        }
        v = s;
        break;
    }
    case ParamKind::numeric: {
        std::string t = lower(text);
        const std::string suffix(unit_suffix(numeric.unit));
        if (!suffix.empty()) {
            const std::string with_b = suffix == "b" ? suffix : suffix + "b";
            if (t.size() > with_b.size() && t.ends_with(with_b)) t.resize(t.size() - with_b.size());
            else if (t.size() > suffix.size() && t.ends_with(suffix)) t.resize(t.size() - suffix.size());
        }
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
        if (ec != std::errc{} || ptr != t.data() + t.size()) throw bad();
        v = d;
        break;
    }
    }
    if (!accepts(v)) {
        throw ValidationError(ValidationRule::illegal_value, name, "'" + std::string(text) + "' is outside the domain");
    }
    return v;
}

Value ParameterDef::from_json(const nlohmann::json& j) const
{
    Value v = value_from_json(j);
    if (kind == ParamKind::numeric && j.is_string()) {
        return parse(j.get<std::string>());
    }
    if (!accepts(v)) {
        throw ValidationError(ValidationRule::illegal_value, name, describe(v) + " is outside the domain");
    }
    return v;
}

Catalog::Catalog(std::string name,
                 std::vector<ParameterDef> parameters,
                 std::vector<SumConstraint> constraints,
                 std::vector<SweepGroup> sweep_groups)
    : name_(std::move(name))
    , parameters_(std::move(parameters))
    , constraints_(std::move(constraints))
    , sweep_groups_(std::move(sweep_groups))
{
    std::set<std::string> seen;
    for (const auto& p : parameters_) {
        if (p.name.empty()) throw DocumentError("parameter with empty name");
        if (!seen.insert(p.name).second) throw DocumentError("duplicate parameter " + p.name);
        if (p.kind == ParamKind::enumerated) {
            if (p.values.empty()) throw DocumentError(p.name + ": enumerated domain is empty");
            std::set<std::string> uniq(p.values.begin(), p.values.end());
            if (uniq.size() != p.values.size()) throw DocumentError(p.name + ": enumerated domain has duplicates");
        }
        if (p.kind == ParamKind::numeric) {
            if (p.numeric.min > p.numeric.max) throw DocumentError(p.name + ": min > max");
            if (p.numeric.unit == Unit::fraction && (p.numeric.min < 0.0 || p.numeric.max > 1.0)) {
                throw DocumentError(p.name + ": fraction domain must lie within [0, 1]");
            }
        }
        if (!p.accepts(p.default_value)) {
            throw DocumentError(p.name + ": default " + describe(p.default_value) + " is outside the domain");
        }
    }
    for (const auto& c : constraints_) {
        if (c.parameters.size() < 2) throw DocumentError("sum constraint needs at least two parameters");
        for (const auto& n : c.parameters) {
            const auto* p = find(n);
            if (!p || p->kind != ParamKind::numeric) throw DocumentError("sum constraint over unknown or non-numeric " + n);
        }
    }
    for (const auto& g : sweep_groups_) {
        if (g.parameters.empty() || g.candidates.empty()) throw DocumentError("sweep group " + g.label + " is empty");
        for (const auto& n : g.parameters) {
            if (!find(n)) throw DocumentError("sweep group " + g.label + " names unknown " + n);
        }
        for (const auto& cand : g.candidates) {
            if (cand.size() != g.parameters.size()) throw DocumentError("sweep group " + g.label + ": candidate arity mismatch");
            for (std::size_t i = 0; i < cand.size(); ++i) {
                if (!at(g.parameters[i]).accepts(cand[i])) {
                    throw DocumentError("sweep group " + g.label + ": illegal candidate value for " + g.parameters[i]);
                }
            }
        }
    }
}

const ParameterDef* Catalog::find(std::string_view name) const
{
    for (const auto& p : parameters_) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

const ParameterDef& Catalog::at(std::string_view name) const
{
    if (const auto* p = find(name)) return *p;
    throw ValidationError(ValidationRule::unknown_parameter, std::string(name), "not in catalog " + name_);
}

std::optional<std::size_t> Catalog::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < parameters_.size(); ++i) {
        if (parameters_[i].name == name) return i;
    }
    return std::nullopt;
}

const SweepGroup* Catalog::group_of(std::string_view parameter) const
{
    for (const auto& g : sweep_groups_) {
        if (std::find(g.parameters.begin(), g.parameters.end(), parameter) != g.parameters.end()) return &g;
    }
    return nullptr;
}

Catalog builtin_spark_catalog()
{
    // Spark 1.5.2 documented defaults; re-pin here for other releases.
    struct Defaults {
        double max_size_in_flight_mb = 48;
        double file_buffer_kb = 32;
        double shuffle_memory_fraction = 0.2;
        double storage_memory_fraction = 0.6;
    } constexpr d;

    auto boolean = [](std::string name, bool def, std::string notes) {
        ParameterDef p;
        p.name = std::move(name);
        p.kind = ParamKind::boolean;
        p.default_value = def;
        p.notes = std::move(notes);
        return p;
    };
    auto enumerated = [](std::string name, std::vector<std::string> values, std::string def, std::string notes,
                         std::map<std::string, std::string> rendering = {}) {
        ParameterDef p;
        p.name = std::move(name);
        p.kind = ParamKind::enumerated;
        p.values = std::move(values);
        p.default_value = std::move(def);
        p.notes = std::move(notes);
        p.rendering = std::move(rendering);
        return p;
    };
    auto numeric = [](std::string name, Unit unit, double min, double max, double def, std::string notes) {
        ParameterDef p;
        p.name = std::move(name);
        p.kind = ParamKind::numeric;
        p.numeric = {unit, min, max};
        p.default_value = def;
        p.notes = std::move(notes);
        return p;
    };

    std::vector<ParameterDef> params{
        numeric("spark.reducer.maxSizeInFlight", Unit::megabytes, 1, 2048, d.max_size_in_flight_mb,
                "Map output fetched concurrently by each reducer. Larger chunks help when memory is plentiful."),
        boolean("spark.shuffle.compress", true, "Compress map outputs before they cross the network."),
        numeric("spark.shuffle.file.buffer", Unit::kilobytes, 1, 1024, d.file_buffer_kb,
                "In-memory buffer per shuffle file output stream; fewer seeks and syscalls when larger."),
        enumerated("spark.shuffle.manager", {"sort", "hash", "tungsten-sort"}, "sort",
                   "Shuffle implementation. hash opens many files unless consolidation is on."),
        enumerated("spark.io.compression.codec", {"snappy", "lz4", "lzf"}, "snappy",
                   "Codec for shuffle, spill and broadcast compression."),
        boolean("spark.shuffle.io.preferDirectBufs", true, "Use off-heap buffers in the shuffle transport."),
        boolean("spark.rdd.compress", false, "Compress serialized cached partitions; trades CPU for memory."),
        enumerated("spark.serializer", {"java", "kryo"}, "java", "Object serializer for shuffle and caching.",
                   {{"java", "org.apache.spark.serializer.JavaSerializer"},
                    {"kryo", "org.apache.spark.serializer.KryoSerializer"}}),
        numeric("spark.shuffle.memoryFraction", Unit::fraction, 0.0, 1.0, d.shuffle_memory_fraction,
                "Heap share for shuffle aggregation; grows at the expense of storage."),
        numeric("spark.storage.memoryFraction", Unit::fraction, 0.0, 1.0, d.storage_memory_fraction,
                "Heap share for cached RDD storage."),
        boolean("spark.shuffle.consolidateFiles", false, "Consolidate intermediate shuffle files (hash manager)."),
        boolean("spark.shuffle.spill.compress", true, "Compress data spilled during shuffles."),
    };

    std::vector<SumConstraint> constraints{
        {{"spark.shuffle.memoryFraction", "spark.storage.memoryFraction"}, 1.0, 0.8},
    };
    std::vector<SweepGroup> groups{
        {"spark.shuffle/storage.memoryFraction",
         {"spark.shuffle.memoryFraction", "spark.storage.memoryFraction"},
         {{0.4, 0.4}, {0.1, 0.7}}},
    };
    return Catalog("spark-1.5.2", std::move(params), std::move(constraints), std::move(groups));
}

nlohmann::json to_json(const ParameterDef& def)
{
    nlohmann::json j{
        {"name", def.name},
        {"kind", to_string(def.kind)},
        {"default", value_to_json(def.default_value)},
    };
    if (!def.notes.empty()) j["notes"] = def.notes;
    if (def.kind == ParamKind::enumerated) {
        j["values"] = def.values;
        if (!def.rendering.empty()) j["rendering"] = def.rendering;
    }
    if (def.kind == ParamKind::numeric) {
        j["unit"] = to_string(def.numeric.unit);
        j["min"] = def.numeric.min;
        j["max"] = def.numeric.max;
    }
    return j;
}

nlohmann::json to_json(const Catalog& catalog)
{
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : catalog.parameters()) params.push_back(to_json(p));
    nlohmann::json constraints = nlohmann::json::array();
    for (const auto& c : catalog.constraints()) {
        constraints.push_back({{"type", "sum_at_most"}, {"parameters", c.parameters}, {"limit", c.limit}, {"warn_above", c.warn_above}});
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : catalog.sweep_groups()) {
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& cand : g.candidates) {
            nlohmann::json row = nlohmann::json::array();
            for (const auto& v : cand) row.push_back(value_to_json(v));
            cands.push_back(std::move(row));
        }
        groups.push_back({{"label", g.label}, {"parameters", g.parameters}, {"candidates", std::move(cands)}});
    }
    return {
        {"name", catalog.name()},
        {"parameters", std::move(params)},
        {"constraints", std::move(constraints)},
        {"sweep_groups", std::move(groups)},
    };
}

Catalog catalog_from_json(const nlohmann::json& doc)
{
    try {
        std::vector<ParameterDef> params;
        for (const auto& jp : doc.at("parameters")) {
            ParameterDef p;
            p.name = jp.at("name").get<std::string>();
            p.kind = parse_kind(jp.at("kind").get<std::string>());
            p.notes = jp.value("notes", "");
            if (p.kind == ParamKind::enumerated) {
                p.values = jp.at("values").get<std::vector<std::string>>();
                if (jp.contains("rendering")) p.rendering = jp.at("rendering").get<std::map<std::string, std::string>>();
            }
            if (p.kind == ParamKind::numeric) {
                p.numeric.unit = parse_unit(jp.at("unit").get<std::string>());
                p.numeric.min = jp.at("min").get<double>();
                p.numeric.max = jp.at("max").get<double>();
            }
            p.default_value = value_from_json(jp.at("default"));
            params.push_back(std::move(p));
        }
        std::vector<SumConstraint> constraints;
        if (doc.contains("constraints")) {
            for (const auto& jc : doc.at("constraints")) {
                if (jc.value("type", "sum_at_most") != "sum_at_most") {
                    throw DocumentError("unsupported constraint type " + jc.at("type").dump());
                }
                SumConstraint c;
                c.parameters = jc.at("parameters").get<std::vector<std::string>>();
                c.limit = jc.value("limit", 1.0);
                c.warn_above = jc.value("warn_above", c.limit);
                constraints.push_back(std::move(c));
            }
        }
        std::vector<SweepGroup> groups;
        if (doc.contains("sweep_groups")) {
            for (const auto& jg : doc.at("sweep_groups")) {
                SweepGroup g;
                g.label = jg.at("label").get<std::string>();
                g.parameters = jg.at("parameters").get<std::vector<std::string>>();
                for (const auto& row : jg.at("candidates")) {
                    std::vector<Value> cand;
                    for (const auto& v : row) cand.push_back(value_from_json(v));
                    g.candidates.push_back(std::move(cand));
                }
                groups.push_back(std::move(g));
            }
        }
        return Catalog(doc.value("name", "catalog"), std::move(params), std::move(constraints), std::move(groups));
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(std::string("malformed catalog document: ") + e.what());
    }
}

} // namespace tunetree
