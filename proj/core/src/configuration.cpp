#include "tunetree/configuration.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace tunetree {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

// Sum of the constraint's parameters when every one of them is set.
std::optional<double> constrained_sum(const SumConstraint& c, const Assignments& settings)
{
    double sum = 0.0;
    for (const auto& name : c.parameters) {
        auto it = settings.find(name);
        if (it == settings.end()) return std::nullopt;
        const auto* d = std::get_if<double>(&it->second);
        if (!d) return std::nullopt;
        sum += *d;
    }
    return sum;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

const Value* Configuration::get(std::string_view name) const
{
    auto it = settings.find(std::string(name));
    return it == settings.end() ? nullptr : &it->second;
}

void Configuration::set(const std::string& name, Value value, std::string_view origin)
{
    settings[name] = std::move(value);
    provenance[name] = std::string(origin);
}

Configuration Configuration::from(const Assignments& assignments, std::string_view origin)
{
    Configuration c;
    for (const auto& [k, v] : assignments) c.set(k, v, origin);
    return c;
}

std::optional<ValidationError> check(const Assignments& settings, const Catalog& catalog)
{
    for (const auto& [name, value] : settings) {
        const auto* def = catalog.find(name);
        if (!def) return ValidationError(ValidationRule::unknown_parameter, name, "not in catalog " + catalog.name());
        if (!def->accepts(value)) {
            return ValidationError(ValidationRule::illegal_value, name, canonical_value(value) + " is outside the domain");
        }
    }
    for (const auto& c : catalog.constraints()) {
        if (auto sum = constrained_sum(c, settings); sum && *sum > c.limit + 1e-9) {
            return ValidationError(ValidationRule::constraint_violation, join(c.parameters, "+"),
                                   "sum " + format_number(*sum) + " exceeds " + format_number(c.limit));
        }
    }
    return std::nullopt;
}

void validate(const Configuration& config, const Catalog& catalog)
{
    if (auto err = check(config, catalog)) throw *err;
}

void validate(const SettingBundle& bundle, const Catalog& catalog)
{
    if (bundle.assignments.empty()) {
        throw ValidationError(ValidationRule::illegal_value, bundle.label, "bundle has no assignments");
    }
    if (auto err = check(bundle.assignments, catalog)) throw *err;
}

Configuration overlay(const Configuration& base, const SettingBundle& bundle, std::string_view origin,
                      const Catalog& catalog)
{
    Configuration out = base;
    for (const auto& [k, v] : bundle.assignments) out.set(k, v, origin);
    validate(out, catalog);
    return out;
}

std::vector<std::string> warnings(const Configuration& config, const Catalog& catalog)
{
    std::vector<std::string> out;
    for (const auto& c : catalog.constraints()) {
        if (auto sum = constrained_sum(c, config.settings); sum && *sum > c.warn_above + 1e-9 && *sum <= c.limit + 1e-9) {
            out.push_back(join(c.parameters, " + ") + " = " + format_number(*sum) + " leaves little headroom (above " +
                          format_number(c.warn_above) + ")");
        }
    }
    return out;
}

Value effective_value(const Configuration& config, const ParameterDef& def)
{
    if (const auto* v = config.get(def.name)) return *v;
    return def.default_value;
}

std::string to_properties(const Configuration& config, const Catalog& catalog)
{
    std::string out;
    for (const auto& [name, value] : config.settings) {
        out += name;
        out += ' ';
        out += catalog.at(name).render(value);
        out += '\n';
    }
    return out;
}

Configuration parse_properties(std::string_view text, const Catalog& catalog, std::string_view origin)
{
    Configuration config;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty() || line.front() == '#') continue;
        auto sep = line.find_first_of(" \t=");
        if (sep == std::string_view::npos) {
            throw ValidationError(ValidationRule::illegal_value, std::string(line), "missing value");
        }
        std::string name(line.substr(0, sep));
        auto value_text = trim(line.substr(sep + 1));
        const auto& def = catalog.at(name);
        config.set(name, def.parse(value_text), origin);
    }
    validate(config, catalog);
    return config;
}

std::string canonical_text(const Assignments& settings)
{
    std::string out;
    for (const auto& [name, value] : settings) {
        out += name;
        out += ' ';
        out += canonical_value(value);
        out += '\n';
    }
    return out;
}

std::string digest(const Assignments& settings)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text(settings)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016" PRIx64, h);
    return buf;
}

nlohmann::json to_json(const Assignments& assignments)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : assignments) j[k] = value_to_json(v);
    return j;
}

Assignments assignments_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw DocumentError("assignments must be an object, got " + j.dump());
    Assignments out;
    for (const auto& [k, v] : j.items()) out[k] = value_from_json(v);
    return out;
}

Assignments assignments_from_json(const nlohmann::json& j, const Catalog& catalog)
{
    if (!j.is_object()) throw DocumentError("assignments must be an object, got " + j.dump());
    Assignments out;
    for (const auto& [k, v] : j.items()) out[k] = catalog.at(k).from_json(v);
    if (auto err = check(out, catalog)) throw *err;
    return out;
}

nlohmann::json to_json(const Configuration& config)
{
    return {{"settings", to_json(config.settings)}, {"provenance", config.provenance}};
}

Configuration configuration_from_json(const nlohmann::json& j)
{
    Configuration c;
    c.settings = assignments_from_json(j.at("settings"));
    c.provenance = j.at("provenance").get<std::map<std::string, std::string>>();
    return c;
}

nlohmann::json to_json(const SettingBundle& bundle)
{
    return {{"label", bundle.label}, {"assignments", to_json(bundle.assignments)}};
}

SettingBundle bundle_from_json(const nlohmann::json& j, const Catalog& catalog)
{
    SettingBundle b;
    b.label = j.at("label").get<std::string>();
    b.assignments = assignments_from_json(j.at("assignments"), catalog);
    validate(b, catalog);
    return b;
}

} // namespace tunetree
