#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunetree/catalog.hpp"

namespace tunetree {

inline constexpr std::string_view kOriginDefault = "default";
inline constexpr std::string_view kOriginUser = "user";

using Assignments = std::map<std::string, Value>;

/// A set of parameter values plus where each came from (`default`, `user`,
/// or the id of the plan node that set it). Keys iterate in lexicographic
/// order, which makes every serialization deterministic.
struct Configuration {
    Assignments settings;
    std::map<std::string, std::string> provenance;

    bool operator==(const Configuration&) const = default;

    bool empty() const noexcept { return settings.empty(); }
    const Value* get(std::string_view name) const;
    void set(const std::string& name, Value value, std::string_view origin = kOriginUser);

    static Configuration from(const Assignments& assignments, std::string_view origin = kOriginUser);
};

/// One or more assignments applied together.
struct SettingBundle {
    std::string label;
    Assignments assignments;

    bool operator==(const SettingBundle&) const = default;
};

std::optional<ValidationError> check(const Assignments& settings, const Catalog& catalog);
inline std::optional<ValidationError> check(const Configuration& config, const Catalog& catalog)
{
    return check(config.settings, catalog);
}

/// Throws ValidationError.
void validate(const Configuration& config, const Catalog& catalog);
/// Same rules as a configuration, plus the bundle must not be empty.
void validate(const SettingBundle& bundle, const Catalog& catalog);

/// `base` with the bundle applied on top; overwritten keys take `origin` as
/// provenance. Throws ValidationError(constraint_violation) when the merged
/// configuration breaks a cross-parameter constraint.
Configuration overlay(const Configuration& base, const SettingBundle& bundle, std::string_view origin,
                      const Catalog& catalog);

/// Soft warnings, e.g. memory fractions summing above the warning level.
std::vector<std::string> warnings(const Configuration& config, const Catalog& catalog);

/// Value the configuration gives the parameter, else the catalog default.
Value effective_value(const Configuration& config, const ParameterDef& def);

/// Spark properties text: `name value` per line, sorted by name.
std::string to_properties(const Configuration& config, const Catalog& catalog);
/// Parses properties text, skipping blank and `#` lines. Throws ValidationError.
Configuration parse_properties(std::string_view text, const Catalog& catalog, std::string_view origin = kOriginUser);

/// Catalog-free canonical text (`name value` lines, sorted). Stored in clear
/// next to the digest so traces can be diffed by eye.
std::string canonical_text(const Assignments& settings);
/// `fnv1a64:<16 hex digits>` over canonical_text().
std::string digest(const Assignments& settings);
inline std::string digest(const Configuration& config) { return digest(config.settings); }

nlohmann::json to_json(const Assignments& assignments);
Assignments assignments_from_json(const nlohmann::json& j);
/// Coerces values through the catalog (so "48m" or 48 both work) and validates.
Assignments assignments_from_json(const nlohmann::json& j, const Catalog& catalog);

nlohmann::json to_json(const Configuration& config);
Configuration configuration_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SettingBundle& bundle);
SettingBundle bundle_from_json(const nlohmann::json& j, const Catalog& catalog);

} // namespace tunetree
