#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunetree/errors.hpp"

namespace tunetree {

enum class ParamKind { boolean, enumerated, numeric };
enum class Unit { bytes, kilobytes, megabytes, fraction };

/// A parameter value. Numeric values are expressed in the parameter's unit
/// (48 for "48m" on a megabytes parameter).
using Value = std::variant<bool, double, std::string>;

std::string_view to_string(ParamKind kind);
std::string_view to_string(Unit unit);
ParamKind parse_kind(std::string_view text);
Unit parse_unit(std::string_view text);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Catalog-free rendering used for digests and labels: true/false, raw
/// enumerated string, shortest round-trip number.
std::string canonical_value(const Value& value);

bool values_equal(const Value& a, const Value& b);

nlohmann::json value_to_json(const Value& value);
Value value_from_json(const nlohmann::json& j);

struct NumericDomain {
    Unit unit = Unit::fraction;
    double min = 0.0;
    double max = 1.0;

    bool operator==(const NumericDomain&) const = default;
};

struct ParameterDef {
    std::string name;
    ParamKind kind = ParamKind::boolean;
    std::vector<std::string> values;  // enumerated only
    NumericDomain numeric;            // numeric only
    Value default_value;
    std::string notes;
    // enumerated value -> text written to a properties file
    std::map<std::string, std::string> rendering;

    bool operator==(const ParameterDef&) const = default;

    /// Checks kind, domain membership and unit granularity (whole numbers
    /// for size units, three decimals for fractions).
    bool accepts(const Value& value) const;

    /// Short human form: `kryo`, `48m`, `32k`, `0.4`, `true`.
    std::string display(const Value& value) const;

    /// Properties-file form. Same as display() except enumerated values
    /// with an entry in `rendering`.
    std::string render(const Value& value) const;

    /// Inverse of render() (also accepts the display form). Throws
    /// ValidationError(illegal_value).
    Value parse(std::string_view text) const;

    /// Coerces a JSON document value to this parameter's kind.
    Value from_json(const nlohmann::json& j) const;
};

/// Upper bound on the sum of several parameters, applied when all of them
/// are set. Sums above `warn_above` (but within `limit`) produce a warning.
struct SumConstraint {
    std::vector<std::string> parameters;
    double limit = 1.0;
    double warn_above = 1.0;

    bool operator==(const SumConstraint&) const = default;
};

/// Parameters that are swept together. Each candidate is one value per
/// parameter, in `parameters` order.
struct SweepGroup {
    std::string label;
    std::vector<std::string> parameters;
    std::vector<std::vector<Value>> candidates;

    bool operator==(const SweepGroup&) const = default;
};

class Catalog {
public:
    Catalog() = default;

    /// Validates every definition, constraint and group; throws DocumentError.
    Catalog(std::string name,
            std::vector<ParameterDef> parameters,
            std::vector<SumConstraint> constraints = {},
            std::vector<SweepGroup> sweep_groups = {});

    const std::string& name() const noexcept { return name_; }
    const std::vector<ParameterDef>& parameters() const noexcept { return parameters_; }
    const std::vector<SumConstraint>& constraints() const noexcept { return constraints_; }
    const std::vector<SweepGroup>& sweep_groups() const noexcept { return sweep_groups_; }
    std::size_t size() const noexcept { return parameters_.size(); }

    const ParameterDef* find(std::string_view name) const;
    /// Throws ValidationError(unknown_parameter).
    const ParameterDef& at(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    const SweepGroup* group_of(std::string_view parameter) const;

    bool operator==(const Catalog&) const = default;

private:
    std::string name_;
    std::vector<ParameterDef> parameters_;
    std::vector<SumConstraint> constraints_;
    std::vector<SweepGroup> sweep_groups_;
};

/// The twelve Spark 1.5.2 shuffle/compression/memory parameters.
Catalog builtin_spark_catalog();

nlohmann::json to_json(const ParameterDef& def);
nlohmann::json to_json(const Catalog& catalog);
Catalog catalog_from_json(const nlohmann::json& doc);

} // namespace tunetree
