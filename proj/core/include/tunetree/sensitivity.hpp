#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunetree/runner.hpp"

namespace tunetree {

/// How numeric parameters pick their test values.
enum class NeighborhoodRule {
    half_and_one_and_half,  // reference / 2 and reference x 1.5
    explicit_list,          // SweepSpec::explicit_values
};

std::string_view to_string(NeighborhoodRule rule);
NeighborhoodRule parse_neighborhood_rule(std::string_view text);

struct SweepSpec {
    std::vector<std::string> parameters;
    Configuration baseline;
    int reps = 5;
    NeighborhoodRule rule = NeighborhoodRule::half_and_one_and_half;
    std::map<std::string, std::vector<Value>> explicit_values;
    std::optional<double> timeout_s;
};

/// Throws ValidationError when a parameter is unknown or the baseline is invalid.
void validate(const SweepSpec& spec, const Catalog& catalog);

/// Values to test against `reference`: the other boolean; every other
/// enumerated value; for numeric parameters the rule's neighbours, clamped
/// to the domain and rounded to the unit's grid. Explicit lists pass
/// through validated (numeric parameters fall back to the rule when they
/// have no list). Throws EmptyCandidates.
std::vector<Value> candidate_values(const ParameterDef& param, NeighborhoodRule rule, const Value& reference,
                                    const std::vector<Value>* explicit_list = nullptr);
/// Same, relative to the catalog default.
std::vector<Value> candidate_values(const ParameterDef& param, NeighborhoodRule rule,
                                    const std::vector<Value>* explicit_list = nullptr);

/// One swept row: a single parameter, or a coupled group swept jointly.
struct SweepRow {
    std::string label;
    std::vector<std::string> parameters;
    std::vector<std::vector<Value>> candidates;  // one value per parameter
};

/// Rows in catalog order (a group sits at its first member's position),
/// each with its candidate list.
std::vector<SweepRow> sweep_rows(const SweepSpec& spec, const Catalog& catalog);

struct SweepTrial {
    std::string row;
    std::string value;  // display label, e.g. `lz4` or `0.4/0.4`
    Assignments assignments;
    TrialResult result;

    bool operator==(const SweepTrial&) const = default;
};

struct SweepResult {
    TrialResult baseline;
    std::vector<SweepTrial> trials;

    bool operator==(const SweepResult&) const = default;
};

/// Baseline once, then the baseline with one row's value changed for every
/// candidate of every row.
SweepResult run_sweep(const SweepSpec& spec, const Catalog& catalog, TrialExecutor& executor);

/// Same trials spread over `jobs` executor instances. Requires a
/// parallel-safe backend; results are merged in the sequential order.
SweepResult run_sweep_parallel(const SweepSpec& spec, const Catalog& catalog, const ExecutorFactory& factory,
                               unsigned jobs);

struct ImpactValue {
    std::string value;
    TrialStatus status = TrialStatus::ok;
    std::optional<double> median_s;
    std::optional<double> deviation;  // signed, relative to the baseline median

    bool operator==(const ImpactValue&) const = default;
};

inline constexpr double kLowImpactLevel = 0.05;

struct ImpactRow {
    std::string parameter;
    std::vector<ImpactValue> values;
    double mean_abs_deviation = 0.0;
    bool crashed_value_present = false;
    bool below_5_percent = false;

    bool operator==(const ImpactRow&) const = default;

    std::vector<std::string> flags() const;
};

/// Mean absolute relative deviation from the baseline per row, over the
/// values that completed. Throws Error when the baseline did not complete
/// and NoValidValues when a row has no completed value.
std::vector<ImpactRow> impact_table(const std::vector<SweepTrial>& trials, const TrialResult& baseline);
inline std::vector<ImpactRow> impact_table(const SweepResult& sweep) { return impact_table(sweep.trials, sweep.baseline); }

/// `parameter,value,median_s,deviation,mean_abs_deviation,flags`, one line per value.
std::string impact_csv(const std::vector<ImpactRow>& rows);
nlohmann::json impact_json(const std::vector<ImpactRow>& rows, const TrialResult& baseline);
std::string impact_text(const std::vector<ImpactRow>& rows, const TrialResult& baseline);

nlohmann::json to_json(const SweepSpec& spec);
/// Reads the `sweep` object of a plan-style document:
/// `{"sweep": {parameters, baseline, reps, rule, values}}`.
SweepSpec sweep_spec_from_json(const nlohmann::json& doc, const Catalog& catalog);

} // namespace tunetree
