#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tunetree/runner.hpp"

namespace tunetree {

/// Matches when the configuration's effective value of `parameter` equals `value`.
struct ValueMatch {
    std::string parameter;
    Value value;

    bool operator==(const ValueMatch&) const = default;
};

/// Multiplies the runtime by `factor` when `when` matches.
struct FactorTerm {
    ValueMatch when;
    double factor = 1.0;
    std::string note;

    bool operator==(const FactorTerm&) const = default;
};

/// Linear interpolation over (value, factor) points of a numeric
/// parameter, clamped to the end points outside their range.
struct PiecewiseTerm {
    std::string parameter;
    std::vector<std::pair<double, double>> points;
    std::string note;

    bool operator==(const PiecewiseTerm&) const = default;
};

/// Extra factor applied only when both values are present together.
struct InteractionTerm {
    ValueMatch first;
    ValueMatch second;
    double factor = 1.0;
    std::string note;

    bool operator==(const InteractionTerm&) const = default;
};

enum class Comparison { lt, le, eq, ge, gt };

struct Condition {
    std::string parameter;
    Comparison op = Comparison::eq;
    Value value;

    bool operator==(const Condition&) const = default;
};

/// The run crashes when every condition holds.
struct CrashRegion {
    std::vector<Condition> when;
    std::string note;

    bool operator==(const CrashRegion&) const = default;
};

using EffectTerm = std::variant<FactorTerm, PiecewiseTerm, InteractionTerm, CrashRegion>;

struct NoiseSpec {
    double amplitude = 0.0;  // relative; jitter is uniform in [-amplitude, amplitude]
    std::uint64_t default_seed = 0;

    bool operator==(const NoiseSpec&) const = default;
};

/// Multiplicative synthetic cost model of an application.
struct WorkloadModel {
    std::string name;
    double base_runtime_s = 1.0;
    std::vector<EffectTerm> terms;
    NoiseSpec noise;

    bool operator==(const WorkloadModel&) const = default;
};

/// Factor contributed by one term (1.0 for crash regions).
double term_factor(const EffectTerm& term, const Configuration& config, const Catalog& catalog);
bool in_crash_region(const CrashRegion& region, const Configuration& config, const Catalog& catalog);

/// Relative jitter in [-amplitude, amplitude] for (seed, configuration).
double jitter(const NoiseSpec& noise, const Configuration& config, std::uint64_t seed);

/// base x product of factors x (1 + jitter), or crash when any crash region
/// matches. Pure when noise is off.
RunOutcome evaluate(const WorkloadModel& model, const Configuration& config, const Catalog& catalog,
                    std::uint64_t seed = 0);

/// Throws DocumentError on non-positive factors or unknown parameters.
void validate(const WorkloadModel& model, const Catalog& catalog);

/// shuffle-heavy, cpu-bound and memory-tight, calibrated against the Spark catalog.
std::vector<WorkloadModel> builtin_models();
/// Throws DocumentError for an unknown name.
WorkloadModel builtin_model(std::string_view name);

nlohmann::json to_json(const WorkloadModel& model);
WorkloadModel workload_model_from_json(const nlohmann::json& doc, const Catalog& catalog);

/// Executor backed by a workload model. Deterministic when noise is off;
/// with noise every call draws from the next seed in sequence.
class SimulatorExecutor final : public TrialExecutor {
public:
    SimulatorExecutor(WorkloadModel model, Catalog catalog, std::uint64_t seed);
    SimulatorExecutor(WorkloadModel model, Catalog catalog);

    RunOutcome measure(const Configuration& config, std::optional<double> timeout_s) override;
    bool deterministic() const override { return model_.noise.amplitude == 0.0; }
    bool parallel_safe() const override { return true; }
    std::string backend() const override { return "sim:" + model_.name; }
    nlohmann::json descriptor() const override;

    const WorkloadModel& model() const noexcept { return model_; }

private:
    WorkloadModel model_;
    Catalog catalog_;
    std::uint64_t seed_;
    std::uint64_t calls_ = 0;
};

} // namespace tunetree
