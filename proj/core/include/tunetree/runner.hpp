#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tunetree/configuration.hpp"

namespace tunetree {

enum class TrialStatus { ok, crash, timeout };

std::string_view to_string(TrialStatus status);
TrialStatus parse_trial_status(std::string_view text);

/// Result of one application run.
struct RunOutcome {
    TrialStatus status = TrialStatus::ok;
    double seconds = 0.0;  // meaningful when status == ok

    static RunOutcome ok(double s) { return {TrialStatus::ok, s}; }
    static RunOutcome crash() { return {TrialStatus::crash, 0.0}; }
    static RunOutcome timeout() { return {TrialStatus::timeout, 0.0}; }

    bool operator==(const RunOutcome&) const = default;
};

/// A backend that runs the application once under a configuration.
///
/// Instances are used by one thread at a time. A backend that reports
/// parallel_safe() may have several instances measured concurrently.
class TrialExecutor {
public:
    virtual ~TrialExecutor() = default;

    /// One run. `timeout_s` (when set) bounds the run; exceeding it yields
    /// RunOutcome::timeout(). Throws ExecutorFailure when the backend itself
    /// is unusable.
    virtual RunOutcome measure(const Configuration& config, std::optional<double> timeout_s) = 0;

    /// Identical configurations always produce identical outcomes.
    virtual bool deterministic() const = 0;
    virtual bool parallel_safe() const = 0;
    /// Short label, e.g. `replay:casestudy-sortbykey`.
    virtual std::string backend() const = 0;
    /// Everything needed to rebuild this backend (stored in session records).
    virtual nlohmann::json descriptor() const = 0;
};

using ExecutorFactory = std::function<std::unique_ptr<TrialExecutor>()>;

/// Forwards to another executor and counts measure() calls.
class CountingExecutor final : public TrialExecutor {
public:
    explicit CountingExecutor(TrialExecutor& inner) : inner_(inner) {}

    RunOutcome measure(const Configuration& config, std::optional<double> timeout_s) override
    {
        ++calls_;
        return inner_.measure(config, timeout_s);
    }
    bool deterministic() const override { return inner_.deterministic(); }
    bool parallel_safe() const override { return inner_.parallel_safe(); }
    std::string backend() const override { return inner_.backend(); }
    nlohmann::json descriptor() const override { return inner_.descriptor(); }

    std::size_t calls() const noexcept { return calls_; }
    void reset() noexcept { calls_ = 0; }

private:
    TrialExecutor& inner_;
    std::size_t calls_ = 0;
};

/// Measured outcome of one configuration over repeated runs.
struct TrialResult {
    Configuration configuration;
    std::string digest;
    std::string canonical;  // clear text of what was hashed
    std::vector<double> runtimes;
    std::optional<double> median;  // absent unless status == ok
    TrialStatus status = TrialStatus::ok;
    int requested = 0;
    int completed = 0;
    std::string backend;
    std::string note;

    bool ok() const noexcept { return status == TrialStatus::ok; }
    bool operator==(const TrialResult&) const = default;
};

/// Median that is always an observed value: for an even count, the lower of
/// the two middle values. Requires a non-empty input.
double lower_median(std::span<const double> runtimes);

/// Runs `reps` repetitions and aggregates them. Deterministic backends are
/// called once and the value replicated. The first crash or timeout stops
/// the remaining repetitions.
TrialResult measure_median(TrialExecutor& executor, const Configuration& config, int reps,
                           std::optional<double> timeout_s = std::nullopt);

/// Result for a configuration that was rejected before running (e.g. an
/// infeasible overlay). Status crash, zero completed runs.
TrialResult infeasible_result(const Configuration& config, int reps, std::string backend, std::string note);

nlohmann::json to_json(const TrialResult& result);
TrialResult trial_result_from_json(const nlohmann::json& j);

} // namespace tunetree
