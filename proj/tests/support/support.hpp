#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "tunetree/persist.hpp"
#include "tunetree/plan.hpp"
#include "tunetree/replay.hpp"
#include "tunetree/runner.hpp"
#include "tunetree/workload.hpp"

namespace tunetree::test {

std::filesystem::path data_dir();
std::filesystem::path fixtures_dir();
/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

ReplayTable load_replay(const std::string& name, const Catalog& catalog);

/// Executor backed by a plain function. Counts calls.
class FunctionExecutor final : public TrialExecutor {
public:
    using Fn = std::function<RunOutcome(const Configuration&)>;

    explicit FunctionExecutor(Fn fn, bool deterministic = true) : fn_(std::move(fn)), deterministic_(deterministic) {}

    RunOutcome measure(const Configuration& config, std::optional<double>) override
    {
        ++calls;
        return fn_(config);
    }
    bool deterministic() const override { return deterministic_; }
    bool parallel_safe() const override { return true; }
    std::string backend() const override { return "function"; }
    nlohmann::json descriptor() const override { return {{"kind", "function"}}; }

    std::size_t calls = 0;

private:
    Fn fn_;
    bool deterministic_;
};

/// Random legal value for `def` (whole units for sizes, thousandths for fractions).
Value random_value(std::mt19937_64& rng, const ParameterDef& def);

/// Random configuration that validates against `catalog`.
Configuration random_configuration(std::mt19937_64& rng, const Catalog& catalog);

/// Random chain plan whose nodes touch disjoint parameters. The memory
/// fraction pair always lives in one node.
TuningPlan random_chain_plan(std::mt19937_64& rng, const Catalog& catalog, double threshold);

/// Model made of per-parameter factor and piecewise terms only.
WorkloadModel random_separable_model(std::mt19937_64& rng, const Catalog& catalog);

/// Separable model plus interaction terms (and sometimes a crash region).
WorkloadModel random_interacting_model(std::mt19937_64& rng, const Catalog& catalog);

/// Sleep-time model of tests/fixtures/stub_job.sh in seconds; nullopt when
/// the script exits non-zero.
std::optional<double> stub_job_seconds(const Configuration& config);

} // namespace tunetree::test
