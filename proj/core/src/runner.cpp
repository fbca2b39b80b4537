#include "tunetree/runner.hpp"

#include <algorithm>

namespace tunetree {

std::string_view to_string(TrialStatus status)
{
    switch (status) {
    case TrialStatus::ok: return "ok";
    case TrialStatus::crash: return "crash";
    case TrialStatus::timeout: return "timeout";
    }
    return "?";
}

TrialStatus parse_trial_status(std::string_view text)
{
    if (text == "ok") return TrialStatus::ok;
    if (text == "crash") return TrialStatus::crash;
    if (text == "timeout") return TrialStatus::timeout;
    throw DocumentError("unknown trial status '" + std::string(text) + "'");
}

double lower_median(std::span<const double> runtimes)
{
    if (runtimes.empty()) throw Error("median of an empty sample");
    std::vector<double> sorted(runtimes.begin(), runtimes.end());
    const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
    std::nth_element(sorted.begin(), mid, sorted.end());
    return *mid;
}

TrialResult measure_median(TrialExecutor& executor, const Configuration& config, int reps,
                           std::optional<double> timeout_s)
{
    if (reps < 1) throw Error("repetitions must be positive");

    TrialResult r;
    r.configuration = config;
    r.canonical = canonical_text(config.settings);
    r.digest = digest(config.settings);
    r.requested = reps;
    r.backend = executor.backend();

    const int calls = executor.deterministic() ? 1 : reps;
    for (int i = 0; i < calls; ++i) {
        const RunOutcome out = executor.measure(config, timeout_s);
        if (out.status != TrialStatus::ok) {
            r.status = out.status;
            r.completed = static_cast<int>(r.runtimes.size());
            return r;
        }
        r.runtimes.push_back(out.seconds);
    }
    if (executor.deterministic()) r.runtimes.assign(static_cast<std::size_t>(reps), r.runtimes.front());
    r.completed = reps;
    r.median = lower_median(r.runtimes);
    return r;
}

TrialResult infeasible_result(const Configuration& config, int reps, std::string backend, std::string note)
{
    TrialResult r;
    r.configuration = config;
    r.canonical = canonical_text(config.settings);
    r.digest = digest(config.settings);
    r.status = TrialStatus::crash;
    r.requested = reps;
    r.completed = 0;
    r.backend = std::move(backend);
    r.note = std::move(note);
    return r;
}

nlohmann::json to_json(const TrialResult& r)
{
    nlohmann::json j{
        {"configuration", to_json(r.configuration)},
        {"digest", r.digest},
        {"canonical", r.canonical},
        {"runtimes", r.runtimes},
        {"median", r.median ? nlohmann::json(*r.median) : nlohmann::json(nullptr)},
        {"status", to_string(r.status)},
        {"requested", r.requested},
        {"completed", r.completed},
        {"backend", r.backend},
    };
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

TrialResult trial_result_from_json(const nlohmann::json& j)
{
    TrialResult r;
    r.configuration = configuration_from_json(j.at("configuration"));
    r.digest = j.at("digest").get<std::string>();
    r.canonical = j.at("canonical").get<std::string>();
    r.runtimes = j.at("runtimes").get<std::vector<double>>();
    if (!j.at("median").is_null()) r.median = j.at("median").get<double>();
    r.status = parse_trial_status(j.at("status").get<std::string>());
    r.requested = j.at("requested").get<int>();
    r.completed = j.at("completed").get<int>();
    r.backend = j.at("backend").get<std::string>();
    r.note = j.value("note", "");
    return r;
}

} // namespace tunetree
