#include "tunetree/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

namespace tunetree {

namespace {

Value snap_to_grid(const ParameterDef& p, double v)
{
    v = std::clamp(v, p.numeric.min, p.numeric.max);
    if (p.numeric.unit == Unit::fraction) return std::round(v * 1000.0) / 1000.0;
    return std::round(v);
}

void push_unique(std::vector<Value>& out, const Value& v, const Value& reference)
{
    if (values_equal(v, reference)) return;
    if (std::any_of(out.begin(), out.end(), [&](const Value& o) { return values_equal(o, v); })) return;
    out.push_back(v);
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

struct WorkItem {
    Configuration config;
    std::optional<std::string> infeasible;
};

} // namespace

std::string_view to_string(NeighborhoodRule rule)
{
    return rule == NeighborhoodRule::half_and_one_and_half ? "half-and-1.5x" : "explicit";
}

NeighborhoodRule parse_neighborhood_rule(std::string_view text)
{
    if (text == "half-and-1.5x") return NeighborhoodRule::half_and_one_and_half;
    if (text == "explicit") return NeighborhoodRule::explicit_list;
    throw DocumentError("unknown neighborhood rule '" + std::string(text) + "'");
}

void validate(const SweepSpec& spec, const Catalog& catalog)
{
    for (const auto& p : spec.parameters) catalog.at(p);
    for (const auto& [p, values] : spec.explicit_values) {
        const auto& def = catalog.at(p);
        for (const auto& v : values) {
            if (!def.accepts(v)) throw ValidationError(ValidationRule::illegal_value, p, canonical_value(v) + " is outside the domain");
        }
    }
    validate(spec.baseline, catalog);
    if (spec.reps < 1) throw Error("repetitions must be positive");
}

std::vector<Value> candidate_values(const ParameterDef& param, NeighborhoodRule rule, const Value& reference,
                                    const std::vector<Value>* explicit_list)
{
    std::vector<Value> out;
    if (explicit_list && !explicit_list->empty()) {
        for (const auto& v : *explicit_list) {
            if (!param.accepts(v)) {
                throw ValidationError(ValidationRule::illegal_value, param.name, canonical_value(v) + " is outside the domain");
            }
            push_unique(out, v, reference);
        }
    } else {
        switch (param.kind) {
        case ParamKind::boolean:
            out.push_back(!std::get<bool>(reference));
            break;
        case ParamKind::enumerated:
            for (const auto& v : param.values) push_unique(out, v, reference);
            break;
        case ParamKind::numeric: {
            (void)rule;  // explicit rule without a list for this parameter uses the neighbourhood
            const double ref = std::get<double>(reference);
            push_unique(out, snap_to_grid(param, ref / 2.0), reference);
            push_unique(out, snap_to_grid(param, ref * 1.5), reference);
            break;
        }
        }
    }
    if (out.empty()) throw EmptyCandidates(param.name + ": no candidate differs from " + param.display(reference));
    return out;
}

std::vector<Value> candidate_values(const ParameterDef& param, NeighborhoodRule rule, const std::vector<Value>* explicit_list)
{
    return candidate_values(param, rule, param.default_value, explicit_list);
}

std::vector<SweepRow> sweep_rows(const SweepSpec& spec, const Catalog& catalog)
{
    validate(spec, catalog);
    const std::set<std::string> wanted(spec.parameters.begin(), spec.parameters.end());
    std::set<std::string> emitted_groups;
    std::vector<SweepRow> rows;
    for (const auto& def : catalog.parameters()) {
        if (const auto* group = catalog.group_of(def.name)) {
            const bool hit = std::any_of(group->parameters.begin(), group->parameters.end(),
                                         [&](const std::string& p) { return wanted.contains(p); });
            if (!hit || !emitted_groups.insert(group->label).second) continue;
            SweepRow row{group->label, group->parameters, {}};
            std::vector<Value> reference;
            for (const auto& p : group->parameters) reference.push_back(effective_value(spec.baseline, catalog.at(p)));
            for (const auto& cand : group->candidates) {
                if (cand != reference) row.candidates.push_back(cand);
            }
            if (row.candidates.empty()) throw EmptyCandidates(group->label + ": every candidate equals the baseline");
            rows.push_back(std::move(row));
            continue;
        }
        if (!wanted.contains(def.name)) continue;
        const auto it = spec.explicit_values.find(def.name);
        const auto* list = it == spec.explicit_values.end() ? nullptr : &it->second;
        SweepRow row{def.name, {def.name}, {}};
        for (auto& v : candidate_values(def, spec.rule, effective_value(spec.baseline, def), list)) {
            row.candidates.push_back({std::move(v)});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

struct SweepPlan {
    std::vector<SweepTrial> trials;  // results filled later
    std::vector<WorkItem> items;     // items[0] is the baseline
};

SweepPlan plan_sweep(const SweepSpec& spec, const Catalog& catalog)
{
    SweepPlan out;
    out.items.push_back({spec.baseline, std::nullopt});
    for (const auto& row : sweep_rows(spec, catalog)) {
        for (const auto& cand : row.candidates) {
            SweepTrial t;
            t.row = row.label;
            std::vector<std::string> labels;
            SettingBundle bundle{row.label, {}};
            for (std::size_t i = 0; i < row.parameters.size(); ++i) {
                bundle.assignments[row.parameters[i]] = cand[i];
                labels.push_back(catalog.at(row.parameters[i]).display(cand[i]));
            }
            t.value = join(labels, "/");
            t.assignments = bundle.assignments;
            try {
                out.items.push_back({overlay(spec.baseline, bundle, "sweep", catalog), std::nullopt});
            } catch (const ValidationError& e) {
                Configuration attempted = spec.baseline;
                for (const auto& [k, v] : bundle.assignments) attempted.set(k, v, "sweep");
                out.items.push_back({attempted, std::string("infeasible: ") + e.what()});
            }
            out.trials.push_back(std::move(t));
        }
    }
    return out;
}

TrialResult run_item(const WorkItem& item, const SweepSpec& spec, TrialExecutor& executor)
{
    if (item.infeasible) return infeasible_result(item.config, spec.reps, executor.backend(), *item.infeasible);
    return measure_median(executor, item.config, spec.reps, spec.timeout_s);
}

SweepResult assemble(SweepPlan plan, std::vector<TrialResult> results)
{
    SweepResult out;
    out.baseline = std::move(results[0]);
    for (std::size_t i = 0; i < plan.trials.size(); ++i) {
        plan.trials[i].result = std::move(results[i + 1]);
        out.trials.push_back(std::move(plan.trials[i]));
    }
    return out;
}

} // namespace

SweepResult run_sweep(const SweepSpec& spec, const Catalog& catalog, TrialExecutor& executor)
{
    SweepPlan plan = plan_sweep(spec, catalog);
    std::vector<TrialResult> results;
    results.reserve(plan.items.size());
    for (const auto& item : plan.items) results.push_back(run_item(item, spec, executor));
    return assemble(std::move(plan), std::move(results));
}

SweepResult run_sweep_parallel(const SweepSpec& spec, const Catalog& catalog, const ExecutorFactory& factory,
                               unsigned jobs)
{
    auto first = factory();
    if (jobs <= 1 || !first->parallel_safe()) return run_sweep(spec, catalog, *first);

    SweepPlan plan = plan_sweep(spec, catalog);
    std::vector<TrialResult> results(plan.items.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&](std::unique_ptr<TrialExecutor> executor) {
        try {
            for (std::size_t i = next++; i < plan.items.size(); i = next++) {
                results[i] = run_item(plan.items[i], spec, *executor);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = plan.items.size();
        }
    };

    std::vector<std::thread> pool;
    const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(plan.items.size()));
    pool.emplace_back(worker, std::move(first));
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker, factory());
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return assemble(std::move(plan), std::move(results));
}

std::vector<std::string> ImpactRow::flags() const
{
    std::vector<std::string> out;
    if (crashed_value_present) out.emplace_back("crashed-value-present");
    if (below_5_percent) out.emplace_back("below-5-percent");
    return out;
}

std::vector<ImpactRow> impact_table(const std::vector<SweepTrial>& trials, const TrialResult& baseline)
{
    if (!baseline.ok()) throw Error("impact table needs a completed baseline");
    const double base = *baseline.median;

    std::vector<ImpactRow> rows;
    for (const auto& t : trials) {
        if (rows.empty() || rows.back().parameter != t.row) rows.push_back(ImpactRow{t.row, {}, 0.0, false, false});
        ImpactValue v{t.value, t.result.status, t.result.median, std::nullopt};
        if (t.result.ok()) v.deviation = (*t.result.median - base) / base;
        else rows.back().crashed_value_present = true;
        rows.back().values.push_back(std::move(v));
    }
    for (auto& row : rows) {
        double sum = 0.0;
        int n = 0;
        for (const auto& v : row.values) {
            if (!v.deviation) continue;
            sum += std::abs(*v.deviation);
            ++n;
        }
        if (n == 0) throw NoValidValues(row.parameter + ": every tested value failed");
        row.mean_abs_deviation = sum / n;
        row.below_5_percent = row.mean_abs_deviation < kLowImpactLevel;
    }
    return rows;
}

std::string impact_csv(const std::vector<ImpactRow>& rows)
{
    std::string out = "parameter,value,median_s,deviation,mean_abs_deviation,flags\n";
    for (const auto& row : rows) {
        const std::string mean = fixed(row.mean_abs_deviation, 6);
        const std::string flags = join(row.flags(), ";");
        for (const auto& v : row.values) {
            out += row.parameter + "," + v.value + ",";
            out += v.median_s ? format_number(*v.median_s) : std::string(to_string(v.status));
            out += ",";
            if (v.deviation) out += fixed(*v.deviation, 6);
            out += "," + mean + "," + flags + "\n";
        }
    }
    return out;
}

nlohmann::json impact_json(const std::vector<ImpactRow>& rows, const TrialResult& baseline)
{
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json values = nlohmann::json::array();
        for (const auto& v : row.values) {
            values.push_back({
                {"value", v.value},
                {"status", to_string(v.status)},
                {"median_s", v.median_s ? nlohmann::json(*v.median_s) : nlohmann::json(nullptr)},
                {"deviation", v.deviation ? nlohmann::json(*v.deviation) : nlohmann::json(nullptr)},
            });
        }
        jr.push_back({{"parameter", row.parameter},
                      {"values", std::move(values)},
                      {"mean_abs_deviation", row.mean_abs_deviation},
                      {"flags", row.flags()}});
    }
    return {{"schema", "v1"},
            {"baseline", {{"median_s", baseline.median ? nlohmann::json(*baseline.median) : nlohmann::json(nullptr)},
                          {"configuration", to_json(baseline.configuration.settings)}}},
            {"rows", std::move(jr)}};
}

std::string impact_text(const std::vector<ImpactRow>& rows, const TrialResult& baseline)
{
    std::string out = "baseline median " + (baseline.median ? fixed(*baseline.median, 3) + " s" : std::string("n/a")) + "\n";
    char line[512];
    std::snprintf(line, sizeof line, "%-40s %8s  %s\n", "parameter", "impact", "values");
    out += line;
    for (const auto& row : rows) {
        std::vector<std::string> parts;
        for (const auto& v : row.values) {
            parts.push_back(v.value + "=" + (v.deviation ? (*v.deviation >= 0 ? "+" : "") + fixed(100.0 * *v.deviation, 1) + "%"
                                                         : std::string(to_string(v.status))));
        }
        const std::string impact = row.below_5_percent ? "<5%" : fixed(100.0 * row.mean_abs_deviation, 1) + "%";
        std::string tail = join(parts, " ");
        if (!row.flags().empty()) tail += "  [" + join(row.flags(), ",") + "]";
        std::snprintf(line, sizeof line, "%-40s %8s  %s\n", row.parameter.c_str(), impact.c_str(), tail.c_str());
        out += line;
    }
    return out;
}

nlohmann::json to_json(const SweepSpec& spec)
{
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [p, vs] : spec.explicit_values) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : vs) arr.push_back(value_to_json(v));
        values[p] = std::move(arr);
    }
    nlohmann::json s{{"parameters", spec.parameters},
                     {"baseline", to_json(spec.baseline.settings)},
                     {"reps", spec.reps},
                     {"rule", to_string(spec.rule)},
                     {"values", std::move(values)}};
    if (spec.timeout_s) s["timeout_s"] = *spec.timeout_s;
    return {{"sweep", std::move(s)}};
}

SweepSpec sweep_spec_from_json(const nlohmann::json& doc, const Catalog& catalog)
{
    try {
        const auto& s = doc.contains("sweep") ? doc.at("sweep") : doc;
        SweepSpec spec;
        const auto& params = s.at("parameters");
        if (params.is_string() && params.get<std::string>() == "all") {
            for (const auto& p : catalog.parameters()) spec.parameters.push_back(p.name);
        } else {
            spec.parameters = params.get<std::vector<std::string>>();
        }
        if (s.contains("baseline")) spec.baseline = Configuration::from(assignments_from_json(s.at("baseline"), catalog));
        spec.reps = s.value("reps", 5);
        spec.rule = parse_neighborhood_rule(s.value("rule", "half-and-1.5x"));
        if (s.contains("values")) {
            for (const auto& [p, arr] : s.at("values").items()) {
                const auto& def = catalog.at(p);
                for (const auto& v : arr) spec.explicit_values[p].push_back(def.from_json(v));
            }
        }
        if (s.contains("timeout_s")) spec.timeout_s = s.at("timeout_s").get<double>();
        validate(spec, catalog);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw DocumentError(std::string("malformed sweep document: ") + e.what());
    }
}

} // namespace tunetree
