#include "tunetree/report.hpp"

#include <cmath>
#include <cstdio>

namespace tunetree {

namespace {

std::string seconds(double s)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f s", s);
    return buf;
}

std::string result_cell(const TrialResult& r)
{
    return r.ok() ? seconds(*r.median) : std::string(to_string(r.status));
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string backend_label(const nlohmann::json& d)
{
    std::string kind = d.value("kind", std::string("unknown"));
    if (kind == "replay" && d.contains("table")) kind += " " + d["table"].value("name", std::string());
    if (kind == "sim" && d.contains("model")) kind += " " + d["model"].value("name", std::string());
    if (kind == "command") kind += " " + d.value("template", std::string());
    return kind;
}

std::string render_text(const SessionRecord& record, const Catalog& catalog)
{
    const SessionTrace& t = record.trace;
    std::string out;
    char line[512];
    out += "session " + record.session_id + "\n";
    std::snprintf(line, sizeof line, "plan %s  threshold %.3f  reps %d\n", t.plan_id.c_str(), t.threshold, t.reps);
    out += line;
    out += "backend " + backend_label(record.backend) + "\n";
    out += "baseline " + result_cell(t.baseline) + "\n\n";

    std::snprintf(line, sizeof line, "%-22s %-20s %12s %12s  %s\n", "node", "candidate", "baseline", "median", "verdict");
    out += line;
    for (const auto& d : t.decisions) {
        const CandidateTrial* head = d.headline();
        const std::string label = head ? head->label : std::string(kNoCandidate);
        const std::string median = head ? result_cell(head->result) : std::string("-");
        std::string verdict(to_string(d.reason));
        if (d.accepted) verdict = "accepted " + verdict;
        std::snprintf(line, sizeof line, "%-22s %-20s %12s %12s  %s\n", d.node_id.c_str(), label.c_str(),
                      seconds(d.baseline_s).c_str(), median.c_str(), verdict.c_str());
        out += line;
        for (const auto& c : d.candidates) {
            if (head && &c == head) continue;
            std::snprintf(line, sizeof line, "%-22s %-20s %12s %12s\n", "", c.label.c_str(), "", result_cell(c.result).c_str());
            out += line;
        }
    }

    out += "\nfinal configuration";
    if (!t.final_branch.empty()) out += " (branch " + t.final_branch + ")";
    out += "\n";
    if (t.final_configuration.settings.empty()) out += "  (defaults)\n";
    for (const auto& [name, value] : t.final_configuration.settings) {
        const auto* def = catalog.find(name);
        out += "  " + name + " " + (def ? def->display(value) : canonical_value(value)) + "\n";
    }
    for (const auto& w : warnings(t.final_configuration, catalog)) out += "warning: " + w + "\n";

    const Improvement imp = improvement(t);
    out += "final runtime " + seconds(t.final_runtime_s) + "\n";
    out += "improvement " + std::to_string(imp.text_percent()) + "%\n";
    return out;
}

std::string render_csv(const SessionTrace& t)
{
    std::string out = "branch,node,candidate,status,median_s,baseline_s,threshold,accepted,verdict\n";
    for (const auto& d : t.decisions) {
        for (const auto& c : d.candidates) {
            const bool chosen = d.accepted && c.label == d.candidate;
            out += csv_field(d.branch) + "," + csv_field(d.node_id) + "," + csv_field(c.label) + ",";
            out += std::string(to_string(c.result.status)) + ",";
            out += (c.result.median ? format_number(*c.result.median) : std::string()) + ",";
            out += format_number(d.baseline_s) + "," + format_number(d.threshold) + ",";
            out += std::string(chosen ? "true" : "false") + "," + std::string(to_string(d.reason)) + "\n";
        }
    }
    return out;
}

} // namespace

std::string_view to_string(ReportFormat format)
{
    switch (format) {
    case ReportFormat::text: return "text";
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
    case ReportFormat::properties: return "properties";
    }
    return "?";
}

ReportFormat parse_report_format(std::string_view text)
{
    for (auto f : {ReportFormat::text, ReportFormat::json, ReportFormat::csv, ReportFormat::properties}) {
        if (to_string(f) == text) return f;
    }
    throw Error("unknown report format '" + std::string(text) + "'");
}

double Improvement::json_percent() const { return std::round(fraction * 1000.0) / 10.0; }

long Improvement::text_percent() const
{
    // Guard against products like 0.29 * 100 landing just under an integer.
    const double p = fraction * 100.0;
    return static_cast<long>(std::trunc(p + (p >= 0 ? 1e-9 : -1e-9)));
}

Improvement improvement(const SessionTrace& trace)
{
    if (!trace.baseline.ok() || *trace.baseline.median <= 0.0) return {};
    const double base = *trace.baseline.median;
    return {(base - trace.final_runtime_s) / base};
}

std::string render_report(const SessionRecord& record, ReportFormat format)
{
    const Catalog catalog = catalog_from_json(record.catalog);
    switch (format) {
    case ReportFormat::text:
        return render_text(record, catalog);
    case ReportFormat::json: {
        const Improvement imp = improvement(record.trace);
        nlohmann::json doc{
            {"schema", kSchemaVersion},
            {"session_id", record.session_id},
            {"baseline_s", record.trace.baseline.median ? nlohmann::json(*record.trace.baseline.median) : nlohmann::json(nullptr)},
            {"final_runtime_s", record.trace.final_runtime_s},
            {"improvement", {{"fraction", imp.fraction}, {"percent", imp.json_percent()}}},
            {"final_configuration", to_json(record.trace.final_configuration.settings)},
            {"warnings", warnings(record.trace.final_configuration, catalog)},
            {"trace", to_json(record.trace)},
        };
        return doc.dump(2) + "\n";
    }
    case ReportFormat::csv:
        return render_csv(record.trace);
    case ReportFormat::properties:
        return to_properties(record.trace.final_configuration, catalog);
    }
    return {};
}

} // namespace tunetree
