#pragma once

#include <string>
#include <string_view>

#include "tunetree/persist.hpp"

namespace tunetree {

enum class ReportFormat { text, json, csv, properties };

std::string_view to_string(ReportFormat format);
ReportFormat parse_report_format(std::string_view text);

/// Relative runtime reduction from the baseline to the final configuration.
struct Improvement {
    double fraction = 0.0;  // (baseline - final) / baseline

    /// Percent rounded half away from zero to one decimal.
    double json_percent() const;
    /// Whole percent, truncated toward zero.
    long text_percent() const;
};

Improvement improvement(const SessionTrace& trace);

std::string render_report(const SessionRecord& record, ReportFormat format);

} // namespace tunetree
