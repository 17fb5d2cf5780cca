#ifndef IRBMC_REPORT_H
#define IRBMC_REPORT_H

#include <optional>
#include <string>

#include "irbmc/pipeline.h"

namespace irbmc::cli {

// Human-readable report: properties grouped by verdict, refutations with
// their traces in execution order, counters per slice, composed verdict last.
std::string render_text(const PipelineResult& result);

// Machine-readable report following docs/report-schema.json.
std::string render_json(const PipelineResult& result);

// Inverse of render_json: parse_result(render_json(r)) == r.
std::optional<PipelineResult> parse_result(const std::string& json_text, Diagnostics& diags);

}  // namespace irbmc::cli

#endif
