#ifndef IRBMC_PIPELINE_H
#define IRBMC_PIPELINE_H

#include <optional>
#include <string>
#include <vector>

#include "irbmc/bmc.h"
#include "irbmc/config.h"
#include "irbmc/diagnostics.h"

namespace irbmc::cli {

struct Counters {
  uint64_t lines = 0;  // source lines of the functions in the slice
  uint64_t functions = 0;
  uint64_t properties = 0;
  uint64_t vccs = 0;
  uint64_t solver_vars = 0;
  uint64_t solver_clauses = 0;
  double solver_seconds = 0.0;

  friend bool operator==(const Counters&, const Counters&) = default;
};

// One verified slice: a mode, the whole-program composition, or a modeless
// entry function.
struct ModeRun {
  std::string mode;
  std::string entry;
  bmc::VerificationReport report;
  Counters counters;
  // Assumption probes that did not refute: no execution satisfies the
  // assumption (or the probe ran into a limit), so properties beyond it may
  // be vacuously verified.
  std::vector<std::string> flagged_assumptions;
  bool verified = false;             // every non-probe property Verified
  bool guarantees_verified = false;  // the mode-exit subset of the above

  friend bool operator==(const ModeRun&, const ModeRun&) = default;
};

struct PipelineResult {
  bool ok = false;           // every stage ran; verdicts are meaningful
  std::string failed_stage;  // first failing stage when !ok
  Diagnostics diagnostics;   // warnings, and errors when !ok
  std::vector<ModeRun> modes;
  bool composed_verified = false;
  bool complete = true;  // no verdict was cut short by a resource limit
  int exit_code = 4;

  friend bool operator==(const PipelineResult&, const PipelineResult&) = default;
};

// Exit code convention, used uniformly by the command line front end:
// 0 all verified, 1 some property refuted, 2 some property unreachable or an
// assumption flagged, 3 a resource limit left verdicts unknown, 4 the run
// itself failed (bad config, parse error, stage error).
int exit_code_for(const PipelineResult& result);

// Lower -> validate -> instrument -> weave -> havoc inputs -> per mode:
// partition, guard preprocessing, assumption probes, unwind, check. The
// composed verdict requires every mode verified, every mode-exit guarantee
// verified, and no flagged assumptions. A stage error aborts the remaining
// stages but keeps the sub-reports finished so far.
PipelineResult run_pipeline(const RunConfig& cfg);

// The front half of run_pipeline, up to and including input havocking, for
// tools that need the instrumented program rather than verdicts. On failure
// failed_stage names the stage and diags carry the errors.
struct Preprocessed {
  IrProgram program;
  std::vector<analysis::MmioSite> sites;
  std::string failed_stage;  // empty on success

  bool ok() const { return failed_stage.empty(); }
};
Preprocessed preprocess(const RunConfig& cfg, Diagnostics& diags);

// One verification slice ready to unwind: preprocess, then partition (named
// mode), compose ("whole"), or sweep (modeless program), then retry-guard
// preprocessing and assumption probes. cfg.mode must resolve to a single
// slice; "all" is an error when the program has more than one mode.
std::optional<instrument::ModeSlice> build_slice(const RunConfig& cfg, Diagnostics& diags);

}  // namespace irbmc::cli

#endif
