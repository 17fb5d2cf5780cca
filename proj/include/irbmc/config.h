#ifndef IRBMC_CONFIG_H
#define IRBMC_CONFIG_H

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irbmc/analysis.h"
#include "irbmc/bmc.h"
#include "irbmc/diagnostics.h"
#include "irbmc/instrument.h"
#include "irbmc/timing.h"

namespace irbmc::cli {

// One run, fully described: sources, every verification knob, and the
// analysis models. Runs with the same config and sources are reproducible
// artifacts; anything the program text cannot express (value ranges, loop
// bounds, device value domains, annotations) lives here.
struct RunConfig {
  std::vector<std::string> sources;  // paths, resolved against the config dir

  // Safety instrumentation classes to keep ("overflow", "div-zero", "bounds").
  std::set<std::string> checks = {"overflow", "div-zero", "bounds"};

  bmc::UnwindConfig unwind;
  std::string mode = "all";  // mode name | "all" (composed) | "whole"
  bool weave = true;         // model interrupt interference
  bool reachability = false;
  double limit_seconds = 0;  // global solver budget, 0 = unlimited
  sat::SolveLimits per_property;

  std::map<analysis::BoundaryKey, analysis::VarRanges> interface_ranges;
  instrument::MmioConfig mmio;
  std::set<std::string> eventually_true;         // retry loops safe to cut
  std::map<std::string, uint64_t> retry_bounds;  // retry loops to bound instead

  std::optional<timing::TimingModel> timing_model;
  std::string timing_entry = "main";  // function the timing analysis measures
  std::string fault_tree_path;

  std::string format = "text";  // text | json
};

// Parses the JSON config text. Relative source and data paths are resolved
// against base_dir. Returns nullopt and diagnostics on malformed input;
// unknown keys are errors so typos cannot silently disable a knob.
std::optional<RunConfig> parse_config(const std::string& text, const std::string& base_dir,
                                      Diagnostics& diags);

// Reads and parses a config file; paths resolve against its directory.
std::optional<RunConfig> load_config(const std::string& path, Diagnostics& diags);

// Whole-file read helper shared by the front end.
std::optional<std::string> read_file(const std::string& path, Diagnostics& diags);

}  // namespace irbmc::cli

#endif
