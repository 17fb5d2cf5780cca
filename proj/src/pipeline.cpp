#include "irbmc/pipeline.h"

#include <algorithm>
#include <chrono>

#include "irbmc/analysis.h"
#include "irbmc/frontend.h"
#include "irbmc/instrument.h"

namespace irbmc::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Strips functions/globals the entry (plus the implicitly firing ISRs) can
// never touch. partition_modes sweeps its slice itself; this covers the
// modeless and whole-composition runs.
void sweep_dead(IrProgram& prog, const std::string& entry) {
  analysis::DeadCode dc = analysis::dead_code(prog, entry);
  for (const std::string& fn : dc.functions) prog.functions.erase(fn);
  for (const std::string& g : dc.globals) prog.globals.erase(g);
  auto drop = [&](std::vector<std::string>& names) {
    std::erase_if(names, [&](const std::string& n) { return dc.functions.count(n) != 0; });
  };
  drop(prog.mode_functions);
  drop(prog.isr_functions);
}

// Disabled check classes become fall-through jumps, not ASSUME(true): an
// assumption would grow a probe later and pollute the report.
void disable_checks(IrProgram& prog, const std::set<std::string>& keep) {
  for (auto& [name, fn] : prog.functions)
    for (size_t i = 0; i < fn.body.size(); ++i) {
      const Instr& in = fn.body[i];
      if (in.op != Op::Assert) continue;
      if (in.prop_class != PropertyClass::Overflow && in.prop_class != PropertyClass::DivZero &&
          in.prop_class != PropertyClass::Bounds)
        continue;
      if (keep.count(property_class_name(in.prop_class))) continue;
      fn.body[i] = Instr::jump(i + 1);
    }
}

// Retry-loop preprocessing on one slice. Annotated loops that partition into
// other modes are simply absent here and skipped.
void preprocess_guards(IrProgram& prog, const RunConfig& cfg, Diagnostics& diags) {
  std::vector<std::string> loop_ids;
  for (const auto& [name, fn] : prog.functions)
    for (const LoopInfo& li : fn.loops) loop_ids.push_back(li.id);

  for (const std::string& id : loop_ids) {
    auto bound = cfg.retry_bounds.find(id);
    if (cfg.eventually_true.count(id)) {
      analysis::GuardAnalysis ga = analysis::guard_removability(prog, id, true);
      if (ga.verdict == analysis::GuardVerdict::Removable) {
        analysis::remove_guard(prog, id);
        continue;
      }
      if (bound == cfg.retry_bounds.end()) {
        diags.push_back({Severity::Warning, 0, 0,
                         "guard of loop '" + id + "' is " +
                             analysis::guard_verdict_name(ga.verdict) +
                             " despite the eventually-true annotation; left in place"});
        continue;
      }
    }
    if (bound != cfg.retry_bounds.end()) analysis::add_retry_bound(prog, id, bound->second);
  }
}

Counters make_counters(const IrProgram& prog, const bmc::VerificationReport& rep) {
  Counters c;
  for (const auto& [name, fn] : prog.functions) {
    if (fn.line > 0 && fn.end_line >= fn.line) c.lines += uint64_t(fn.end_line - fn.line + 1);
    ++c.functions;
  }
  c.properties = rep.properties.size();
  c.vccs = rep.vcc_count;
  c.solver_vars = rep.solver_vars;
  c.solver_clauses = rep.solver_clauses;
  c.solver_seconds = rep.solver_seconds;
  return c;
}

ModeRun run_one(IrProgram prog, const std::string& mode_name, const std::string& entry,
                const RunConfig& cfg, double budget_seconds, Diagnostics& diags) {
  preprocess_guards(prog, cfg, diags);
  instrument::probe_assumptions(prog);

  bmc::CheckOptions opts;
  opts.reachability = cfg.reachability;
  opts.per_property = cfg.per_property;
  opts.global_budget_seconds = budget_seconds;

  ModeRun run;
  run.mode = mode_name;
  run.entry = entry;
  run.report = bmc::check(prog, entry, cfg.unwind, opts);
  run.counters = make_counters(prog, run.report);

  bool verified = true;
  bool guarantees = true;
  for (const auto& [id, pr] : run.report.properties) {
    if (pr.prop_class == PropertyClass::AssumeProbe) {
      // Refuted is the good outcome: some execution satisfies the assumption.
      if (pr.verdict != bmc::Verdict::Refuted) run.flagged_assumptions.push_back(id);
      continue;
    }
    if (pr.verdict != bmc::Verdict::Verified) {
      verified = false;
      if (pr.prop_class == PropertyClass::ModeExit) guarantees = false;
    }
  }
  run.verified = verified;
  run.guarantees_verified = guarantees;
  return run;
}

bool validate_config(const IrProgram& prog, const RunConfig& cfg,
                     const std::vector<analysis::MmioSite>& sites, Diagnostics& diags) {
  bool ok = true;
  auto err = [&](const std::string& m) {
    diags.push_back({Severity::Error, 0, 0, "config: " + m});
    ok = false;
  };
  auto need_loop = [&](const std::string& id, const char* what) {
    if (!prog.find_loop(id).second) err("unknown loop '" + id + "' in " + what);
  };
  for (const auto& [id, b] : cfg.unwind.loop_bounds) need_loop(id, "unwind bounds");
  for (const std::string& id : cfg.eventually_true) need_loop(id, "eventually-true annotations");
  for (const auto& [id, b] : cfg.retry_bounds) need_loop(id, "retry bounds");

  if (cfg.mode != "all" && cfg.mode != "whole") {
    bool found = false;
    if (const Function* f = prog.find_function(cfg.mode); f && f->is_mode) found = true;
    for (const std::string& fname : prog.mode_functions) {
      const Function* f = prog.find_function(fname);
      if (f && f->mode_name == cfg.mode) found = true;
    }
    if (!found) err("unknown mode '" + cfg.mode + "'");
  }

  std::set<analysis::BoundaryKey> boundaries;
  for (size_t i = 0; i + 1 < prog.mode_functions.size(); ++i) {
    const Function* a = prog.find_function(prog.mode_functions[i]);
    const Function* b = prog.find_function(prog.mode_functions[i + 1]);
    if (a && b) boundaries.insert({a->mode_name, b->mode_name});
  }
  for (const auto& [key, r] : cfg.interface_ranges)
    if (!boundaries.count(key))
      err("boundary '" + key.first + "->" + key.second +
          "' does not join two consecutive modes");

  std::set<uint64_t> read_addrs;
  std::set<std::string> unresolved;
  for (const analysis::MmioSite& s : sites) {
    if (s.is_write) continue;
    if (s.address)
      read_addrs.insert(*s.address);
    else
      unresolved.insert(s.function + "#" + std::to_string(s.index));
  }
  for (const auto& [addr, dom] : cfg.mmio.domains)
    if (!read_addrs.count(addr)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(addr));
      err(std::string("mmio domain for ") + buf + " matches no device read");
    }
  for (const std::string& site : cfg.mmio.confirmed_unknown)
    if (!unresolved.count(site))
      err("confirmed mmio site '" + site + "' is not an unresolved device read");

  return ok;
}

}  // namespace

int exit_code_for(const PipelineResult& r) {
  if (!r.ok) return 4;
  bool any_refuted = false;
  bool any_unreachable = false;
  bool any_flagged = false;
  for (const ModeRun& m : r.modes) {
    if (!m.flagged_assumptions.empty()) any_flagged = true;
    for (const auto& [id, pr] : m.report.properties) {
      if (pr.prop_class == PropertyClass::AssumeProbe) continue;
      if (pr.verdict == bmc::Verdict::Refuted) any_refuted = true;
      if (pr.verdict == bmc::Verdict::Unreachable) any_unreachable = true;
    }
  }
  if (any_refuted) return 1;
  if (!r.complete) return 3;
  if (any_unreachable || any_flagged) return 2;
  return 0;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  PipelineResult result;
  std::string stage = "config";
  const Clock::time_point start = Clock::now();

  try {
    if (cfg.sources.empty()) {
      result.diagnostics.push_back({Severity::Error, 0, 0, "config: no sources given"});
      result.failed_stage = stage;
      return result;
    }

    stage = "parse";
    std::string text;
    for (const std::string& path : cfg.sources) {
      std::optional<std::string> one = read_file(path, result.diagnostics);
      if (!one) {
        result.failed_stage = stage;
        return result;
      }
      text += *one;
      text += '\n';
    }
    minic::LowerResult lowered = minic::lower(text);
    for (const Diagnostic& d : lowered.diagnostics) result.diagnostics.push_back(d);
    if (!lowered.program) {
      result.failed_stage = stage;
      return result;
    }
    IrProgram prog = std::move(*lowered.program);

    stage = "validate";
    {
      Diagnostics vd = validate(prog);
      for (const Diagnostic& d : vd) result.diagnostics.push_back(d);
      if (has_errors(vd)) {
        result.failed_stage = stage;
        return result;
      }
    }

    stage = "mmio";
    std::vector<analysis::MmioSite> sites;
    {
      Diagnostics md;
      sites = analysis::mmio_sites(prog, md);
      for (const Diagnostic& d : md) result.diagnostics.push_back(d);
      if (has_errors(md)) {
        result.failed_stage = stage;
        return result;
      }
    }

    stage = "config";
    if (!validate_config(prog, cfg, sites, result.diagnostics)) {
      result.failed_stage = stage;
      return result;
    }

    stage = "instrument";
    instrument::instrument_safety(prog);
    disable_checks(prog, cfg.checks);

    if (cfg.weave) {
      stage = "weave";
      Diagnostics wd;
      instrument::weave_isrs(prog, wd);
      for (const Diagnostic& d : wd) result.diagnostics.push_back(d);
      if (has_errors(wd)) {
        result.failed_stage = stage;
        return result;
      }
    }

    stage = "havoc";
    {
      Diagnostics hd;
      bool okay = instrument::havoc_inputs(prog, cfg.mmio, hd);
      for (const Diagnostic& d : hd) result.diagnostics.push_back(d);
      if (!okay) {
        result.failed_stage = stage;
        return result;
      }
    }

    // What remains runs per slice; a mode list drives the loop.
    struct Target {
      std::string name;
      std::string entry;
      bool partitioned = false;
    };
    std::vector<Target> targets;
    std::vector<analysis::ModeInterface> interfaces;

    stage = "partition";
    if (prog.mode_functions.empty()) {
      if (cfg.mode != "all" && cfg.mode != "whole" && cfg.mode != "main") {
        result.diagnostics.push_back(
            {Severity::Error, 0, 0, "mode '" + cfg.mode + "' requested, program has no modes"});
        result.failed_stage = stage;
        return result;
      }
      targets.push_back({"main", "main", false});
    } else if (cfg.mode == "whole") {
      std::string driver = analysis::add_whole_driver(prog);
      targets.push_back({"whole", driver, false});
    } else {
      Diagnostics id;
      interfaces = analysis::mode_interfaces(prog, cfg.interface_ranges, id);
      for (const Diagnostic& d : id) result.diagnostics.push_back(d);
      if (has_errors(id)) {
        result.failed_stage = stage;
        return result;
      }
      if (cfg.mode == "all") {
        for (const std::string& fname : prog.mode_functions) {
          const Function* f = prog.find_function(fname);
          targets.push_back({f->mode_name, fname, true});
        }
      } else {
        targets.push_back({cfg.mode, cfg.mode, true});
      }
    }

    for (const Target& t : targets) {
      double budget = 0;
      if (cfg.limit_seconds > 0) {
        budget = cfg.limit_seconds - seconds_since(start);
        if (budget <= 0) {
          result.diagnostics.push_back({Severity::Warning, 0, 0,
                                        "time budget exhausted before slice '" + t.name + "'"});
          ModeRun skipped;
          skipped.mode = t.name;
          skipped.entry = t.entry;
          skipped.report.complete = false;
          result.modes.push_back(std::move(skipped));
          result.complete = false;
          continue;
        }
      }

      stage = "partition";
      IrProgram slice_prog;
      std::string entry = t.entry;
      if (t.partitioned) {
        Diagnostics pd;
        instrument::ModeSlice slice = instrument::partition_modes(prog, interfaces, t.name, pd);
        for (const Diagnostic& d : pd) result.diagnostics.push_back(d);
        if (has_errors(pd) || slice.entry.empty()) {
          result.failed_stage = stage;
          return result;
        }
        slice_prog = std::move(slice.program);
        entry = slice.entry;
      } else {
        slice_prog = prog;
        sweep_dead(slice_prog, entry);
      }

      stage = "check";
      ModeRun run = run_one(std::move(slice_prog), t.name, entry, cfg, budget,
                            result.diagnostics);
      if (!run.report.complete) result.complete = false;
      result.modes.push_back(std::move(run));
    }

    result.ok = true;
    bool composed = true;
    for (const ModeRun& m : result.modes)
      if (!m.verified || !m.guarantees_verified || !m.flagged_assumptions.empty())
        composed = false;
    result.composed_verified = composed && result.complete && !result.modes.empty();
    result.exit_code = exit_code_for(result);
    return result;
  } catch (const std::exception& e) {
    result.ok = false;
    result.failed_stage = stage;
    result.diagnostics.push_back({Severity::Error, 0, 0, stage + ": " + e.what()});
    result.exit_code = 4;
    return result;
  }
}

}  // namespace irbmc::cli
