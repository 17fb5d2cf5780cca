#include "irbmc/report.h"

#include <array>
#include <sstream>

#include <json.hpp>

namespace irbmc::cli {

namespace {

using nlohmann::json;

const char* severity_name(Severity s) {
  switch (s) {
    case Severity::Error: return "error";
    case Severity::Warning: return "warning";
    case Severity::Note: return "note";
  }
  return "?";
}

std::optional<Severity> severity_from(const std::string& s) {
  if (s == "error") return Severity::Error;
  if (s == "warning") return Severity::Warning;
  if (s == "note") return Severity::Note;
  return std::nullopt;
}

std::optional<bmc::Verdict> verdict_from(const std::string& s) {
  for (bmc::Verdict v : {bmc::Verdict::Verified, bmc::Verdict::Refuted,
                         bmc::Verdict::Unreachable, bmc::Verdict::Unknown})
    if (s == bmc::verdict_name(v)) return v;
  return std::nullopt;
}

std::optional<PropertyClass> class_from(const std::string& s) {
  for (PropertyClass c :
       {PropertyClass::User, PropertyClass::Overflow, PropertyClass::DivZero,
        PropertyClass::Bounds, PropertyClass::Unwinding, PropertyClass::ModeExit,
        PropertyClass::AssumeProbe})
    if (s == property_class_name(c)) return c;
  return std::nullopt;
}

void render_trace(std::ostream& os, const Counterexample& cex, const std::string& indent) {
  os << indent << "trace (" << cex.steps.size() << " steps, entry " << cex.entry << "):\n";
  for (const TraceStep& st : cex.steps) {
    os << indent << "  " << st.fn << "#" << st.idx;
    if (st.isr_fire)
      os << "  [interrupt fires]";
    else if (!st.var.empty())
      os << "  " << st.var << " = " << st.value;
    if (st.line > 0) os << "  (line " << st.line << ")";
    os << '\n';
  }
  if (!cex.nondets.empty()) {
    os << indent << "nondet inputs:";
    for (uint64_t v : cex.nondets) os << ' ' << v;
    os << '\n';
  }
}

}  // namespace

std::string render_text(const PipelineResult& r) {
  std::ostringstream os;
  if (!r.ok) {
    os << "run failed at stage '" << r.failed_stage << "'\n";
    for (const Diagnostic& d : r.diagnostics)
      os << "  " << severity_name(d.severity) << ": " << d.message << '\n';
    if (!r.modes.empty()) os << "partial results follow\n";
  } else {
    for (const Diagnostic& d : r.diagnostics)
      if (d.severity != Severity::Note)
        os << severity_name(d.severity) << ": " << d.message << '\n';
  }

  for (const ModeRun& m : r.modes) {
    os << "== slice " << m.mode << " (entry " << m.entry << ") ==\n";
    static constexpr std::array<bmc::Verdict, 4> order = {
        bmc::Verdict::Refuted, bmc::Verdict::Unreachable, bmc::Verdict::Unknown,
        bmc::Verdict::Verified};
    for (bmc::Verdict v : order) {
      bool any = false;
      for (const auto& [id, pr] : m.report.properties) {
        if (pr.verdict != v) continue;
        if (!any) os << bmc::verdict_name(v) << ":\n";
        any = true;
        os << "  " << id << "  [" << property_class_name(pr.prop_class) << "]";
        if (pr.line > 0) os << "  line " << pr.line;
        os << '\n';
        if (!pr.message.empty()) os << "    " << pr.message << '\n';
        if (pr.cex) render_trace(os, *pr.cex, "    ");
      }
    }
    if (!m.flagged_assumptions.empty()) {
      os << "flagged assumptions (never satisfiable on any explored path):\n";
      for (const std::string& id : m.flagged_assumptions) os << "  " << id << '\n';
    }
    const Counters& c = m.counters;
    os << "counters: lines=" << c.lines << " functions=" << c.functions
       << " properties=" << c.properties << " vccs=" << c.vccs
       << " solver_vars=" << c.solver_vars << " solver_clauses=" << c.solver_clauses
       << " solver_seconds=" << c.solver_seconds << '\n';
    os << "slice verdict: " << (m.verified ? "VERIFIED" : "NOT VERIFIED");
    if (!m.report.complete) os << " (incomplete)";
    os << '\n';
  }

  if (r.ok) {
    os << "composed verdict: " << (r.composed_verified ? "VERIFIED" : "NOT VERIFIED");
    if (!r.complete) os << " (incomplete: resource limit hit)";
    os << '\n';
  }
  return os.str();
}

namespace {

json trace_to_json(const Counterexample& cex) {
  json steps = json::array();
  for (const TraceStep& st : cex.steps)
    steps.push_back({{"fn", st.fn},
                     {"idx", st.idx},
                     {"var", st.var},
                     {"value", st.value},
                     {"line", st.line},
                     {"isr_fire", st.isr_fire}});
  return {{"property", cex.property},
          {"entry", cex.entry},
          {"steps", std::move(steps)},
          {"nondets", cex.nondets}};
}

json report_to_json(const bmc::VerificationReport& rep) {
  json props = json::object();
  for (const auto& [id, pr] : rep.properties) {
    json p = {{"verdict", bmc::verdict_name(pr.verdict)},
              {"class", property_class_name(pr.prop_class)},
              {"message", pr.message},
              {"line", pr.line}};
    if (pr.cex) p["cex"] = trace_to_json(*pr.cex);
    props[id] = std::move(p);
  }
  return {{"properties", std::move(props)},
          {"vcc_count", rep.vcc_count},
          {"solver_vars", rep.solver_vars},
          {"solver_clauses", rep.solver_clauses},
          {"solver_seconds", rep.solver_seconds},
          {"complete", rep.complete}};
}

bool trace_from_json(const json& j, Counterexample& out) {
  if (!j.is_object() || !j.contains("property") || !j.contains("steps")) return false;
  out.property = j.at("property").get<std::string>();
  out.entry = j.value("entry", std::string("main"));
  for (const json& s : j.at("steps")) {
    TraceStep st;
    st.fn = s.value("fn", std::string());
    st.idx = s.value("idx", 0);
    st.var = s.value("var", std::string());
    st.value = s.value("value", uint64_t(0));
    st.line = s.value("line", 0);
    st.isr_fire = s.value("isr_fire", false);
    out.steps.push_back(std::move(st));
  }
  if (j.contains("nondets"))
    for (const json& v : j.at("nondets")) out.nondets.push_back(v.get<uint64_t>());
  return true;
}

bool report_from_json(const json& j, bmc::VerificationReport& out, std::string& err) {
  out.vcc_count = j.value("vcc_count", uint64_t(0));
  out.solver_vars = j.value("solver_vars", uint64_t(0));
  out.solver_clauses = j.value("solver_clauses", uint64_t(0));
  out.solver_seconds = j.value("solver_seconds", 0.0);
  out.complete = j.value("complete", true);
  if (!j.contains("properties") || !j.at("properties").is_object()) {
    err = "report without a 'properties' object";
    return false;
  }
  for (const auto& [id, p] : j.at("properties").items()) {
    bmc::PropertyResult pr;
    std::optional<bmc::Verdict> v = verdict_from(p.value("verdict", std::string()));
    std::optional<PropertyClass> c = class_from(p.value("class", std::string()));
    if (!v || !c) {
      err = "property '" + id + "' has an unknown verdict or class";
      return false;
    }
    pr.verdict = *v;
    pr.prop_class = *c;
    pr.message = p.value("message", std::string());
    pr.line = p.value("line", 0);
    if (p.contains("cex")) {
      Counterexample cex;
      if (!trace_from_json(p.at("cex"), cex)) {
        err = "property '" + id + "' has a malformed trace";
        return false;
      }
      pr.cex = std::move(cex);
    }
    out.properties[id] = std::move(pr);
  }
  return true;
}

}  // namespace

std::string render_json(const PipelineResult& r) {
  json diags = json::array();
  for (const Diagnostic& d : r.diagnostics)
    diags.push_back({{"severity", severity_name(d.severity)},
                     {"line", d.line},
                     {"col", d.col},
                     {"message", d.message}});

  json modes = json::array();
  for (const ModeRun& m : r.modes) {
    const Counters& c = m.counters;
    modes.push_back({{"mode", m.mode},
                     {"entry", m.entry},
                     {"verified", m.verified},
                     {"guarantees_verified", m.guarantees_verified},
                     {"flagged_assumptions", m.flagged_assumptions},
                     {"counters",
                      {{"lines", c.lines},
                       {"functions", c.functions},
                       {"properties", c.properties},
                       {"vccs", c.vccs},
                       {"solver_vars", c.solver_vars},
                       {"solver_clauses", c.solver_clauses},
                       {"solver_seconds", c.solver_seconds}}},
                     {"report", report_to_json(m.report)}});
  }

  json root = {{"ok", r.ok},
               {"failed_stage", r.failed_stage},
               {"diagnostics", std::move(diags)},
               {"modes", std::move(modes)},
               {"composed_verified", r.composed_verified},
               {"complete", r.complete},
               {"exit_code", r.exit_code}};
  return root.dump(2) + "\n";
}

std::optional<PipelineResult> parse_result(const std::string& json_text, Diagnostics& diags) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    diags.push_back({Severity::Error, 0, 0, "report: not a JSON object"});
    return std::nullopt;
  }
  auto fail = [&](const std::string& m) {
    diags.push_back({Severity::Error, 0, 0, "report: " + m});
    return std::nullopt;
  };

  try {
    PipelineResult r;
    r.ok = root.value("ok", false);
    r.failed_stage = root.value("failed_stage", std::string());
    r.composed_verified = root.value("composed_verified", false);
    r.complete = root.value("complete", true);
    r.exit_code = root.value("exit_code", 4);

    if (root.contains("diagnostics"))
      for (const json& d : root.at("diagnostics")) {
        std::optional<Severity> s = severity_from(d.value("severity", std::string()));
        if (!s) return fail("unknown diagnostic severity");
        r.diagnostics.push_back(
            {*s, d.value("line", 0), d.value("col", 0), d.value("message", std::string())});
      }

    if (root.contains("modes"))
      for (const json& m : root.at("modes")) {
        ModeRun run;
        run.mode = m.value("mode", std::string());
        run.entry = m.value("entry", std::string());
        run.verified = m.value("verified", false);
        run.guarantees_verified = m.value("guarantees_verified", false);
        if (m.contains("flagged_assumptions"))
          for (const json& f : m.at("flagged_assumptions"))
            run.flagged_assumptions.push_back(f.get<std::string>());
        if (m.contains("counters")) {
          const json& c = m.at("counters");
          run.counters.lines = c.value("lines", uint64_t(0));
          run.counters.functions = c.value("functions", uint64_t(0));
          run.counters.properties = c.value("properties", uint64_t(0));
          run.counters.vccs = c.value("vccs", uint64_t(0));
          run.counters.solver_vars = c.value("solver_vars", uint64_t(0));
          run.counters.solver_clauses = c.value("solver_clauses", uint64_t(0));
          run.counters.solver_seconds = c.value("solver_seconds", 0.0);
        }
        if (m.contains("report")) {
          std::string err;
          if (!report_from_json(m.at("report"), run.report, err)) return fail(err);
        }
        r.modes.push_back(std::move(run));
      }
    return r;
  } catch (const json::exception& e) {
    return fail(e.what());
  }
}

}  // namespace irbmc::cli
