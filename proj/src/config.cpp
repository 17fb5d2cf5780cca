#include "irbmc/config.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace irbmc::cli {

namespace {

using nlohmann::json;

class ConfigReader {
 public:
  ConfigReader(const std::string& base_dir, Diagnostics& diags)
      : base_dir_(base_dir), diags_(diags) {}

  bool failed() const { return failed_; }

  void error(const std::string& msg) {
    diags_.push_back({Severity::Error, 0, 0, "config: " + msg});
    failed_ = true;
  }

  std::string resolve(const std::string& path) const {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir_.empty()) return p.lexically_normal().string();
    return (std::filesystem::path(base_dir_) / p).lexically_normal().string();
  }

  // Every object walk goes through this, so unrecognized keys cannot pass.
  void check_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (const char* a : allowed)
        if (key == a) known = true;
      if (!known) error("unknown key '" + key + "' in " + where);
    }
  }

  bool get_bool(const json& obj, const char* key, bool& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_boolean()) {
      error(std::string("'") + key + "' must be a boolean");
      return false;
    }
    out = it->get<bool>();
    return true;
  }

  bool get_string(const json& obj, const char* key, std::string& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_string()) {
      error(std::string("'") + key + "' must be a string");
      return false;
    }
    out = it->get<std::string>();
    return true;
  }

  bool get_count(const json& obj, const char* key, uint64_t& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number_unsigned()) {
      error(std::string("'") + key + "' must be a nonnegative integer");
      return false;
    }
    out = it->get<uint64_t>();
    return true;
  }

  bool get_seconds(const json& obj, const char* key, double& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    if (!it->is_number() || it->get<double>() < 0) {
      error(std::string("'") + key + "' must be a nonnegative number");
      return false;
    }
    out = it->get<double>();
    return true;
  }

  // Milliseconds are exact rationals; a JSON float like 0.06 is binary and
  // already off, so fractional values must come as decimal strings.
  std::optional<timing::Rat> get_rat(const json& v, const char* key) {
    if (v.is_string()) {
      try {
        return timing::rat_from_decimal(v.get<std::string>());
      } catch (const std::invalid_argument& e) {
        error(std::string("'") + key + "': " + e.what());
        return std::nullopt;
      }
    }
    if (v.is_number_integer()) return timing::rat(v.get<int64_t>());
    error(std::string("'") + key + "' must be an integer or a decimal string like \"2.5\"");
    return std::nullopt;
  }

  std::string base_dir_;
  Diagnostics& diags_;
  bool failed_ = false;
};

void read_unwind(ConfigReader& r, const json& obj, bmc::UnwindConfig& out) {
  r.check_keys(obj, "'unwind'", {"default", "loops", "unwinding_assertions"});
  r.get_count(obj, "default", out.default_bound);
  if (out.default_bound == 0) r.error("'unwind.default' must be at least 1");
  r.get_bool(obj, "unwinding_assertions", out.unwinding_assertions);
  if (auto it = obj.find("loops"); it != obj.end()) {
    if (!it->is_object()) {
      r.error("'unwind.loops' must map loop ids to bounds");
      return;
    }
    for (const auto& [id, bound] : it->items()) {
      if (!bound.is_number_unsigned() || bound.get<uint64_t>() == 0) {
        r.error("unwind bound for '" + id + "' must be a positive integer");
        continue;
      }
      out.loop_bounds[id] = bound.get<uint64_t>();
    }
  }
}

void read_ranges(ConfigReader& r, const json& obj,
                 std::map<analysis::BoundaryKey, analysis::VarRanges>& out) {
  for (const auto& [boundary, ranges] : obj.items()) {
    size_t arrow = boundary.find("->");
    if (arrow == std::string::npos || arrow == 0 || arrow + 2 >= boundary.size()) {
      r.error("boundary '" + boundary + "' must be '<mode>-><mode>'");
      continue;
    }
    analysis::BoundaryKey key{boundary.substr(0, arrow), boundary.substr(arrow + 2)};
    if (!ranges.is_object()) {
      r.error("ranges for '" + boundary + "' must be an object");
      continue;
    }
    analysis::VarRanges vr;
    for (const auto& [var, pair] : ranges.items()) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer()) {
        r.error("range for '" + var + "' must be [lo, hi]");
        continue;
      }
      int64_t lo = pair[0].get<int64_t>();
      int64_t hi = pair[1].get<int64_t>();
      if (hi < lo) {
        r.error("range for '" + var + "' has hi < lo");
        continue;
      }
      vr[var] = {lo, hi};
    }
    out[key] = std::move(vr);
  }
}

void read_mmio(ConfigReader& r, const json& obj, instrument::MmioConfig& out) {
  r.check_keys(obj, "'mmio'", {"domains", "confirmed_unknown"});
  if (auto it = obj.find("domains"); it != obj.end()) {
    if (!it->is_object()) {
      r.error("'mmio.domains' must map addresses to [lo, hi]");
      return;
    }
    for (const auto& [addr_text, pair] : it->items()) {
      uint64_t addr = 0;
      try {
        addr = std::stoull(addr_text, nullptr, 0);  // accepts "0x25" and "37"
      } catch (const std::exception&) {
        r.error("mmio address '" + addr_text + "' is not a number");
        continue;
      }
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer()) {
        r.error("mmio domain for '" + addr_text + "' must be [lo, hi]");
        continue;
      }
      out.domains[addr] = {pair[0].get<int64_t>(), pair[1].get<int64_t>()};
    }
  }
  if (auto it = obj.find("confirmed_unknown"); it != obj.end()) {
    if (!it->is_array()) {
      r.error("'mmio.confirmed_unknown' must be an array of sites");
      return;
    }
    for (const auto& site : *it) {
      if (!site.is_string()) {
        r.error("'mmio.confirmed_unknown' entries must be strings");
        continue;
      }
      out.confirmed_unknown.insert(site.get<std::string>());
    }
  }
}

void read_timing(ConfigReader& r, const json& obj, RunConfig& cfg) {
  r.check_keys(obj, "'timing'",
               {"cycles_per_ms", "period_ms", "watermark_ms", "costs", "loop_iters",
                "interrupts", "entry"});
  timing::TimingModel m;
  r.get_count(obj, "cycles_per_ms", m.cycles_per_ms);
  if (m.cycles_per_ms == 0) r.error("'timing.cycles_per_ms' must be positive");
  if (auto it = obj.find("period_ms"); it != obj.end()) {
    if (auto v = r.get_rat(*it, "timing.period_ms")) m.period_ms = *v;
  }
  if (!(timing::rat(0) < m.period_ms)) r.error("'timing.period_ms' must be positive");
  if (auto it = obj.find("watermark_ms"); it != obj.end()) {
    if (auto v = r.get_rat(*it, "timing.watermark_ms")) m.watermark_ms = *v;
  }
  if (auto it = obj.find("costs"); it != obj.end()) {
    if (!it->is_object()) {
      r.error("'timing.costs' must map opcodes to cycles");
    } else {
      for (const auto& [op, cycles] : it->items()) {
        if (!cycles.is_number_unsigned() || cycles.get<uint64_t>() == 0) {
          r.error("cost for '" + op + "' must be a positive integer");
          continue;
        }
        m.op_cost[op] = cycles.get<uint64_t>();
      }
    }
  }
  if (auto it = obj.find("loop_iters"); it != obj.end()) {
    if (!it->is_object()) {
      r.error("'timing.loop_iters' must map loop ids to iteration bounds");
    } else {
      for (const auto& [id, iters] : it->items()) {
        if (!iters.is_number_unsigned() || iters.get<uint64_t>() == 0) {
          r.error("iteration bound for '" + id + "' must be a positive integer");
          continue;
        }
        m.loop_iters[id] = iters.get<uint64_t>();
      }
    }
  }
  if (auto it = obj.find("interrupts"); it != obj.end()) {
    if (!it->is_array()) {
      r.error("'timing.interrupts' must be an array");
    } else {
      for (const auto& irq : *it) {
        if (!irq.is_object()) {
          r.error("each interrupt must be an object");
          continue;
        }
        r.check_keys(irq, "an interrupt", {"name", "wcet_cycles", "mint_cycles"});
        timing::TimingModel::Irq entry;
        r.get_string(irq, "name", entry.name);
        r.get_count(irq, "wcet_cycles", entry.wcet_cycles);
        r.get_count(irq, "mint_cycles", entry.mint_cycles);
        if (entry.wcet_cycles == 0 || entry.mint_cycles == 0) {
          r.error("interrupt '" + entry.name + "' needs wcet_cycles and mint_cycles >= 1");
          continue;
        }
        m.interrupts.push_back(std::move(entry));
      }
    }
  }
  r.get_string(obj, "entry", cfg.timing_entry);
  cfg.timing_model = std::move(m);
}

}  // namespace

std::optional<std::string> read_file(const std::string& path, Diagnostics& diags) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) {
    diags.push_back({Severity::Error, 0, 0, "cannot open '" + path + "'"});
    return std::nullopt;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<RunConfig> parse_config(const std::string& text, const std::string& base_dir,
                                      Diagnostics& diags) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    diags.push_back({Severity::Error, 0, 0, "config: not a JSON object"});
    return std::nullopt;
  }

  ConfigReader r(base_dir, diags);
  r.check_keys(root, "the config",
               {"sources", "checks", "unwind", "mode", "weave", "reachability",
                "limit_seconds", "per_property", "interface_ranges", "mmio",
                "eventually_true", "retry_bounds", "timing", "fault_tree", "format"});

  RunConfig cfg;
  if (auto it = root.find("sources"); it != root.end()) {
    if (!it->is_array()) {
      r.error("'sources' must be an array of paths");
    } else {
      for (const auto& s : *it) {
        if (!s.is_string()) {
          r.error("'sources' entries must be strings");
          continue;
        }
        cfg.sources.push_back(r.resolve(s.get<std::string>()));
      }
    }
  }

  if (auto it = root.find("checks"); it != root.end()) {
    if (!it->is_array()) {
      r.error("'checks' must be an array");
    } else {
      cfg.checks.clear();
      for (const auto& c : *it) {
        std::string name = c.is_string() ? c.get<std::string>() : "";
        if (name != "overflow" && name != "div-zero" && name != "bounds") {
          r.error("unknown check '" + name + "' (overflow, div-zero, bounds)");
          continue;
        }
        cfg.checks.insert(name);
      }
    }
  }

  if (auto it = root.find("unwind"); it != root.end()) {
    if (!it->is_object())
      r.error("'unwind' must be an object");
    else
      read_unwind(r, *it, cfg.unwind);
  }

  r.get_string(root, "mode", cfg.mode);
  r.get_bool(root, "weave", cfg.weave);
  r.get_bool(root, "reachability", cfg.reachability);
  r.get_seconds(root, "limit_seconds", cfg.limit_seconds);

  if (auto it = root.find("per_property"); it != root.end()) {
    if (!it->is_object()) {
      r.error("'per_property' must be an object");
    } else {
      r.check_keys(*it, "'per_property'", {"max_conflicts", "max_seconds"});
      r.get_count(*it, "max_conflicts", cfg.per_property.max_conflicts);
      r.get_seconds(*it, "max_seconds", cfg.per_property.max_seconds);
    }
  }

  if (auto it = root.find("interface_ranges"); it != root.end()) {
    if (!it->is_object())
      r.error("'interface_ranges' must be an object");
    else
      read_ranges(r, *it, cfg.interface_ranges);
  }

  if (auto it = root.find("mmio"); it != root.end()) {
    if (!it->is_object())
      r.error("'mmio' must be an object");
    else
      read_mmio(r, *it, cfg.mmio);
  }

  if (auto it = root.find("eventually_true"); it != root.end()) {
    if (!it->is_array()) {
      r.error("'eventually_true' must be an array of loop ids");
    } else {
      for (const auto& id : *it) {
        if (!id.is_string())
          r.error("'eventually_true' entries must be loop ids");
        else
          cfg.eventually_true.insert(id.get<std::string>());
      }
    }
  }

  if (auto it = root.find("retry_bounds"); it != root.end()) {
    if (!it->is_object()) {
      r.error("'retry_bounds' must map loop ids to bounds");
    } else {
      for (const auto& [id, bound] : it->items()) {
        if (!bound.is_number_unsigned() || bound.get<uint64_t>() == 0) {
          r.error("retry bound for '" + id + "' must be a positive integer");
          continue;
        }
        cfg.retry_bounds[id] = bound.get<uint64_t>();
      }
    }
  }

  if (auto it = root.find("timing"); it != root.end()) {
    if (!it->is_object())
      r.error("'timing' must be an object");
    else
      read_timing(r, *it, cfg);
  }

  if (std::string p; r.get_string(root, "fault_tree", p)) cfg.fault_tree_path = r.resolve(p);

  r.get_string(root, "format", cfg.format);
  if (cfg.format != "text" && cfg.format != "json")
    r.error("'format' must be \"text\" or \"json\"");

  if (r.failed()) return std::nullopt;
  return cfg;
}

std::optional<RunConfig> load_config(const std::string& path, Diagnostics& diags) {
  std::optional<std::string> text = read_file(path, diags);
  if (!text) return std::nullopt;
  return parse_config(*text, std::filesystem::path(path).parent_path().string(), diags);
}

}  // namespace irbmc::cli
