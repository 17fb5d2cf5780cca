#include "irbmc/timing.h"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace irbmc::timing {

namespace {

using i128 = __int128;

[[noreturn]] void bug(const std::string& msg) { throw InternalError("timing: " + msg); }

Rat make_rat(i128 num, i128 den) {
  if (den == 0) bug("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr i128 lo = std::numeric_limits<long long>::min();
  constexpr i128 hi = std::numeric_limits<long long>::max();
  if (num < lo || num > hi || den > hi) bug("rational overflow");
  Rat r;
  r.num = static_cast<long long>(num);
  r.den = static_cast<long long>(den);
  return r;
}

// ceil(p / q) for q > 0, exact.
long long ceil_frac(i128 p, i128 q) {
  i128 d = p / q;
  if (p % q != 0 && p > 0) d += 1;
  constexpr i128 lo = std::numeric_limits<long long>::min();
  constexpr i128 hi = std::numeric_limits<long long>::max();
  if (d < lo || d > hi) bug("ceiling overflow");
  return static_cast<long long>(d);
}

uint64_t sat_add(uint64_t a, uint64_t b) {
  return a > std::numeric_limits<uint64_t>::max() - b ? std::numeric_limits<uint64_t>::max()
                                                      : a + b;
}

uint64_t sat_mul(uint64_t a, uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > std::numeric_limits<uint64_t>::max() / b) return std::numeric_limits<uint64_t>::max();
  return a * b;
}

}  // namespace

Rat rat(long long num, long long den) { return make_rat(num, den); }

Rat rat_from_decimal(const std::string& text) {
  size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    neg = text[i] == '-';
    ++i;
  }
  i128 num = 0;
  i128 den = 1;
  bool any_digit = false;
  bool seen_dot = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("bad decimal: " + text);
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw std::invalid_argument("bad decimal: " + text);
    num = num * 10 + (c - '0');
    if (seen_dot) den *= 10;
    any_digit = true;
    if (den > i128(1000000000000000000LL)) throw std::invalid_argument("decimal too long: " + text);
  }
  if (!any_digit) throw std::invalid_argument("bad decimal: " + text);
  return make_rat(neg ? -num : num, den);
}

Rat operator+(const Rat& a, const Rat& b) {
  return make_rat(i128(a.num) * b.den + i128(b.num) * a.den, i128(a.den) * b.den);
}

Rat operator-(const Rat& a, const Rat& b) {
  return make_rat(i128(a.num) * b.den - i128(b.num) * a.den, i128(a.den) * b.den);
}

Rat operator*(const Rat& a, const Rat& b) {
  return make_rat(i128(a.num) * b.num, i128(a.den) * b.den);
}

bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }

bool operator<(const Rat& a, const Rat& b) { return i128(a.num) * b.den < i128(b.num) * a.den; }
bool operator<=(const Rat& a, const Rat& b) { return !(b < a); }

long long ceil_to_int(const Rat& a) { return ceil_frac(a.num, a.den); }

long long ceil_div(const Rat& a, const Rat& b) {
  if (b.num <= 0) bug("ceil_div by non-positive");
  return ceil_frac(i128(a.num) * b.den, i128(a.den) * b.num);
}

std::string to_decimal(const Rat& a) {
  long long den = a.den;
  int twos = 0;
  int fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return std::to_string(a.num) + "/" + std::to_string(a.den);
  int k = std::max(twos, fives);
  i128 scale = 1;
  for (int i = 0; i < k - twos; ++i) scale *= 2;
  for (int i = 0; i < k - fives; ++i) scale *= 5;
  i128 digits = i128(a.num) * scale;
  bool neg = digits < 0;
  if (neg) digits = -digits;
  std::string s;
  if (digits == 0) s = "0";
  while (digits > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(digits % 10)));
    digits /= 10;
  }
  while (static_cast<int>(s.size()) <= k) s.insert(s.begin(), '0');
  if (k > 0) {
    s.insert(s.end() - k, '.');
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return neg ? "-" + s : s;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Assign: return "assign";
    case Op::Havoc: return "havoc";
    case Op::Assume: return "assume";
    case Op::Assert: return "assert";
    case Op::Goto: return "goto";
    case Op::IfGoto: return "if_goto";
    case Op::Call: return "call";
    case Op::Return: return "return";
    case Op::MmioRead: return "mmio_read";
    case Op::MmioWrite: return "mmio_write";
  }
  return "?";
}

uint64_t op_cost_of(const TimingModel& model, Op op) {
  auto it = model.op_cost.find(op_name(op));
  if (it == model.op_cost.end()) return 1;
  return std::max<uint64_t>(1, it->second);
}

Rat cycles_to_ms(uint64_t cycles, uint64_t cycles_per_ms) {
  if (cycles_per_ms == 0) bug("zero clock");
  if (cycles > uint64_t(std::numeric_limits<long long>::max())) bug("cycle count overflow");
  return make_rat(i128(cycles), i128(cycles_per_ms));
}

namespace {

// Longest-path analysis of one function. Loops are collapsed innermost-first
// into summary edges (entry index -> landing outside the loop region, one per
// exit path) weighted with bound * longest-iteration + exit-path cost, which
// keeps the remaining graph acyclic so a plain backward walk works.
class WcetAnalysis {
 public:
  WcetAnalysis(const IrProgram& prog, const TimingModel& model, Diagnostics& diags)
      : prog_(prog), model_(model), diags_(diags) {}

  std::optional<uint64_t> of_function(const std::string& name) {
    auto cached = done_.find(name);
    if (cached != done_.end()) return cached->second;
    if (!active_.insert(name).second) {
      error("call cycle through function '" + name + "'");
      return std::nullopt;
    }
    const Function* fn = prog_.find_function(name);
    std::optional<uint64_t> result;
    if (fn == nullptr) {
      error("unknown function '" + name + "'");
    } else {
      result = of_body(*fn);
    }
    active_.erase(name);
    done_.emplace(name, result);
    return result;
  }

 private:
  // Max path cost per landing index; the landing is the first index outside
  // the region of interest (body size = function exit).
  using CostMap = std::map<int, uint64_t>;
  // Landing key for "took the region's backedge": one full iteration.
  static constexpr int kRepeat = -1;

  std::optional<uint64_t> of_body(const Function& fn) {
    const int n = static_cast<int>(fn.body.size());
    std::map<int, CostMap> collapsed;  // loop entry index -> summary edges

    std::vector<const LoopInfo*> loops;
    loops.reserve(fn.loops.size());
    for (const auto& li : fn.loops) {
      if (li.backedge < 0 || li.backedge >= n || fn.body[li.backedge].op != Op::Goto ||
          region_start(fn, li) < 0 || region_start(fn, li) > li.header ||
          li.header > li.backedge) {
        error("malformed loop '" + li.id + "'");
        return std::nullopt;
      }
      loops.push_back(&li);
    }
    // Innermost first, so outer walks see inner loops already summarized.
    std::sort(loops.begin(), loops.end(), [&](const LoopInfo* a, const LoopInfo* b) {
      return a->backedge - region_start(fn, *a) < b->backedge - region_start(fn, *b);
    });

    for (const LoopInfo* li : loops) {
      const int t = region_start(fn, *li);
      const int b = li->backedge;
      std::optional<uint64_t> bound = bound_of(*li);
      if (!bound) {
        error("loop '" + li->id + "' has no iteration bound");
        return std::nullopt;
      }
      std::optional<CostMap> paths = walk(fn, t, t, b, collapsed);
      if (!paths) return std::nullopt;
      uint64_t iter_best = 0;
      CostMap edges;
      for (const auto& [landing, cost] : *paths) {
        if (landing == kRepeat) {
          iter_best = std::max(iter_best, cost);
        } else {
          edges[landing] = cost;
        }
      }
      const uint64_t turns = sat_mul(std::max<uint64_t>(1, *bound), iter_best);
      if (edges.empty()) edges[n] = 0;  // no way out: charge the iterations alone
      for (auto& [landing, cost] : edges) cost = sat_add(cost, turns);
      if (!collapsed.emplace(t, std::move(edges)).second) {
        error("loops '" + li->id + "' and another share an entry point");
        return std::nullopt;
      }
    }

    if (n == 0) return 0;
    std::optional<CostMap> paths = walk(fn, 0, 0, n - 1, collapsed);
    if (!paths) return std::nullopt;
    uint64_t best = 0;
    for (const auto& [landing, cost] : *paths) {
      if (landing == kRepeat || landing < n) {
        error("function '" + fn.name + "' has a backward jump outside any loop");
        return std::nullopt;
      }
      best = std::max(best, cost);
    }
    return best;
  }

  // Backedge target, not the header: instrumentation may copy guard
  // preconditions in front of the header, growing the repeated region.
  static int region_start(const Function& fn, const LoopInfo& li) {
    return fn.body[li.backedge].target;
  }

  std::optional<uint64_t> bound_of(const LoopInfo& li) {
    auto it = model_.loop_iters.find(li.id);
    if (it != model_.loop_iters.end()) return it->second;
    return li.static_trip;
  }

  // Max-cost paths from `entry` through region [lo, hi], stopping at the
  // first index outside the region. Taking the backedge at `hi` (for loop
  // regions) is reported under kRepeat instead of its target.
  std::optional<CostMap> walk(const Function& fn, int entry, int lo, int hi,
                              const std::map<int, CostMap>& collapsed) {
    std::map<int, CostMap> memo;
    bool failed = false;
    auto rec = [&](auto&& self, int j) -> const CostMap& {
      static const CostMap empty;
      if (failed) return empty;
      auto hit = memo.find(j);
      if (hit != memo.end()) return hit->second;
      memo[j] = {};  // cycle sentinel: loops are collapsed, so no live cycles
      CostMap out;
      auto land = [&](int idx, uint64_t cost) {
        auto [it, fresh] = out.emplace(idx, cost);
        if (!fresh) it->second = std::max(it->second, cost);
      };
      auto follow = [&](int idx, uint64_t cost) {
        if (idx < lo || idx > hi) {
          land(idx, cost);
          return;
        }
        for (const auto& [l, c] : self(self, idx)) land(l, sat_add(cost, c));
      };

      auto summary = collapsed.find(j);
      if (summary != collapsed.end()) {
        for (const auto& [l, c] : summary->second) follow(l, c);
        return memo[j] = std::move(out);
      }

      const Instr& in = fn.body[j];
      const uint64_t c = op_cost_of(model_, in.op);
      switch (in.op) {
        case Op::Return:
          land(static_cast<int>(fn.body.size()), c);
          break;
        case Op::Goto:
          if (j == hi && in.target == lo) {
            land(kRepeat, c);
          } else if (in.target <= j) {
            error("backward jump at " + fn.name + ":" + std::to_string(j) +
                  " is not a known loop backedge");
            failed = true;
          } else {
            follow(in.target, c);
          }
          break;
        case Op::IfGoto:
          if (in.target <= j) {
            error("backward branch at " + fn.name + ":" + std::to_string(j));
            failed = true;
          } else {
            follow(in.target, c);
            follow(j + 1, c);
          }
          break;
        case Op::Call: {
          std::optional<uint64_t> callee = of_function(in.callee);
          if (!callee) {
            failed = true;
          } else {
            follow(j + 1, sat_add(c, *callee));
          }
          break;
        }
        default:
          follow(j + 1, c);
          break;
      }
      return memo[j] = std::move(out);
    };
    const CostMap& result = rec(rec, entry);
    if (failed) return std::nullopt;
    return result;
  }

  void error(const std::string& msg) {
    diags_.push_back({Severity::Error, 0, 0, "wcet: " + msg});
  }

  const IrProgram& prog_;
  const TimingModel& model_;
  Diagnostics& diags_;
  std::set<std::string> active_;
  std::map<std::string, std::optional<uint64_t>> done_;
};

}  // namespace

std::optional<uint64_t> wcet(const IrProgram& prog, const std::string& fn,
                             const TimingModel& model, Diagnostics& diags) {
  WcetAnalysis analysis(prog, model, diags);
  return analysis.of_function(fn);
}

std::optional<Rat> response_time(const Rat& c_ms,
                                 const std::vector<std::pair<Rat, Rat>>& irq_wcet_mint_ms,
                                 const Rat& cap_ms) {
  const Rat zero = rat(0);
  if (c_ms <= zero) bug("response_time: task cost must be positive");
  Rat utilization = zero;
  for (const auto& [w, m] : irq_wcet_mint_ms) {
    if (w <= zero || m <= zero) bug("response_time: interrupt parameters must be positive");
    utilization = utilization + make_rat(i128(w.num) * m.den, i128(w.den) * m.num);
  }
  if (rat(1) <= utilization) return std::nullopt;

  auto apply = [&](const Rat& r) {
    Rat next = c_ms;
    for (const auto& [w, m] : irq_wcet_mint_ms) next = next + rat(ceil_div(r, m)) * w;
    return next;
  };

  Rat r = c_ms;
  for (int rounds = 0; rounds < 100000; ++rounds) {
    Rat next = apply(r);
    if (next == r) {
      // This equality is the recurrence itself; a value that merely stopped
      // changing through rounding would not pass exact rational comparison.
      if (apply(r) != r) bug("response_time: fixed point fails its own recurrence");
      return r;
    }
    if (cap_ms < next) return std::nullopt;
    r = next;
  }
  return std::nullopt;
}

const char* timing_verdict_name(TimingVerdict v) {
  switch (v) {
    case TimingVerdict::Schedulable: return "schedulable";
    case TimingVerdict::NotSchedulable: return "not-schedulable";
    case TimingVerdict::WatermarkViolation: return "watermark-violation";
  }
  return "?";
}

TimingVerdict schedulability(const TimingModel& model, const std::optional<Rat>& wcrt_ms) {
  if (!wcrt_ms) return TimingVerdict::NotSchedulable;
  if (model.watermark_ms && *wcrt_ms < *model.watermark_ms) {
    return TimingVerdict::WatermarkViolation;
  }
  return *wcrt_ms < model.period_ms ? TimingVerdict::Schedulable
                                    : TimingVerdict::NotSchedulable;
}

}  // namespace irbmc::timing
