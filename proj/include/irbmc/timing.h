#ifndef IRBMC_TIMING_H
#define IRBMC_TIMING_H

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irbmc/diagnostics.h"
#include "irbmc/ir.h"

namespace irbmc::timing {

// Exact rational, normalized (positive denominator, reduced). Millisecond
// quantities stay rational end to end; rounding happens only in ceil_to_int
// and when a report formats the value.
struct Rat {
  long long num = 0;
  long long den = 1;
};

Rat rat(long long num, long long den = 1);
Rat rat_from_decimal(const std::string& text);  // "2.89", "-0.5"; throws on junk

Rat operator+(const Rat& a, const Rat& b);
Rat operator-(const Rat& a, const Rat& b);
Rat operator*(const Rat& a, const Rat& b);
bool operator==(const Rat& a, const Rat& b);
bool operator!=(const Rat& a, const Rat& b);
bool operator<(const Rat& a, const Rat& b);
bool operator<=(const Rat& a, const Rat& b);

long long ceil_to_int(const Rat& a);
// ceil(a / b) for b > 0.
long long ceil_div(const Rat& a, const Rat& b);

// Exact decimal when the denominator is 2^a * 5^b (always true for decimal
// inputs and their sums/products), "num/den" otherwise.
std::string to_decimal(const Rat& a);

struct TimingModel {
  struct Irq {
    std::string name;
    uint64_t wcet_cycles = 1;
    uint64_t mint_cycles = 1;
  };

  std::map<std::string, uint64_t> op_cost;     // by opcode name; absent = 1
  std::map<std::string, uint64_t> loop_iters;  // loop id -> max iterations
  uint64_t cycles_per_ms = 1000;
  Rat period_ms = rat(5);
  std::vector<Irq> interrupts;
  std::optional<Rat> watermark_ms;  // measured response time, if any
};

const char* op_name(Op op);
// Costs below 1 cycle do not exist on the target; entries are clamped up.
uint64_t op_cost_of(const TimingModel& model, Op op);

Rat cycles_to_ms(uint64_t cycles, uint64_t cycles_per_ms);

// Longest path through fn with every loop collapsed to
//   iterations * (longest single-iteration path) + worst exit path,
// branches contributing the costlier arm and calls their callee's total.
// Paths that leave a loop early are folded into the exit term, so the result
// is an upper bound. Fails (with a diagnostic naming the loop) when a loop
// reachable from fn has no iteration bound.
std::optional<uint64_t> wcet(const IrProgram& prog, const std::string& fn,
                             const TimingModel& model, Diagnostics& diags);

// Least fixed point of R = c + sum(ceil(R / mint_i) * wcet_i) starting at c,
// all in milliseconds. nullopt means unbounded: total interrupt utilization
// reaches 1, or R grows past cap_ms before settling.
std::optional<Rat> response_time(const Rat& c_ms,
                                 const std::vector<std::pair<Rat, Rat>>& irq_wcet_mint_ms,
                                 const Rat& cap_ms);

enum class TimingVerdict { Schedulable, NotSchedulable, WatermarkViolation };
const char* timing_verdict_name(TimingVerdict v);

// Watermark first: a measurement above the static bound means the analysis
// inputs are wrong (or a sensor is failing) and no schedulability claim is
// trustworthy. Otherwise schedulable iff wcrt < period. An unbounded wcrt
// (nullopt) is never schedulable.
TimingVerdict schedulability(const TimingModel& model, const std::optional<Rat>& wcrt_ms);

}  // namespace irbmc::timing

#endif
