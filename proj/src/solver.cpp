#include "irbmc/solver.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

#include "irbmc/diagnostics.h"

namespace irbmc::sat {

namespace {

// Internal literal encoding: variable v (0-based) -> 2v positive, 2v+1
// negative; negation is ^1.
inline int pos_lit(int v) { return 2 * v; }
inline int lit_var(int l) { return l >> 1; }
inline bool lit_sign(int l) { return l & 1; }  // true = negated

enum class Val : int8_t { False = 0, True = 1, Undef = 2 };

struct Clause {
  std::vector<int> lits;
  bool learned = false;
  double activity = 0;
};

double luby(double y, int x) {
  int size = 1;
  int seq = 0;
  while (size < x + 1) {
    seq++;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    seq--;
    x = x % size;
  }
  return std::pow(y, seq);
}

class Solver {
 public:
  Solver(const CnfFormula& cnf, const SolveLimits& lim) : in_(cnf), lim_(lim) {
    nvars_ = in_.num_vars;
    for (const auto& c : in_.clauses)
      for (Lit l : c) nvars_ = std::max(nvars_, var_of(l));
    assign_.assign(size_t(nvars_), Val::Undef);
    reason_.assign(size_t(nvars_), -1);
    level_.assign(size_t(nvars_), 0);
    activity_.assign(size_t(nvars_), 0.0);
    polarity_.assign(size_t(nvars_), false);
    seen_.assign(size_t(nvars_), 0);
    watches_.assign(size_t(2 * nvars_), {});
  }

  SolveResult run() {
    SolveResult res;
    auto started = std::chrono::steady_clock::now();
    if (!load()) {
      res.status = SolveStatus::Unsat;
      finish(res);
      return res;
    }

    uint64_t restart_count = 0;
    uint64_t restart_budget = uint64_t(luby(2.0, int(restart_count)) * 100);
    uint64_t conflicts_since_restart = 0;
    uint64_t reduce_budget = 4000;

    for (;;) {
      int confl = propagate();
      if (confl >= 0) {
        res.conflicts = ++conflicts_;
        if (current_level() == 0) {
          res.status = SolveStatus::Unsat;
          finish(res);
          return res;
        }
        std::vector<int> learnt;
        int bt = 0;
        analyze(confl, learnt, bt);
        backtrack(bt);
        attach_learnt(std::move(learnt));
        decay();
        conflicts_since_restart++;

        if (lim_.max_conflicts && conflicts_ >= lim_.max_conflicts) {
          res.status = SolveStatus::Unknown;
          res.limit_message = "conflict limit of " + std::to_string(lim_.max_conflicts) +
                              " reached";
          finish(res);
          return res;
        }
        if (lim_.max_seconds > 0 && (conflicts_ & 1023) == 0) {
          double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      started)
                            .count();
          if (secs > lim_.max_seconds) {
            res.status = SolveStatus::Unknown;
            res.limit_message = "time limit exceeded";
            finish(res);
            return res;
          }
        }
        if (conflicts_since_restart >= restart_budget) {
          backtrack(0);
          restart_count++;
          conflicts_since_restart = 0;
          restart_budget = uint64_t(luby(2.0, int(restart_count)) * 100);
        }
        if (learnt_count_ >= reduce_budget) {
          reduce_db();
          reduce_budget += reduce_budget / 2;
        }
      } else {
        int v = pick_branch();
        if (v < 0) {
          res.status = SolveStatus::Sat;
          res.model = extract_model();
          finish(res);
          return res;
        }
        decisions_++;
        trail_lim_.push_back(int(trail_.size()));
        enqueue(polarity_[size_t(v)] ? pos_lit(v) : pos_lit(v) ^ 1, -1);
      }
    }
  }

 private:
  Val value(int l) const {
    Val v = assign_[size_t(lit_var(l))];
    if (v == Val::Undef) return v;
    return (v == Val::True) != lit_sign(l) ? Val::True : Val::False;
  }

  int current_level() const { return int(trail_lim_.size()); }

  void enqueue(int l, int reason) {
    int v = lit_var(l);
    assign_[size_t(v)] = lit_sign(l) ? Val::False : Val::True;
    reason_[size_t(v)] = reason;
    level_[size_t(v)] = current_level();
    polarity_[size_t(v)] = !lit_sign(l);
    trail_.push_back(l);
  }

  // Loads input clauses; false means a top-level contradiction.
  bool load() {
    for (const auto& ext : in_.clauses) {
      std::vector<int> lits;
      bool tautology = false;
      for (Lit l : ext) {
        int il = l > 0 ? pos_lit(l - 1) : pos_lit(-l - 1) ^ 1;
        bool dup = false;
        for (int q : lits) {
          if (q == il) dup = true;
          if (q == (il ^ 1)) tautology = true;
        }
        if (!dup) lits.push_back(il);
      }
      if (tautology) continue;
      if (lits.empty()) return false;
      if (lits.size() == 1) {
        Val v = value(lits[0]);
        if (v == Val::False) return false;
        if (v == Val::Undef) enqueue(lits[0], -1);
        continue;
      }
      attach(std::move(lits), false);
    }
    return true;
  }

  int attach(std::vector<int> lits, bool learned) {
    int id = int(arena_.size());
    watches_[size_t(lits[0])].push_back(id);
    watches_[size_t(lits[1])].push_back(id);
    Clause c;
    c.lits = std::move(lits);
    c.learned = learned;
    arena_.push_back(std::move(c));
    if (learned) learnt_count_++;
    return id;
  }

  void attach_learnt(std::vector<int> lits) {
    if (lits.size() == 1) {
      enqueue(lits[0], -1);
      return;
    }
    // watch the asserting literal and one literal from the backjump level
    int id = attach(std::move(lits), true);
    arena_[size_t(id)].activity = cla_inc_;
    enqueue(arena_[size_t(id)].lits[0], id);
  }

  // Returns a conflicting clause id, or -1.
  int propagate() {
    while (qhead_ < trail_.size()) {
      int p = trail_[qhead_++];
      propagations_++;
      int false_lit = p ^ 1;
      auto& ws = watches_[size_t(false_lit)];
      size_t i = 0;
      size_t j = 0;
      while (i < ws.size()) {
        int cid = ws[i++];
        Clause& c = arena_[size_t(cid)];
        if (c.lits[0] == false_lit) std::swap(c.lits[0], c.lits[1]);
        int first = c.lits[0];
        if (value(first) == Val::True) {
          ws[j++] = cid;
          continue;
        }
        bool moved = false;
        for (size_t k = 2; k < c.lits.size(); ++k) {
          if (value(c.lits[k]) != Val::False) {
            std::swap(c.lits[1], c.lits[k]);
            watches_[size_t(c.lits[1])].push_back(cid);
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = cid;
        if (value(first) == Val::False) {
          while (i < ws.size()) ws[j++] = ws[i++];
          ws.resize(j);
          return cid;
        }
        enqueue(first, cid);
      }
      ws.resize(j);
    }
    return -1;
  }

  void bump_var(int v) {
    activity_[size_t(v)] += var_inc_;
    if (activity_[size_t(v)] > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    heap_.push({activity_[size_t(v)], -v});
  }

  void bump_clause(Clause& c) {
    c.activity += cla_inc_;
    if (c.activity > 1e20) {
      for (auto& cl : arena_)
        if (cl.learned) cl.activity *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  void decay() {
    var_inc_ /= 0.95;
    cla_inc_ /= 0.999;
  }

  // First-UIP conflict analysis.
  void analyze(int confl, std::vector<int>& learnt, int& bt_level) {
    learnt.push_back(0);  // slot for the asserting literal
    int counter = 0;
    int p = -1;
    size_t idx = trail_.size();
    int cid = confl;
    do {
      Clause& c = arena_[size_t(cid)];
      if (c.learned) bump_clause(c);
      for (int q : c.lits) {
        if (q == p) continue;
        int v = lit_var(q);
        if (!seen_[size_t(v)] && level_[size_t(v)] > 0) {
          seen_[size_t(v)] = 1;
          bump_var(v);
          if (level_[size_t(v)] >= current_level())
            counter++;
          else
            learnt.push_back(q);
        }
      }
      while (!seen_[size_t(lit_var(trail_[idx - 1]))]) idx--;
      p = trail_[idx - 1];
      idx--;
      seen_[size_t(lit_var(p))] = 0;
      counter--;
      cid = reason_[size_t(lit_var(p))];
    } while (counter > 0);
    learnt[0] = p ^ 1;

    bt_level = 0;
    if (learnt.size() > 1) {
      size_t max_i = 1;
      for (size_t k = 2; k < learnt.size(); ++k)
        if (level_[size_t(lit_var(learnt[k]))] > level_[size_t(lit_var(learnt[max_i]))])
          max_i = k;
      std::swap(learnt[1], learnt[max_i]);
      bt_level = level_[size_t(lit_var(learnt[1]))];
    }
    for (int q : learnt) seen_[size_t(lit_var(q))] = 0;
  }

  void backtrack(int to_level) {
    if (current_level() <= to_level) return;
    size_t bound = size_t(trail_lim_[size_t(to_level)]);
    for (size_t k = trail_.size(); k > bound; --k) {
      int v = lit_var(trail_[k - 1]);
      assign_[size_t(v)] = Val::Undef;
      reason_[size_t(v)] = -1;
      heap_.push({activity_[size_t(v)], -v});
    }
    trail_.resize(bound);
    trail_lim_.resize(size_t(to_level));
    qhead_ = bound;
  }

  int pick_branch() {
    while (!heap_.empty()) {
      int v = -heap_.top().second;
      heap_.pop();
      if (assign_[size_t(v)] == Val::Undef) return v;
    }
    for (int v = 0; v < nvars_; ++v)
      if (assign_[size_t(v)] == Val::Undef) return v;
    return -1;
  }

  void reduce_db() {
    std::vector<int> order;
    for (int id = 0; id < int(arena_.size()); ++id)
      if (arena_[size_t(id)].learned) order.push_back(id);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return arena_[size_t(a)].activity < arena_[size_t(b)].activity;
    });
    std::vector<char> drop(arena_.size(), 0);
    size_t removed = 0;
    for (int id : order) {
      if (removed >= order.size() / 2) break;
      const Clause& c = arena_[size_t(id)];
      int v = lit_var(c.lits[0]);
      bool locked = reason_[size_t(v)] == id && assign_[size_t(v)] != Val::Undef;
      if (locked || c.lits.size() <= 2) continue;
      drop[size_t(id)] = 1;
      removed++;
    }
    if (!removed) return;

    std::vector<int> remap(arena_.size(), -1);
    std::vector<Clause> kept;
    kept.reserve(arena_.size() - removed);
    for (size_t id = 0; id < arena_.size(); ++id) {
      if (drop[id]) continue;
      remap[id] = int(kept.size());
      kept.push_back(std::move(arena_[id]));
    }
    arena_ = std::move(kept);
    learnt_count_ -= removed;
    for (auto& w : watches_) w.clear();
    for (int id = 0; id < int(arena_.size()); ++id) {
      watches_[size_t(arena_[size_t(id)].lits[0])].push_back(id);
      watches_[size_t(arena_[size_t(id)].lits[1])].push_back(id);
    }
    for (auto& r : reason_)
      if (r >= 0) r = remap[size_t(r)];
  }

  std::vector<bool> extract_model() {
    std::vector<bool> model(size_t(in_.num_vars) + 1, false);
    for (int v = 0; v < in_.num_vars; ++v)
      model[size_t(v) + 1] = assign_[size_t(v)] == Val::True;
    for (const auto& c : in_.clauses) {
      bool sat = false;
      for (Lit l : c) {
        bool b = l > 0 ? model[size_t(l)] : !model[size_t(-l)];
        sat = sat || b;
      }
      if (!sat) throw InternalError("solver: model fails a clause");
    }
    return model;
  }

  void finish(SolveResult& res) {
    res.decisions = decisions_;
    res.conflicts = conflicts_;
    res.propagations = propagations_;
  }

  const CnfFormula& in_;
  SolveLimits lim_;
  int nvars_ = 0;
  std::vector<Clause> arena_;
  std::vector<std::vector<int>> watches_;
  std::vector<Val> assign_;
  std::vector<int> trail_;
  std::vector<int> trail_lim_;
  size_t qhead_ = 0;
  std::vector<int> reason_;
  std::vector<int> level_;
  std::vector<double> activity_;
  std::vector<bool> polarity_;
  std::vector<char> seen_;
  double var_inc_ = 1.0;
  double cla_inc_ = 1.0;
  uint64_t conflicts_ = 0;
  uint64_t decisions_ = 0;
  uint64_t propagations_ = 0;
  uint64_t learnt_count_ = 0;
  // max-heap over (activity, -var): ties break toward the lowest variable
  std::priority_queue<std::pair<double, int>> heap_;
};

}  // namespace

SolveResult solve(const CnfFormula& cnf, const SolveLimits& limits) {
  return Solver(cnf, limits).run();
}

}  // namespace irbmc::sat
