#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "irbmc/fault_tree.h"

using namespace irbmc;
using namespace irbmc::fta;

namespace {

FaultTree parsed(const std::string& text) {
  Diagnostics d;
  auto ft = parse_fault_tree(text, d);
  REQUIRE_MESSAGE(ft.has_value(), (d.empty() ? std::string("parse failed") : to_string(d.front())));
  REQUIRE(validate(*ft).empty());
  return *ft;
}

bool parse_fails(const std::string& text, const std::string& needle) {
  Diagnostics d;
  auto ft = parse_fault_tree(text, d);
  if (ft.has_value() || d.empty()) return false;
  for (const auto& diag : d)
    if (diag.message.find(needle) != std::string::npos) return true;
  return false;
}

CutSet cut(std::initializer_list<const char*> names) {
  CutSet s;
  for (const char* n : names) s.insert(n);
  return s;
}

// Reference result by monotone subset enumeration: a set is a minimal cut set
// iff it raises the top event and every one-smaller subset does not.
std::vector<CutSet> brute_minimal(const Node& root, const std::vector<std::string>& pool) {
  REQUIRE(pool.size() <= 12);
  std::vector<CutSet> out;
  for (uint32_t mask = 0; mask < (1u << pool.size()); ++mask) {
    CutSet s;
    for (size_t i = 0; i < pool.size(); ++i)
      if (mask & (1u << i)) s.insert(pool[i]);
    if (!evaluate(root, s)) continue;
    bool minimal = true;
    for (const std::string& e : s) {
      CutSet less = s;
      less.erase(e);
      if (evaluate(root, less)) {
        minimal = false;
        break;
      }
    }
    if (minimal) out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Node random_tree(std::mt19937& rng, const std::vector<std::string>& pool, int depth) {
  if (depth == 0 || rng() % 4 == 0) return Node::leaf(pool[rng() % pool.size()]);
  GateKind kind = rng() % 2 ? GateKind::And : GateKind::Or;
  std::vector<Node> children;
  size_t arity = 2 + rng() % 2;
  for (size_t i = 0; i < arity; ++i) children.push_back(random_tree(rng, pool, depth - 1));
  return Node::gate(kind, std::move(children));
}

}  // namespace

TEST_CASE("or splits and and merges") {
  FaultTree ft = parsed(R"(
(fault-tree top
  (or (and a b) (and a c))
  (events (a mav) (b software-ers) (c electronics-ers)))
)");
  auto cuts = minimal_cut_sets(ft);
  REQUIRE(cuts.size() == 2);
  CHECK(cuts[0] == cut({"a", "b"}));
  CHECK(cuts[1] == cut({"a", "c"}));
}

TEST_CASE("absorption removes dominated combinations") {
  FaultTree ft = parsed(R"(
(fault-tree top
  (or a (and a b))
  (events (a mav) (b mav)))
)");
  auto cuts = minimal_cut_sets(ft);
  REQUIRE(cuts.size() == 1);
  CHECK(cuts[0] == cut({"a"}));
}

TEST_CASE("a bare or gate is a one-failure system") {
  FaultTree ft = parsed(R"(
(fault-tree top (or a b) (events (a mav) (b mav)))
)");
  Tolerance t = failure_tolerance(ft);
  CHECK(t.min_order == 1);
  CHECK(t.single_points == std::vector<std::string>{"a", "b"});
}

TEST_CASE("nested and gates still need both failures") {
  FaultTree ft = parsed(R"(
(fault-tree top (and a (and a b)) (events (a mav) (b mav)))
)");
  auto cuts = minimal_cut_sets(ft);
  REQUIRE(cuts.size() == 1);
  CHECK(cuts[0] == cut({"a", "b"}));
  Tolerance t = failure_tolerance(ft);
  CHECK(t.min_order == 2);
  CHECK(t.single_points.empty());
}

TEST_CASE("cut sets are minimal, sorted, and raise the top event exactly") {
  FaultTree ft = parsed(R"(
(fault-tree top
  (or
    (and (or a b) (or c d e))
    (and b e)
    (and a (or b (and c d))))
  (events (a mav) (b mav) (c software-ers) (d electronics-ers) (e mechanical-ers)))
)");
  auto cuts = minimal_cut_sets(ft);
  REQUIRE_FALSE(cuts.empty());
  CHECK(std::is_sorted(cuts.begin(), cuts.end()));
  for (size_t i = 0; i < cuts.size(); ++i) {
    CHECK(evaluate(ft.root, cuts[i]));
    for (const std::string& e : cuts[i]) {
      CutSet less = cuts[i];
      less.erase(e);
      CHECK_FALSE(evaluate(ft.root, less));
    }
    for (size_t j = 0; j < cuts.size(); ++j) {
      if (i == j) continue;
      CHECK_FALSE(std::includes(cuts[i].begin(), cuts[i].end(), cuts[j].begin(), cuts[j].end()));
    }
  }
}

TEST_CASE("expansion agrees with subset enumeration on many random trees") {
  std::vector<std::string> pool = {"e0", "e1", "e2", "e3", "e4", "e5"};
  std::mt19937 rng(20260816);
  for (int round = 0; round < 80; ++round) {
    FaultTree ft;
    ft.top_event = "top";
    ft.root = Node::gate(GateKind::Or, {random_tree(rng, pool, 3), random_tree(rng, pool, 3)});
    for (const auto& e : pool) ft.events[e] = EventCategory::Mav;
    auto got = minimal_cut_sets(ft);
    auto want = brute_minimal(ft.root, pool);
    REQUIRE_MESSAGE(got == want, "mismatch on round " << round);
  }
}

TEST_CASE("analysis output is deterministic") {
  const std::string text = R"(
(fault-tree top
  (or (and b a) (and c a) (and a b))
  (events (a mav) (b mav) (c mav)))
)";
  FaultTree f1 = parsed(text);
  FaultTree f2 = parsed(text);
  CHECK(minimal_cut_sets(f1) == minimal_cut_sets(f2));
  CHECK(render_report(f1) == render_report(f2));
  auto cuts = minimal_cut_sets(f1);
  REQUIRE(cuts.size() == 2);
  CHECK(cuts[0] == cut({"a", "b"}));
  CHECK(cuts[1] == cut({"a", "c"}));
}

TEST_CASE("evaluation is monotone in the failed set") {
  FaultTree ft = parsed(R"(
(fault-tree top (and (or a b) c) (events (a mav) (b mav) (c mav)))
)");
  CHECK_FALSE(evaluate(ft.root, {}));
  CHECK_FALSE(evaluate(ft.root, {"a"}));
  CHECK_FALSE(evaluate(ft.root, {"c"}));
  CHECK(evaluate(ft.root, {"a", "c"}));
  CHECK(evaluate(ft.root, {"a", "b", "c"}));
}

TEST_CASE("parse errors carry usable messages") {
  CHECK(parse_fails("(fault-tree top (or a) (events (a mav)))", "two children"));
  CHECK(parse_fails("(fault-tree top (xor a b) (events (a mav) (b mav)))", "unknown gate"));
  CHECK(parse_fails("(fault-tree top (or a b) (events (a mav)))", "missing from the event table"));
  CHECK(parse_fails("(fault-tree top (or a b) (events (a mav) (b spacecraft)))",
                    "unknown category"));
  CHECK(parse_fails("(fault-tree top (or a b) (events (a mav) (a mav) (b mav)))", "duplicate"));
  CHECK(parse_fails("(fault-tree top (or a b)", "missing ')'"));
  CHECK(parse_fails("(fault-tree top (or a b) (events (a mav) (b mav))) junk", "trailing"));
  CHECK(parse_fails("", "end of input"));
}

TEST_CASE("category names round-trip") {
  for (auto c : {EventCategory::MechanicalErs, EventCategory::ElectronicsErs,
                 EventCategory::SoftwareErs, EventCategory::Mav}) {
    auto back = category_from(category_name(c));
    REQUIRE(back.has_value());
    CHECK(*back == c);
  }
  CHECK_FALSE(category_from("firmware").has_value());
}

TEST_CASE("the bundled recovery-system tree tolerates any single failure") {
  std::ifstream in(std::string(IRBMC_SOURCE_DIR) + "/corpus/ers_fault_tree.fta");
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  FaultTree ft = parsed(buf.str());
  CHECK(ft.top_event == "crash");
  CHECK(ft.events.size() == 8);

  Tolerance t = failure_tolerance(ft);
  CHECK(t.min_order == 2);
  CHECK(t.single_points.empty());

  // Expansion matches the enumeration oracle on the shipped tree as well.
  std::vector<std::string> pool;
  for (const auto& [name, cat] : ft.events) pool.push_back(name);
  CHECK(minimal_cut_sets(ft) == brute_minimal(ft.root, pool));

  std::string report = render_report(ft);
  CHECK(report.find("minimum failure order: 2") != std::string::npos);
  CHECK(report.find("single-point failures: none") != std::string::npos);
}
