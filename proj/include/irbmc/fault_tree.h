#ifndef IRBMC_FAULT_TREE_H
#define IRBMC_FAULT_TREE_H

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "irbmc/diagnostics.h"

namespace irbmc::fta {

enum class EventCategory : uint8_t { MechanicalErs, ElectronicsErs, SoftwareErs, Mav };

const char* category_name(EventCategory c);
std::optional<EventCategory> category_from(const std::string& name);

enum class GateKind : uint8_t { And, Or };

// A gate with children, or a basic-event leaf when children is empty.
struct Node {
  GateKind kind = GateKind::Or;
  std::vector<Node> children;
  std::string event;

  bool is_event() const { return children.empty(); }

  static Node leaf(std::string name);
  static Node gate(GateKind kind, std::vector<Node> children);
};

struct FaultTree {
  std::string top_event;
  Node root;
  std::map<std::string, EventCategory> events;  // every leaf must appear here
};

// Structural checks: gates have at least two children, every leaf is listed
// in the event table. (Values built by parse_fault_tree already satisfy both;
// this guards hand-assembled trees.)
Diagnostics validate(const FaultTree& ft);

// File format, one s-expression:
//   (fault-tree <top-event>
//     (or (and e1 e2) e3)
//     (events (e1 software-ers) (e2 mav) (e3 electronics-ers)))
// Comments run from ';' to end of line.
std::optional<FaultTree> parse_fault_tree(const std::string& text, Diagnostics& diags);

// True iff failing exactly the given events raises the top event.
bool evaluate(const Node& node, const std::set<std::string>& failed);

using CutSet = std::set<std::string>;

// Gate-by-gate expansion (OR splits, AND merges) with absorption. The result
// is every minimal event set that raises the top event, in lexicographic
// order, no set containing another.
std::vector<CutSet> minimal_cut_sets(const FaultTree& ft);

struct Tolerance {
  size_t min_order = 0;                    // smallest cut-set size
  std::vector<std::string> single_points;  // events forming order-1 cut sets
};

// How many simultaneous independent failures the modeled system survives:
// a min_order of k means any k-1 failures leave the top event off.
Tolerance failure_tolerance(const FaultTree& ft);

// Cut sets and verdict as printed by the command-line front end.
std::string render_report(const FaultTree& ft);

}  // namespace irbmc::fta

#endif
