#include "irbmc/fault_tree.h"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace irbmc::fta {

const char* category_name(EventCategory c) {
  switch (c) {
    case EventCategory::MechanicalErs: return "mechanical-ers";
    case EventCategory::ElectronicsErs: return "electronics-ers";
    case EventCategory::SoftwareErs: return "software-ers";
    case EventCategory::Mav: return "mav";
  }
  return "?";
}

std::optional<EventCategory> category_from(const std::string& name) {
  if (name == "mechanical-ers") return EventCategory::MechanicalErs;
  if (name == "electronics-ers") return EventCategory::ElectronicsErs;
  if (name == "software-ers") return EventCategory::SoftwareErs;
  if (name == "mav") return EventCategory::Mav;
  return std::nullopt;
}

Node Node::leaf(std::string name) {
  Node n;
  n.event = std::move(name);
  return n;
}

Node Node::gate(GateKind kind, std::vector<Node> children) {
  Node n;
  n.kind = kind;
  n.children = std::move(children);
  return n;
}

namespace {

void check_node(const Node& n, const std::map<std::string, EventCategory>& events,
                Diagnostics& out) {
  if (n.is_event()) {
    if (n.event.empty()) {
      out.push_back({Severity::Error, 0, 0, "fault tree: leaf with no event name"});
    } else if (events.find(n.event) == events.end()) {
      out.push_back({Severity::Error, 0, 0,
                     "fault tree: event '" + n.event + "' missing from the event table"});
    }
    return;
  }
  if (n.children.size() < 2) {
    out.push_back({Severity::Error, 0, 0,
                   std::string("fault tree: ") + (n.kind == GateKind::And ? "and" : "or") +
                       " gate needs at least two children"});
  }
  for (const Node& c : n.children) check_node(c, events, out);
}

}  // namespace

Diagnostics validate(const FaultTree& ft) {
  Diagnostics out;
  if (ft.top_event.empty())
    out.push_back({Severity::Error, 0, 0, "fault tree: empty top event name"});
  check_node(ft.root, ft.events, out);
  return out;
}

// --- parser ------------------------------------------------------------------

namespace {

struct Token {
  std::string text;  // "(" , ")" or an atom
  int line = 1;
};

struct SExpr {
  std::string atom;  // empty for lists
  std::vector<SExpr> list;
  int line = 1;
  bool is_atom() const { return !atom.empty(); }
};

class Parser {
 public:
  Parser(const std::string& text, Diagnostics& diags) : diags_(diags) { tokenize(text); }

  std::optional<SExpr> parse_file() {
    size_t pos = 0;
    std::optional<SExpr> se = parse_one(pos);
    if (!se) return std::nullopt;
    if (pos != tokens_.size()) {
      error(tokens_[pos].line, "trailing input after the fault tree expression");
      return std::nullopt;
    }
    return se;
  }

  void error(int line, const std::string& msg) {
    diags_.push_back({Severity::Error, line, 0, "fault tree: " + msg});
  }

 private:
  void tokenize(const std::string& text) {
    int line = 1;
    size_t i = 0;
    while (i < text.size()) {
      char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == ';') {
        while (i < text.size() && text[i] != '\n') ++i;
      } else if (c == '(' || c == ')') {
        tokens_.push_back({std::string(1, c), line});
        ++i;
      } else {
        size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '(' && text[i] != ')' && text[i] != ';') {
          ++i;
        }
        tokens_.push_back({text.substr(start, i - start), line});
      }
    }
  }

  std::optional<SExpr> parse_one(size_t& pos) {
    if (pos >= tokens_.size()) {
      error(tokens_.empty() ? 1 : tokens_.back().line, "unexpected end of input");
      return std::nullopt;
    }
    const Token& t = tokens_[pos];
    if (t.text == ")") {
      error(t.line, "unexpected ')'");
      return std::nullopt;
    }
    if (t.text != "(") {
      SExpr se;
      se.atom = t.text;
      se.line = t.line;
      ++pos;
      return se;
    }
    SExpr se;
    se.line = t.line;
    ++pos;  // consume '('
    while (true) {
      if (pos >= tokens_.size()) {
        error(t.line, "missing ')' for '(' opened here");
        return std::nullopt;
      }
      if (tokens_[pos].text == ")") {
        ++pos;
        return se;
      }
      std::optional<SExpr> child = parse_one(pos);
      if (!child) return std::nullopt;
      se.list.push_back(std::move(*child));
    }
  }

  std::vector<Token> tokens_;
  Diagnostics& diags_;
};

bool head_is(const SExpr& se, const std::string& word) {
  return !se.is_atom() && !se.list.empty() && se.list[0].is_atom() && se.list[0].atom == word;
}

std::optional<Node> build_node(const SExpr& se, Parser& p) {
  if (se.is_atom()) return Node::leaf(se.atom);
  if (se.list.empty() || !se.list[0].is_atom()) {
    p.error(se.line, "gate must start with 'and' or 'or'");
    return std::nullopt;
  }
  const std::string& head = se.list[0].atom;
  GateKind kind;
  if (head == "and") {
    kind = GateKind::And;
  } else if (head == "or") {
    kind = GateKind::Or;
  } else {
    p.error(se.list[0].line, "unknown gate '" + head + "' (expected 'and' or 'or')");
    return std::nullopt;
  }
  if (se.list.size() < 3) {
    p.error(se.line, "'" + head + "' gate needs at least two children");
    return std::nullopt;
  }
  std::vector<Node> children;
  for (size_t i = 1; i < se.list.size(); ++i) {
    std::optional<Node> c = build_node(se.list[i], p);
    if (!c) return std::nullopt;
    children.push_back(std::move(*c));
  }
  return Node::gate(kind, std::move(children));
}

void collect_leaves(const Node& n, std::set<std::string>& out) {
  if (n.is_event()) {
    out.insert(n.event);
    return;
  }
  for (const Node& c : n.children) collect_leaves(c, out);
}

}  // namespace

std::optional<FaultTree> parse_fault_tree(const std::string& text, Diagnostics& diags) {
  Parser p(text, diags);
  std::optional<SExpr> se = p.parse_file();
  if (!se) return std::nullopt;
  if (!head_is(*se, "fault-tree") || se->list.size() != 4 || !se->list[1].is_atom()) {
    p.error(se->line, "expected (fault-tree <top-event> <tree> (events ...))");
    return std::nullopt;
  }
  FaultTree ft;
  ft.top_event = se->list[1].atom;

  std::optional<Node> root = build_node(se->list[2], p);
  if (!root) return std::nullopt;
  ft.root = std::move(*root);

  const SExpr& table = se->list[3];
  if (!head_is(table, "events")) {
    p.error(table.line, "expected (events (<name> <category>) ...)");
    return std::nullopt;
  }
  for (size_t i = 1; i < table.list.size(); ++i) {
    const SExpr& row = table.list[i];
    if (row.is_atom() || row.list.size() != 2 || !row.list[0].is_atom() ||
        !row.list[1].is_atom()) {
      p.error(row.line, "event entry must be (<name> <category>)");
      return std::nullopt;
    }
    std::optional<EventCategory> cat = category_from(row.list[1].atom);
    if (!cat) {
      p.error(row.list[1].line, "unknown category '" + row.list[1].atom +
                                    "' for event '" + row.list[0].atom + "'");
      return std::nullopt;
    }
    if (!ft.events.emplace(row.list[0].atom, *cat).second) {
      p.error(row.list[0].line, "duplicate event '" + row.list[0].atom + "'");
      return std::nullopt;
    }
  }

  std::set<std::string> leaves;
  collect_leaves(ft.root, leaves);
  for (const std::string& leaf : leaves) {
    if (ft.events.find(leaf) == ft.events.end()) {
      p.error(se->line, "event '" + leaf + "' missing from the event table");
      return std::nullopt;
    }
  }
  return ft;
}

// --- analysis ----------------------------------------------------------------

bool evaluate(const Node& node, const std::set<std::string>& failed) {
  if (node.is_event()) return failed.count(node.event) != 0;
  if (node.kind == GateKind::And) {
    for (const Node& c : node.children)
      if (!evaluate(c, failed)) return false;
    return true;
  }
  for (const Node& c : node.children)
    if (evaluate(c, failed)) return true;
  return false;
}

namespace {

// Drop every set that contains another (keeping the smaller); result sorted.
std::vector<CutSet> absorb(std::vector<CutSet> sets) {
  std::sort(sets.begin(), sets.end(), [](const CutSet& a, const CutSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  std::vector<CutSet> kept;
  for (CutSet& s : sets) {
    bool dominated = false;
    for (const CutSet& k : kept) {
      if (std::includes(s.begin(), s.end(), k.begin(), k.end())) {
        dominated = true;  // k is contained in s (equal sets count too)
        break;
      }
    }
    if (!dominated) kept.push_back(std::move(s));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

// Absorbing after every gate is sound here: gates are monotone, so a product
// built from a dominated set is itself dominated.
std::vector<CutSet> expand(const Node& n) {
  if (n.is_event()) return {{n.event}};
  std::vector<CutSet> out;
  if (n.kind == GateKind::Or) {
    for (const Node& c : n.children) {
      std::vector<CutSet> sub = expand(c);
      out.insert(out.end(), std::make_move_iterator(sub.begin()),
                 std::make_move_iterator(sub.end()));
    }
  } else {
    out.push_back({});
    for (const Node& c : n.children) {
      std::vector<CutSet> sub = expand(c);
      std::vector<CutSet> merged;
      merged.reserve(out.size() * sub.size());
      for (const CutSet& a : out) {
        for (const CutSet& b : sub) {
          CutSet u = a;
          u.insert(b.begin(), b.end());
          merged.push_back(std::move(u));
        }
      }
      out = absorb(std::move(merged));
    }
  }
  return absorb(std::move(out));
}

}  // namespace

std::vector<CutSet> minimal_cut_sets(const FaultTree& ft) { return expand(ft.root); }

Tolerance failure_tolerance(const FaultTree& ft) {
  Tolerance t;
  std::set<std::string> singles;
  size_t best = 0;
  for (const CutSet& s : minimal_cut_sets(ft)) {
    if (best == 0 || s.size() < best) best = s.size();
    if (s.size() == 1) singles.insert(*s.begin());
  }
  t.min_order = best;
  t.single_points.assign(singles.begin(), singles.end());
  return t;
}

std::string render_report(const FaultTree& ft) {
  std::ostringstream os;
  std::vector<CutSet> cuts = minimal_cut_sets(ft);
  os << "top event: " << ft.top_event << "\n";
  os << "minimal cut sets (" << cuts.size() << "):\n";
  for (const CutSet& s : cuts) {
    os << " ";
    for (const std::string& e : s) os << " " << e;
    os << "\n";
  }
  Tolerance t = failure_tolerance(ft);
  os << "minimum failure order: " << t.min_order << "\n";
  if (t.single_points.empty()) {
    os << "single-point failures: none (tolerates any one failure)\n";
  } else {
    os << "single-point failures:";
    for (const std::string& e : t.single_points) os << " " << e;
    os << "\n";
  }
  return os.str();
}

}  // namespace irbmc::fta
