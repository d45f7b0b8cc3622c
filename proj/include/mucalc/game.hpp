#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mucalc/annotate.hpp"
#include "mucalc/closure.hpp"
#include "mucalc/structure.hpp"

namespace mucalc {

// Min-parity game: an infinite play is won by Player Diamond iff the minimum
// priority seen infinitely often is even. A player who cannot move loses.
struct ParityGame {
  struct Node {
    bool diamond = false;
    int priority = 0;
    std::string label;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<int>> succ;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int add_node(bool diamond, int priority, std::string label = {});
  void add_edge(int u, int v);
  bool has_edge(int u, int v) const;
  int max_priority() const;
};

struct PartialParityGame {
  ParityGame game;
  std::vector<char> interface_;  // per node

  bool is_interface(int v) const { return interface_[static_cast<size_t>(v)] != 0; }
};

struct PositionalStrategy {
  std::unordered_map<int, int> moves;  // diamond node -> chosen successor

  std::optional<int> move(int v) const;
  void set(int v, int w) { moves[v] = w; }
};

struct SolveResult {
  std::vector<char> diamondWins;
  PositionalStrategy diamond;  // winning on Diamond's region
  PositionalStrategy box;      // winning on Box's region

  bool wins(int v) const { return diamondWins[static_cast<size_t>(v)] != 0; }
};

// Exact solver (recursive attractor decomposition), winners and positional
// strategies for both players.
SolveResult solve(const ParityGame& g);

// --- naive semantics --------------------------------------------------------

using NodeSet = std::vector<char>;

// Bottom-up fixpoint evaluation; memoizes closed subformulas per structure.
class EvalContext {
public:
  explicit EvalContext(const Structure& m) : m_(&m) {}
  NodeSet eval(const Formula& phi);
  bool holds(int v, const Formula& phi);

private:
  NodeSet eval_rec(const Formula& f, std::vector<std::pair<std::string, NodeSet>>& env);
  const Structure* m_;
  std::unordered_map<Formula, NodeSet, FormulaHash, FormulaEq> memo_;
};

bool eval_naive(const Structure& m, int v, const Formula& phi);

// --- model checking game ------------------------------------------------------

// Nodes pair structure nodes with indexed closure elements of the formula
// (occurrences distinguished by position, variables resolved to their
// definitions). Player Diamond wins at (v, φ) iff φ holds at v.
struct MCGame {
  Structure m;
  AnnotatedFormula ann;
  std::shared_ptr<ClosureContext> ctx;
  std::vector<int> interfaceAnchors;  // ordered tuple defining the interface
  PartialParityGame partial;

  int element_count() const { return static_cast<int>(ctx->element_positions().size()); }
  int node_id(int v, int elemIdx) const { return v * element_count() + elemIdx; }
  int struct_node_of(int id) const { return id / element_count(); }
  int elem_of(int id) const { return id % element_count(); }
  int pos_of(int id) const { return ctx->element_positions()[static_cast<size_t>(elem_of(id))]; }
  // game node for a structure node and a position id of ctx (must be non-var)
  int node_at_pos(int v, int pos) const;
  int anchor_index_of(int structNode) const;  // 1-based, 0 if not an anchor

  // profile key of an interface game node: pack_key(anchor, modal position)
  int profile_key(int gameNode) const;
};

MCGame build_mc_game(const Structure& m, const AnnotatedFormula& phi);
MCGame build_partial_mc_game(const std::vector<int>& xs, const Structure& m,
                             const AnnotatedFormula& phi);

// Adds the Top node with an edge from every Diamond interface node.
ParityGame close_partial(const PartialParityGame& p);

// pi must be defined on every reachable non-interface Diamond node (else
// Error). True iff the extension of pi that exits at undefined interface
// nodes wins every maximal conforming play.
bool is_partial_winning(const PartialParityGame& p, int v, const PositionalStrategy& pi);

} // namespace mucalc
