#pragma once

#include <map>
#include <memory>

#include "mucalc/profiles.hpp"
#include "mucalc/structure.hpp"
#include "mucalc/universe.hpp"

namespace mucalc {

// (L, P̄)-type of v: the universe elements true at v in the colored structure.
MuType compute_type(const Structure& m, int v, const std::vector<int>& anchors, const Universe& u);
// All rows at once (each universe element is evaluated once).
std::vector<MuType> compute_type_table(const Structure& m, const std::vector<int>& anchors,
                                       const Universe& u);

// Quotient model checking game over universe game elements: nodes pair
// structure nodes with plain closed formulas. Exercised by tests against the
// position-indexed game.
struct QuotientMCGame {
  PartialParityGame partial;
  int gcount = 0;
  int node_id(int v, int gelem) const { return v * gcount + gelem; }
  int struct_node_of(int id) const { return id / gcount; }
  int gelem_of(int id) const { return id % gcount; }
};
QuotientMCGame build_quotient_mc_game(const Universe& u, const Structure& m,
                                      const std::vector<int>& anchors);

// --- composition -----------------------------------------------------------------
//
// Computes the types of a glued structure from one explicit part plus type
// tables for the abstracted parts. The hybrid game per target formula is the
// explicit part's model checking game with each abstracted part replaced by
// its layered simulating game; edges into removed interiors are rerouted to
// the layer-1 node of the target's ptype.

struct ComposePart {
  std::vector<int> anchors;        // nodes of the explicit structure, global order
  std::vector<MuType> anchorTypes;  // aligned with anchors
};

struct ComposeCrossEdge {
  int from = 0;   // explicit-structure node
  int part = 0;
  MuType type;    // type of the edge target inside the abstracted part
};

struct ComposeEntry {
  int part = 0;
  MuType type;  // type of an interior node of the part
};

struct ComposeInput {
  std::shared_ptr<const Universe> universe;
  Structure explicitPart;            // the concrete region, including all anchors
  std::vector<int> targetAnchors;    // Ȳ, nodes of explicitPart
  std::vector<ComposePart> parts;
  std::vector<ComposeCrossEdge> crossEdges;
  std::vector<ComposeEntry> entries;  // extra rows computed from interior types
};

struct ComposeResult {
  std::vector<MuType> rows;       // per explicitPart node
  std::vector<MuType> entryRows;  // aligned with input entries
};

ComposeResult compose(const ComposeInput& in);

// Spec-level wrappers over a single abstracted part.
std::vector<MuType> compose_types(const Universe& u, const Structure& m1,
                                  const std::vector<int>& xs, const std::vector<int>& ys,
                                  const std::vector<MuType>& interfaceTypes,
                                  const std::vector<std::pair<int, MuType>>& crossEdgeTypes);

MuType compose_right_type(const Universe& u, const MuType& wType, const Structure& m1,
                          const std::vector<int>& xs, const std::vector<int>& ys,
                          const std::vector<MuType>& interfaceTypes,
                          const std::vector<std::pair<int, MuType>>& crossEdgeTypes);

} // namespace mucalc
