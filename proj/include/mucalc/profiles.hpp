#pragma once

#include <functional>
#include <map>

#include "mucalc/game.hpp"
#include "mucalc/profile.hpp"
#include "mucalc/universe.hpp"

namespace mucalc {

// Worst exit priorities over pi-conforming walks from v (keys are game nodes).
// Requires is_partial_winning(p, v, pi).
Profile compute_profile(const PartialParityGame& p, const PositionalStrategy& pi, int v);

// Minimal antichain of profiles achievable by positional partial winning
// strategies from v. Exhaustive search over reachable choices with sound
// pruning; throws SizeGuard when the explored space exceeds workBudget.
PType ptype_enum(const PartialParityGame& p, int v, size_t workBudget = size_t(1) << 20);

// Re-entrant flavor backing the layered game's re-entry edges: the player
// must actually move at the start node (no immediate exit) and the start
// visit itself is not recorded. Later visits count as usual.
Profile compute_profile_reentrant(const PartialParityGame& p, const PositionalStrategy& pi, int v);
PType ptype_enum_reentrant(const PartialParityGame& p, int v,
                           size_t workBudget = size_t(1) << 20);

// Formula route (types to ptypes): the ⊑-minimal profiles y with ψ^y ∈ tp,
// over the profile universe keyed by (anchor ≤ anchorCount, modal closure
// element) with the priorities of the universe annotation. Keys are packed
// with Universe::pack_key. Entries outside the element's own modal closure
// cannot occur in a minimal profile, so the search ranges over those keys.
PType ptype_from_types(const Universe& u, const MuType& tp, int elemIdx, int anchorCount);

// As above for a substituted right-hand side: the transform decorates
// imageElem while profile keys live in keySourceElem's closure. The reentrant
// flavor matches ptype_enum_reentrant (the root modal site stays bare).
PType ptype_from_types_via(const Universe& u, const MuType& tp, int imageElem, int keySourceElem,
                           int anchorCount, bool reentrant = false);

// --- the layered simulating game ---------------------------------------------
//
// Layer 1: ptype values (Diamond picks a profile); layer 2: profiles (Box
// picks an exit); layer 3: priority carriers; layer 4: the interface.

struct SmallGameSpec {
  int maxPriority = 0;
  struct V4Entry {
    int key = 0;        // opaque exit key (packed anchor/element)
    bool diamond = false;
    PType ptype;        // E4 target
  };
  std::vector<V4Entry> interface_;
  std::vector<PType> entries;  // extra layer-1 nodes to materialize
};

struct SmallGame {
  PartialParityGame partial;  // interface = the whole layer 4
  std::vector<int> layer;     // 1..4 per node
  std::map<PType, int> v1;
  std::map<Profile, int> v2;
  std::map<std::pair<int, int>, int> v3;  // (key, priority)
  std::map<int, int> v4;                  // key

  int entry(const PType& t) const;
};

SmallGame build_small_game(const SmallGameSpec& spec);

// --- subgame replacement --------------------------------------------------------

struct ReplacedGame {
  ParityGame game;
  std::vector<int> keptId;    // p node -> id in game (interface nodes map into qprime)
  std::vector<int> qprimeId;  // qprime node -> id in game
};

// Replaces the induced subgame q (given by qMask, interface uMask ⊆ qMask) by
// qprime. f maps q's nodes to qprime nodes and must send interface nodes to
// qprime's image of themselves; edges into removed nodes are rerouted to
// their f-image, q-internal edges are dropped in favor of qprime's.
ReplacedGame replace_subgame(const ParityGame& p, const std::vector<char>& qMask,
                             const std::vector<char>& uMask, const PartialParityGame& qprime,
                             const std::vector<int>& f);

} // namespace mucalc
