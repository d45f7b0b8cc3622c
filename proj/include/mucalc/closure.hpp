#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "mucalc/annotate.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/profile.hpp"

namespace mucalc {

// Position-indexed view of a formula: every tree node gets an id, variable
// occurrences resolve to their defining fixpoint, and each non-variable
// occurrence has a closed companion formula (free variables replaced by their
// definitions, innermost binder first).
class ClosureContext {
public:
  explicit ClosureContext(Formula root);

  const Formula& root() const { return root_; }
  int position_count() const { return static_cast<int>(nodes_.size()); }
  const Formula& node_at(int pos) const { return nodes_[static_cast<size_t>(pos)].f; }
  const Path& path_at(int pos) const { return nodes_[static_cast<size_t>(pos)].path; }
  int parent_of(int pos) const { return nodes_[static_cast<size_t>(pos)].parent; }
  bool is_var_position(int pos) const { return node_at(pos)->op == Op::Var; }
  int pos_of_path(const Path& p) const;  // -1 if the path leaves the tree

  // Child position without variable resolution (-1 if no such child).
  int raw_child(int pos, int slot) const;
  // Game-step target: variables jump to their defining fixpoint occurrence.
  int step(int pos, int slot) const;
  // Defining fixpoint position for a variable occurrence.
  int binder_of(int varPos) const;

  Formula closed_at(int pos) const;

  // Non-variable positions in preorder; these are the indexed subformulas.
  const std::vector<int>& element_positions() const { return elementPositions_; }
  int element_index_of_pos(int pos) const;  // index into element_positions(), -1 if var

  std::vector<IndexedFormula> sub() const;
  std::vector<IndexedFormula> cl() const;

  // Profile keys on the formula route: packed (anchor index, modal element position).
  int pack_key(int anchor1, int pos) const { return anchor1 * position_count() + pos; }
  std::pair<int, int> unpack_key(int key) const {
    return {key / position_count(), key % position_count()};
  }

private:
  struct Node {
    Formula f;
    Path path;
    int parent;
    int child[2];
  };
  Formula root_;
  std::vector<Node> nodes_;
  std::vector<int> elementPositions_;
  std::vector<int> elementIndexOfPos_;
  mutable std::vector<Formula> closedMemo_;
};

// Spec operations (free-function form).
std::vector<IndexedFormula> sub(const Formula& phi);
std::vector<IndexedFormula> sub_plus(const Formula& phi);
IndexedFormula closure_at(const Formula& phi, const IndexedFormula& occ);
std::vector<IndexedFormula> cl(const Formula& phi);
// Closure of a formula or set as plain formulas (indices dropped, deduplicated).
std::vector<Formula> cl_plain(const Formula& phi);
std::vector<Formula> cl_plain(const std::vector<Formula>& L);

// All priority tracking variants. Decorations are canonical chains; decorating
// an already-decorated occurrence merges the marker sets.
std::vector<Formula> pt_variants(const Formula& phi, const Markers& markers,
                                 size_t guard = size_t(1) << 16);

// CL_P(L) = PT_P(CL(L)) over canonical decorations, sorted by printed form.
std::vector<Formula> cl_p(const std::vector<Formula>& L, const Markers& markers,
                          size_t guard = size_t(1) << 16);

// "_Pk" -> k, anything else -> 0.
int standard_marker_index(const std::string& name);
// Marker renumbering after dropping index i: _Pj with j > i becomes _P{j-1}.
// Error if _Pi occurs in psi.
Formula shrink(const Formula& psi, int i);

// Minimum annotated priority over the fixpoint operators enclosing chi in psi
// (psi a closure element of phi, chi a position within psi's closed tree);
// maxPriority when no fixpoint encloses chi.
int prio(const AnnotatedFormula& phi, const IndexedFormula& psi, const IndexedFormula& chi);
int prio_at(const AnnotatedFormula& phi, const Formula& psiClosed, const Path& chiPos);

// ψ^y: decorate each modal occurrence of psi according to the profile y.
// y is keyed with cphi.pack_key(anchor, modal element position). Only the
// anchors 1..anchorCount can satisfy the diamond rule; the box rule ranges
// over all markers.
Formula profile_transform(const AnnotatedFormula& phi, const ClosureContext& cphi,
                          const IndexedFormula& psi, const Profile& y, int anchorCount,
                          const Markers& markers);

namespace detail {

// Modal occurrence sites (their intrinsic decorations) in a fixed preorder;
// the same order is used by rebuild_with_site_decorations and the universe.
void enumerate_site_decorations(const Formula& f, const Markers& m, std::vector<MarkerSet>& out);
Formula rebuild_with_site_decorations(const Formula& f, const Markers& m,
                                      const std::vector<MarkerSet>& assignment, size_t& cursor);
// Positions contributing CL elements: decorated composites and their bare
// modal cores are recorded, marker chain internals are skipped.
std::vector<int> dec_aware_positions(const ClosureContext& ctx, const Markers& m);

} // namespace detail

} // namespace mucalc
