#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "mucalc/annotate.hpp"
#include "mucalc/closure.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/profile.hpp"

namespace mucalc {

// Set of universe elements true at a node (one bit per element).
struct MuType {
  std::vector<char> bits;

  explicit MuType(int size = 0) : bits(static_cast<size_t>(size), 0) {}
  bool has(int i) const { return bits[static_cast<size_t>(i)] != 0; }
  void set(int i, bool v = true) { bits[static_cast<size_t>(i)] = v ? 1 : 0; }
  friend bool operator==(const MuType&, const MuType&) = default;
  bool operator<(const MuType& o) const { return bits < o.bits; }
  size_t hash() const;
};

// The CL_P(L) universe in canonical form, plus two companion structures:
//
//  * a game graph over plain closed formulas (the quotient of the model
//    checking game by "same closed formula"), extended with the marker-chain
//    internals that plays walk through;
//
//  * a (base, decoration vector) decoding of every element, so marker
//    substitution and the ψ^y transform become vector operations with an
//    index lookup instead of formula rebuilding.
//
// Element order is the canonical print order; it is the order used by type
// bitsets and serialized tables.
class Universe {
public:
  Universe(std::vector<Formula> L, Markers markers, std::optional<AnnotatedFormula> ann,
           size_t guard = size_t(1) << 16);

  int size() const { return static_cast<int>(elems_.size()); }
  const std::vector<Formula>& elements() const { return elems_; }
  const Formula& element(int i) const { return elems_[static_cast<size_t>(i)]; }
  int index_of(const Formula& f) const;
  const Markers& markers() const { return markers_; }
  const std::vector<Formula>& lset() const { return lset_; }
  bool has_annotation() const { return ann_.has_value(); }
  const AnnotatedFormula& annotation() const;

  // --- game graph -----------------------------------------------------------
  struct GameElem {
    Formula f;
    Op op = Op::Top;
    int child0 = -1;  // And/Or: left; Diamond/Box: body; Mu/Nu: unfolding
    int child1 = -1;  // And/Or: right
    int priority = 0;
    int typeIndex = -1;  // index into elements(), -1 for chain internals
  };
  int gcount() const { return static_cast<int>(gelems_.size()); }
  const GameElem& gelem(int id) const { return gelems_[static_cast<size_t>(id)]; }
  int gindex_of(const Formula& f) const;
  int gindex_of_element(int elemIdx) const { return elemToGelem_[static_cast<size_t>(elemIdx)]; }
  // distinct profile keys (game elements of modal closures), sorted
  const std::vector<int>& modal_keys() const { return modalKeys_; }
  // per element: the modal closure of each site within that element (profile
  // keys; they carry the element's own decorations), aligned with base_sites
  const std::vector<int>& element_site_keys(int elemIdx) const {
    return elemSiteKeys_[static_cast<size_t>(elemIdx)];
  }

  // --- variant decoding -------------------------------------------------------
  struct Site {
    int keyGElem = -1;    // game element of the bare modal closure (profile key)
    int prio = 0;         // enclosing-fixpoint minimum within the element
    bool diamond = true;
    MarkerSet baseDec = 0;  // intrinsic decoration in the base element
  };
  struct Decoded {
    int base = -1;
    std::vector<MarkerSet> vec;
  };
  int base_count() const { return static_cast<int>(bases_.size()); }
  const std::vector<Site>& base_sites(int baseId) const {
    return bases_[static_cast<size_t>(baseId)].sites;
  }
  const Decoded& decode(int elemIdx) const { return decoded_[static_cast<size_t>(elemIdx)]; }
  int variant_index(int baseId, const std::vector<MarkerSet>& vec) const;

  // Marker substitution: remap[j] (1-based j ≤ k) is the new index or 0 to
  // substitute false. Returns the element index of the substituted formula.
  int subst_element(int elemIdx, const std::vector<int>& remap) const;

  // Element index of ψ^y for ψ = elemIdx. y is keyed by pack_key(anchor, keyGElem).
  int transform_element(int elemIdx, const Profile& y, int anchorCount) const;

  // As transform_element on imageElem, but the profile is keyed by the modal
  // closure elements of keySourceElem (a marker substitution preimage of
  // imageElem: same tree up to decorations, so sites align one to one).
  // skipRootSite leaves a modal-rooted element's own site undecorated: the
  // play standing at that node has not visited it again yet, so the profile
  // neither permits an exit there nor constrains the first move.
  int transform_element_via(int imageElem, int keySourceElem, const Profile& y, int anchorCount,
                            bool skipRootSite = false) const;

  static int pack_key(int anchor1, int keyGElem) { return (anchor1 << 22) | keyGElem; }
  static std::pair<int, int> unpack_key(int key) { return {key >> 22, key & ((1 << 22) - 1)}; }

  // Normalization used by slow substitution paths: drops false disjuncts /
  // true conjuncts produced by marker substitution and re-canonicalizes
  // decoration chains.
  Formula canon(const Formula& f) const;

private:
  struct Base {
    Formula closed;
    std::vector<Site> sites;
  };

  void add_element(const Formula& f, int baseId, const std::vector<MarkerSet>& vec, size_t guard);
  void build_game_graph();
  void enumerate_base_sites(Base& b);

  std::vector<Formula> lset_;
  Markers markers_;
  std::optional<AnnotatedFormula> ann_;

  std::vector<Formula> elems_;
  std::unordered_map<Formula, int, FormulaHash, FormulaEq> index_;
  std::vector<Base> bases_;
  std::unordered_map<Formula, int, FormulaHash, FormulaEq> baseIndex_;
  std::vector<Decoded> decoded_;
  std::vector<std::unordered_map<size_t, int>> variantIndex_;  // per base: vec-hash → elem
  std::vector<GameElem> gelems_;
  std::unordered_map<Formula, int, FormulaHash, FormulaEq> gindex_;
  std::vector<int> elemToGelem_;
  std::vector<int> modalKeys_;
  std::vector<std::vector<int>> elemSiteKeys_;
  std::vector<Formula> siteKeyFormulas_;  // construction scratch, cleared at the end

  static size_t vec_hash(const std::vector<MarkerSet>& vec);
};

} // namespace mucalc
