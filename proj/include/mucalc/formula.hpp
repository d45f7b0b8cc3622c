#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace mucalc {

// Negation normal form syntax: negation occurs on proposition atoms only.
enum class Op : uint8_t { Top, Bottom, Prop, NegProp, Var, And, Or, Diamond, Box, Mu, Nu };

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  Op op;
  std::string name;  // Prop/NegProp/Var: symbol; Mu/Nu: bound variable
  Formula lhs;       // And/Or: left; Diamond/Box/Mu/Nu: body
  Formula rhs;       // And/Or: right
  size_t hash;
  uint32_t size;     // node count
};

Formula f_top();
Formula f_bottom();
Formula f_prop(std::string name);
Formula f_negprop(std::string name);
Formula f_var(std::string name);
Formula f_and(Formula a, Formula b);
Formula f_or(Formula a, Formula b);
Formula f_diamond(Formula a);
Formula f_box(Formula a);
Formula f_mu(std::string var, Formula body);
Formula f_nu(std::string var, Formula body);

bool formula_equal(const Formula& a, const Formula& b);
// Total order: by hash-independent structural comparison. Used for canonical set layouts.
int formula_compare(const Formula& a, const Formula& b);

struct FormulaHash {
  size_t operator()(const Formula& f) const { return f->hash; }
};
struct FormulaEq {
  bool operator()(const Formula& a, const Formula& b) const { return formula_equal(a, b); }
};

inline bool is_literal(Op op) {
  return op == Op::Top || op == Op::Bottom || op == Op::Prop || op == Op::NegProp;
}
inline bool is_modal(Op op) { return op == Op::Diamond || op == Op::Box; }
inline bool is_fixpoint(Op op) { return op == Op::Mu || op == Op::Nu; }
inline int child_count(Op op) {
  switch (op) {
    case Op::And:
    case Op::Or: return 2;
    case Op::Diamond:
    case Op::Box:
    case Op::Mu:
    case Op::Nu: return 1;
    default: return 0;
  }
}
inline Formula child_of(const Formula& f, int slot) { return slot == 0 ? f->lhs : f->rhs; }

std::string print_formula(const Formula& f);

// Grammar: tt | ff | IDENT | !IDENT | f & g | f | g | <>f | []f | mu X. f | nu X. f | (f).
// Prefix operators bind tighter than &, which binds tighter than |; fixpoint bodies
// extend maximally to the right. Throws Error(Parse) with a character position.
Formula parse_formula(const std::string& text);

std::set<std::string> free_vars(const Formula& f);
std::set<std::string> propositions_of(const Formula& f);  // Prop/NegProp names
bool is_closed(const Formula& f);

// Capture-avoiding only in the sense needed here: `def` must be closed.
// Replaces free occurrences of `var` in `f`.
Formula substitute_var(const Formula& f, const std::string& var, const Formula& def);

// Tree paths: child indices from the root. Identifies one subformula occurrence.
using Path = std::vector<uint8_t>;

struct IndexedFormula {
  Formula formula;
  Path position;
};
bool indexed_equal(const IndexedFormula& a, const IndexedFormula& b);

Formula subformula_at(const Formula& root, const Path& pos);

// --- Marker propositions -------------------------------------------------
//
// Reserved identifiers _P1, _P2, ... used as interface colors. Priority-tracking
// decorations are kept canonical: a decorated diamond is
//   _Pi1 | (_Pi2 | ( ... | <>f))        with i1 < i2 < ...
// and a decorated box is
//   !_Pi1 & (!_Pi2 & ( ... & []f)).

struct Markers {
  std::vector<std::string> names;

  static Markers standard(int k);
  int count() const { return static_cast<int>(names.size()); }
  // 1-based index of a marker name, 0 if not a marker of this family.
  int index_of(const std::string& name) const;
  const std::string& name(int index1) const { return names.at(static_cast<size_t>(index1 - 1)); }
};

// Set of 1-based marker indices as a bitmask (bit i-1 = marker i).
using MarkerSet = uint32_t;

struct DecSplit {
  bool decorated = false;  // true iff f has the canonical decorated-modal shape
  MarkerSet set = 0;
  Formula modal;           // the Diamond/Box node at the chain's end (or f itself if bare modal)
};

// Recognizes bare modal nodes (decorated=false unless set nonempty) and canonical
// decoration chains. Non-chain shapes are reported as not decorated.
DecSplit split_decoration(const Formula& f, const Markers& markers);

// set == 0 yields the modal node unchanged.
Formula make_decoration(MarkerSet set, const Formula& modal, const Markers& markers);

} // namespace mucalc
