#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mucalc/formula.hpp"

namespace mucalc {

enum class Polarity : uint8_t { MuOnly, NuOnly };

// Ordered variable sequence Z_1..Z_n, each bound with a single fixpoint polarity.
struct VarSequence {
  std::vector<std::string> vars;
  std::vector<Polarity> polarity;

  int size() const { return static_cast<int>(vars.size()); }
  int index_of(const std::string& v) const;  // 1-based, 0 if absent

  static VarSequence make(std::initializer_list<std::pair<const char*, Polarity>> items);
};

// Infers polarities from the first binder of each name in `order`; a variable
// that never occurs bound defaults to MuOnly.
VarSequence var_sequence_for(const Formula& f, const std::vector<std::string>& order);
// Declaration order = order of first binding occurrence (preorder).
std::vector<std::string> binding_order(const Formula& f);

// Consistency: every bound variable of phi is some Z_i, bound only with the
// polarity recorded in zs, and a fixpoint binding Z_j may contain free
// variables Z_i only for i < j.
bool check_consistent(const Formula& phi, const VarSequence& zs);

// phi with the priority assignment induced by zs: the smallest strictly
// increasing sequence of naturals starting from 0 whose parities match the
// polarities (odd for MuOnly, even for NuOnly).
struct AnnotatedFormula {
  Formula formula;
  VarSequence vars;
  std::vector<int> priorities;  // aligned with vars
  int maxPriority = 0;

  int priority_of_var(const std::string& v) const;
  // Node priority rule of the model-checking game: the annotated priority at
  // fixpoint nodes, maxPriority elsewhere.
  int node_priority(const Formula& f) const;
  std::vector<int> distinct_priorities() const;  // sorted, includes maxPriority
};

AnnotatedFormula annotate(const Formula& phi, const VarSequence& zs);

} // namespace mucalc
