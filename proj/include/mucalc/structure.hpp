#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "mucalc/formula.hpp"

namespace mucalc {

// Finite transition system with proposition labels. Node ids are opaque
// strings; the declaration order doubles as the global linear order used to
// build interface tuples.
struct Structure {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> byName;
  std::vector<std::vector<int>> succ;  // sorted
  std::vector<std::vector<int>> pred;  // sorted
  std::vector<std::set<std::string>> props;

  int node_count() const { return static_cast<int>(names.size()); }
  int add_node(const std::string& name);
  void add_edge(int u, int v);
  bool has_edge(int u, int v) const;
  int find(const std::string& name) const;  // -1 if absent
  int require(const std::string& name) const;

  // Induced substructure on the given nodes (names preserved).
  Structure induced(const std::vector<int>& nodes) const;
};

struct MarkedStructure {
  Structure colored;        // base structure with marker propositions added
  Markers markers;
  std::vector<int> anchors;  // indices into colored (same as base)
};

// ∂-coloring: marker i true exactly at anchor i; markers beyond the anchor
// tuple hold nowhere. Errors on unknown anchors and marker/signature clashes.
MarkedStructure color(const Structure& m, const std::vector<int>& anchors, const Markers& markers);

struct DirectedSeparation {
  Structure whole;
  std::vector<int> left;       // node indices into whole
  std::vector<int> right;
  std::vector<int> interface_;  // ordered tuple
};

struct WeakSeparation {
  Structure whole;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> interface_;
};

// First failed condition, or nullopt when valid.
std::optional<std::string> directed_violation(const DirectedSeparation& s);
std::optional<std::string> weak_violation(const WeakSeparation& s);
inline bool validate_separation(const DirectedSeparation& s) { return !directed_violation(s); }
inline bool validate_separation(const WeakSeparation& s) { return !weak_violation(s); }

struct ProperSeparation {
  Structure whole;
  DirectedSeparation separation;
  std::vector<int> pi1;  // original node -> duplicated node (left copy); -1 outside left
  std::vector<int> pi2;  // original node -> right copy; -1 outside right
};

// Duplicates the overlap outside the interface, yielding a directed
// separation whose colored structure is bisimilar to the original.
ProperSeparation weak_to_proper(const WeakSeparation& s);

bool bisimilar(const MarkedStructure& m1, int v1, const MarkedStructure& m2, int v2);
bool bisimilar_structures(const Structure& a, int v1, const Structure& b, int v2);

} // namespace mucalc
