#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mucalc/annotate.hpp"
#include "mucalc/structure.hpp"

namespace mucalc {

// Kelly decomposition: a DAG whose bags partition the digraph, with per-node
// guard sets and explicit child/root orders.
struct KellyDecomposition {
  std::vector<std::string> dagNames;
  std::vector<std::pair<int, int>> dagEdges;   // parent -> child
  std::vector<std::vector<int>> beta;          // per dag node: structure nodes (sorted)
  std::vector<std::vector<int>> gamma;         // per dag node: structure nodes (sorted)
  std::vector<std::vector<int>> childOrder;    // per dag node: dag ids; empty = unspecified
  std::vector<int> rootOrder;                  // dag ids; empty = unspecified

  int dag_count() const { return static_cast<int>(dagNames.size()); }
};

struct DagDecomposition {
  std::vector<std::string> dagNames;
  std::vector<std::pair<int, int>> dagEdges;
  std::vector<std::vector<int>> bags;  // per dag node: structure nodes (sorted)

  int dag_count() const { return static_cast<int>(dagNames.size()); }
};

struct ValidationReport {
  bool ok = true;
  int width = 0;
  std::string condition;  // failed condition, empty when ok
  std::string detail;
};

// Minimal guard: the successor frontier of w.
std::vector<int> guard_of(const Structure& g, const std::vector<int>& w);

ValidationReport validate_kelly(const Structure& g, const KellyDecomposition& d);
ValidationReport validate_dag(const Structure& g, const DagDecomposition& d);
bool is_nice(const DagDecomposition& d);

// Single-root decomposition whose root bag contains v; width grows at most 1.
KellyDecomposition root_kelly_at(const Structure& g, const KellyDecomposition& d, int v);

// Equal-width nice decomposition (unique source, binary fan-out, equal branch
// bags, one-element unary steps). Multi-source inputs are sequentialized,
// which requires pairwise-disjoint source cones with acyclic cross-cone
// dependencies; otherwise an Invalid error is raised.
DagDecomposition nicefy(const Structure& g, const DagDecomposition& d);

struct DriverStats {
  int universeSize = 0;
  int markerCount = 0;
  long tableRows = 0;
};

bool kelly_modelcheck(const Structure& g, int v, const Formula& phi, const VarSequence& zs,
                      const KellyDecomposition& d, DriverStats* stats = nullptr);

bool dag_modelcheck(const Structure& g, int v0, const Formula& phi, const VarSequence& zs,
                    const DagDecomposition& d, DriverStats* stats = nullptr);

} // namespace mucalc
