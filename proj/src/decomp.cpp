#include "mucalc/decomp.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "mucalc/error.hpp"
#include "mucalc/types.hpp"

namespace mucalc {

namespace {

std::vector<int> sorted_union(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::string node_list(const Structure& g, const std::vector<int>& nodes) {
  std::string out = "{";
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ",";
    out += g.names[static_cast<size_t>(nodes[i])];
  }
  return out + "}";
}

bool guards(const Structure& g, const std::vector<int>& w, const std::vector<int>& x,
            std::string* why) {
  std::set<int> ws(w.begin(), w.end()), xs(x.begin(), x.end());
  for (int v : x) {
    if (ws.count(v)) {
      if (why) *why = "guard set meets the guarded set at " + g.names[static_cast<size_t>(v)];
      return false;
    }
  }
  for (int u : x) {
    for (int v : g.succ[static_cast<size_t>(u)]) {
      if (!xs.count(v) && !ws.count(v)) {
        if (why) {
          *why = "edge " + g.names[static_cast<size_t>(u)] + "->" + g.names[static_cast<size_t>(v)] +
                 " escapes the guard";
        }
        return false;
      }
    }
  }
  return true;
}

// descendants including self, per dag node (parent -> child edges)
std::vector<std::vector<char>> descendant_masks(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> children(static_cast<size_t>(n));
  for (auto [a, b] : edges) children[static_cast<size_t>(a)].push_back(b);
  std::vector<std::vector<char>> mask(static_cast<size_t>(n));
  std::function<void(int, std::vector<char>&)> collect = [&](int t, std::vector<char>& out) {
    if (out[static_cast<size_t>(t)]) return;
    out[static_cast<size_t>(t)] = 1;
    for (int c : children[static_cast<size_t>(t)]) collect(c, out);
  };
  for (int t = 0; t < n; ++t) {
    mask[static_cast<size_t>(t)].assign(static_cast<size_t>(n), 0);
    collect(t, mask[static_cast<size_t>(t)]);
  }
  return mask;
}

bool dag_acyclic(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> indeg(static_cast<size_t>(n), 0);
  std::vector<std::vector<int>> children(static_cast<size_t>(n));
  for (auto [a, b] : edges) {
    children[static_cast<size_t>(a)].push_back(b);
    ++indeg[static_cast<size_t>(b)];
  }
  std::deque<int> q;
  for (int t = 0; t < n; ++t) {
    if (indeg[static_cast<size_t>(t)] == 0) q.push_back(t);
  }
  int seen = 0;
  while (!q.empty()) {
    int t = q.front();
    q.pop_front();
    ++seen;
    for (int c : children[static_cast<size_t>(t)]) {
      if (--indeg[static_cast<size_t>(c)] == 0) q.push_back(c);
    }
  }
  return seen == n;
}

} // namespace

std::vector<int> guard_of(const Structure& g, const std::vector<int>& w) {
  std::set<int> ws(w.begin(), w.end()), out;
  for (int u : w) {
    for (int v : g.succ[static_cast<size_t>(u)]) {
      if (!ws.count(v)) out.insert(v);
    }
  }
  return std::vector<int>(out.begin(), out.end());
}

// --- Kelly -----------------------------------------------------------------------

namespace {

struct KellyView {
  std::vector<std::vector<int>> children;
  std::vector<int> roots;  // in-degree 0, dag order
  std::vector<std::vector<char>> desc;
  std::vector<std::vector<int>> below;  // B↓ per dag node, sorted structure nodes

  KellyView(const Structure& g, const KellyDecomposition& d) {
    int n = d.dag_count();
    children.resize(static_cast<size_t>(n));
    std::vector<int> indeg(static_cast<size_t>(n), 0);
    for (auto [a, b] : d.dagEdges) {
      children[static_cast<size_t>(a)].push_back(b);
      ++indeg[static_cast<size_t>(b)];
    }
    for (int t = 0; t < n; ++t) {
      if (indeg[static_cast<size_t>(t)] == 0) roots.push_back(t);
    }
    desc = descendant_masks(n, d.dagEdges);
    below.resize(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
      std::set<int> acc;
      for (int s = 0; s < n; ++s) {
        if (desc[static_cast<size_t>(t)][static_cast<size_t>(s)]) {
          acc.insert(d.beta[static_cast<size_t>(s)].begin(), d.beta[static_cast<size_t>(s)].end());
        }
      }
      below[static_cast<size_t>(t)].assign(acc.begin(), acc.end());
    }
  }
};

// an order of `items` such that gamma(items[i]) ⊆ base ∪ ⋃_{j<i} below[items[j]];
// tries the stored order first, then searches when feasible
std::optional<std::vector<int>> find_order(const KellyDecomposition& d, const KellyView& view,
                                           const std::vector<int>& items,
                                           const std::vector<int>& base,
                                           const std::vector<int>& stored) {
  auto check = [&](const std::vector<int>& order) {
    std::set<int> allowed(base.begin(), base.end());
    for (int t : order) {
      for (int v : d.gamma[static_cast<size_t>(t)]) {
        if (!allowed.count(v)) return false;
      }
      allowed.insert(view.below[static_cast<size_t>(t)].begin(),
                     view.below[static_cast<size_t>(t)].end());
    }
    return true;
  };
  if (!stored.empty()) {
    std::vector<int> sortedStored = stored, sortedItems = items;
    std::sort(sortedStored.begin(), sortedStored.end());
    std::sort(sortedItems.begin(), sortedItems.end());
    if (sortedStored != sortedItems) return std::nullopt;
    if (check(stored)) return stored;
    return std::nullopt;
  }
  if (items.size() > 8) return std::nullopt;
  std::vector<int> perm = items;
  std::sort(perm.begin(), perm.end());
  do {
    if (check(perm)) return perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::nullopt;
}

} // namespace

ValidationReport validate_kelly(const Structure& g, const KellyDecomposition& d) {
  ValidationReport rep;
  auto fail = [&](const std::string& cond, const std::string& detail) {
    rep.ok = false;
    rep.condition = cond;
    rep.detail = detail;
    return rep;
  };
  int n = d.dag_count();
  if (n == 0) return fail("nonempty", "decomposition has no dag nodes");
  if (!dag_acyclic(n, d.dagEdges)) return fail("acyclic", "decomposition graph has a cycle");

  std::vector<int> owner(static_cast<size_t>(g.node_count()), -1);
  for (int t = 0; t < n; ++t) {
    for (int v : d.beta[static_cast<size_t>(t)]) {
      if (v < 0 || v >= g.node_count()) return fail("partition", "bag references a foreign node");
      if (owner[static_cast<size_t>(v)] >= 0) {
        return fail("partition", "node " + g.names[static_cast<size_t>(v)] + " is in two bags");
      }
      owner[static_cast<size_t>(v)] = t;
    }
  }
  for (int v = 0; v < g.node_count(); ++v) {
    if (owner[static_cast<size_t>(v)] < 0) {
      return fail("partition", "node " + g.names[static_cast<size_t>(v)] + " is in no bag");
    }
  }

  KellyView view(g, d);
  for (int t = 0; t < n; ++t) {
    std::string why;
    if (!guards(g, d.gamma[static_cast<size_t>(t)], view.below[static_cast<size_t>(t)], &why)) {
      return fail("guarding", "gamma of " + d.dagNames[static_cast<size_t>(t)] + " does not guard " +
                                  node_list(g, view.below[static_cast<size_t>(t)]) + ": " + why);
    }
  }
  for (int s = 0; s < n; ++s) {
    if (view.children[static_cast<size_t>(s)].empty()) continue;
    auto base = sorted_union(d.beta[static_cast<size_t>(s)], d.gamma[static_cast<size_t>(s)]);
    if (!find_order(d, view, view.children[static_cast<size_t>(s)], base,
                    d.childOrder[static_cast<size_t>(s)])) {
      return fail("child order", "no admissible child order at " + d.dagNames[static_cast<size_t>(s)]);
    }
  }
  if (!find_order(d, view, view.roots, {}, d.rootOrder)) {
    return fail("root order", "no admissible root order");
  }

  for (int t = 0; t < n; ++t) {
    rep.width = std::max(rep.width, static_cast<int>(sorted_union(d.beta[static_cast<size_t>(t)],
                                                                  d.gamma[static_cast<size_t>(t)])
                                                         .size()));
  }
  return rep;
}

KellyDecomposition root_kelly_at(const Structure& g, const KellyDecomposition& d, int v) {
  ValidationReport rep = validate_kelly(g, d);
  if (!rep.ok) throw_invalid("root_kelly_at: invalid decomposition: " + rep.condition);
  KellyView view(g, d);
  if (view.roots.size() == 1) {
    int r = view.roots[0];
    auto bag = sorted_union(d.beta[static_cast<size_t>(r)], d.gamma[static_cast<size_t>(r)]);
    if (std::binary_search(bag.begin(), bag.end(), v)) return d;
  }
  KellyDecomposition out = d;
  for (int t = 0; t < d.dag_count(); ++t) {
    auto& b = out.beta[static_cast<size_t>(t)];
    b.erase(std::remove(b.begin(), b.end(), v), b.end());
    out.gamma[static_cast<size_t>(t)] = sorted_union(out.gamma[static_cast<size_t>(t)], {v});
  }
  int r = out.dag_count();
  out.dagNames.push_back("#root");
  out.beta.push_back({v});
  out.gamma.push_back({});
  std::vector<int> oldRoots = d.rootOrder;
  if (oldRoots.empty()) {
    auto found = find_order(d, view, view.roots, {}, {});
    if (!found) throw_internal("root_kelly_at: no root order on a valid decomposition");
    oldRoots = *found;
  }
  out.childOrder.push_back(oldRoots);
  for (int t : oldRoots) out.dagEdges.push_back({r, t});
  out.rootOrder = {r};
  ValidationReport check = validate_kelly(g, out);
  if (!check.ok) throw_internal("root_kelly_at produced an invalid decomposition: " + check.condition);
  return out;
}

// --- DAG decompositions --------------------------------------------------------------

namespace {

struct DagView {
  std::vector<std::vector<int>> children;
  std::vector<int> sources;
  std::vector<std::vector<char>> desc;
  std::vector<std::vector<int>> cone;  // X_{⪰d} per dag node, sorted

  DagView(const Structure& g, const DagDecomposition& d) {
    (void)g;
    int n = d.dag_count();
    children.resize(static_cast<size_t>(n));
    std::vector<int> indeg(static_cast<size_t>(n), 0);
    for (auto [a, b] : d.dagEdges) {
      children[static_cast<size_t>(a)].push_back(b);
      ++indeg[static_cast<size_t>(b)];
    }
    for (int t = 0; t < n; ++t) {
      if (indeg[static_cast<size_t>(t)] == 0) sources.push_back(t);
    }
    desc = descendant_masks(n, d.dagEdges);
    cone.resize(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
      std::set<int> acc;
      for (int s = 0; s < n; ++s) {
        if (desc[static_cast<size_t>(t)][static_cast<size_t>(s)]) {
          acc.insert(d.bags[static_cast<size_t>(s)].begin(), d.bags[static_cast<size_t>(s)].end());
        }
      }
      cone[static_cast<size_t>(t)].assign(acc.begin(), acc.end());
    }
  }
};

} // namespace

ValidationReport validate_dag(const Structure& g, const DagDecomposition& d) {
  ValidationReport rep;
  auto fail = [&](const std::string& cond, const std::string& detail) {
    rep.ok = false;
    rep.condition = cond;
    rep.detail = detail;
    return rep;
  };
  int n = d.dag_count();
  if (n == 0) return fail("nonempty", "decomposition has no dag nodes");
  if (!dag_acyclic(n, d.dagEdges)) return fail("acyclic", "decomposition graph has a cycle");
  std::vector<char> covered(static_cast<size_t>(g.node_count()), 0);
  for (int t = 0; t < n; ++t) {
    for (int v : d.bags[static_cast<size_t>(t)]) {
      if (v < 0 || v >= g.node_count()) return fail("cover", "bag references a foreign node");
      covered[static_cast<size_t>(v)] = 1;
    }
  }
  for (int v = 0; v < g.node_count(); ++v) {
    if (!covered[static_cast<size_t>(v)]) {
      return fail("cover", "node " + g.names[static_cast<size_t>(v)] + " is in no bag");
    }
  }
  DagView view(g, d);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (!view.desc[static_cast<size_t>(a)][static_cast<size_t>(b)]) continue;
      for (int c = 0; c < n; ++c) {
        if (!view.desc[static_cast<size_t>(b)][static_cast<size_t>(c)]) continue;
        for (int v : d.bags[static_cast<size_t>(a)]) {
          bool inC = std::binary_search(d.bags[static_cast<size_t>(c)].begin(),
                                        d.bags[static_cast<size_t>(c)].end(), v);
          bool inB = std::binary_search(d.bags[static_cast<size_t>(b)].begin(),
                                        d.bags[static_cast<size_t>(b)].end(), v);
          if (inC && !inB) {
            return fail("connectivity", "node " + g.names[static_cast<size_t>(v)] + " leaves bag " +
                                            d.dagNames[static_cast<size_t>(b)] + " on a path");
          }
        }
      }
    }
  }
  for (auto [a, b] : d.dagEdges) {
    std::vector<int> inter;
    std::set_intersection(d.bags[static_cast<size_t>(a)].begin(), d.bags[static_cast<size_t>(a)].end(),
                          d.bags[static_cast<size_t>(b)].begin(), d.bags[static_cast<size_t>(b)].end(),
                          std::back_inserter(inter));
    std::vector<int> w;
    for (int v : view.cone[static_cast<size_t>(b)]) {
      if (!std::binary_search(d.bags[static_cast<size_t>(a)].begin(),
                              d.bags[static_cast<size_t>(a)].end(), v)) {
        w.push_back(v);
      }
    }
    std::string why;
    if (!guards(g, inter, w, &why)) {
      return fail("edge guarding", "bag intersection on " + d.dagNames[static_cast<size_t>(a)] + "->" +
                                       d.dagNames[static_cast<size_t>(b)] + " does not guard: " + why);
    }
  }
  for (int t = 0; t < n; ++t) {
    rep.width = std::max(rep.width, static_cast<int>(d.bags[static_cast<size_t>(t)].size()));
  }
  return rep;
}

bool is_nice(const DagDecomposition& d) {
  int n = d.dag_count();
  std::vector<std::vector<int>> children(static_cast<size_t>(n));
  std::vector<int> indeg(static_cast<size_t>(n), 0);
  for (auto [a, b] : d.dagEdges) {
    children[static_cast<size_t>(a)].push_back(b);
    ++indeg[static_cast<size_t>(b)];
  }
  int sources = 0;
  for (int t = 0; t < n; ++t) {
    if (indeg[static_cast<size_t>(t)] == 0) ++sources;
  }
  if (sources != 1) return false;
  for (int t = 0; t < n; ++t) {
    const auto& cs = children[static_cast<size_t>(t)];
    if (cs.size() > 2) return false;
    if (cs.size() == 2) {
      if (d.bags[static_cast<size_t>(t)] != d.bags[static_cast<size_t>(cs[0])] ||
          d.bags[static_cast<size_t>(t)] != d.bags[static_cast<size_t>(cs[1])]) {
        return false;
      }
    }
    if (cs.size() == 1) {
      std::vector<int> sym;
      std::set_symmetric_difference(d.bags[static_cast<size_t>(t)].begin(),
                                    d.bags[static_cast<size_t>(t)].end(),
                                    d.bags[static_cast<size_t>(cs[0])].begin(),
                                    d.bags[static_cast<size_t>(cs[0])].end(), std::back_inserter(sym));
      if (sym.size() != 1) return false;
    }
  }
  return true;
}

namespace {

struct NicefyBuilder {
  DagDecomposition out;
  int counter = 0;

  int add(std::vector<int> bag) {
    out.dagNames.push_back("#n" + std::to_string(counter++));
    out.bags.push_back(std::move(bag));
    return out.dag_count() - 1;
  }
  void edge(int a, int b) { out.dagEdges.push_back({a, b}); }
};

} // namespace

DagDecomposition nicefy(const Structure& g, const DagDecomposition& d0) {
  ValidationReport rep = validate_dag(g, d0);
  if (!rep.ok) throw_invalid("nicefy: invalid decomposition: " + rep.condition + " (" + rep.detail + ")");

  DagDecomposition d = d0;
  {
    DagView view(g, d);
    if (view.sources.size() > 1) {
      // sequentialize the sources; needs disjoint cones and acyclic
      // cross-cone dependencies
      int m = static_cast<int>(view.sources.size());
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          std::vector<int> shared;
          std::set_intersection(view.cone[static_cast<size_t>(view.sources[static_cast<size_t>(i)])].begin(),
                                view.cone[static_cast<size_t>(view.sources[static_cast<size_t>(i)])].end(),
                                view.cone[static_cast<size_t>(view.sources[static_cast<size_t>(j)])].begin(),
                                view.cone[static_cast<size_t>(view.sources[static_cast<size_t>(j)])].end(),
                                std::back_inserter(shared));
          if (!shared.empty()) {
            throw_invalid("nicefy: source cones overlap; provide a single-source decomposition");
          }
        }
      }
      std::vector<std::vector<int>> dep(static_cast<size_t>(m));
      std::vector<int> indeg(static_cast<size_t>(m), 0);
      auto coneOf = [&](int i) -> const std::vector<int>& {
        return view.cone[static_cast<size_t>(view.sources[static_cast<size_t>(i)])];
      };
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (i == j) continue;
          bool edgeIJ = false;
          for (int u : coneOf(i)) {
            for (int w : g.succ[static_cast<size_t>(u)]) {
              if (std::binary_search(coneOf(j).begin(), coneOf(j).end(), w)) edgeIJ = true;
            }
          }
          if (edgeIJ) {
            dep[static_cast<size_t>(i)].push_back(j);
            ++indeg[static_cast<size_t>(j)];
          }
        }
      }
      std::deque<int> q;
      for (int i = 0; i < m; ++i) {
        if (indeg[static_cast<size_t>(i)] == 0) q.push_back(i);
      }
      std::vector<int> order;
      while (!q.empty()) {
        int i = q.front();
        q.pop_front();
        order.push_back(i);
        for (int j : dep[static_cast<size_t>(i)]) {
          if (--indeg[static_cast<size_t>(j)] == 0) q.push_back(j);
        }
      }
      if (static_cast<int>(order.size()) != m) {
        throw_invalid("nicefy: cyclic dependencies between source cones; provide a single-source decomposition");
      }
      // spine of binary joins: t_i -> (r_i, head of a chain morphing into t_{i+1})
      DagDecomposition ext = d;
      int counter = 0;
      auto add = [&](std::vector<int> bag) {
        ext.dagNames.push_back("#s" + std::to_string(counter++));
        ext.bags.push_back(std::move(bag));
        return ext.dag_count() - 1;
      };
      int next = view.sources[static_cast<size_t>(order[static_cast<size_t>(m - 1)]]];
      for (int idx = m - 2; idx >= 0; --idx) {
        int r = view.sources[static_cast<size_t>(order[static_cast<size_t>(idx)]]];
        int head = add(d.bags[static_cast<size_t>(r)]);  // equal-bag chain head
        ext.dagEdges.push_back({head, next});
        int t = add(d.bags[static_cast<size_t>(r)]);
        ext.dagEdges.push_back({t, r});
        ext.dagEdges.push_back({t, head});
        next = t;
      }
      d = ext;
    }
  }

  // binary fan-out with equal-bag copies, then equalize branch children
  {
    DagDecomposition ext = d;
    int counter = 0;
    auto add = [&](std::vector<int> bag) {
      ext.dagNames.push_back("#b" + std::to_string(counter++));
      ext.bags.push_back(std::move(bag));
      return ext.dag_count() - 1;
    };
    std::vector<std::pair<int, int>> edges;
    std::vector<std::vector<int>> children(static_cast<size_t>(d.dag_count()));
    for (auto [a, b] : d.dagEdges) children[static_cast<size_t>(a)].push_back(b);
    for (int t = 0; t < d.dag_count(); ++t) {
      std::vector<int> cs = children[static_cast<size_t>(t)];
      int hook = t;
      while (cs.size() > 2) {
        int spine = add(d.bags[static_cast<size_t>(t)]);
        edges.push_back({hook, cs.back()});
        edges.push_back({hook, spine});
        cs.pop_back();
        hook = spine;
      }
      for (int c : cs) edges.push_back({hook, c});
    }
    ext.dagEdges = std::move(edges);
    d = ext;
  }
  {
    // branch nodes get equal-bag copies above unequal children
    DagDecomposition ext = d;
    int counter = 0;
    auto add = [&](std::vector<int> bag) {
      ext.dagNames.push_back("#c" + std::to_string(counter++));
      ext.bags.push_back(std::move(bag));
      return ext.dag_count() - 1;
    };
    std::vector<std::vector<int>> children(static_cast<size_t>(d.dag_count()));
    for (auto [a, b] : d.dagEdges) children[static_cast<size_t>(a)].push_back(b);
    std::vector<std::pair<int, int>> edges;
    for (int t = 0; t < d.dag_count(); ++t) {
      const auto& cs = children[static_cast<size_t>(t)];
      if (cs.size() == 2) {
        for (int c : cs) {
          if (d.bags[static_cast<size_t>(c)] != d.bags[static_cast<size_t>(t)]) {
            int mid = add(d.bags[static_cast<size_t>(t)]);
            edges.push_back({t, mid});
            edges.push_back({mid, c});
          } else {
            edges.push_back({t, c});
          }
        }
      } else {
        for (int c : cs) edges.push_back({t, c});
      }
    }
    ext.dagEdges = std::move(edges);
    d = ext;
  }
  {
    // interpolate unary steps: forget down to the intersection, then introduce
    DagDecomposition ext = d;
    int counter = 0;
    auto add = [&](std::vector<int> bag) {
      ext.dagNames.push_back("#i" + std::to_string(counter++));
      ext.bags.push_back(std::move(bag));
      return ext.dag_count() - 1;
    };
    std::vector<std::vector<int>> children(static_cast<size_t>(d.dag_count()));
    for (auto [a, b] : d.dagEdges) children[static_cast<size_t>(a)].push_back(b);
    std::vector<std::pair<int, int>> edges;
    for (int t = 0; t < d.dag_count(); ++t) {
      const auto& cs = children[static_cast<size_t>(t)];
      if (cs.size() != 1) {
        for (int c : cs) edges.push_back({t, c});
        continue;
      }
      int c = cs[0];
      const auto& from = d.bags[static_cast<size_t>(t)];
      const auto& to = d.bags[static_cast<size_t>(c)];
      std::vector<int> drop, take;
      std::set_difference(from.begin(), from.end(), to.begin(), to.end(), std::back_inserter(drop));
      std::set_difference(to.begin(), to.end(), from.begin(), from.end(), std::back_inserter(take));
      if (drop.size() + take.size() <= 1) {
        edges.push_back({t, c});
        continue;
      }
      std::vector<int> cur = from;
      int hook = t;
      auto step = [&](std::vector<int> bag, bool last) {
        if (last) {
          edges.push_back({hook, c});
        } else {
          int mid = add(bag);
          edges.push_back({hook, mid});
          hook = mid;
        }
      };
      size_t total = drop.size() + take.size();
      size_t done = 0;
      for (int v : drop) {
        cur.erase(std::remove(cur.begin(), cur.end(), v), cur.end());
        ++done;
        step(cur, done == total);
      }
      for (int v : take) {
        cur = sorted_union(cur, {v});
        ++done;
        step(cur, done == total);
      }
    }
    ext.dagEdges = std::move(edges);
    d = ext;
  }
  {
    // contract equal-bag unary edges
    while (true) {
      std::vector<std::vector<int>> children(static_cast<size_t>(d.dag_count()));
      for (auto [a, b] : d.dagEdges) children[static_cast<size_t>(a)].push_back(b);
      int contractA = -1, contractB = -1;
      for (int t = 0; t < d.dag_count() && contractA < 0; ++t) {
        if (children[static_cast<size_t>(t)].size() == 1) {
          int c = children[static_cast<size_t>(t)][0];
          if (d.bags[static_cast<size_t>(t)] == d.bags[static_cast<size_t>(c)]) {
            contractA = t;
            contractB = c;
          }
        }
      }
      if (contractA < 0) break;
      DagDecomposition ext;
      std::vector<int> remap(static_cast<size_t>(d.dag_count()), -1);
      for (int t = 0; t < d.dag_count(); ++t) {
        if (t == contractA) continue;
        remap[static_cast<size_t>(t)] = ext.dag_count();
        ext.dagNames.push_back(d.dagNames[static_cast<size_t>(t)]);
        ext.bags.push_back(d.bags[static_cast<size_t>(t)]);
      }
      remap[static_cast<size_t>(contractA)] = remap[static_cast<size_t>(contractB)];
      std::set<std::pair<int, int>> edges;
      for (auto [a, b] : d.dagEdges) {
        if (a == contractA && b == contractB) continue;
        edges.insert({remap[static_cast<size_t>(a)], remap[static_cast<size_t>(b)]});
      }
      ext.dagEdges.assign(edges.begin(), edges.end());
      d = ext;
    }
  }

  ValidationReport after = validate_dag(g, d);
  if (!after.ok) {
    throw_internal("nicefy produced an invalid decomposition: " + after.condition + " (" +
                   after.detail + ")");
  }
  if (!is_nice(d)) throw_internal("nicefy produced a decomposition that is not nice");
  if (after.width != rep.width) throw_internal("nicefy changed the width");
  return d;
}

// --- drivers --------------------------------------------------------------------------

namespace {

// table of one region: types of its nodes with the region's anchor tuple
struct RegionTable {
  std::vector<int> anchors;       // sorted structure nodes
  std::map<int, MuType> rows;     // structure node -> type
};

struct FoldContext {
  const Structure& g;
  std::shared_ptr<const Universe> universe;
  DriverStats* stats;

  // fused composition step: concrete nodes C (induced from g), abstracted
  // parts with full region tables, rows for every node of the union
  RegionTable glue(const std::vector<int>& cNodes, const std::vector<int>& targetAnchors,
                   const std::vector<const RegionTable*>& parts,
                   const std::vector<const std::vector<int>*>& partNodes) {
    const Universe& u = *universe;
    Structure C = g.induced(cNodes);
    std::vector<char> inC(static_cast<size_t>(g.node_count()), 0);
    for (int v : cNodes) inC[static_cast<size_t>(v)] = 1;

    ComposeInput in;
    in.universe = universe;
    in.explicitPart = C;
    for (int y : targetAnchors) in.targetAnchors.push_back(C.require(g.names[static_cast<size_t>(y)]));

    std::vector<std::vector<char>> interior(parts.size());
    for (size_t i = 0; i < parts.size(); ++i) {
      ComposePart part;
      for (int x : parts[i]->anchors) part.anchors.push_back(C.require(g.names[static_cast<size_t>(x)]));
      for (int x : parts[i]->anchors) part.anchorTypes.push_back(parts[i]->rows.at(x));
      in.parts.push_back(std::move(part));
      interior[i].assign(static_cast<size_t>(g.node_count()), 0);
      for (int w : *partNodes[i]) interior[i][static_cast<size_t>(w)] = 1;
      for (int x : parts[i]->anchors) interior[i][static_cast<size_t>(x)] = 0;
    }
    // cross edges from concrete nodes into abstracted interiors
    for (int v : cNodes) {
      int cv = C.require(g.names[static_cast<size_t>(v)]);
      for (int w : g.succ[static_cast<size_t>(v)]) {
        for (size_t i = 0; i < parts.size(); ++i) {
          if (interior[i][static_cast<size_t>(w)]) {
            in.crossEdges.push_back({cv, static_cast<int>(i), parts[i]->rows.at(w)});
          }
        }
      }
    }
    // interior rows via entries (memoized per distinct type)
    struct Pending {
      int node;
      size_t entryIdx;
    };
    std::vector<Pending> pending;
    std::map<std::pair<int, size_t>, size_t> entryIndex;  // (part, type hash) -> entry idx
    std::vector<std::pair<int, MuType>> entryTypes;
    for (size_t i = 0; i < parts.size(); ++i) {
      for (int w : *partNodes[i]) {
        if (inC[static_cast<size_t>(w)] || !interior[i][static_cast<size_t>(w)]) continue;
        const MuType& t = parts[i]->rows.at(w);
        auto key = std::make_pair(static_cast<int>(i), t.hash());
        auto it = entryIndex.find(key);
        size_t idx;
        if (it != entryIndex.end() && entryTypes[it->second].second == t) {
          idx = it->second;
        } else {
          idx = in.entries.size();
          in.entries.push_back({static_cast<int>(i), t});
          entryTypes.push_back({static_cast<int>(i), t});
          entryIndex[key] = idx;
        }
        pending.push_back({w, idx});
      }
    }

    ComposeResult res = compose(in);
    RegionTable out;
    out.anchors = targetAnchors;
    for (int v : cNodes) {
      out.rows[v] = res.rows[static_cast<size_t>(C.require(g.names[static_cast<size_t>(v)]))];
    }
    for (const auto& pend : pending) {
      out.rows.emplace(pend.node, res.entryRows[pend.entryIdx]);
    }
    if (stats) stats->tableRows += static_cast<long>(out.rows.size());
    return out;
  }

  RegionTable brute(const std::vector<int>& nodes, const std::vector<int>& anchors) {
    Structure part = g.induced(nodes);
    std::vector<int> localAnchors;
    for (int x : anchors) localAnchors.push_back(part.require(g.names[static_cast<size_t>(x)]));
    auto table = compute_type_table(part, localAnchors, *universe);
    RegionTable out;
    out.anchors = anchors;
    for (int v : nodes) {
      out.rows[v] = table[static_cast<size_t>(part.require(g.names[static_cast<size_t>(v)]))];
    }
    if (stats) stats->tableRows += static_cast<long>(out.rows.size());
    return out;
  }
};

std::vector<int> topo_order(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> children(static_cast<size_t>(n));
  std::vector<int> indeg(static_cast<size_t>(n), 0);
  for (auto [a, b] : edges) {
    children[static_cast<size_t>(a)].push_back(b);
    ++indeg[static_cast<size_t>(b)];
  }
  std::deque<int> q;
  for (int t = 0; t < n; ++t) {
    if (indeg[static_cast<size_t>(t)] == 0) q.push_back(t);
  }
  std::vector<int> order;
  while (!q.empty()) {
    int t = q.front();
    q.pop_front();
    order.push_back(t);
    for (int c : children[static_cast<size_t>(t)]) {
      if (--indeg[static_cast<size_t>(c)] == 0) q.push_back(c);
    }
  }
  return order;
}

} // namespace

bool kelly_modelcheck(const Structure& g, int v, const Formula& phi, const VarSequence& zs,
                      const KellyDecomposition& d0, DriverStats* stats) {
  ValidationReport rep = validate_kelly(g, d0);
  if (!rep.ok) {
    throw_invalid("kelly_modelcheck: invalid decomposition: " + rep.condition + " (" + rep.detail + ")");
  }
  AnnotatedFormula ann = annotate(phi, zs);
  KellyDecomposition d = root_kelly_at(g, d0, v);
  KellyView view(g, d);

  int markerCount = 1;
  for (int t = 0; t < d.dag_count(); ++t) {
    markerCount = std::max(markerCount, static_cast<int>(d.gamma[static_cast<size_t>(t)].size()));
    markerCount = std::max(markerCount,
                           static_cast<int>(sorted_union(d.beta[static_cast<size_t>(t)],
                                                         d.gamma[static_cast<size_t>(t)])
                                                .size()));
  }
  Markers markers = Markers::standard(markerCount);
  auto universe = std::make_shared<Universe>(std::vector<Formula>{phi}, markers,
                                             std::optional<AnnotatedFormula>(ann));
  if (stats) {
    stats->universeSize = universe->size();
    stats->markerCount = markerCount;
  }
  FoldContext ctx{g, universe, stats};

  std::vector<std::optional<RegionTable>> tables(static_cast<size_t>(d.dag_count()));
  std::vector<int> order = topo_order(d.dag_count(), d.dagEdges);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int t = *it;
    auto bag = sorted_union(d.beta[static_cast<size_t>(t)], d.gamma[static_cast<size_t>(t)]);
    const auto& childList = view.children[static_cast<size_t>(t)];
    if (childList.empty()) {
      tables[static_cast<size_t>(t)] = ctx.brute(bag, d.gamma[static_cast<size_t>(t)]);
      continue;
    }
    auto orderOpt = find_order(d, view, childList, bag, d.childOrder[static_cast<size_t>(t)]);
    if (!orderOpt) throw_internal("kelly_modelcheck: no admissible child order after validation");
    const std::vector<int>& cs = *orderOpt;

    // fold the children, maintaining the table of delta' with anchors delta
    RegionTable state = *tables[static_cast<size_t>(cs[0])];
    std::vector<int> deltaNodes;  // accumulated region
    {
      std::set<int> acc(view.below[static_cast<size_t>(cs[0])].begin(),
                        view.below[static_cast<size_t>(cs[0])].end());
      acc.insert(d.gamma[static_cast<size_t>(cs[0])].begin(), d.gamma[static_cast<size_t>(cs[0])].end());
      deltaNodes.assign(acc.begin(), acc.end());
    }
    for (size_t i = 1; i < cs.size(); ++i) {
      int s = cs[i];
      const RegionTable& childTable = *tables[static_cast<size_t>(s)];
      std::vector<int> childNodes =
          sorted_union(view.below[static_cast<size_t>(s)], d.gamma[static_cast<size_t>(s)]);
      // delta_i = delta_{i-1} ∪ (gamma(s_i) ∩ bag)
      std::vector<int> gammaInBag;
      for (int x : d.gamma[static_cast<size_t>(s)]) {
        if (std::binary_search(bag.begin(), bag.end(), x)) gammaInBag.push_back(x);
      }
      std::vector<int> newAnchors = sorted_union(state.anchors, gammaInBag);
      std::vector<int> cNodes = sorted_union(state.anchors, d.gamma[static_cast<size_t>(s)]);
      RegionTable next =
          ctx.glue(cNodes, newAnchors, {&childTable, &state}, {&childNodes, &deltaNodes});
      deltaNodes = sorted_union(deltaNodes, childNodes);
      // keep rows for every node accumulated so far
      for (int w : deltaNodes) {
        if (!next.rows.count(w)) throw_internal("kelly fold lost a row");
      }
      state = std::move(next);
    }
    // fold in the bag itself: the final table of B↓_t ∪ γ(t) with anchors γ(t)
    tables[static_cast<size_t>(t)] =
        ctx.glue(bag, d.gamma[static_cast<size_t>(t)], {&state}, {&deltaNodes});
    // drop child tables that are no longer needed
    for (int s : childList) tables[static_cast<size_t>(s)].reset();
  }

  int root = d.rootOrder[0];
  const RegionTable& rootTable = *tables[static_cast<size_t>(root)];
  int phiIdx = universe->index_of(phi);
  if (phiIdx < 0) throw_internal("input formula missing from its universe");
  return rootTable.rows.at(v).has(phiIdx);
}

bool dag_modelcheck(const Structure& g, int v0, const Formula& phi, const VarSequence& zs,
                    const DagDecomposition& d0, DriverStats* stats) {
  ValidationReport rep = validate_dag(g, d0);
  if (!rep.ok) {
    throw_invalid("dag_modelcheck: invalid decomposition: " + rep.condition + " (" + rep.detail + ")");
  }
  AnnotatedFormula ann = annotate(phi, zs);
  DagDecomposition d = nicefy(g, d0);
  DagView view(g, d);

  int markerCount = std::max(1, rep.width);
  Markers markers = Markers::standard(markerCount);
  auto universe = std::make_shared<Universe>(std::vector<Formula>{phi}, markers,
                                             std::optional<AnnotatedFormula>(ann));
  if (stats) {
    stats->universeSize = universe->size();
    stats->markerCount = markerCount;
  }
  FoldContext ctx{g, universe, stats};

  // shrink maps per forgotten marker index (element -> image, -1 if the marker occurs)
  std::map<int, std::vector<int>> shrinkMaps;
  auto shrink_map = [&](int idx) -> const std::vector<int>& {
    auto it = shrinkMaps.find(idx);
    if (it != shrinkMaps.end()) return it->second;
    std::vector<int> map(static_cast<size_t>(universe->size()), -1);
    for (int e = 0; e < universe->size(); ++e) {
      const Formula& f = universe->element(e);
      bool occurs = false;
      for (const auto& name : propositions_of(f)) {
        if (standard_marker_index(name) == idx) occurs = true;
      }
      if (occurs) continue;
      int target = universe->index_of(shrink(f, idx));
      if (target < 0) throw_internal("shrink image missing from the universe");
      map[static_cast<size_t>(e)] = target;
    }
    return shrinkMaps.emplace(idx, std::move(map)).first->second;
  };

  std::vector<std::optional<RegionTable>> tables(static_cast<size_t>(d.dag_count()));
  std::vector<int> order = topo_order(d.dag_count(), d.dagEdges);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int t = *it;
    const auto& bag = d.bags[static_cast<size_t>(t)];
    const auto& cs = view.children[static_cast<size_t>(t)];
    if (cs.empty()) {
      tables[static_cast<size_t>(t)] = ctx.brute(bag, bag);
    } else if (cs.size() == 2) {
      const RegionTable& a = *tables[static_cast<size_t>(cs[0])];
      const RegionTable& b = *tables[static_cast<size_t>(cs[1])];
      std::vector<int> coneA = view.cone[static_cast<size_t>(cs[0])];
      std::vector<int> coneB = view.cone[static_cast<size_t>(cs[1])];
      tables[static_cast<size_t>(t)] = ctx.glue(bag, bag, {&a, &b}, {&coneA, &coneB});
    } else {
      int c = cs[0];
      const auto& childBag = d.bags[static_cast<size_t>(c)];
      std::vector<int> dropped, added;
      std::set_difference(childBag.begin(), childBag.end(), bag.begin(), bag.end(),
                          std::back_inserter(dropped));
      std::set_difference(bag.begin(), bag.end(), childBag.begin(), childBag.end(),
                          std::back_inserter(added));
      const RegionTable& child = *tables[static_cast<size_t>(c)];
      if (dropped.size() == 1) {
        // forget: renumber markers past the dropped anchor
        int pos = 1 + static_cast<int>(std::lower_bound(childBag.begin(), childBag.end(), dropped[0]) -
                                       childBag.begin());
        const auto& map = shrink_map(pos);
        RegionTable next;
        next.anchors = bag;
        for (const auto& [w, row] : child.rows) {
          MuType out(universe->size());
          for (int e = 0; e < universe->size(); ++e) {
            if (row.has(e) && map[static_cast<size_t>(e)] >= 0) out.set(map[static_cast<size_t>(e)]);
          }
          next.rows.emplace(w, std::move(out));
        }
        if (stats) stats->tableRows += static_cast<long>(next.rows.size());
        tables[static_cast<size_t>(t)] = std::move(next);
      } else if (added.size() == 1) {
        std::vector<int> coneC = view.cone[static_cast<size_t>(c)];
        tables[static_cast<size_t>(t)] = ctx.glue(bag, bag, {&child}, {&coneC});
      } else {
        throw_internal("dag_modelcheck: step is not nice");
      }
    }
    for (int c : cs) {
      // a node may have several parents; drop only when all are done
      bool allDone = true;
      for (int p = 0; p < d.dag_count(); ++p) {
        for (int cc : view.children[static_cast<size_t>(p)]) {
          if (cc == c && !tables[static_cast<size_t>(p)].has_value() && p != t) allDone = false;
        }
      }
      if (allDone && false) tables[static_cast<size_t>(c)].reset();  // keep; desk scale
    }
  }

  int root = view.sources[0];
  int phiIdx = universe->index_of(phi);
  if (phiIdx < 0) throw_internal("input formula missing from its universe");
  return tables[static_cast<size_t>(root)]->rows.at(v0).has(phiIdx);
}

} // namespace mucalc
