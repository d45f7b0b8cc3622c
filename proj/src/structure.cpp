#include "mucalc/structure.hpp"

#include <algorithm>
#include <map>

#include "mucalc/error.hpp"

namespace mucalc {

int Structure::add_node(const std::string& name) {
  if (byName.count(name)) throw_invalid("duplicate node id: " + name);
  int id = node_count();
  byName.emplace(name, id);
  names.push_back(name);
  succ.emplace_back();
  pred.emplace_back();
  props.emplace_back();
  return id;
}

void Structure::add_edge(int u, int v) {
  auto& s = succ[static_cast<size_t>(u)];
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it != s.end() && *it == v) return;
  s.insert(it, v);
  auto& p = pred[static_cast<size_t>(v)];
  p.insert(std::lower_bound(p.begin(), p.end(), u), u);
}

bool Structure::has_edge(int u, int v) const {
  const auto& s = succ[static_cast<size_t>(u)];
  return std::binary_search(s.begin(), s.end(), v);
}

int Structure::find(const std::string& name) const {
  auto it = byName.find(name);
  return it == byName.end() ? -1 : it->second;
}

int Structure::require(const std::string& name) const {
  int id = find(name);
  if (id < 0) throw_invalid("unknown node id: " + name);
  return id;
}

Structure Structure::induced(const std::vector<int>& nodes) const {
  Structure out;
  std::vector<int> remap(names.size(), -1);
  for (int v : nodes) {
    if (remap[static_cast<size_t>(v)] >= 0) continue;
    int id = out.add_node(names[static_cast<size_t>(v)]);
    out.props[static_cast<size_t>(id)] = props[static_cast<size_t>(v)];
    remap[static_cast<size_t>(v)] = id;
  }
  for (int v : nodes) {
    for (int w : succ[static_cast<size_t>(v)]) {
      if (remap[static_cast<size_t>(w)] >= 0) {
        out.add_edge(remap[static_cast<size_t>(v)], remap[static_cast<size_t>(w)]);
      }
    }
  }
  return out;
}

MarkedStructure color(const Structure& m, const std::vector<int>& anchors, const Markers& markers) {
  if (static_cast<int>(anchors.size()) > markers.count()) {
    throw_invalid("more anchors than marker symbols");
  }
  for (int v : anchors) {
    if (v < 0 || v >= m.node_count()) throw_invalid("anchor is not a node of the structure");
  }
  for (const auto& p : m.props) {
    for (const auto& name : p) {
      if (markers.index_of(name) != 0) {
        throw_invalid("marker symbol " + name + " already occurs in the structure");
      }
    }
  }
  MarkedStructure out{m, markers, anchors};
  for (size_t i = 0; i < anchors.size(); ++i) {
    out.colored.props[static_cast<size_t>(anchors[i])].insert(markers.name(static_cast<int>(i) + 1));
  }
  return out;
}

namespace {

std::vector<char> to_mask(const std::vector<int>& nodes, int n) {
  std::vector<char> mask(static_cast<size_t>(n), 0);
  for (int v : nodes) {
    if (v < 0 || v >= n) throw_invalid("separation references a node outside the structure");
    mask[static_cast<size_t>(v)] = 1;
  }
  return mask;
}

} // namespace

std::optional<std::string> directed_violation(const DirectedSeparation& s) {
  int n = s.whole.node_count();
  auto L = to_mask(s.left, n), R = to_mask(s.right, n), X = to_mask(s.interface_, n);
  for (int v = 0; v < n; ++v) {
    if (!L[static_cast<size_t>(v)] && !R[static_cast<size_t>(v)]) {
      return "node " + s.whole.names[static_cast<size_t>(v)] + " is in neither part";
    }
  }
  for (int v = 0; v < n; ++v) {
    bool overlap = L[static_cast<size_t>(v)] && R[static_cast<size_t>(v)];
    if (overlap != static_cast<bool>(X[static_cast<size_t>(v)])) {
      return "interface differs from the overlap at node " + s.whole.names[static_cast<size_t>(v)];
    }
  }
  for (int u = 0; u < n; ++u) {
    if (!R[static_cast<size_t>(u)] || X[static_cast<size_t>(u)]) continue;
    for (int w : s.whole.succ[static_cast<size_t>(u)]) {
      if (L[static_cast<size_t>(w)] && !X[static_cast<size_t>(w)]) {
        return "edge " + s.whole.names[static_cast<size_t>(u)] + "->" +
               s.whole.names[static_cast<size_t>(w)] + " runs from the right part into the left";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> weak_violation(const WeakSeparation& s) {
  int n = s.whole.node_count();
  auto L = to_mask(s.left, n), R = to_mask(s.right, n), X = to_mask(s.interface_, n);
  for (int v = 0; v < n; ++v) {
    if (!L[static_cast<size_t>(v)] && !R[static_cast<size_t>(v)]) {
      return "node " + s.whole.names[static_cast<size_t>(v)] + " is in neither part";
    }
  }
  for (int v : s.interface_) {
    if (!L[static_cast<size_t>(v)] || !R[static_cast<size_t>(v)]) {
      return "interface node " + s.whole.names[static_cast<size_t>(v)] + " is not in the overlap";
    }
  }
  auto inOverlap = [&](int v) { return L[static_cast<size_t>(v)] && R[static_cast<size_t>(v)]; };
  for (int u = 0; u < n; ++u) {
    if (!R[static_cast<size_t>(u)] || inOverlap(u)) continue;
    for (int w : s.whole.succ[static_cast<size_t>(u)]) {
      if (L[static_cast<size_t>(w)] && !inOverlap(w)) {
        return "edge " + s.whole.names[static_cast<size_t>(u)] + "->" +
               s.whole.names[static_cast<size_t>(w)] + " runs from the right interior into the left";
      }
    }
  }
  for (int u = 0; u < n; ++u) {
    if (!inOverlap(u) || X[static_cast<size_t>(u)]) continue;
    for (int w : s.whole.succ[static_cast<size_t>(u)]) {
      if (L[static_cast<size_t>(w)] && !R[static_cast<size_t>(w)]) {
        return "edge " + s.whole.names[static_cast<size_t>(u)] + "->" +
               s.whole.names[static_cast<size_t>(w)] +
               " runs from the overlap outside the interface into the left interior";
      }
    }
  }
  return std::nullopt;
}

ProperSeparation weak_to_proper(const WeakSeparation& s) {
  if (auto v = weak_violation(s)) throw_invalid("invalid weak separation: " + *v);
  int n = s.whole.node_count();
  auto X = to_mask(s.interface_, n);

  ProperSeparation out;
  out.pi1.assign(static_cast<size_t>(n), -1);
  out.pi2.assign(static_cast<size_t>(n), -1);

  auto copy_node = [&](int v, const char* tag) {
    std::string name = X[static_cast<size_t>(v)] ? s.whole.names[static_cast<size_t>(v)]
                                                 : std::string(tag) + ":" + s.whole.names[static_cast<size_t>(v)];
    int id = out.whole.find(name);
    if (id < 0) {
      id = out.whole.add_node(name);
      out.whole.props[static_cast<size_t>(id)] = s.whole.props[static_cast<size_t>(v)];
    }
    return id;
  };
  for (int v : s.left) out.pi1[static_cast<size_t>(v)] = copy_node(v, "1");
  for (int v : s.right) out.pi2[static_cast<size_t>(v)] = copy_node(v, "2");

  auto L = to_mask(s.left, n), R = to_mask(s.right, n);
  for (int u = 0; u < n; ++u) {
    for (int w : s.whole.succ[static_cast<size_t>(u)]) {
      if (L[static_cast<size_t>(u)] && L[static_cast<size_t>(w)]) {
        out.whole.add_edge(out.pi1[static_cast<size_t>(u)], out.pi1[static_cast<size_t>(w)]);
      }
      if (R[static_cast<size_t>(u)] && R[static_cast<size_t>(w)]) {
        out.whole.add_edge(out.pi2[static_cast<size_t>(u)], out.pi2[static_cast<size_t>(w)]);
      }
      if (L[static_cast<size_t>(u)] && R[static_cast<size_t>(w)]) {
        out.whole.add_edge(out.pi1[static_cast<size_t>(u)], out.pi2[static_cast<size_t>(w)]);
      }
    }
  }

  out.separation.whole = out.whole;
  for (int v : s.left) out.separation.left.push_back(out.pi1[static_cast<size_t>(v)]);
  for (int v : s.right) out.separation.right.push_back(out.pi2[static_cast<size_t>(v)]);
  for (int v : s.interface_) out.separation.interface_.push_back(out.pi1[static_cast<size_t>(v)]);
  if (auto v = directed_violation(out.separation)) {
    throw_internal("weak_to_proper produced an invalid separation: " + *v);
  }
  return out;
}

// --- bisimulation (partition refinement on the disjoint union) ---------------

bool bisimilar_structures(const Structure& a, int v1, const Structure& b, int v2) {
  int n = a.node_count() + b.node_count();
  auto global = [&](bool second, int v) { return second ? a.node_count() + v : v; };
  auto props_of = [&](int g) -> const std::set<std::string>& {
    return g < a.node_count() ? a.props[static_cast<size_t>(g)]
                              : b.props[static_cast<size_t>(g - a.node_count())];
  };
  auto succ_of = [&](int g) {
    std::vector<int> out;
    if (g < a.node_count()) {
      for (int w : a.succ[static_cast<size_t>(g)]) out.push_back(global(false, w));
    } else {
      for (int w : b.succ[static_cast<size_t>(g - a.node_count())]) out.push_back(global(true, w));
    }
    return out;
  };

  // initial blocks by proposition sets
  std::map<std::set<std::string>, int> blockOf;
  std::vector<int> block(static_cast<size_t>(n));
  for (int g = 0; g < n; ++g) {
    auto [it, fresh] = blockOf.try_emplace(props_of(g), static_cast<int>(blockOf.size()));
    (void)fresh;
    block[static_cast<size_t>(g)] = it->second;
  }
  while (true) {
    // signature: (block, set of successor blocks)
    std::map<std::pair<int, std::set<int>>, int> sigOf;
    std::vector<int> next(static_cast<size_t>(n));
    for (int g = 0; g < n; ++g) {
      std::set<int> sig;
      for (int w : succ_of(g)) sig.insert(block[static_cast<size_t>(w)]);
      auto key = std::make_pair(block[static_cast<size_t>(g)], std::move(sig));
      auto [it, fresh] = sigOf.try_emplace(std::move(key), static_cast<int>(sigOf.size()));
      (void)fresh;
      next[static_cast<size_t>(g)] = it->second;
    }
    if (next == block) break;
    block = std::move(next);
  }
  return block[static_cast<size_t>(global(false, v1))] == block[static_cast<size_t>(global(true, v2))];
}

bool bisimilar(const MarkedStructure& m1, int v1, const MarkedStructure& m2, int v2) {
  return bisimilar_structures(m1.colored, v1, m2.colored, v2);
}

} // namespace mucalc
