#include "mucalc/types.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "mucalc/error.hpp"
#include "mucalc/game.hpp"

namespace mucalc {

std::vector<MuType> compute_type_table(const Structure& m, const std::vector<int>& anchors,
                                       const Universe& u) {
  MarkedStructure colored = color(m, anchors, u.markers());
  EvalContext ev(colored.colored);
  std::vector<MuType> rows(static_cast<size_t>(m.node_count()), MuType(u.size()));
  for (int e = 0; e < u.size(); ++e) {
    NodeSet truth = ev.eval(u.element(e));
    for (int v = 0; v < m.node_count(); ++v) {
      if (truth[static_cast<size_t>(v)]) rows[static_cast<size_t>(v)].set(e);
    }
  }
  return rows;
}

MuType compute_type(const Structure& m, int v, const std::vector<int>& anchors,
                    const Universe& u) {
  if (v < 0 || v >= m.node_count()) throw_invalid("compute_type: unknown node");
  return compute_type_table(m, anchors, u)[static_cast<size_t>(v)];
}

QuotientMCGame build_quotient_mc_game(const Universe& u, const Structure& m,
                                      const std::vector<int>& anchors) {
  QuotientMCGame out;
  out.gcount = u.gcount();
  MarkedStructure colored = color(m, anchors, u.markers());
  ParityGame& g = out.partial.game;
  const int n = m.node_count();
  for (int v = 0; v < n; ++v) {
    for (int e = 0; e < u.gcount(); ++e) {
      const auto& ge = u.gelem(e);
      bool diamond;
      switch (ge.op) {
        case Op::Top: diamond = false; break;
        case Op::Bottom: diamond = true; break;
        case Op::Prop:
          diamond = !colored.colored.props[static_cast<size_t>(v)].count(ge.f->name);
          break;
        case Op::NegProp:
          diamond = colored.colored.props[static_cast<size_t>(v)].count(ge.f->name) != 0;
          break;
        case Op::And:
        case Op::Box: diamond = false; break;
        default: diamond = true; break;
      }
      g.add_node(diamond, ge.priority,
                 "(" + m.names[static_cast<size_t>(v)] + ", " + print_formula(ge.f) + ")");
    }
  }
  for (int v = 0; v < n; ++v) {
    for (int e = 0; e < u.gcount(); ++e) {
      const auto& ge = u.gelem(e);
      int id = out.node_id(v, e);
      switch (ge.op) {
        case Op::And:
        case Op::Or:
          g.add_edge(id, out.node_id(v, ge.child0));
          g.add_edge(id, out.node_id(v, ge.child1));
          break;
        case Op::Mu:
        case Op::Nu: g.add_edge(id, out.node_id(v, ge.child0)); break;
        case Op::Diamond:
        case Op::Box:
          for (int w : m.succ[static_cast<size_t>(v)]) g.add_edge(id, out.node_id(w, ge.child0));
          break;
        default: break;
      }
    }
  }
  out.partial.interface_.assign(static_cast<size_t>(g.node_count()), 0);
  for (int x : anchors) {
    for (int e = 0; e < u.gcount(); ++e) {
      if (is_modal(u.gelem(e).op)) out.partial.interface_[static_cast<size_t>(out.node_id(x, e))] = 1;
    }
  }
  return out;
}

// --- composition engine ---------------------------------------------------------

namespace {

struct Engine {
  const ComposeInput& in;
  const Universe& u;
  Structure colored;              // explicit part with target markers applied
  std::vector<int> anchorParts;   // per explicit node: bitmask of parts it anchors
  std::vector<std::vector<int>> anchorIndex;  // per part: explicit node -> 1-based anchor index
  std::vector<std::vector<int>> remap;        // per part: target marker -> part marker (0 = false)
  std::vector<std::vector<std::pair<int, int>>> crossByNode;  // node -> (part, typeId)
  std::vector<std::vector<MuType>> partTypes;  // interned types per part
  // memoized per (part, typeId, target element): substituted image and ptype
  // with globally keyed profiles (key = structureNode * gcount + keyGElem)
  std::map<std::tuple<int, int, int>, PType> ptypeMemo;
  std::vector<std::vector<int>> substMemo;  // per part: elem -> image elem (-1 unknown)

  explicit Engine(const ComposeInput& input) : in(input), u(*input.universe) {
    const Structure& C = in.explicitPart;
    if (static_cast<int>(in.targetAnchors.size()) > u.markers().count()) {
      throw_invalid("compose: more target anchors than marker symbols");
    }
    colored = color(C, in.targetAnchors, u.markers()).colored;

    anchorParts.assign(static_cast<size_t>(C.node_count()), 0);
    anchorIndex.resize(in.parts.size());
    remap.resize(in.parts.size());
    substMemo.assign(in.parts.size(), std::vector<int>(static_cast<size_t>(u.size()), -1));
    partTypes.resize(in.parts.size());
    for (size_t i = 0; i < in.parts.size(); ++i) {
      const auto& part = in.parts[i];
      if (part.anchors.size() != part.anchorTypes.size()) {
        throw_invalid("compose: anchor/type arity mismatch");
      }
      if (static_cast<int>(part.anchors.size()) > u.markers().count()) {
        throw_invalid("compose: more part anchors than marker symbols");
      }
      anchorIndex[i].assign(static_cast<size_t>(C.node_count()), 0);
      for (size_t a = 0; a < part.anchors.size(); ++a) {
        int x = part.anchors[a];
        if (x < 0 || x >= C.node_count()) throw_invalid("compose: anchor outside the explicit part");
        anchorParts[static_cast<size_t>(x)] |= 1 << i;
        anchorIndex[i][static_cast<size_t>(x)] = static_cast<int>(a) + 1;
      }
      // target marker j sits at node y_j: visible inside part i iff y_j is one
      // of its anchors
      remap[i].assign(static_cast<size_t>(u.markers().count()) + 1, 0);
      for (size_t j = 0; j < in.targetAnchors.size(); ++j) {
        remap[i][j + 1] = anchorIndex[i][static_cast<size_t>(in.targetAnchors[j])];
      }
    }
    crossByNode.assign(static_cast<size_t>(C.node_count()), {});
    for (const auto& ce : in.crossEdges) {
      if (ce.from < 0 || ce.from >= C.node_count()) throw_invalid("compose: cross edge source");
      crossByNode[static_cast<size_t>(ce.from)].push_back(
          {ce.part, intern_type(ce.part, ce.type)});
    }
  }

  int intern_type(int part, const MuType& t) {
    if (static_cast<int>(t.bits.size()) != u.size()) {
      throw_invalid("compose: type over the wrong closure universe");
    }
    auto& list = partTypes[static_cast<size_t>(part)];
    for (size_t i = 0; i < list.size(); ++i) {
      if (list[i] == t) return static_cast<int>(i);
    }
    list.push_back(t);
    return static_cast<int>(list.size()) - 1;
  }

  int subst(int part, int elem) {
    int& slot = substMemo[static_cast<size_t>(part)][static_cast<size_t>(elem)];
    if (slot < 0) slot = u.subst_element(elem, remap[static_cast<size_t>(part)]);
    return slot;
  }

  // ptype of (node-with-type, element) inside a part, profiles on global keys
  const PType& part_ptype(int part, int typeId, int elem) {
    auto key = std::make_tuple(part, typeId, elem);
    auto it = ptypeMemo.find(key);
    if (it != ptypeMemo.end()) return it->second;
    int image = subst(part, elem);
    int anchors = static_cast<int>(in.parts[static_cast<size_t>(part)].anchors.size());
    PType raw = ptype_from_types_via(
        u, partTypes[static_cast<size_t>(part)][static_cast<size_t>(typeId)], image, elem, anchors,
        /*reentrant=*/true);
    PType global;
    for (const auto& y : raw.profiles) {
      Profile g;
      for (const auto& e : y.entries) {
        auto [a, kelem] = Universe::unpack_key(e.key);
        int x = in.parts[static_cast<size_t>(part)].anchors[static_cast<size_t>(a - 1)];
        g.entries.push_back({x * u.gcount() + kelem, e.priority});
      }
      g.sort_entries();
      global.profiles.push_back(g);
    }
    std::sort(global.profiles.begin(), global.profiles.end());
    return ptypeMemo.emplace(key, std::move(global)).first->second;
  }

  // --- hybrid game per target element ------------------------------------------

  struct Hybrid {
    ParityGame g;
    std::map<std::pair<int, int>, int> concrete;  // (node, gelem) -> id  (left and layer 4)
    std::map<PType, int> v1;
    std::map<Profile, int> v2;
    std::map<std::pair<int, int>, int> v3;  // (global key, priority)
    std::deque<int> work;                   // concrete ids to expand
    std::vector<std::pair<int, int>> concreteOf;  // id -> (node, gelem) or (-1,-1)
  };

  bool is_anchor(int v) const { return anchorParts[static_cast<size_t>(v)] != 0; }

  int concrete_node(Hybrid& h, int v, int gelem) {
    auto key = std::make_pair(v, gelem);
    auto it = h.concrete.find(key);
    if (it != h.concrete.end()) return it->second;
    const auto& ge = u.gelem(gelem);
    bool diamond;
    switch (ge.op) {
      case Op::Top: diamond = false; break;
      case Op::Bottom: diamond = true; break;
      case Op::Prop: diamond = !colored.props[static_cast<size_t>(v)].count(ge.f->name); break;
      case Op::NegProp: diamond = colored.props[static_cast<size_t>(v)].count(ge.f->name) != 0; break;
      case Op::And:
      case Op::Box: diamond = false; break;
      default: diamond = true; break;
    }
    int id = h.g.add_node(diamond, ge.priority);
    h.concrete.emplace(key, id);
    h.concreteOf.push_back(key);
    h.work.push_back(id);
    return id;
  }

  int v1_node(Hybrid& h, const PType& t) {
    auto it = h.v1.find(t);
    if (it != h.v1.end()) return it->second;
    int id = h.g.add_node(true, u.annotation().maxPriority);
    h.concreteOf.push_back({-1, -1});
    h.v1.emplace(t, id);
    for (const auto& y : t.profiles) h.g.add_edge(id, v2_node(h, y));
    return id;
  }

  int v2_node(Hybrid& h, const Profile& y) {
    auto it = h.v2.find(y);
    if (it != h.v2.end()) return it->second;
    int id = h.g.add_node(false, u.annotation().maxPriority);
    h.concreteOf.push_back({-1, -1});
    h.v2.emplace(y, id);
    for (const auto& e : y.entries) h.g.add_edge(id, v3_node(h, e.key, e.priority));
    return id;
  }

  int v3_node(Hybrid& h, int globalKey, int priority) {
    auto it = h.v3.find({globalKey, priority});
    if (it != h.v3.end()) return it->second;
    int id = h.g.add_node(false, priority);
    h.concreteOf.push_back({-1, -1});
    h.v3.emplace(std::make_pair(globalKey, priority), id);
    h.g.add_edge(id, concrete_node(h, globalKey / u.gcount(), globalKey % u.gcount()));
    return id;
  }

  // target of a structure step from a modal node, or of an anchor/entry
  int abstract_entry(Hybrid& h, int part, int typeId, int elem) {
    return v1_node(h, part_ptype(part, typeId, elem));
  }

  void expand(Hybrid& h, int id) {
    auto [v, gelem] = h.concreteOf[static_cast<size_t>(id)];
    const auto& ge = u.gelem(gelem);
    int mask = anchorParts[static_cast<size_t>(v)];

    if (mask != 0 && ge.typeIndex >= 0) {
      // layer-4 node: one abstraction edge per part anchored here
      for (size_t i = 0; i < in.parts.size(); ++i) {
        if (!(mask & (1 << i))) continue;
        int a = anchorIndex[i][static_cast<size_t>(v)];
        int typeId = intern_type(static_cast<int>(i),
                                 in.parts[i].anchorTypes[static_cast<size_t>(a - 1)]);
        h.g.add_edge(id, abstract_entry(h, static_cast<int>(i), typeId, ge.typeIndex));
      }
      if (!is_modal(ge.op)) return;  // boolean dynamics live inside the abstractions
    }

    switch (ge.op) {
      case Op::And:
      case Op::Or:
        h.g.add_edge(id, concrete_node(h, v, ge.child0));
        h.g.add_edge(id, concrete_node(h, v, ge.child1));
        return;
      case Op::Mu:
      case Op::Nu: h.g.add_edge(id, concrete_node(h, v, ge.child0)); return;
      case Op::Diamond:
      case Op::Box: {
        int child = ge.child0;
        int childType = u.gelem(child).typeIndex;
        for (int w : in.explicitPart.succ[static_cast<size_t>(v)]) {
          // an edge between two anchors of one part is internal to it
          if (mask & anchorParts[static_cast<size_t>(w)]) continue;
          h.g.add_edge(id, concrete_node(h, w, child));
        }
        for (const auto& [part, typeId] : crossByNode[static_cast<size_t>(v)]) {
          if (mask & (1 << part)) continue;  // internal to a part anchored here
          if (childType < 0) throw_internal("compose: modal child outside the type universe");
          h.g.add_edge(id, abstract_entry(h, part, typeId, childType));
        }
        return;
      }
      default: return;  // literals
    }
  }

  // verdicts for one target element: per explicit node + per entry
  void run_target(int target, std::vector<MuType>& rows, std::vector<MuType>& entryRows) {
    Hybrid h;
    int rootG = u.gindex_of_element(target);
    std::vector<int> nodeEntry(static_cast<size_t>(in.explicitPart.node_count()));
    for (int v = 0; v < in.explicitPart.node_count(); ++v) {
      nodeEntry[static_cast<size_t>(v)] = concrete_node(h, v, rootG);
    }
    std::vector<int> extraEntry;
    for (const auto& e : in.entries) {
      extraEntry.push_back(abstract_entry(h, e.part, intern_type(e.part, e.type), target));
    }
    while (!h.work.empty()) {
      int id = h.work.front();
      h.work.pop_front();
      expand(h, id);
    }
    SolveResult r = solve(h.g);
    for (int v = 0; v < in.explicitPart.node_count(); ++v) {
      if (r.wins(nodeEntry[static_cast<size_t>(v)])) rows[static_cast<size_t>(v)].set(target);
    }
    for (size_t e = 0; e < extraEntry.size(); ++e) {
      if (r.wins(extraEntry[e])) entryRows[e].set(target);
    }
  }

  ComposeResult run() {
    ComposeResult out;
    out.rows.assign(static_cast<size_t>(in.explicitPart.node_count()), MuType(u.size()));
    out.entryRows.assign(in.entries.size(), MuType(u.size()));

    // an entry whose type equals an anchor's type is that anchor (the anchor
    // carries its own marker), so its row is the anchor's row
    std::vector<int> entryAnchor(in.entries.size(), -1);
    for (size_t i = 0; i < in.entries.size(); ++i) {
      const auto& part = in.parts[static_cast<size_t>(in.entries[i].part)];
      for (size_t a = 0; a < part.anchors.size(); ++a) {
        if (part.anchorTypes[a] == in.entries[i].type) {
          entryAnchor[i] = part.anchors[a];
          break;
        }
      }
    }

    // markers beyond the target anchors are false everywhere: such targets
    // inherit the row bit of their truncated image
    std::vector<int> trunc(static_cast<size_t>(u.markers().count()) + 1, 0);
    for (size_t j = 1; j <= in.targetAnchors.size(); ++j) trunc[j] = static_cast<int>(j);
    std::vector<int> truncated(static_cast<size_t>(u.size()));
    for (int e = 0; e < u.size(); ++e) truncated[static_cast<size_t>(e)] = u.subst_element(e, trunc);

    for (int e = 0; e < u.size(); ++e) {
      if (truncated[static_cast<size_t>(e)] == e) {
        run_target(e, out.rows, out.entryRows);
      }
    }
    for (int e = 0; e < u.size(); ++e) {
      int t = truncated[static_cast<size_t>(e)];
      if (t == e) continue;
      for (int v = 0; v < in.explicitPart.node_count(); ++v) {
        out.rows[static_cast<size_t>(v)].set(e, out.rows[static_cast<size_t>(v)].has(t));
      }
      for (size_t i = 0; i < out.entryRows.size(); ++i) {
        out.entryRows[i].set(e, out.entryRows[i].has(t));
      }
    }
    for (size_t i = 0; i < in.entries.size(); ++i) {
      if (entryAnchor[i] >= 0) out.entryRows[i] = out.rows[static_cast<size_t>(entryAnchor[i])];
    }
    return out;
  }
};

} // namespace

ComposeResult compose(const ComposeInput& in) {
  if (!in.universe) throw_invalid("compose: missing universe");
  Engine eng(in);
  return eng.run();
}

namespace {

ComposeInput wrap_single(const Universe& u, const Structure& m1, const std::vector<int>& xs,
                         const std::vector<int>& ys, const std::vector<MuType>& interfaceTypes,
                         const std::vector<std::pair<int, MuType>>& crossEdgeTypes) {
  ComposeInput in;
  in.universe = std::shared_ptr<const Universe>(&u, [](const Universe*) {});
  in.explicitPart = m1;
  in.targetAnchors = ys;
  ComposePart part;
  part.anchors = xs;
  part.anchorTypes = interfaceTypes;
  in.parts.push_back(std::move(part));
  for (const auto& [v, t] : crossEdgeTypes) in.crossEdges.push_back({v, 0, t});
  return in;
}

} // namespace

std::vector<MuType> compose_types(const Universe& u, const Structure& m1,
                                  const std::vector<int>& xs, const std::vector<int>& ys,
                                  const std::vector<MuType>& interfaceTypes,
                                  const std::vector<std::pair<int, MuType>>& crossEdgeTypes) {
  return compose(wrap_single(u, m1, xs, ys, interfaceTypes, crossEdgeTypes)).rows;
}

MuType compose_right_type(const Universe& u, const MuType& wType, const Structure& m1,
                          const std::vector<int>& xs, const std::vector<int>& ys,
                          const std::vector<MuType>& interfaceTypes,
                          const std::vector<std::pair<int, MuType>>& crossEdgeTypes) {
  ComposeInput in = wrap_single(u, m1, xs, ys, interfaceTypes, crossEdgeTypes);
  in.entries.push_back({0, wType});
  return compose(in).entryRows[0];
}

} // namespace mucalc
