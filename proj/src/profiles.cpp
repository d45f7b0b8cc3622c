#include "mucalc/profiles.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "mucalc/error.hpp"

namespace mucalc {

namespace {

// reachability in the product (game node, minimum priority so far);
// `recordStart` controls whether the start node itself counts as a visit
Profile profile_of_walks(const PartialParityGame& p, const PositionalStrategy& pi, int v,
                         bool recordStart) {
  Profile out;
  std::set<std::pair<int, int>> seen;
  std::deque<std::tuple<int, int, bool>> work;  // node, min, is-start
  // the start state is kept out of `seen` so a walk returning with the same
  // minimum is processed again as a genuine visit
  work.push_back({v, p.game.nodes[static_cast<size_t>(v)].priority, !recordStart});
  while (!work.empty()) {
    auto [u, m, isStart] = work.front();
    work.pop_front();
    if (!isStart && !seen.insert({u, m}).second) continue;
    const auto& node = p.game.nodes[static_cast<size_t>(u)];
    bool diamondExit = node.diamond && !pi.move(u);
    if (!isStart && p.is_interface(u) && (!node.diamond || diamondExit)) out.set_worst(u, m);
    auto push = [&](int w, int mw) {
      if (seen.count({w, mw})) return;
      work.push_back({w, mw, false});
    };
    if (node.diamond) {
      if (auto w = pi.move(u)) push(*w, std::min(m, p.game.nodes[static_cast<size_t>(*w)].priority));
    } else {
      for (int w : p.game.succ[static_cast<size_t>(u)]) {
        push(w, std::min(m, p.game.nodes[static_cast<size_t>(w)].priority));
      }
    }
  }
  return out;
}

} // namespace

Profile compute_profile(const PartialParityGame& p, const PositionalStrategy& pi, int v) {
  if (!is_partial_winning(p, v, pi)) {
    throw_invalid("compute_profile: strategy is not partial winning from the start node");
  }
  return profile_of_walks(p, pi, v, true);
}

Profile compute_profile_reentrant(const PartialParityGame& p, const PositionalStrategy& pi, int v) {
  if (p.game.nodes[static_cast<size_t>(v)].diamond && p.is_interface(v) && !pi.move(v)) {
    throw_invalid("compute_profile_reentrant: the strategy must move at the start node");
  }
  if (!is_partial_winning(p, v, pi)) {
    throw_invalid("compute_profile: strategy is not partial winning from the start node");
  }
  return profile_of_walks(p, pi, v, false);
}

// --- exhaustive enumeration -----------------------------------------------------

namespace {

struct EnumState {
  const PartialParityGame& p;
  int start;
  size_t budget;
  bool reentrant = false;
  std::vector<int> choice;  // per node: -1 unassigned, -2 exit, else successor
  PType result;

  // reachable nodes under current choices; returns the first reachable
  // unassigned Diamond node (-1 if none), or -3 when a reachable Diamond node
  // has no options at all (dead branch)
  int explore(std::vector<int>& reach) {
    std::vector<char> seen(static_cast<size_t>(p.game.node_count()), 0);
    std::deque<int> work{start};
    seen[static_cast<size_t>(start)] = 1;
    int firstOpen = -1;
    while (!work.empty()) {
      int u = work.front();
      work.pop_front();
      reach.push_back(u);
      const auto& node = p.game.nodes[static_cast<size_t>(u)];
      std::vector<int> next;
      if (node.diamond) {
        int c = choice[static_cast<size_t>(u)];
        if (c == -1) {
          bool canExit = p.is_interface(u) && !(reentrant && u == start);
          bool hasOption = !p.game.succ[static_cast<size_t>(u)].empty() || canExit;
          if (!hasOption) return -3;
          if (firstOpen < 0) firstOpen = u;
          continue;
        }
        if (c >= 0) next.push_back(c);
        // c == -2: exit, no successor
      } else {
        next = p.game.succ[static_cast<size_t>(u)];
      }
      for (int w : next) {
        if (!seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = 1;
          work.push_back(w);
        }
      }
    }
    return firstOpen;
  }

  // profile of the exits already fixed by the current partial assignment;
  // final profiles of completions only get ⊑-worse
  Profile partial_profile() {
    PositionalStrategy pi;
    for (int u = 0; u < p.game.node_count(); ++u) {
      if (p.game.nodes[static_cast<size_t>(u)].diamond && choice[static_cast<size_t>(u)] >= 0) {
        pi.set(u, choice[static_cast<size_t>(u)]);
      }
    }
    return profile_of_walks(p, pi, start, !reentrant);
  }

  bool losing_already() {
    // odd-dominated cycle in the graph induced by the current choices
    PositionalStrategy pi;
    for (int u = 0; u < p.game.node_count(); ++u) {
      if (choice[static_cast<size_t>(u)] >= 0) pi.set(u, choice[static_cast<size_t>(u)]);
    }
    // build a pruned partial game where unassigned Diamond nodes are exits
    PartialParityGame q = p;
    for (int u = 0; u < p.game.node_count(); ++u) {
      if (p.game.nodes[static_cast<size_t>(u)].diamond && choice[static_cast<size_t>(u)] == -1) {
        q.interface_[static_cast<size_t>(u)] = 1;
      }
    }
    return !is_partial_winning(q, start, pi);
  }

  void run() {
    if (budget-- == 0) throw_size_guard("ptype_enum: search budget exhausted");
    std::vector<int> reach;
    int open = explore(reach);
    if (open == -3) return;  // a reachable Diamond node is stuck: no valid completion
    if (open == -1) {
      PositionalStrategy pi;
      for (int u = 0; u < p.game.node_count(); ++u) {
        if (choice[static_cast<size_t>(u)] >= 0 &&
            p.game.nodes[static_cast<size_t>(u)].diamond) {
          pi.set(u, choice[static_cast<size_t>(u)]);
        }
      }
      if (is_partial_winning(p, start, pi)) {
        result.insert(profile_of_walks(p, pi, start, !reentrant));
      }
      return;
    }
    std::vector<int> opts(p.game.succ[static_cast<size_t>(open)]);
    if (p.is_interface(open) && !(reentrant && open == start)) opts.push_back(-2);
    for (int o : opts) {
      choice[static_cast<size_t>(open)] = o;
      if (!losing_already() && !result.contains_leq(partial_profile())) run();
      choice[static_cast<size_t>(open)] = -1;
    }
  }
};

} // namespace

PType ptype_enum(const PartialParityGame& p, int v, size_t workBudget) {
  EnumState st{p, v, workBudget, false,
               std::vector<int>(static_cast<size_t>(p.game.node_count()), -1), {}};
  st.run();
  return st.result;
}

PType ptype_enum_reentrant(const PartialParityGame& p, int v, size_t workBudget) {
  EnumState st{p, v, workBudget, true,
               std::vector<int>(static_cast<size_t>(p.game.node_count()), -1), {}};
  st.run();
  return st.result;
}

// --- formula route ---------------------------------------------------------------

PType ptype_from_types(const Universe& u, const MuType& tp, int elemIdx, int anchorCount) {
  return ptype_from_types_via(u, tp, elemIdx, elemIdx, anchorCount, false);
}

PType ptype_from_types_via(const Universe& u, const MuType& tp, int imageElem, int keySourceElem,
                           int anchorCount, bool reentrant) {
  if (static_cast<int>(tp.bits.size()) != u.size()) {
    throw_invalid("ptype_from_types: type over the wrong closure universe");
  }
  std::vector<int> keys = u.element_site_keys(keySourceElem);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<int> prios = u.annotation().distinct_priorities();
  // per-key chain, best reward first: level 0 = absent, level i = prios[i-1]
  std::sort(prios.begin(), prios.end(), reward_lt);
  struct KeyRef {
    int anchor;
    int gelem;
  };
  std::vector<KeyRef> keyRefs;
  for (int a = 1; a <= anchorCount; ++a) {
    for (int k : keys) keyRefs.push_back({a, k});
  }
  const int levels = static_cast<int>(prios.size());

  auto profile_of = [&](const std::vector<int>& lv) {
    Profile y;
    for (size_t j = 0; j < keyRefs.size(); ++j) {
      if (lv[j] > 0) {
        y.entries.push_back({Universe::pack_key(keyRefs[j].anchor, keyRefs[j].gelem),
                             prios[static_cast<size_t>(lv[j] - 1)]});
      }
    }
    y.sort_entries();
    return y;
  };
  auto q = [&](const std::vector<int>& lv) {
    return tp.has(
        u.transform_element_via(imageElem, keySourceElem, profile_of(lv), anchorCount, reentrant));
  };

  PType out;
  std::set<std::vector<int>> seenBounds;
  std::vector<std::vector<int>> stack{std::vector<int>(keyRefs.size(), levels)};
  std::set<std::vector<int>> found;
  while (!stack.empty()) {
    std::vector<int> ub = stack.back();
    stack.pop_back();
    if (!seenBounds.insert(ub).second) continue;
    if (!q(ub)) continue;
    std::vector<int> m = ub;
    for (size_t j = 0; j < keyRefs.size(); ++j) {
      while (m[j] > 0) {
        --m[j];
        if (!q(m)) {
          ++m[j];
          break;
        }
      }
    }
    if (found.insert(m).second) out.insert(profile_of(m));
    for (size_t j = 0; j < keyRefs.size(); ++j) {
      if (m[j] > 0) {
        std::vector<int> ub2 = ub;
        ub2[j] = m[j] - 1;
        stack.push_back(std::move(ub2));
      }
    }
  }
  return out;
}

// --- the layered game ---------------------------------------------------------------

int SmallGame::entry(const PType& t) const {
  auto it = v1.find(t);
  if (it == v1.end()) throw_invalid("small game: no layer-1 node for this ptype");
  return it->second;
}

SmallGame build_small_game(const SmallGameSpec& spec) {
  SmallGame out;
  ParityGame& g = out.partial.game;

  std::map<int, const SmallGameSpec::V4Entry*> v4ByKey;
  for (const auto& e : spec.interface_) {
    if (!v4ByKey.emplace(e.key, &e).second) throw_invalid("small game: duplicate interface key");
  }

  auto addV1 = [&](const PType& t) {
    auto it = out.v1.find(t);
    if (it != out.v1.end()) return it->second;
    int id = g.add_node(true, spec.maxPriority, "V1#" + std::to_string(out.v1.size()));
    out.layer.push_back(1);
    out.v1.emplace(t, id);
    return id;
  };
  auto addV2 = [&](const Profile& y) {
    auto it = out.v2.find(y);
    if (it != out.v2.end()) return it->second;
    int id = g.add_node(false, spec.maxPriority, "V2#" + std::to_string(out.v2.size()));
    out.layer.push_back(2);
    out.v2.emplace(y, id);
    return id;
  };
  auto addV3 = [&](int key, int priority) {
    auto it = out.v3.find({key, priority});
    if (it != out.v3.end()) return it->second;
    int id = g.add_node(false, priority, "V3#" + std::to_string(out.v3.size()));
    out.layer.push_back(3);
    out.v3.emplace(std::make_pair(key, priority), id);
    return id;
  };

  // layer 4 first: its nodes anchor everything else
  for (const auto& e : spec.interface_) {
    int id = g.add_node(e.diamond, spec.maxPriority, "V4#" + std::to_string(e.key));
    out.layer.push_back(4);
    out.v4.emplace(e.key, id);
  }

  std::vector<PType> worklist = spec.entries;
  for (const auto& e : spec.interface_) worklist.push_back(e.ptype);
  std::set<PType> processed;
  while (!worklist.empty()) {
    PType t = worklist.back();
    worklist.pop_back();
    if (!processed.insert(t).second) continue;
    int v1id = addV1(t);
    for (const auto& y : t.profiles) {
      int v2id = addV2(y);
      g.add_edge(v1id, v2id);
      for (const auto& entry : y.entries) {
        if (!v4ByKey.count(entry.key)) {
          throw_invalid("small game: profile exit without an interface entry");
        }
        int v3id = addV3(entry.key, entry.priority);
        g.add_edge(v2id, v3id);
        g.add_edge(v3id, out.v4.at(entry.key));
      }
    }
  }
  for (const auto& e : spec.interface_) {
    g.add_edge(out.v4.at(e.key), out.v1.at(e.ptype));
  }

  out.partial.interface_.assign(static_cast<size_t>(g.node_count()), 0);
  for (const auto& [key, id] : out.v4) out.partial.interface_[static_cast<size_t>(id)] = 1;
  return out;
}

// --- subgame replacement ---------------------------------------------------------------

ReplacedGame replace_subgame(const ParityGame& p, const std::vector<char>& qMask,
                             const std::vector<char>& uMask, const PartialParityGame& qprime,
                             const std::vector<int>& f) {
  const int n = p.node_count();
  ReplacedGame out;
  out.qprimeId.assign(static_cast<size_t>(qprime.game.node_count()), -1);
  out.keptId.assign(static_cast<size_t>(n), -1);

  for (int v = 0; v < qprime.game.node_count(); ++v) {
    const auto& node = qprime.game.nodes[static_cast<size_t>(v)];
    out.qprimeId[static_cast<size_t>(v)] = out.game.add_node(node.diamond, node.priority, node.label);
  }
  for (int v = 0; v < qprime.game.node_count(); ++v) {
    for (int w : qprime.game.succ[static_cast<size_t>(v)]) {
      out.game.add_edge(out.qprimeId[static_cast<size_t>(v)], out.qprimeId[static_cast<size_t>(w)]);
    }
  }
  for (int v = 0; v < n; ++v) {
    if (uMask[static_cast<size_t>(v)]) {
      if (!qMask[static_cast<size_t>(v)]) throw_invalid("replace_subgame: interface outside subgame");
      int img = f[static_cast<size_t>(v)];
      if (img < 0 || img >= qprime.game.node_count()) {
        throw_invalid("replace_subgame: dangling interface image");
      }
      out.keptId[static_cast<size_t>(v)] = out.qprimeId[static_cast<size_t>(img)];
    } else if (!qMask[static_cast<size_t>(v)]) {
      const auto& node = p.nodes[static_cast<size_t>(v)];
      out.keptId[static_cast<size_t>(v)] = out.game.add_node(node.diamond, node.priority, node.label);
    }
  }
  for (int v = 0; v < n; ++v) {
    bool inQ = qMask[static_cast<size_t>(v)] != 0;
    bool inU = uMask[static_cast<size_t>(v)] != 0;
    if (inQ && !inU) continue;  // removed; qprime covers its role
    int src = out.keptId[static_cast<size_t>(v)];
    for (int w : p.succ[static_cast<size_t>(v)]) {
      bool wInQ = qMask[static_cast<size_t>(w)] != 0;
      if (inU) {
        // interface node: keep only its exits out of the subgame
        if (wInQ) continue;
        out.game.add_edge(src, out.keptId[static_cast<size_t>(w)]);
      } else if (wInQ) {
        int img = f[static_cast<size_t>(w)];
        if (img < 0 || img >= qprime.game.node_count()) {
          throw_invalid("replace_subgame: dangling image for a rerouted edge");
        }
        out.game.add_edge(src, out.qprimeId[static_cast<size_t>(img)]);
      } else {
        out.game.add_edge(src, out.keptId[static_cast<size_t>(w)]);
      }
    }
  }
  return out;
}

} // namespace mucalc
