#include "mucalc/game.hpp"

#include <algorithm>
#include <deque>
#include <functional>

#include "mucalc/error.hpp"

namespace mucalc {

int ParityGame::add_node(bool diamond, int priority, std::string label) {
  nodes.push_back(Node{diamond, priority, std::move(label)});
  succ.emplace_back();
  return node_count() - 1;
}

void ParityGame::add_edge(int u, int v) {
  auto& s = succ[static_cast<size_t>(u)];
  auto it = std::lower_bound(s.begin(), s.end(), v);
  if (it == s.end() || *it != v) s.insert(it, v);
}

bool ParityGame::has_edge(int u, int v) const {
  const auto& s = succ[static_cast<size_t>(u)];
  return std::binary_search(s.begin(), s.end(), v);
}

int ParityGame::max_priority() const {
  int m = 0;
  for (const auto& n : nodes) m = std::max(m, n.priority);
  return m;
}

std::optional<int> PositionalStrategy::move(int v) const {
  auto it = moves.find(v);
  return it == moves.end() ? std::nullopt : std::optional<int>(it->second);
}

// --- solver -------------------------------------------------------------------

namespace {

struct Zielonka {
  const ParityGame& g;
  int n;

  explicit Zielonka(const ParityGame& game) : g(game), n(game.node_count()) {}

  // attractor of `player` to `target` within `alive`; records the chosen edge
  // for player-owned attracted nodes
  std::vector<char> attract(bool playerDiamond, const std::vector<char>& target,
                            const std::vector<char>& alive, PositionalStrategy& strat) {
    std::vector<char> inA = target;
    std::vector<int> escape(static_cast<size_t>(n), 0);
    std::deque<int> queue;
    for (int v = 0; v < n; ++v) {
      if (!alive[static_cast<size_t>(v)]) continue;
      if (inA[static_cast<size_t>(v)]) queue.push_back(v);
      int cnt = 0;
      for (int w : g.succ[static_cast<size_t>(v)]) {
        if (alive[static_cast<size_t>(w)]) ++cnt;
      }
      escape[static_cast<size_t>(v)] = cnt;
    }
    // reverse adjacency on demand
    std::vector<std::vector<int>> pred(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) {
      if (!alive[static_cast<size_t>(v)]) continue;
      for (int w : g.succ[static_cast<size_t>(v)]) {
        if (alive[static_cast<size_t>(w)]) pred[static_cast<size_t>(w)].push_back(v);
      }
    }
    while (!queue.empty()) {
      int w = queue.front();
      queue.pop_front();
      for (int v : pred[static_cast<size_t>(w)]) {
        if (inA[static_cast<size_t>(v)]) continue;
        bool owner = g.nodes[static_cast<size_t>(v)].diamond;
        if (owner == playerDiamond) {
          inA[static_cast<size_t>(v)] = 1;
          if (!target[static_cast<size_t>(v)] && owner == playerDiamond) strat.set(v, w);
          queue.push_back(v);
        } else {
          if (--escape[static_cast<size_t>(v)] == 0) {
            inA[static_cast<size_t>(v)] = 1;
            queue.push_back(v);
          }
        }
      }
    }
    return inA;
  }

  void run(const std::vector<char>& alive, std::vector<char>& diamondWins,
           PositionalStrategy& stratD, PositionalStrategy& stratB) {
    int p = -1;
    for (int v = 0; v < n; ++v) {
      if (alive[static_cast<size_t>(v)]) {
        int q = g.nodes[static_cast<size_t>(v)].priority;
        if (p < 0 || q < p) p = q;
      }
    }
    if (p < 0) return;  // empty subgame
    bool sigmaD = (p % 2) == 0;

    std::vector<char> target(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
      if (alive[static_cast<size_t>(v)] && g.nodes[static_cast<size_t>(v)].priority == p) {
        target[static_cast<size_t>(v)] = 1;
      }
    }
    PositionalStrategy attrStrat;
    std::vector<char> A = attract(sigmaD, target, alive, attrStrat);

    std::vector<char> rest(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
      rest[static_cast<size_t>(v)] = alive[static_cast<size_t>(v)] && !A[static_cast<size_t>(v)];
    }
    std::vector<char> subWins(static_cast<size_t>(n), 0);
    PositionalStrategy subD, subB;
    run(rest, subWins, subD, subB);

    bool opponentEmpty = true;
    for (int v = 0; v < n; ++v) {
      if (!rest[static_cast<size_t>(v)]) continue;
      bool dWins = subWins[static_cast<size_t>(v)] != 0;
      if (dWins != sigmaD) {
        opponentEmpty = false;
        break;
      }
    }

    if (opponentEmpty) {
      PositionalStrategy& mine = sigmaD ? stratD : stratB;
      for (int v = 0; v < n; ++v) {
        if (alive[static_cast<size_t>(v)]) diamondWins[static_cast<size_t>(v)] = sigmaD ? 1 : 0;
      }
      for (auto& [v, w] : (sigmaD ? subD : subB).moves) mine.set(v, w);
      for (auto& [v, w] : attrStrat.moves) mine.set(v, w);
      for (int v = 0; v < n; ++v) {
        if (!target[static_cast<size_t>(v)]) continue;
        if (g.nodes[static_cast<size_t>(v)].diamond != sigmaD) continue;
        for (int w : g.succ[static_cast<size_t>(v)]) {
          if (alive[static_cast<size_t>(w)]) {
            mine.set(v, w);
            break;
          }
        }
      }
      return;
    }

    std::vector<char> oppRegion(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
      if (rest[static_cast<size_t>(v)] && (subWins[static_cast<size_t>(v)] != 0) != sigmaD) {
        oppRegion[static_cast<size_t>(v)] = 1;
      }
    }
    PositionalStrategy battr;
    std::vector<char> B = attract(!sigmaD, oppRegion, alive, battr);
    std::vector<char> rest2(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
      rest2[static_cast<size_t>(v)] = alive[static_cast<size_t>(v)] && !B[static_cast<size_t>(v)];
    }
    std::vector<char> finWins(static_cast<size_t>(n), 0);
    PositionalStrategy finD, finB;
    run(rest2, finWins, finD, finB);

    PositionalStrategy& opp = sigmaD ? stratB : stratD;
    PositionalStrategy& subOpp = sigmaD ? subB : subD;
    PositionalStrategy& finOpp = sigmaD ? finB : finD;
    PositionalStrategy& finMine = sigmaD ? finD : finB;
    PositionalStrategy& mine = sigmaD ? stratD : stratB;

    for (int v = 0; v < n; ++v) {
      if (!alive[static_cast<size_t>(v)]) continue;
      if (B[static_cast<size_t>(v)]) {
        diamondWins[static_cast<size_t>(v)] = sigmaD ? 0 : 1;
      } else {
        diamondWins[static_cast<size_t>(v)] = finWins[static_cast<size_t>(v)];
      }
    }
    for (auto& [v, w] : finMine.moves) mine.set(v, w);
    for (auto& [v, w] : finOpp.moves) opp.set(v, w);
    for (auto& [v, w] : battr.moves) opp.set(v, w);
    for (auto& [v, w] : subOpp.moves) {
      if (oppRegion[static_cast<size_t>(v)]) opp.set(v, w);
    }
  }
};

} // namespace

SolveResult solve(const ParityGame& g0) {
  // totalize: a stuck player loses
  ParityGame g = g0;
  int orig = g0.node_count();
  int trapD = -1, trapB = -1;
  for (int v = 0; v < orig; ++v) {
    if (!g.succ[static_cast<size_t>(v)].empty()) continue;
    if (g.nodes[static_cast<size_t>(v)].diamond) {
      if (trapD < 0) {
        trapD = g.add_node(true, 1, "#trapD");
        g.add_edge(trapD, trapD);
      }
      g.add_edge(v, trapD);
    } else {
      if (trapB < 0) {
        trapB = g.add_node(false, 0, "#trapB");
        g.add_edge(trapB, trapB);
      }
      g.add_edge(v, trapB);
    }
  }

  Zielonka z(g);
  std::vector<char> alive(static_cast<size_t>(g.node_count()), 1);
  SolveResult res;
  res.diamondWins.assign(static_cast<size_t>(g.node_count()), 0);
  z.run(alive, res.diamondWins, res.diamond, res.box);

  res.diamondWins.resize(static_cast<size_t>(orig));
  auto strip = [&](PositionalStrategy& s) {
    for (auto it = s.moves.begin(); it != s.moves.end();) {
      if (it->first >= orig || it->second >= orig) {
        it = s.moves.erase(it);
      } else {
        ++it;
      }
    }
  };
  strip(res.diamond);
  strip(res.box);
  return res;
}

// --- naive semantics ---------------------------------------------------------

NodeSet EvalContext::eval(const Formula& phi) {
  std::vector<std::pair<std::string, NodeSet>> env;
  return eval_rec(phi, env);
}

bool EvalContext::holds(int v, const Formula& phi) {
  return eval(phi)[static_cast<size_t>(v)] != 0;
}

NodeSet EvalContext::eval_rec(const Formula& f, std::vector<std::pair<std::string, NodeSet>>& env) {
  const int n = m_->node_count();
  bool closedHere = env.empty() || is_closed(f);
  if (closedHere) {
    auto it = memo_.find(f);
    if (it != memo_.end()) return it->second;
  }
  NodeSet out(static_cast<size_t>(n), 0);
  switch (f->op) {
    case Op::Top: std::fill(out.begin(), out.end(), 1); break;
    case Op::Bottom: break;
    case Op::Prop:
      for (int v = 0; v < n; ++v) {
        out[static_cast<size_t>(v)] = m_->props[static_cast<size_t>(v)].count(f->name) ? 1 : 0;
      }
      break;
    case Op::NegProp:
      for (int v = 0; v < n; ++v) {
        out[static_cast<size_t>(v)] = m_->props[static_cast<size_t>(v)].count(f->name) ? 0 : 1;
      }
      break;
    case Op::Var: {
      for (auto it = env.rbegin(); it != env.rend(); ++it) {
        if (it->first == f->name) {
          out = it->second;
          return out;
        }
      }
      throw_invalid("eval: unbound variable " + f->name);
    }
    case Op::And: {
      NodeSet a = eval_rec(f->lhs, env), b = eval_rec(f->rhs, env);
      for (int v = 0; v < n; ++v) out[static_cast<size_t>(v)] = a[static_cast<size_t>(v)] && b[static_cast<size_t>(v)];
      break;
    }
    case Op::Or: {
      NodeSet a = eval_rec(f->lhs, env), b = eval_rec(f->rhs, env);
      for (int v = 0; v < n; ++v) out[static_cast<size_t>(v)] = a[static_cast<size_t>(v)] || b[static_cast<size_t>(v)];
      break;
    }
    case Op::Diamond: {
      NodeSet a = eval_rec(f->lhs, env);
      for (int v = 0; v < n; ++v) {
        for (int w : m_->succ[static_cast<size_t>(v)]) {
          if (a[static_cast<size_t>(w)]) {
            out[static_cast<size_t>(v)] = 1;
            break;
          }
        }
      }
      break;
    }
    case Op::Box: {
      NodeSet a = eval_rec(f->lhs, env);
      for (int v = 0; v < n; ++v) {
        out[static_cast<size_t>(v)] = 1;
        for (int w : m_->succ[static_cast<size_t>(v)]) {
          if (!a[static_cast<size_t>(w)]) {
            out[static_cast<size_t>(v)] = 0;
            break;
          }
        }
      }
      break;
    }
    case Op::Mu:
    case Op::Nu: {
      NodeSet cur(static_cast<size_t>(n), f->op == Op::Mu ? 0 : 1);
      while (true) {
        env.emplace_back(f->name, cur);
        NodeSet next = eval_rec(f->lhs, env);
        env.pop_back();
        if (next == cur) break;
        cur = std::move(next);
      }
      out = cur;
      break;
    }
  }
  if (closedHere) memo_.emplace(f, out);
  return out;
}

bool eval_naive(const Structure& m, int v, const Formula& phi) {
  if (!is_closed(phi)) throw_invalid("eval_naive requires a closed formula");
  EvalContext ctx(m);
  return ctx.holds(v, phi);
}

// --- model checking game -------------------------------------------------------

int MCGame::node_at_pos(int v, int pos) const {
  int e = ctx->element_index_of_pos(pos);
  if (e < 0) throw_internal("node_at_pos: variable position");
  return node_id(v, e);
}

int MCGame::anchor_index_of(int structNode) const {
  for (size_t i = 0; i < interfaceAnchors.size(); ++i) {
    if (interfaceAnchors[i] == structNode) return static_cast<int>(i) + 1;
  }
  return 0;
}

int MCGame::profile_key(int gameNode) const {
  int a = anchor_index_of(struct_node_of(gameNode));
  if (a == 0) throw_invalid("profile_key: node is not over an interface anchor");
  return ctx->pack_key(a, pos_of(gameNode));
}

MCGame build_partial_mc_game(const std::vector<int>& xs, const Structure& m,
                             const AnnotatedFormula& phi) {
  if (!is_closed(phi.formula)) throw_invalid("model checking game requires a closed formula");
  MCGame out;
  out.m = m;
  out.ann = phi;
  out.ctx = std::make_shared<ClosureContext>(phi.formula);
  out.interfaceAnchors = xs;

  const ClosureContext& ctx = *out.ctx;
  const auto& elemPos = ctx.element_positions();
  const int elems = static_cast<int>(elemPos.size());
  const int n = m.node_count();

  ParityGame& g = out.partial.game;
  g.nodes.reserve(static_cast<size_t>(n * elems));
  for (int v = 0; v < n; ++v) {
    for (int e = 0; e < elems; ++e) {
      int pos = elemPos[static_cast<size_t>(e)];
      const Formula& f = ctx.node_at(pos);
      bool diamond;
      switch (f->op) {
        case Op::Top: diamond = false; break;
        case Op::Bottom: diamond = true; break;
        case Op::Prop: diamond = !m.props[static_cast<size_t>(v)].count(f->name); break;
        case Op::NegProp: diamond = m.props[static_cast<size_t>(v)].count(f->name) != 0; break;
        case Op::And:
        case Op::Box: diamond = false; break;
        default: diamond = true; break;  // Or, Diamond, Mu, Nu
      }
      g.add_node(diamond, phi.node_priority(f),
                 "(" + m.names[static_cast<size_t>(v)] + ", " + print_formula(f) + ")");
    }
  }
  for (int v = 0; v < n; ++v) {
    for (int e = 0; e < elems; ++e) {
      int pos = elemPos[static_cast<size_t>(e)];
      const Formula& f = ctx.node_at(pos);
      int id = out.node_id(v, e);
      switch (f->op) {
        case Op::And:
        case Op::Or:
          g.add_edge(id, out.node_at_pos(v, ctx.step(pos, 0)));
          g.add_edge(id, out.node_at_pos(v, ctx.step(pos, 1)));
          break;
        case Op::Mu:
        case Op::Nu:
          g.add_edge(id, out.node_at_pos(v, ctx.step(pos, 0)));
          break;
        case Op::Diamond:
        case Op::Box: {
          int child = ctx.step(pos, 0);
          for (int w : m.succ[static_cast<size_t>(v)]) {
            g.add_edge(id, out.node_at_pos(w, child));
          }
          break;
        }
        default: break;
      }
    }
  }

  out.partial.interface_.assign(static_cast<size_t>(g.node_count()), 0);
  for (int x : xs) {
    if (x < 0 || x >= n) throw_invalid("interface node outside the structure");
    for (int e = 0; e < elems; ++e) {
      int pos = elemPos[static_cast<size_t>(e)];
      if (is_modal(ctx.node_at(pos)->op)) {
        out.partial.interface_[static_cast<size_t>(out.node_id(x, e))] = 1;
      }
    }
  }
  return out;
}

MCGame build_mc_game(const Structure& m, const AnnotatedFormula& phi) {
  return build_partial_mc_game({}, m, phi);
}

ParityGame close_partial(const PartialParityGame& p) {
  ParityGame g = p.game;
  int top = g.add_node(false, g.max_priority(), "#top");
  for (int v = 0; v < p.game.node_count(); ++v) {
    if (p.is_interface(v) && p.game.nodes[static_cast<size_t>(v)].diamond) g.add_edge(v, top);
  }
  return g;
}

// --- partial winning check ------------------------------------------------------

namespace {

// restricted play graph: Diamond nodes follow pi, Box nodes keep all moves;
// exits at interface Diamond nodes where pi is undefined
struct Restricted {
  std::vector<int> reach;                  // reached nodes
  std::vector<std::vector<int>> edges;     // per reached index
  std::vector<char> seen;
  std::vector<int> indexOf;
};

Restricted restrict_plays(const PartialParityGame& p, int start, const PositionalStrategy& pi) {
  Restricted r;
  int n = p.game.node_count();
  r.seen.assign(static_cast<size_t>(n), 0);
  r.indexOf.assign(static_cast<size_t>(n), -1);
  std::deque<int> queue{start};
  r.seen[static_cast<size_t>(start)] = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    r.indexOf[static_cast<size_t>(v)] = static_cast<int>(r.reach.size());
    r.reach.push_back(v);
    const auto& node = p.game.nodes[static_cast<size_t>(v)];
    std::vector<int> out;
    if (node.diamond) {
      if (auto w = pi.move(v)) {
        if (!p.game.has_edge(v, *w)) throw_invalid("strategy move is not a game edge");
        out.push_back(*w);
      } else if (!p.is_interface(v)) {
        if (p.game.succ[static_cast<size_t>(v)].empty()) {
          throw_invalid("strategy undefined at a reachable Diamond dead end");
        }
        throw_invalid("strategy undefined at a reachable non-interface Diamond node");
      }
      // interface + undefined: play exits here
    } else {
      out = p.game.succ[static_cast<size_t>(v)];
    }
    for (int w : out) {
      if (!r.seen[static_cast<size_t>(w)]) {
        r.seen[static_cast<size_t>(w)] = 1;
        queue.push_back(w);
      }
    }
    r.edges.push_back(std::move(out));
  }
  // remap edge targets to reach-indices after BFS completes
  for (auto& es : r.edges) {
    for (int& w : es) w = r.indexOf[static_cast<size_t>(w)];
  }
  return r;
}

// any cycle whose minimum priority is odd?
bool has_odd_cycle(const ParityGame& g, const Restricted& r) {
  int m = static_cast<int>(r.reach.size());
  std::vector<int> prio(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) prio[static_cast<size_t>(i)] = g.nodes[static_cast<size_t>(r.reach[i])].priority;
  std::vector<int> prios = prio;
  std::sort(prios.begin(), prios.end());
  prios.erase(std::unique(prios.begin(), prios.end()), prios.end());
  for (int p : prios) {
    if (p % 2 == 0) continue;
    // SCCs of the subgraph with priorities >= p; a cycle through priority p exists
    // iff some SCC with an internal edge contains a p-node
    std::vector<char> keep(static_cast<size_t>(m), 0);
    for (int i = 0; i < m; ++i) keep[static_cast<size_t>(i)] = prio[static_cast<size_t>(i)] >= p;
    // Tarjan
    std::vector<int> comp(static_cast<size_t>(m), -1), low(static_cast<size_t>(m)), idx(static_cast<size_t>(m), -1);
    std::vector<int> stack;
    std::vector<char> onStack(static_cast<size_t>(m), 0);
    int counter = 0, comps = 0;
    std::function<void(int)> dfs = [&](int v) {
      idx[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = counter++;
      stack.push_back(v);
      onStack[static_cast<size_t>(v)] = 1;
      for (int w : r.edges[static_cast<size_t>(v)]) {
        if (!keep[static_cast<size_t>(w)]) continue;
        if (idx[static_cast<size_t>(w)] < 0) {
          dfs(w);
          low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], low[static_cast<size_t>(w)]);
        } else if (onStack[static_cast<size_t>(w)]) {
          low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], idx[static_cast<size_t>(w)]);
        }
      }
      if (low[static_cast<size_t>(v)] == idx[static_cast<size_t>(v)]) {
        while (true) {
          int w = stack.back();
          stack.pop_back();
          onStack[static_cast<size_t>(w)] = 0;
          comp[static_cast<size_t>(w)] = comps;
          if (w == v) break;
        }
        ++comps;
      }
    };
    for (int v = 0; v < m; ++v) {
      if (keep[static_cast<size_t>(v)] && idx[static_cast<size_t>(v)] < 0) dfs(v);
    }
    std::vector<char> hasEdge(static_cast<size_t>(comps), 0), hasP(static_cast<size_t>(comps), 0);
    for (int v = 0; v < m; ++v) {
      if (!keep[static_cast<size_t>(v)]) continue;
      if (prio[static_cast<size_t>(v)] == p) hasP[static_cast<size_t>(comp[v])] = 1;
      for (int w : r.edges[static_cast<size_t>(v)]) {
        if (keep[static_cast<size_t>(w)] && comp[static_cast<size_t>(w)] == comp[static_cast<size_t>(v)]) {
          hasEdge[static_cast<size_t>(comp[v])] = 1;
        }
      }
    }
    for (int c = 0; c < comps; ++c) {
      if (hasEdge[static_cast<size_t>(c)] && hasP[static_cast<size_t>(c)]) return true;
    }
  }
  return false;
}

} // namespace

bool is_partial_winning(const PartialParityGame& p, int v, const PositionalStrategy& pi) {
  Restricted r = restrict_plays(p, v, pi);
  // a reachable Diamond node where the play must continue but cannot would have
  // thrown above; Box dead ends are wins for Diamond
  return !has_odd_cycle(p.game, r);
}

} // namespace mucalc
