#pragma once

// Test-side oracles, implemented independently of the library internals they
// check.

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "mucalc/annotate.hpp"
#include "mucalc/formula.hpp"
#include "mucalc/game.hpp"
#include "mucalc/profile.hpp"
#include "mucalc/structure.hpp"

namespace oracles {

using namespace mucalc;

struct FormulaLess {
  bool operator()(const Formula& a, const Formula& b) const { return formula_compare(a, b) < 0; }
};
using FormulaSet = std::set<Formula, FormulaLess>;

// Textbook Fischer-Ladner closure: worklist over subterm and unfolding rules.
inline FormulaSet fl_closure(const Formula& phi) {
  FormulaSet out;
  std::deque<Formula> work{phi};
  while (!work.empty()) {
    Formula f = work.front();
    work.pop_front();
    if (!out.insert(f).second) continue;
    switch (f->op) {
      case Op::And:
      case Op::Or:
        work.push_back(f->lhs);
        work.push_back(f->rhs);
        break;
      case Op::Diamond:
      case Op::Box: work.push_back(f->lhs); break;
      case Op::Mu:
      case Op::Nu: work.push_back(substitute_var(f->lhs, f->name, f)); break;
      default: break;
    }
  }
  return out;
}

// --- random instances -------------------------------------------------------

inline Structure random_structure(std::mt19937_64& rng, int maxNodes, double edgeFactor = 1.8) {
  Structure m;
  int n = 1 + static_cast<int>(rng() % static_cast<uint64_t>(maxNodes));
  for (int i = 0; i < n; ++i) m.add_node("n" + std::to_string(i));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  double p = std::min(0.9, edgeFactor / n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (coin(rng) < p) m.add_edge(u, v);
    }
  }
  for (int u = 0; u < n; ++u) {
    if (coin(rng) < 0.4) m.props[static_cast<size_t>(u)].insert("p");
    if (coin(rng) < 0.3) m.props[static_cast<size_t>(u)].insert("q");
  }
  return m;
}

// Closed NNF formula with X bound by mu and Y by nu, consistent with (X, Y).
// Modal and fixpoint budgets keep closures small.
inline Formula random_consistent_formula(std::mt19937_64& rng, int maxFix = 2, int maxModal = 3,
                                         int depth = 5) {
  struct Gen {
    std::mt19937_64& rng;
    int fixLeft;
    int modalLeft;

    Formula go(int depth, bool xBound, bool yBound) {
      int maxRoll = depth <= 0 ? 5 : 11;
      int roll = static_cast<int>(rng() % static_cast<uint64_t>(maxRoll));
      switch (roll) {
        case 0: return f_top();
        case 1: return f_bottom();
        case 2: return f_prop(rng() % 2 ? "p" : "q");
        case 3: return f_negprop(rng() % 2 ? "p" : "q");
        case 4: {
          if (xBound && (!yBound || rng() % 2)) return f_var("X");
          if (yBound) return f_var("Y");
          return f_prop("p");
        }
        case 5: return f_and(go(depth - 1, xBound, yBound), go(depth - 1, xBound, yBound));
        case 6: return f_or(go(depth - 1, xBound, yBound), go(depth - 1, xBound, yBound));
        case 7:
        case 8:
          if (modalLeft > 0) {
            --modalLeft;
            return (roll == 7 ? f_diamond : f_box)(go(depth - 1, xBound, yBound));
          }
          return go(depth - 1, xBound, yBound);
        case 9:
          if (fixLeft > 0) {
            --fixLeft;
            // a mu X binder admits no free Y inside (X precedes Y in the order)
            return f_mu("X", go(depth - 1, true, false));
          }
          return go(depth - 1, xBound, yBound);
        default:
          if (fixLeft > 0) {
            --fixLeft;
            return f_nu("Y", go(depth - 1, xBound, true));
          }
          return go(depth - 1, xBound, yBound);
      }
    }
  };
  while (true) {
    Gen g{rng, maxFix, maxModal};
    Formula f = g.go(depth, false, false);
    if (!is_closed(f)) continue;
    VarSequence zs = var_sequence_for(f, {"X", "Y"});
    if (check_consistent(f, zs)) return f;
  }
}

inline AnnotatedFormula random_annotated(std::mt19937_64& rng, int maxFix = 2, int maxModal = 3,
                                         int depth = 5) {
  Formula f = random_consistent_formula(rng, maxFix, maxModal, depth);
  return annotate(f, var_sequence_for(f, {"X", "Y"}));
}

// --- path-enumeration profile oracle -----------------------------------------
//
// Explicit conforming-walk enumeration with a (node, running minimum) visited
// set; collects exit visits including the start node.

inline Profile enumerate_profile(const PartialParityGame& p, const PositionalStrategy& pi,
                                 int start) {
  Profile out;
  std::set<std::pair<int, int>> seen;
  std::deque<std::pair<int, int>> work;
  auto push = [&](int v, int m) {
    if (seen.insert({v, m}).second) work.push_back({v, m});
  };
  push(start, p.game.nodes[static_cast<size_t>(start)].priority);
  while (!work.empty()) {
    auto [v, m] = work.front();
    work.pop_front();
    const auto& node = p.game.nodes[static_cast<size_t>(v)];
    bool exitHere = false;
    if (p.is_interface(v)) {
      if (!node.diamond) {
        exitHere = true;
      } else if (!pi.move(v)) {
        exitHere = true;
      }
    }
    if (exitHere) out.set_worst(v, m);
    if (node.diamond) {
      if (auto w = pi.move(v)) {
        push(*w, std::min(m, p.game.nodes[static_cast<size_t>(*w)].priority));
      }
    } else {
      for (int w : p.game.succ[static_cast<size_t>(v)]) {
        push(w, std::min(m, p.game.nodes[static_cast<size_t>(w)].priority));
      }
    }
  }
  return out;
}

// --- feasibility of "some partial winning strategy with profile ⊑ y" ----------
//
// Independent route: extend the game with reward gadgets per y and solve.
// An exit recorded with priority q is modelled by a detour node of priority
// q+1 (q even) or q-1 (q odd) that loops back to the start; interface nodes
// without an entry lead to a Diamond dead end.

inline bool profile_possible(const PartialParityGame& p, int start, const Profile& y) {
  ParityGame g = p.game;
  int back = start;
  int dead = g.add_node(true, 0, "#dead");
  for (int u = 0; u < p.game.node_count(); ++u) {
    if (!p.is_interface(u)) continue;
    auto q = y.lookup(u);
    if (!q) {
      g.add_edge(u, dead);
    } else {
      int detour = g.add_node(false, (*q % 2 == 0) ? *q + 1 : *q - 1, "#detour");
      g.add_edge(u, detour);
      g.add_edge(detour, back);
    }
  }
  return solve(g).wins(start);
}

} // namespace oracles
