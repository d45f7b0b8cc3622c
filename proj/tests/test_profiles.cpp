#include <random>

#include "doctest.h"
#include "mucalc/error.hpp"
#include "mucalc/profiles.hpp"
#include "mucalc/types.hpp"
#include "oracles.hpp"

using namespace mucalc;

TEST_CASE("reward order") {
  CHECK(reward_leq(0, 1));
  CHECK(reward_leq(2, 4));
  CHECK(reward_leq(3, 1));
  CHECK_FALSE(reward_leq(1, 3));
  // total order with minimum 0 and maximum 1 on any priority range
  for (int p = 0; p <= 6; ++p) {
    CHECK(reward_leq(0, p));
    CHECK(reward_leq(p, 1));
    for (int q = 0; q <= 6; ++q) {
      CHECK((reward_leq(p, q) || reward_leq(q, p)));
      if (reward_leq(p, q) && reward_leq(q, p)) CHECK(p == q);
      for (int r = 0; r <= 6; ++r) {
        if (reward_leq(p, q) && reward_leq(q, r)) CHECK(reward_leq(p, r));
      }
    }
  }
}

TEST_CASE("profile order") {
  Profile empty;
  Profile u0, u1;
  u0.entries = {{7, 0}};
  u1.entries = {{7, 1}};
  CHECK(profile_leq(empty, u1));
  CHECK(profile_leq(u0, u1));
  CHECK_FALSE(profile_leq(u1, u0));
  CHECK_FALSE(profile_leq(u1, empty));
}

TEST_CASE("ptype insert keeps a minimal antichain") {
  PType t;
  Profile a, b, c;
  a.entries = {{1, 1}};
  b.entries = {{1, 0}};
  c.entries = {{2, 2}};
  t.insert(a);
  t.insert(c);
  CHECK(t.profiles.size() == 2);
  t.insert(b);  // dominates a
  CHECK(t.profiles.size() == 2);
  CHECK(t.contains_leq(a));
  for (const auto& y : t.profiles) CHECK_FALSE(profile_lt(a, y));
}

TEST_CASE("compute_profile spec cases") {
  // v (priority 2) -> u (interface, priority 1), strategy exits at u
  ParityGame g;
  int v = g.add_node(true, 2), u = g.add_node(true, 1);
  g.add_edge(v, u);
  PartialParityGame p{g, {0, 1}};
  PositionalStrategy toU;
  toU.set(v, u);
  Profile got = compute_profile(p, toU, v);
  REQUIRE(got.entries.size() == 1);
  CHECK(got.entries[0].key == u);
  CHECK(got.entries[0].priority == 1);

  // never reaching the interface: empty profile
  ParityGame g2;
  int a = g2.add_node(true, 0);
  int b = g2.add_node(false, 0);
  int c = g2.add_node(true, 1);
  g2.add_edge(a, b);
  g2.add_edge(b, a);
  PartialParityGame p2{g2, {0, 0, 1}};
  (void)c;
  PositionalStrategy loop;
  loop.set(a, b);
  CHECK(compute_profile(p2, loop, a).entries.empty());

  // two walks to u with minima 0 and 1 keep the reward-worst value
  ParityGame g3;
  int s = g3.add_node(false, 2);
  int m1 = g3.add_node(false, 0), m2 = g3.add_node(false, 1);
  int t = g3.add_node(true, 2);
  g3.add_edge(s, m1);
  g3.add_edge(s, m2);
  g3.add_edge(m1, t);
  g3.add_edge(m2, t);
  PartialParityGame p3{g3, {0, 0, 0, 1}};
  Profile got3 = compute_profile(p3, {}, s);
  REQUIRE(got3.entries.size() == 1);
  CHECK(got3.entries[0].priority == 1);
}

TEST_CASE("compute_profile matches the walk-enumeration oracle") {
  std::mt19937_64 rng(41);
  int done = 0;
  for (int iter = 0; done < 200 && iter < 2000; ++iter) {
    ParityGame g;
    int n = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) g.add_node(rng() % 2 == 0, static_cast<int>(rng() % 3));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (rng() % 3 == 0) g.add_edge(a, b);
      }
    }
    PartialParityGame p{g, std::vector<char>(static_cast<size_t>(n), 0)};
    for (int i = 0; i < n; ++i) p.interface_[static_cast<size_t>(i)] = rng() % 2;
    PositionalStrategy pi;
    for (int i = 0; i < n; ++i) {
      if (!g.nodes[static_cast<size_t>(i)].diamond) continue;
      const auto& s = g.succ[static_cast<size_t>(i)];
      if (!s.empty() && (!p.is_interface(i) || rng() % 2)) pi.set(i, s[rng() % s.size()]);
    }
    int start = static_cast<int>(rng() % n);
    bool winning;
    try {
      winning = is_partial_winning(p, start, pi);
    } catch (const Error&) {
      continue;
    }
    if (!winning) continue;
    ++done;
    CHECK(compute_profile(p, pi, start) == oracles::enumerate_profile(p, pi, start));
  }
  CHECK(done == 200);
}

TEST_CASE("ptype_enum spec cases") {
  // Diamond dead end outside the interface: no winning strategy
  ParityGame g;
  g.add_node(true, 0);
  PartialParityGame p{g, {0}};
  CHECK(ptype_enum(p, 0).profiles.empty());

  // winning node of a game with empty interface: only the empty profile
  ParityGame g2;
  g2.add_node(false, 0);
  PartialParityGame p2{g2, {0}};
  PType t2 = ptype_enum(p2, 0);
  REQUIRE(t2.profiles.size() == 1);
  CHECK(t2.profiles[0].entries.empty());
}

TEST_CASE("ptype_enum: achievable profiles dominate a member") {
  std::mt19937_64 rng(42);
  for (int iter = 0; iter < 150; ++iter) {
    ParityGame g;
    int n = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) g.add_node(rng() % 2 == 0, static_cast<int>(rng() % 3));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (rng() % 3 == 0) g.add_edge(a, b);
      }
    }
    PartialParityGame p{g, std::vector<char>(static_cast<size_t>(n), 0)};
    for (int i = 0; i < n; ++i) p.interface_[static_cast<size_t>(i)] = rng() % 2;
    int start = static_cast<int>(rng() % n);
    PType t = ptype_enum(p, start);

    // every random winning strategy's profile is dominated
    for (int tries = 0; tries < 20; ++tries) {
      PositionalStrategy pi;
      for (int i = 0; i < n; ++i) {
        if (!g.nodes[static_cast<size_t>(i)].diamond) continue;
        const auto& s = g.succ[static_cast<size_t>(i)];
        if (!s.empty() && (!p.is_interface(i) || rng() % 2)) pi.set(i, s[rng() % s.size()]);
      }
      try {
        if (!is_partial_winning(p, start, pi)) continue;
      } catch (const Error&) {
        continue;
      }
      CHECK(t.contains_leq(compute_profile(p, pi, start)));
    }

    // members are achievable and minimal per the feasibility oracle
    for (const auto& y : t.profiles) {
      CHECK(oracles::profile_possible(p, start, y));
      for (const auto& z : t.profiles) {
        if (!(y == z)) CHECK_FALSE(profile_leq(y, z));
      }
    }
  }
}

TEST_CASE("ptype_enum agrees with the feasibility oracle on the whole universe") {
  std::mt19937_64 rng(43);
  for (int iter = 0; iter < 60; ++iter) {
    ParityGame g;
    int n = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) g.add_node(rng() % 2 == 0, static_cast<int>(rng() % 3));
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (rng() % 3 == 0) g.add_edge(a, b);
      }
    }
    PartialParityGame p{g, std::vector<char>(static_cast<size_t>(n), 0)};
    std::vector<int> ifaceNodes;
    for (int i = 0; i < n; ++i) {
      if (rng() % 2) {
        p.interface_[static_cast<size_t>(i)] = 1;
        ifaceNodes.push_back(i);
      }
    }
    int start = static_cast<int>(rng() % n);
    PType t = ptype_enum(p, start);

    // enumerate the profile universe over priorities {0,1,2}
    std::vector<Profile> universe{Profile{}};
    for (int u : ifaceNodes) {
      std::vector<Profile> next;
      for (const auto& y : universe) {
        next.push_back(y);
        for (int pr = 0; pr <= 2; ++pr) {
          Profile z = y;
          z.entries.push_back({u, pr});
          z.sort_entries();
          next.push_back(z);
        }
      }
      universe = std::move(next);
    }
    for (const auto& y : universe) {
      CHECK(oracles::profile_possible(p, start, y) == t.contains_leq(y));
    }
  }
}

TEST_CASE("theorem: transform truth matches feasible profiles on the game") {
  std::mt19937_64 rng(44);
  int done = 0;
  for (int iter = 0; done < 120 && iter < 1200; ++iter) {
    Structure m = oracles::random_structure(rng, 5);
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    int anchorCount = 1 + static_cast<int>(rng() % 2);
    if (m.node_count() < anchorCount) continue;
    std::vector<int> xs;
    for (int i = 0; i < anchorCount; ++i) xs.push_back(i);
    Markers markers = Markers::standard(anchorCount);
    if (!propositions_of(ann.formula).empty()) {
      bool clash = false;
      for (const auto& name : propositions_of(ann.formula)) {
        if (markers.index_of(name)) clash = true;
      }
      if (clash) continue;
    }
    ++done;

    MCGame game = build_partial_mc_game(xs, m, ann);
    ClosureContext& ctx = *game.ctx;
    MarkedStructure colored = color(m, xs, markers);
    EvalContext ev(colored.colored);

    // random psi and y over (anchor, modal position)
    int elems = game.element_count();
    int psiIdx = static_cast<int>(rng() % elems);
    IndexedFormula psi{ctx.closed_at(ctx.element_positions()[static_cast<size_t>(psiIdx)]),
                       ctx.path_at(ctx.element_positions()[static_cast<size_t>(psiIdx)])};
    Profile y;
    for (int pos : ctx.element_positions()) {
      if (!is_modal(ctx.node_at(pos)->op)) continue;
      for (int a = 1; a <= anchorCount; ++a) {
        if (rng() % 3 == 0) {
          y.entries.push_back({ctx.pack_key(a, pos), static_cast<int>(rng() % 3)});
        }
      }
    }
    y.sort_entries();

    Formula psiY = profile_transform(ann, ctx, psi, y, anchorCount, markers);
    for (int v = 0; v < m.node_count(); ++v) {
      bool lhs = ev.holds(v, psiY);
      // feasibility of a profile ⊑ y from (v, psi), via the reward-gadget game
      Profile gameY;
      for (const auto& e : y.entries) {
        auto [a, pos] = ctx.unpack_key(e.key);
        gameY.entries.push_back({game.node_id(xs[static_cast<size_t>(a - 1)],
                                               ctx.element_index_of_pos(pos)),
                                 e.priority});
      }
      gameY.sort_entries();
      bool rhs = oracles::profile_possible(game.partial, game.node_id(v, psiIdx), gameY);
      CHECK(lhs == rhs);
    }
  }
  CHECK(done == 120);
}

TEST_CASE("ptype_from_types equals ptype_enum on the quotient game") {
  std::mt19937_64 rng(45);
  int done = 0;
  for (int iter = 0; done < 80 && iter < 800; ++iter) {
    Structure m = oracles::random_structure(rng, 5);
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    int anchorCount = 1;
    if (m.node_count() < anchorCount) continue;
    std::vector<int> xs{0};
    Markers markers = Markers::standard(anchorCount);
    Universe u({ann.formula}, markers, ann);
    if (u.size() > 200) continue;
    ++done;

    auto table = compute_type_table(m, xs, u);
    QuotientMCGame qg = build_quotient_mc_game(u, m, xs);

    for (int e = 0; e < u.size(); ++e) {
      for (int v = 0; v < m.node_count(); ++v) {
        PType viaTypes = ptype_from_types(u, table[static_cast<size_t>(v)], e, anchorCount);
        PType viaGame;
        try {
          viaGame = ptype_enum(qg.partial, qg.node_id(v, u.gindex_of_element(e)),
                               size_t(1) << 18);
        } catch (const Error&) {
          continue;  // search budget; skip this pair
        }
        // translate game keys (x, gelem) into packed (anchor, gelem)
        PType translated;
        for (const auto& y : viaGame.profiles) {
          Profile t;
          for (const auto& entry : y.entries) {
            int node = qg.struct_node_of(entry.key);
            int ge = qg.gelem_of(entry.key);
            int anchor = 1 + static_cast<int>(std::find(xs.begin(), xs.end(), node) - xs.begin());
            t.entries.push_back({Universe::pack_key(anchor, ge), entry.priority});
          }
          t.sort_entries();
          translated.profiles.push_back(t);
        }
        std::sort(translated.profiles.begin(), translated.profiles.end());
        CHECK(viaTypes == translated);
      }
    }
  }
  CHECK(done == 80);
}

TEST_CASE("small game construction") {
  // no interface: entry for ptype {∅} wins, entry for ptype ∅ loses
  SmallGameSpec spec;
  spec.maxPriority = 2;
  PType winning;
  winning.profiles.push_back(Profile{});
  PType losing;
  spec.entries = {winning, losing};
  SmallGame sg = build_small_game(spec);
  SolveResult r = solve(sg.partial.game);
  CHECK(r.wins(sg.entry(winning)));
  CHECK_FALSE(r.wins(sg.entry(losing)));
}

TEST_CASE("small game layer shapes") {
  // the three-profile ptype: three layer-2 successors; priority carriers
  SmallGameSpec spec;
  spec.maxPriority = 4;
  auto key = [](int i) { return i; };
  for (int i = 1; i <= 4; ++i) {
    SmallGameSpec::V4Entry e;
    e.key = key(i);
    e.diamond = true;
    e.ptype.profiles.push_back(Profile{});  // placeholder ptype {∅}
    spec.interface_.push_back(e);
  }
  Profile y1, y2, y3;
  y1.entries = {{key(1), 1}};
  y2.entries = {{key(1), 0}, {key(2), 2}, {key(4), 0}};
  y3.entries = {{key(2), 3}};
  PType t;
  t.profiles = {y1, y2, y3};
  std::sort(t.profiles.begin(), t.profiles.end());
  spec.entries = {t};
  SmallGame sg = build_small_game(spec);

  int v1 = sg.entry(t);
  CHECK(sg.partial.game.succ[static_cast<size_t>(v1)].size() == 3);
  int v3 = sg.v3.at({key(2), 3});
  CHECK(sg.partial.game.nodes[static_cast<size_t>(v3)].priority == 3);
  REQUIRE(sg.partial.game.succ[static_cast<size_t>(v3)].size() == 1);
  CHECK(sg.partial.game.succ[static_cast<size_t>(v3)][0] == sg.v4.at(key(2)));
  // layer-4 nodes form the interface
  for (const auto& [k, id] : sg.v4) CHECK(sg.partial.is_interface(id));
}

TEST_CASE("small game entries reproduce their ptypes") {
  std::mt19937_64 rng(46);
  for (int iter = 0; iter < 60; ++iter) {
    // random partial game shaped like a model checking game: interface nodes
    // carry the default maximum priority
    const int maxPrio = 2;
    ParityGame g;
    int n = 2 + static_cast<int>(rng() % 4);
    std::vector<int> iface;
    PartialParityGame p;
    for (int i = 0; i < n; ++i) {
      bool inIface = rng() % 2 == 0;
      g.add_node(rng() % 2 == 0, inIface ? maxPrio : static_cast<int>(rng() % (maxPrio + 1)));
      if (inIface) iface.push_back(i);
    }
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        if (rng() % 3 == 0) g.add_edge(a, b);
      }
    }
    p.game = g;
    p.interface_.assign(static_cast<size_t>(n), 0);
    for (int i : iface) p.interface_[static_cast<size_t>(i)] = 1;
    if (iface.empty()) continue;

    SmallGameSpec spec;
    spec.maxPriority = maxPrio;
    for (int x : iface) {
      SmallGameSpec::V4Entry e;
      e.key = x;
      e.diamond = g.nodes[static_cast<size_t>(x)].diamond;
      // re-entry edges carry the forced-first-move ptype
      e.ptype = ptype_enum_reentrant(p, x);
      spec.interface_.push_back(e);
    }
    std::vector<PType> want;
    for (int v = 0; v < n; ++v) {
      want.push_back(ptype_enum(p, v));
      spec.entries.push_back(want.back());
    }
    SmallGame sg = build_small_game(spec);
    for (int v = 0; v < n; ++v) {
      bool isIface = p.is_interface(v);
      int entry = isIface ? sg.v4.at(v) : sg.entry(want[static_cast<size_t>(v)]);
      PType got = ptype_enum(sg.partial, entry, size_t(1) << 18);
      // translate layer-4 exits back to the original interface keys
      PType translated;
      for (const auto& y : got.profiles) {
        Profile t;
        for (const auto& e : y.entries) {
          int orig = -1;
          for (const auto& [k, id] : sg.v4) {
            if (id == e.key) orig = k;
          }
          REQUIRE(orig >= 0);
          t.entries.push_back({orig, e.priority});
        }
        t.sort_entries();
        translated.profiles.push_back(t);
      }
      std::sort(translated.profiles.begin(), translated.profiles.end());
      CHECK(translated == want[static_cast<size_t>(v)]);
    }
  }
}

TEST_CASE("replace_subgame identity and rerouting") {
  ParityGame p;
  int a = p.add_node(true, 0, "a");
  int q1 = p.add_node(false, 1, "q1");
  int q2 = p.add_node(true, 0, "q2");
  p.add_edge(a, q2);
  p.add_edge(q1, q2);
  p.add_edge(q2, q1);
  p.add_edge(q1, a);

  std::vector<char> qMask{0, 1, 1};
  std::vector<char> uMask{0, 1, 0};
  // identity replacement: qprime is the induced subgame with interface {q1}
  PartialParityGame qprime;
  int r1 = qprime.game.add_node(false, 1, "q1");
  int r2 = qprime.game.add_node(true, 0, "q2");
  qprime.game.add_edge(r1, r2);
  qprime.game.add_edge(r2, r1);
  qprime.interface_ = {1, 0};
  std::vector<int> f{-1, r1, r2};
  ReplacedGame rep = replace_subgame(p, qMask, uMask, qprime, f);
  CHECK(rep.game.node_count() == 3);
  SolveResult before = solve(p), after = solve(rep.game);
  CHECK(after.wins(rep.keptId[static_cast<size_t>(a)]) == before.wins(a));
  // edge a -> q2 rerouted to f(q2)
  CHECK(rep.game.has_edge(rep.keptId[static_cast<size_t>(a)], rep.qprimeId[static_cast<size_t>(r2)]));
  // interface keeps its exit a
  CHECK(rep.game.has_edge(rep.qprimeId[static_cast<size_t>(r1)], rep.keptId[static_cast<size_t>(a)]));
}
