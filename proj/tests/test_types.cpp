#include <random>

#include "doctest.h"
#include "mucalc/error.hpp"
#include "mucalc/types.hpp"
#include "oracles.hpp"

using namespace mucalc;

namespace {

// random directed separation of a random structure: partition nodes into a
// left interior, interface and right interior, drop right-to-left edges
DirectedSeparation random_directed_separation(std::mt19937_64& rng, int maxNodes) {
  Structure m = oracles::random_structure(rng, maxNodes);
  int n = m.node_count();
  std::vector<int> zone(static_cast<size_t>(n));
  for (int v = 0; v < n; ++v) zone[static_cast<size_t>(v)] = static_cast<int>(rng() % 3);
  Structure pruned;
  for (int v = 0; v < n; ++v) {
    int id = pruned.add_node(m.names[static_cast<size_t>(v)]);
    pruned.props[static_cast<size_t>(id)] = m.props[static_cast<size_t>(v)];
  }
  for (int u = 0; u < n; ++u) {
    for (int w : m.succ[static_cast<size_t>(u)]) {
      if (zone[static_cast<size_t>(u)] == 2 && zone[static_cast<size_t>(w)] == 0) continue;
      pruned.add_edge(u, w);
    }
  }
  DirectedSeparation s;
  s.whole = pruned;
  for (int v = 0; v < n; ++v) {
    if (zone[static_cast<size_t>(v)] <= 1) s.left.push_back(v);
    if (zone[static_cast<size_t>(v)] >= 1) s.right.push_back(v);
    if (zone[static_cast<size_t>(v)] == 1) s.interface_.push_back(v);
  }
  return s;
}

// run compose_types over a directed separation and compare every left row
// against the brute-force type in the whole structure
void check_compose_matches_brute_force(std::mt19937_64& rng, const DirectedSeparation& s,
                                       const AnnotatedFormula& ann, int extraAnchors) {
  REQUIRE(validate_separation(s));
  const Structure& whole = s.whole;
  int k = static_cast<int>(s.interface_.size()) + extraAnchors;
  if (k == 0) k = 1;
  Markers markers = Markers::standard(k);
  Universe u({ann.formula}, markers, ann);
  if (u.size() > 400) return;

  // right types over the interface anchors
  Structure right = whole.induced(s.right);
  std::vector<int> rightAnchors;
  for (int x : s.interface_) rightAnchors.push_back(right.require(whole.names[static_cast<size_t>(x)]));
  auto rightTable = compute_type_table(right, rightAnchors, u);

  // left explicit part
  Structure left = whole.induced(s.left);
  std::vector<int> xsLeft;
  for (int x : s.interface_) xsLeft.push_back(left.require(whole.names[static_cast<size_t>(x)]));
  std::vector<MuType> ifaceTypes;
  for (int x : s.interface_) {
    ifaceTypes.push_back(rightTable[static_cast<size_t>(right.require(whole.names[static_cast<size_t>(x)]))]);
  }
  // cross edges (left interior -> right interior)
  std::set<int> interfaceSet(s.interface_.begin(), s.interface_.end());
  std::vector<std::pair<int, MuType>> cross;
  for (int v : s.left) {
    if (interfaceSet.count(v)) continue;
    for (int w : whole.succ[static_cast<size_t>(v)]) {
      bool inRight = std::find(s.right.begin(), s.right.end(), w) != s.right.end();
      if (inRight && !interfaceSet.count(w)) {
        cross.push_back({left.require(whole.names[static_cast<size_t>(v)]),
                         rightTable[static_cast<size_t>(right.require(whole.names[static_cast<size_t>(w)]))]});
      }
    }
  }

  // target anchors: random subset of left nodes (the interface plus extras)
  std::vector<int> ysLeft = xsLeft;
  std::vector<int> ysWhole = s.interface_;
  for (int v : s.left) {
    if (static_cast<int>(ysLeft.size()) >= k) break;
    if (!interfaceSet.count(v) && rng() % 2 == 0) {
      ysLeft.push_back(left.require(whole.names[static_cast<size_t>(v)]));
      ysWhole.push_back(v);
    }
  }

  auto rows = compose_types(u, left, xsLeft, ysLeft, ifaceTypes, cross);
  auto wholeTable = compute_type_table(whole, ysWhole, u);
  for (int v : s.left) {
    const MuType& got = rows[static_cast<size_t>(left.require(whole.names[static_cast<size_t>(v)]))];
    const MuType& want = wholeTable[static_cast<size_t>(v)];
    CHECK(got == want);
    if (!(got == want)) {
      for (int e = 0; e < u.size(); ++e) {
        if (got.has(e) != want.has(e)) {
          MESSAGE("node ", whole.names[static_cast<size_t>(v)], " elem ",
                  print_formula(u.element(e)), " got ", got.has(e));
        }
      }
      return;
    }
  }

  // right rows through the same abstraction
  for (int w : s.right) {
    MuType got = compose_right_type(u, rightTable[static_cast<size_t>(right.require(whole.names[static_cast<size_t>(w)]))],
                                    left, xsLeft, ysLeft, ifaceTypes, cross);
    CHECK(got == wholeTable[static_cast<size_t>(w)]);
  }
}

} // namespace

TEST_CASE("compute_type marker cases") {
  Structure m;
  int a = m.add_node("a");
  (void)a;
  Markers one = Markers::standard(1);
  Universe u({parse_formula("_P1")}, one, annotate(parse_formula("_P1"), {}));
  MuType withAnchor = compute_type(m, 0, {0}, u);
  CHECK(withAnchor.has(u.index_of(parse_formula("_P1"))));
  MuType without = compute_type(m, 0, {}, u);
  CHECK_FALSE(without.has(u.index_of(parse_formula("_P1"))));
}

TEST_CASE("types are invariant under renaming") {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 25; ++i) {
    Structure m = oracles::random_structure(rng, 5);
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    Markers markers = Markers::standard(1);
    Universe u({ann.formula}, markers, ann);
    Structure renamed;
    for (int v = 0; v < m.node_count(); ++v) {
      int id = renamed.add_node("z" + std::to_string(v));
      renamed.props[static_cast<size_t>(id)] = m.props[static_cast<size_t>(v)];
    }
    for (int v = 0; v < m.node_count(); ++v) {
      for (int w : m.succ[static_cast<size_t>(v)]) renamed.add_edge(v, w);
    }
    auto t1 = compute_type_table(m, {0}, u);
    auto t2 = compute_type_table(renamed, {0}, u);
    for (int v = 0; v < m.node_count(); ++v) CHECK(t1[static_cast<size_t>(v)] == t2[static_cast<size_t>(v)]);
  }
}

TEST_CASE("degenerate composition: right part adds nothing") {
  // whole = left; right = the interface nodes with their induced edges
  std::mt19937_64 rng(52);
  for (int i = 0; i < 20; ++i) {
    Structure m = oracles::random_structure(rng, 5);
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    int x = 0;
    // drop self-referencing right-side edges: the right part is just {x}
    DirectedSeparation s;
    s.whole = m;
    for (int v = 0; v < m.node_count(); ++v) s.left.push_back(v);
    s.right = {x};
    s.interface_ = {x};
    REQUIRE(validate_separation(s));
    check_compose_matches_brute_force(rng, s, ann, 0);
  }
}

TEST_CASE("chain composition example") {
  Structure m;
  int a = m.add_node("a"), x = m.add_node("x"), b = m.add_node("b");
  m.add_edge(a, x);
  m.add_edge(x, b);
  Formula f = parse_formula("<><>tt");
  AnnotatedFormula ann = annotate(f, {});
  DirectedSeparation s{m, {a, x}, {x, b}, {x}};
  std::mt19937_64 rng(53);
  check_compose_matches_brute_force(rng, s, ann, 0);
}

TEST_CASE("compose matches brute force on random separations") {
  std::mt19937_64 rng(54);
  int done = 0;
  for (int iter = 0; done < 100 && iter < 1000; ++iter) {
    DirectedSeparation s = random_directed_separation(rng, 6);
    if (s.interface_.size() > 2) continue;
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    ++done;
    check_compose_matches_brute_force(rng, s, ann, static_cast<int>(rng() % 2));
  }
  CHECK(done == 100);
}

TEST_CASE("composition is invariant under type-preserving mutations") {
  // duplicate a right-interior node including its cross edges: the rows for
  // the left part must not change
  std::mt19937_64 rng(55);
  int done = 0;
  for (int iter = 0; done < 40 && iter < 600; ++iter) {
    DirectedSeparation s = random_directed_separation(rng, 5);
    if (s.interface_.size() > 2) continue;
    std::set<int> interfaceSet(s.interface_.begin(), s.interface_.end());
    std::vector<int> rightInterior;
    for (int v : s.right) {
      if (!interfaceSet.count(v)) rightInterior.push_back(v);
    }
    if (rightInterior.empty()) continue;
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    ++done;

    // mutate: duplicate w (same props; same outgoing edges; every predecessor
    // also points at the copy)
    int w = rightInterior[rng() % rightInterior.size()];
    Structure mutated = s.whole;
    int wc = mutated.add_node("#copy");
    mutated.props[static_cast<size_t>(wc)] = mutated.props[static_cast<size_t>(w)];
    for (int t : s.whole.succ[static_cast<size_t>(w)]) mutated.add_edge(wc, t);
    for (int pnode : s.whole.pred[static_cast<size_t>(w)]) mutated.add_edge(pnode, wc);
    if (s.whole.has_edge(w, w)) mutated.add_edge(wc, wc);

    DirectedSeparation s2;
    s2.whole = mutated;
    s2.left = s.left;
    s2.right = s.right;
    s2.right.push_back(wc);
    s2.interface_ = s.interface_;
    REQUIRE(validate_separation(s2));

    int k = std::max<size_t>(1, s.interface_.size());
    Markers markers = Markers::standard(static_cast<int>(k));
    Universe u({ann.formula}, markers, ann);
    if (u.size() > 300) continue;

    auto composeRows = [&](const DirectedSeparation& sep) {
      const Structure& whole = sep.whole;
      Structure right = whole.induced(sep.right);
      std::vector<int> rightAnchors;
      for (int x : sep.interface_) rightAnchors.push_back(right.require(whole.names[static_cast<size_t>(x)]));
      auto rightTable = compute_type_table(right, rightAnchors, u);
      Structure left = whole.induced(sep.left);
      std::vector<int> xsLeft;
      for (int x : sep.interface_) xsLeft.push_back(left.require(whole.names[static_cast<size_t>(x)]));
      std::vector<MuType> ifaceTypes;
      for (int x : sep.interface_) {
        ifaceTypes.push_back(rightTable[static_cast<size_t>(right.require(whole.names[static_cast<size_t>(x)]))]);
      }
      std::set<int> ifc(sep.interface_.begin(), sep.interface_.end());
      std::vector<std::pair<int, MuType>> cross;
      for (int v : sep.left) {
        if (ifc.count(v)) continue;
        for (int t : whole.succ[static_cast<size_t>(v)]) {
          bool inRight = std::find(sep.right.begin(), sep.right.end(), t) != sep.right.end();
          if (inRight && !ifc.count(t)) {
            cross.push_back({left.require(whole.names[static_cast<size_t>(v)]),
                             rightTable[static_cast<size_t>(right.require(whole.names[static_cast<size_t>(t)]))]});
          }
        }
      }
      return compose_types(u, left, xsLeft, xsLeft, ifaceTypes, cross);
    };

    auto rows1 = composeRows(s);
    auto rows2 = composeRows(s2);
    REQUIRE(rows1.size() == rows2.size());
    for (size_t i = 0; i < rows1.size(); ++i) CHECK(rows1[i] == rows2[i]);
  }
  CHECK(done == 40);
}
