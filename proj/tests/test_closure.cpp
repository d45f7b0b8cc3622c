#include <random>

#include "doctest.h"
#include "mucalc/closure.hpp"
#include "mucalc/error.hpp"
#include "mucalc/universe.hpp"
#include "oracles.hpp"

using namespace mucalc;

namespace {

bool contains_formula(const std::vector<Formula>& set, const Formula& f) {
  for (const auto& g : set) {
    if (formula_equal(g, f)) return true;
  }
  return false;
}

std::set<std::string> as_set(const std::vector<Formula>& v) {
  std::set<std::string> out;
  for (const auto& f : v) out.insert(print_formula(f));
  return out;
}

std::set<std::string> as_set(const oracles::FormulaSet& v) {
  std::set<std::string> out;
  for (const auto& f : v) out.insert(print_formula(f));
  return out;
}

} // namespace

TEST_CASE("sub excludes variable occurrences") {
  Formula f = parse_formula("mu X. <>X");
  auto s = sub(f);
  REQUIRE(s.size() == 2);
  CHECK(s[0].position.empty());
  CHECK(formula_equal(s[1].formula, f_diamond(f_var("X"))));
  CHECK(s[1].position == Path{0});

  auto atom = sub(parse_formula("p"));
  CHECK(atom.size() == 1);
}

TEST_CASE("identical subformulas stay distinct by position") {
  Formula f = parse_formula("<>p | <>p");
  auto s = sub(f);
  int diamonds = 0;
  Path first;
  for (const auto& occ : s) {
    if (occ.formula->op == Op::Diamond) {
      if (diamonds == 0) first = occ.position;
      else CHECK(occ.position != first);
      ++diamonds;
    }
  }
  CHECK(diamonds == 2);
}

TEST_CASE("closure_at substitutes definitions") {
  Formula phi = parse_formula("mu X. nu Y. <>X | <>Y");
  // the inner nu Y occurrence
  IndexedFormula occ{phi->lhs, Path{0}};
  IndexedFormula c = closure_at(phi, occ);
  Formula expected = parse_formula("nu Y. <>(mu X. nu Y. <>X | <>Y) | <>Y");
  CHECK(formula_equal(c.formula, expected));
  CHECK(c.position == Path{0});

  Formula phi2 = parse_formula("mu X. <>X");
  IndexedFormula c2 = closure_at(phi2, IndexedFormula{phi2->lhs, Path{0}});
  CHECK(formula_equal(c2.formula, parse_formula("<>(mu X. <>X)")));

  // already closed occurrences stay unchanged
  Formula phi3 = parse_formula("p & <>q");
  IndexedFormula c3 = closure_at(phi3, IndexedFormula{phi3->rhs, Path{1}});
  CHECK(formula_equal(c3.formula, parse_formula("<>q")));
}

TEST_CASE("cl equals the Fischer-Ladner closure as plain formulas") {
  Formula f1 = parse_formula("mu X. <>X");
  auto c1 = cl_plain(f1);
  CHECK(c1.size() == 2);
  CHECK(contains_formula(c1, parse_formula("<>(mu X. <>X)")));

  auto c2 = cl_plain(parse_formula("p & q"));
  CHECK(c2.size() == 3);

  Formula f3 = parse_formula("mu X. nu Y. <>X | <>Y");
  auto c3 = cl_plain(f3);
  CHECK(contains_formula(c3, parse_formula("nu Y. <>(mu X. nu Y. <>X | <>Y) | <>Y")));

  std::mt19937_64 rng(11);
  for (int i = 0; i < 120; ++i) {
    Formula f = oracles::random_consistent_formula(rng);
    CHECK(as_set(cl_plain(f)) == as_set(oracles::fl_closure(f)));
  }
}

TEST_CASE("closure of a closure element stays inside") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 60; ++i) {
    Formula f = oracles::random_consistent_formula(rng);
    auto outerList = cl_plain(f);
    auto outer = as_set(outerList);
    for (const auto& psi : outerList) {
      for (const auto& inner : cl_plain(psi)) CHECK(outer.count(print_formula(inner)));
    }
  }
}

TEST_CASE("consistency is closure-stable") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    Formula f = oracles::random_consistent_formula(rng);
    VarSequence zs = var_sequence_for(f, {"X", "Y"});
    REQUIRE(check_consistent(f, zs));
    for (const auto& psi : cl_plain(f)) CHECK(check_consistent(psi, zs));
  }
}

TEST_CASE("pt_variants examples") {
  Markers one = Markers::standard(1);
  auto v1 = pt_variants(parse_formula("<>q"), one);
  CHECK(v1.size() == 2);
  CHECK(contains_formula(v1, parse_formula("<>q")));
  CHECK(contains_formula(v1, parse_formula("_P1 | <>q")));

  auto v2 = pt_variants(parse_formula("q"), one);
  CHECK(v2.size() == 1);

  auto v3 = pt_variants(parse_formula("[]q"), one);
  CHECK(v3.size() == 2);
  CHECK(contains_formula(v3, parse_formula("!_P1 & []q")));
}

TEST_CASE("pt_variants counts 2^(k*m) on marker-free formulas") {
  std::mt19937_64 rng(14);
  for (int k = 1; k <= 2; ++k) {
    Markers m = Markers::standard(k);
    for (int i = 0; i < 40; ++i) {
      Formula f = oracles::random_consistent_formula(rng, 1, 3, 4);
      int modal = 0;
      std::function<void(const Formula&)> count = [&](const Formula& g) {
        if (is_modal(g->op)) ++modal;
        for (int c = 0; c < child_count(g->op); ++c) count(child_of(g, c));
      };
      count(f);
      if (static_cast<size_t>(k) * modal > 10) continue;
      CHECK(pt_variants(f, m).size() == (size_t(1) << (static_cast<size_t>(k) * modal)));
    }
  }
}

TEST_CASE("cl_p examples and idempotence") {
  Markers one = Markers::standard(1);
  auto u = cl_p({parse_formula("<>q")}, one);
  CHECK(u.size() == 3);
  CHECK(contains_formula(u, parse_formula("<>q")));
  CHECK(contains_formula(u, parse_formula("q")));
  CHECK(contains_formula(u, parse_formula("_P1 | <>q")));

  auto atom = cl_p({parse_formula("p")}, one);
  CHECK(atom.size() == 1);

  std::mt19937_64 rng(15);
  for (int i = 0; i < 100; ++i) {
    int k = 1 + static_cast<int>(rng() % 2);
    Markers m = Markers::standard(k);
    Formula f = oracles::random_consistent_formula(rng, 2, 2, 4);
    auto once = cl_p({f}, m);
    if (once.size() > 300) continue;
    auto twice = cl_p(once, m);
    CHECK(as_set(once) == as_set(twice));
  }
}

TEST_CASE("prio") {
  Formula phi = parse_formula("mu X. nu Y. <>X | <>Y");
  AnnotatedFormula ann =
      annotate(phi, VarSequence::make({{"X", Polarity::MuOnly}, {"Y", Polarity::NuOnly}}));
  REQUIRE(ann.maxPriority == 2);

  // psi = phi, chi = <>X at position 0.0.0
  IndexedFormula psi{phi, {}};
  Formula diaX = f_diamond(f_var("X"));
  CHECK(prio(ann, psi, IndexedFormula{diaX, Path{0, 0, 0}}) == 1);

  // no enclosing fixpoint: maxPriority
  Formula phi2 = parse_formula("mu X. <>X");
  AnnotatedFormula ann2 = annotate(phi2, VarSequence::make({{"X", Polarity::MuOnly}}));
  Formula psi2 = parse_formula("<>(mu X. <>X)");
  CHECK(prio(ann2, IndexedFormula{psi2, Path{0}}, IndexedFormula{psi2, {}}) == ann2.maxPriority);

  // innermost <>Y of the unfolded element
  Formula psi3 = parse_formula("nu Y. <>(mu X. nu Y. <>X | <>Y) | <>Y");
  Formula diaY = f_diamond(f_var("Y"));
  CHECK(prio(ann, IndexedFormula{psi3, Path{0}}, IndexedFormula{diaY, Path{0, 0, 0, 0, 0, 1}}) == 1);
}

TEST_CASE("profile_transform base cases") {
  Markers one = Markers::standard(1);

  Formula f1 = parse_formula("p & q");
  AnnotatedFormula a1 = annotate(f1, VarSequence{});
  ClosureContext c1(f1);
  Profile empty;
  CHECK(formula_equal(profile_transform(a1, c1, IndexedFormula{f1, {}}, empty, 1, one), f1));

  Formula f2 = parse_formula("<>q");
  AnnotatedFormula a2 = annotate(f2, VarSequence{});
  ClosureContext c2(f2);
  CHECK(formula_equal(profile_transform(a2, c2, IndexedFormula{f2, {}}, empty, 1, one), f2));

  Formula f3 = parse_formula("[]q");
  AnnotatedFormula a3 = annotate(f3, VarSequence{});
  ClosureContext c3(f3);
  Formula got = profile_transform(a3, c3, IndexedFormula{f3, {}}, empty, 1, one);
  CHECK(formula_equal(got, parse_formula("!_P1 & []q")));
}

TEST_CASE("profile_transform diamond case uses the reward comparison") {
  // start <>q with an entry at its own modal element
  Formula f = parse_formula("<>q");
  AnnotatedFormula ann = annotate(f, VarSequence{});
  ClosureContext ctx(f);
  Markers one = Markers::standard(1);
  Profile y;
  y.entries.push_back({ctx.pack_key(1, 0), 0});  // position 0 = root <>q, priority 0
  Formula got = profile_transform(ann, ctx, IndexedFormula{f, {}}, y, 1, one);
  CHECK(formula_equal(got, parse_formula("_P1 | <>q")));
}

TEST_CASE("profile_transform output is a priority tracking variant") {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 60; ++i) {
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    Markers m = Markers::standard(1 + static_cast<int>(rng() % 2));
    ClosureContext ctx(ann.formula);
    auto closure = ctx.cl();
    const auto& psi = closure[rng() % closure.size()];
    // random profile over (anchor, modal position)
    Profile y;
    for (int pos : ctx.element_positions()) {
      if (!is_modal(ctx.node_at(pos)->op)) continue;
      for (int a = 1; a <= 1; ++a) {
        if (rng() % 3 == 0) {
          y.entries.push_back({ctx.pack_key(a, pos), static_cast<int>(rng() % 3)});
        }
      }
    }
    y.sort_entries();
    Formula t = profile_transform(ann, ctx, psi, y, 1, m);
    auto variants = pt_variants(psi.formula, m, size_t(1) << 20);
    CHECK(contains_formula(variants, t));
    // and the variant lies in the closure universe
    auto universe = cl_p({ann.formula}, m, size_t(1) << 20);
    CHECK(contains_formula(universe, t));
  }
}

TEST_CASE("shrink") {
  CHECK(formula_equal(shrink(parse_formula("<>_P3"), 2), parse_formula("<>_P2")));
  CHECK(formula_equal(shrink(parse_formula("_P1 | q"), 2), parse_formula("_P1 | q")));
  CHECK_THROWS_AS(shrink(parse_formula("_P2"), 2), Error);
}

TEST_CASE("universe matches cl_p and decodes variants") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 40; ++i) {
    Formula f = oracles::random_consistent_formula(rng, 2, 2, 4);
    int k = 1 + static_cast<int>(rng() % 2);
    Markers m = Markers::standard(k);
    AnnotatedFormula ann = annotate(f, var_sequence_for(f, {"X", "Y"}));
    Universe u({f}, m, ann);
    auto ref = cl_p({f}, m);
    REQUIRE(u.size() == static_cast<int>(ref.size()));
    for (int e = 0; e < u.size(); ++e) {
      CHECK(formula_equal(u.element(e), ref[static_cast<size_t>(e)]));
      // decode/rebuild consistency
      const auto& d = u.decode(e);
      CHECK(u.variant_index(d.base, d.vec) == e);
    }
  }
}

TEST_CASE("universe transform agrees with the formula-route transform") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 60; ++i) {
    AnnotatedFormula ann = oracles::random_annotated(rng, 2, 2, 4);
    int k = 1 + static_cast<int>(rng() % 2);
    Markers m = Markers::standard(k);
    Universe u({ann.formula}, m, ann);
    ClosureContext ctx(ann.formula);

    // profile over quotient keys, lifted to position keys for the formula route
    Profile yq, ypos;
    for (int pos : ctx.element_positions()) {
      if (!is_modal(ctx.node_at(pos)->op)) continue;
      int ge = u.gindex_of(ctx.closed_at(pos));
      REQUIRE(ge >= 0);
      for (int a = 1; a <= 2 && a <= k; ++a) {
        if (rng() % 3 != 0) continue;
        int p = static_cast<int>(rng() % 3);
        if (!yq.lookup(Universe::pack_key(a, ge))) {
          yq.entries.push_back({Universe::pack_key(a, ge), p});
        }
      }
    }
    yq.sort_entries();
    for (int pos : ctx.element_positions()) {
      if (!is_modal(ctx.node_at(pos)->op)) continue;
      int ge = u.gindex_of(ctx.closed_at(pos));
      for (int a = 1; a <= k; ++a) {
        if (auto p = yq.lookup(Universe::pack_key(a, ge))) {
          ypos.entries.push_back({ctx.pack_key(a, pos), *p});
        }
      }
    }
    ypos.sort_entries();

    int anchors = std::min(2, k);
    auto closure = ctx.cl();
    for (size_t j = 0; j < closure.size(); ++j) {
      Formula viaFormula = profile_transform(ann, ctx, closure[j], ypos, anchors, m);
      int elem = u.index_of(closure[j].formula);
      REQUIRE(elem >= 0);
      int out = u.transform_element(elem, yq, anchors);
      CHECK(formula_equal(u.element(out), viaFormula));
    }
  }
}
