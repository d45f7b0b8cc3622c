#include "mucalc/universe.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>

#include "mucalc/error.hpp"

namespace mucalc {

namespace {

struct PendingVariant {
  Formula f;
  int base;
  std::vector<MarkerSet> vec;
};

} // namespace

size_t Universe::vec_hash(const std::vector<MarkerSet>& vec) {
  size_t h = vec.size();
  for (MarkerSet v : vec) h = h * 1099511628211ULL + v + 1;
  return h;
}

size_t MuType::hash() const {
  size_t h = bits.size();
  for (char b : bits) h = h * 1315423911ULL + static_cast<size_t>(b) + 1;
  return h;
}

const AnnotatedFormula& Universe::annotation() const {
  if (!ann_) throw_internal("universe has no annotation");
  return *ann_;
}

int Universe::index_of(const Formula& f) const {
  auto it = index_.find(f);
  return it == index_.end() ? -1 : it->second;
}

int Universe::gindex_of(const Formula& f) const {
  auto it = gindex_.find(f);
  return it == gindex_.end() ? -1 : it->second;
}

int Universe::variant_index(int baseId, const std::vector<MarkerSet>& vec) const {
  const auto& m = variantIndex_[static_cast<size_t>(baseId)];
  auto it = m.find(vec_hash(vec));
  if (it == m.end()) return -1;
  // verify against the stored decoding to rule out hash collisions
  const Decoded& d = decoded_[static_cast<size_t>(it->second)];
  if (d.base == baseId && d.vec == vec) return it->second;
  // collision or aliased variant: fall back to rebuilding the formula
  size_t cursor = 0;
  Formula built = detail::rebuild_with_site_decorations(
      bases_[static_cast<size_t>(baseId)].closed, markers_, vec, cursor);
  return index_of(built);
}

namespace {

// Modal closure of each site within a closed tree, in the shared preorder.
void site_key_formulas(const Formula& root, const Markers& markers, std::vector<Formula>& out) {
  std::map<std::string, Formula> env;
  auto close = [&](const Formula& g) {
    Formula res = g;
    for (const auto& v : free_vars(g)) {
      auto it = env.find(v);
      if (it == env.end()) throw_internal("site walk: unbound variable " + v);
      res = substitute_var(res, v, it->second);
    }
    return res;
  };
  std::function<void(const Formula&)> rec = [&](const Formula& f) {
    if (f->op == Op::Var || is_literal(f->op)) return;
    DecSplit d = split_decoration(f, markers);
    if (d.decorated || is_modal(f->op)) {
      // the exit key is the modal node the play stands on, body decorations
      // included, the site's own marker chain excluded
      out.push_back(close(d.modal));
      rec(d.modal->lhs);
      return;
    }
    if (is_fixpoint(f->op)) {
      Formula def = close(f);
      auto saved = env.find(f->name) == env.end() ? Formula(nullptr) : env[f->name];
      env[f->name] = def;
      rec(f->lhs);
      if (saved)
        env[f->name] = saved;
      else
        env.erase(f->name);
      return;
    }
    for (int i = 0; i < child_count(f->op); ++i) rec(child_of(f, i));
  };
  rec(root);
}

} // namespace

// Sites of a closed tree: enclosing priorities, polarities and intrinsic
// decorations, in the shared preorder.
void Universe::enumerate_base_sites(Base& b) {
  std::map<std::string, Formula> env;

  auto close = [&](const Formula& g) {
    Formula out = g;
    for (const auto& v : free_vars(g)) {
      auto it = env.find(v);
      if (it == env.end()) throw_internal("site walk: unbound variable " + v);
      out = substitute_var(out, v, it->second);
    }
    return out;
  };

  const int sentinel = std::numeric_limits<int>::max();
  std::function<void(const Formula&, int)> rec = [&](const Formula& f, int minAbove) {
    if (f->op == Op::Var || is_literal(f->op)) return;
    DecSplit d = split_decoration(f, markers_);
    if (d.decorated || is_modal(f->op)) {
      Site s;
      s.prio = minAbove == sentinel ? (ann_ ? ann_->maxPriority : 0) : minAbove;
      s.diamond = d.modal->op == Op::Diamond;
      s.baseDec = d.decorated ? d.set : 0;
      s.keyGElem = -1;  // resolved after the game graph exists
      b.sites.push_back(s);
      siteKeyFormulas_.push_back(close(d.modal));
      rec(d.modal->lhs, minAbove);
      return;
    }
    if (is_fixpoint(f->op)) {
      Formula def = close(f);
      auto saved = env.find(f->name) == env.end() ? Formula(nullptr) : env[f->name];
      env[f->name] = def;
      int p = ann_ ? ann_->priority_of_var(f->name) : 0;
      rec(f->lhs, std::min(minAbove, p));
      if (saved)
        env[f->name] = saved;
      else
        env.erase(f->name);
      return;
    }
    for (int i = 0; i < child_count(f->op); ++i) rec(child_of(f, i), minAbove);
  };
  rec(b.closed, sentinel);
}

void Universe::add_element(const Formula& f, int baseId, const std::vector<MarkerSet>& vec,
                           size_t guard) {
  auto [it, fresh] = index_.try_emplace(f, static_cast<int>(elems_.size()));
  if (fresh) {
    elems_.push_back(f);
    decoded_.push_back(Decoded{baseId, vec});
    if (elems_.size() > guard) throw_size_guard("universe exceeds the size guard");
  }
  variantIndex_[static_cast<size_t>(baseId)].emplace(vec_hash(vec), it->second);
}

Universe::Universe(std::vector<Formula> L, Markers markers, std::optional<AnnotatedFormula> ann,
                   size_t guard)
    : lset_(std::move(L)), markers_(std::move(markers)), ann_(std::move(ann)) {
  // 1. bases: decoration-aware closure elements of L, deduplicated
  for (const auto& phi : lset_) {
    if (!is_closed(phi)) throw_invalid("universe requires closed formulas");
    ClosureContext ctx(phi);
    for (int p : detail::dec_aware_positions(ctx, markers_)) {
      Formula closed = ctx.closed_at(p);
      if (baseIndex_.try_emplace(closed, static_cast<int>(bases_.size())).second) {
        bases_.push_back(Base{closed, {}});
      }
    }
  }
  for (auto& b : bases_) enumerate_base_sites(b);
  variantIndex_.resize(bases_.size());

  // 2. variants, element table in discovery order first
  const MarkerSet full =
      markers_.count() >= 32 ? ~MarkerSet(0) : (MarkerSet(1) << markers_.count()) - 1;
  for (int bi = 0; bi < static_cast<int>(bases_.size()); ++bi) {
    const Base& b = bases_[static_cast<size_t>(bi)];
    std::vector<MarkerSet> assignment(b.sites.size(), 0);
    std::function<void(size_t)> recv = [&](size_t i) {
      if (i == b.sites.size()) {
        size_t cursor = 0;
        Formula v = detail::rebuild_with_site_decorations(b.closed, markers_, assignment, cursor);
        add_element(v, bi, assignment, guard);
        return;
      }
      MarkerSet freeMask = full & ~b.sites[i].baseDec;
      MarkerSet sub = 0;
      while (true) {
        assignment[i] = b.sites[i].baseDec | sub;
        recv(i + 1);
        if (sub == freeMask) break;
        sub = (sub - freeMask) & freeMask;
      }
    };
    recv(0);
  }

  // 3. canonical order (printed form), remap all tables
  std::vector<int> order(elems_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::vector<std::string> printed(elems_.size());
  for (size_t i = 0; i < elems_.size(); ++i) printed[i] = print_formula(elems_[i]);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return printed[static_cast<size_t>(a)] < printed[static_cast<size_t>(b)];
  });
  std::vector<int> newPos(elems_.size());
  for (size_t i = 0; i < order.size(); ++i) newPos[static_cast<size_t>(order[i])] = static_cast<int>(i);
  std::vector<Formula> elemsSorted(elems_.size());
  std::vector<Decoded> decodedSorted(elems_.size());
  for (size_t i = 0; i < elems_.size(); ++i) {
    elemsSorted[static_cast<size_t>(newPos[i])] = elems_[i];
    decodedSorted[static_cast<size_t>(newPos[i])] = std::move(decoded_[i]);
  }
  elems_ = std::move(elemsSorted);
  decoded_ = std::move(decodedSorted);
  for (auto& [f, idx] : index_) idx = newPos[static_cast<size_t>(idx)];
  for (auto& m : variantIndex_) {
    for (auto& [h, idx] : m) idx = newPos[static_cast<size_t>(idx)];
  }

  build_game_graph();

  // 4. resolve site keys now that every modal closure has a game element
  size_t cursor = 0;
  for (auto& b : bases_) {
    for (auto& s : b.sites) {
      const Formula& key = siteKeyFormulas_[cursor++];
      s.keyGElem = gindex_of(key);
      if (s.keyGElem < 0) throw_internal("site key formula missing from the game graph");
    }
  }
  siteKeyFormulas_.clear();

  // 5. per-element site keys: a variant's profile keys carry its decorations
  elemSiteKeys_.resize(elems_.size());
  for (size_t i = 0; i < elems_.size(); ++i) {
    std::vector<Formula> keys;
    site_key_formulas(elems_[i], markers_, keys);
    const Decoded& d = decoded_[i];
    if (keys.size() != bases_[static_cast<size_t>(d.base)].sites.size()) {
      throw_internal("variant site walk differs from its base");
    }
    for (const auto& key : keys) {
      int ge = gindex_of(key);
      if (ge < 0) throw_internal("element site key missing from the game graph");
      elemSiteKeys_[i].push_back(ge);
      modalKeys_.push_back(ge);
    }
  }
  std::sort(modalKeys_.begin(), modalKeys_.end());
  modalKeys_.erase(std::unique(modalKeys_.begin(), modalKeys_.end()), modalKeys_.end());
}

void Universe::build_game_graph() {
  elemToGelem_.assign(elems_.size(), -1);
  std::function<int(const Formula&)> visit = [&](const Formula& f) -> int {
    auto it = gindex_.find(f);
    if (it != gindex_.end()) return it->second;
    int id = static_cast<int>(gelems_.size());
    gindex_.emplace(f, id);
    gelems_.push_back(GameElem{});
    {
      GameElem g;
      g.f = f;
      g.op = f->op;
      g.priority = ann_ ? ann_->node_priority(f) : 0;
      g.typeIndex = index_of(f);
      gelems_[static_cast<size_t>(id)] = g;
    }
    int c0 = -1, c1 = -1;
    switch (f->op) {
      case Op::And:
      case Op::Or:
        c0 = visit(f->lhs);
        c1 = visit(f->rhs);
        break;
      case Op::Diamond:
      case Op::Box:
        c0 = visit(f->lhs);
        break;
      case Op::Mu:
      case Op::Nu:
        c0 = visit(substitute_var(f->lhs, f->name, f));
        break;
      default: break;
    }
    gelems_[static_cast<size_t>(id)].child0 = c0;
    gelems_[static_cast<size_t>(id)].child1 = c1;
    return id;
  };
  for (size_t i = 0; i < elems_.size(); ++i) {
    elemToGelem_[i] = visit(elems_[i]);
  }
}

int Universe::subst_element(int elemIdx, const std::vector<int>& remap) const {
  const Decoded& d = decode(elemIdx);
  const auto& sites = base_sites(d.base);
  std::vector<MarkerSet> vec(d.vec.size());
  bool fastOk = true;
  for (size_t s = 0; s < d.vec.size(); ++s) {
    MarkerSet out = 0;
    for (int j = 1; j <= markers_.count(); ++j) {
      if (d.vec[s] & (MarkerSet(1) << (j - 1))) {
        int img = remap[static_cast<size_t>(j)];
        if (img > 0) out |= MarkerSet(1) << (img - 1);
      }
    }
    if ((out & sites[s].baseDec) != sites[s].baseDec) fastOk = false;
    vec[s] = out;
  }
  if (fastOk) {
    int idx = variant_index(d.base, vec);
    if (idx >= 0) return idx;
  }
  // slow path: substitute on the formula and normalize
  Formula f = element(elemIdx);
  std::function<Formula(const Formula&)> recf = [&](const Formula& g) -> Formula {
    switch (g->op) {
      case Op::Prop:
      case Op::NegProp: {
        int j = markers_.index_of(g->name);
        if (j == 0) return g;
        int img = remap[static_cast<size_t>(j)];
        if (img == 0) return g->op == Op::Prop ? f_bottom() : f_top();
        return g->op == Op::Prop ? f_prop(markers_.name(img)) : f_negprop(markers_.name(img));
      }
      case Op::And: return f_and(recf(g->lhs), recf(g->rhs));
      case Op::Or: return f_or(recf(g->lhs), recf(g->rhs));
      case Op::Diamond: return f_diamond(recf(g->lhs));
      case Op::Box: return f_box(recf(g->lhs));
      case Op::Mu: return f_mu(g->name, recf(g->lhs));
      case Op::Nu: return f_nu(g->name, recf(g->lhs));
      default: return g;
    }
  };
  int idx = index_of(canon(recf(f)));
  if (idx < 0) {
    throw_invalid("marker substitution leaves the closure universe: " + print_formula(f));
  }
  return idx;
}

int Universe::transform_element(int elemIdx, const Profile& y, int anchorCount) const {
  return transform_element_via(elemIdx, elemIdx, y, anchorCount);
}

int Universe::transform_element_via(int imageElem, int keySourceElem, const Profile& y,
                                    int anchorCount, bool skipRootSite) const {
  const Decoded& d = decode(imageElem);
  const auto& sites = base_sites(decode(keySourceElem).base);
  const auto& keys = element_site_keys(keySourceElem);
  if (sites.size() != base_sites(d.base).size()) {
    throw_internal("transform: site tables of image and key source differ");
  }
  size_t firstSite = skipRootSite && is_modal(element(keySourceElem)->op) ? 1 : 0;
  std::vector<MarkerSet> vec = d.vec;
  for (size_t s = firstSite; s < sites.size(); ++s) {
    const Site& st = sites[s];
    int key = keys[s];
    MarkerSet n = 0;
    if (st.diamond) {
      for (int i = 1; i <= anchorCount; ++i) {
        auto p = y.lookup(pack_key(i, key));
        if (p && reward_leq(st.prio, *p)) n |= MarkerSet(1) << (i - 1);
      }
    } else {
      // dual of the diamond rule: forbid the visit unless the profile admits
      // an exit at least as bad as the priority the path will show
      for (int i = 1; i <= markers_.count(); ++i) {
        auto p = i <= anchorCount ? y.lookup(pack_key(i, key)) : std::nullopt;
        if (!p || !reward_leq(st.prio, *p)) n |= MarkerSet(1) << (i - 1);
      }
    }
    vec[s] |= n;
  }
  int idx = variant_index(d.base, vec);
  if (idx < 0) throw_internal("transform left the universe");
  return idx;
}

Formula Universe::canon(const Formula& f) const {
  std::function<Formula(const Formula&)> recf = [&](const Formula& g) -> Formula {
    if (is_literal(g->op) || g->op == Op::Var) return g;
    Formula out;
    switch (g->op) {
      case Op::And: {
        Formula a = recf(g->lhs), b = recf(g->rhs);
        if (a->op == Op::Top) return b;
        if (b->op == Op::Top) return a;
        out = f_and(a, b);
        break;
      }
      case Op::Or: {
        Formula a = recf(g->lhs), b = recf(g->rhs);
        if (a->op == Op::Bottom) return b;
        if (b->op == Op::Bottom) return a;
        out = f_or(a, b);
        break;
      }
      case Op::Diamond: {
        Formula a = recf(g->lhs);
        if (a->op == Op::Bottom) return f_bottom();
        out = f_diamond(a);
        break;
      }
      case Op::Box: {
        Formula a = recf(g->lhs);
        if (a->op == Op::Top) return f_top();
        out = f_box(a);
        break;
      }
      case Op::Mu: return f_mu(g->name, recf(g->lhs));
      case Op::Nu: return f_nu(g->name, recf(g->lhs));
      default: return g;
    }
    // re-canonicalize marker chains (substitution can unsort them)
    if (out->op == Op::Or || out->op == Op::And) {
      bool dia = out->op == Op::Or;
      MarkerSet set = 0;
      Formula cur = out;
      while (cur->op == out->op) {
        const Formula& leaf = cur->lhs;
        if ((dia && leaf->op != Op::Prop) || (!dia && leaf->op != Op::NegProp)) return out;
        int j = markers_.index_of(leaf->name);
        if (j == 0) return out;
        set |= MarkerSet(1) << (j - 1);
        cur = cur->rhs;
      }
      if ((dia && cur->op == Op::Diamond) || (!dia && cur->op == Op::Box)) {
        return make_decoration(set, cur, markers_);
      }
    }
    return out;
  };
  return recf(f);
}

} // namespace mucalc
