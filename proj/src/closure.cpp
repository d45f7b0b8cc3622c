#include "mucalc/closure.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <unordered_set>

#include "mucalc/error.hpp"

namespace mucalc {

ClosureContext::ClosureContext(Formula root) : root_(std::move(root)) {
  std::function<int(const Formula&, Path, int)> build = [&](const Formula& f, Path path,
                                                            int parent) -> int {
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{f, path, parent, {-1, -1}});
    for (int slot = 0; slot < child_count(f->op); ++slot) {
      Path childPath = path;
      childPath.push_back(static_cast<uint8_t>(slot));
      int cid = build(child_of(f, slot), std::move(childPath), id);
      nodes_[static_cast<size_t>(id)].child[slot] = cid;
    }
    return id;
  };
  build(root_, {}, -1);

  elementIndexOfPos_.assign(nodes_.size(), -1);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].f->op != Op::Var) {
      elementIndexOfPos_[i] = static_cast<int>(elementPositions_.size());
      elementPositions_.push_back(static_cast<int>(i));
    }
  }
  closedMemo_.assign(nodes_.size(), nullptr);
}

int ClosureContext::pos_of_path(const Path& p) const {
  int cur = 0;
  for (uint8_t slot : p) {
    if (slot > 1) return -1;
    cur = nodes_[static_cast<size_t>(cur)].child[slot];
    if (cur < 0) return -1;
  }
  return cur;
}

int ClosureContext::raw_child(int pos, int slot) const {
  return nodes_[static_cast<size_t>(pos)].child[slot];
}

int ClosureContext::binder_of(int varPos) const {
  const std::string& name = node_at(varPos)->name;
  int cur = parent_of(varPos);
  while (cur >= 0) {
    const Formula& f = node_at(cur);
    if (is_fixpoint(f->op) && f->name == name) return cur;
    cur = parent_of(cur);
  }
  throw_invalid("unbound variable " + name + " (closed formula required)");
}

int ClosureContext::step(int pos, int slot) const {
  int c = raw_child(pos, slot);
  if (c < 0) return -1;
  if (is_var_position(c)) return binder_of(c);
  return c;
}

Formula ClosureContext::closed_at(int pos) const {
  if (closedMemo_[static_cast<size_t>(pos)]) return closedMemo_[static_cast<size_t>(pos)];
  Formula f = node_at(pos);
  Formula out = f;
  for (const auto& v : free_vars(f)) {
    // the defining binder of every free occurrence of v is the same ancestor
    int cur = parent_of(pos);
    int binder = -1;
    while (cur >= 0) {
      const Formula& g = node_at(cur);
      if (is_fixpoint(g->op) && g->name == v) {
        binder = cur;
        break;
      }
      cur = parent_of(cur);
    }
    if (binder < 0) throw_invalid("unbound variable " + v + " (closed formula required)");
    out = substitute_var(out, v, closed_at(binder));
  }
  closedMemo_[static_cast<size_t>(pos)] = out;
  return out;
}

int ClosureContext::element_index_of_pos(int pos) const {
  return elementIndexOfPos_[static_cast<size_t>(pos)];
}

std::vector<IndexedFormula> ClosureContext::sub() const {
  std::vector<IndexedFormula> out;
  out.reserve(elementPositions_.size());
  for (int p : elementPositions_) out.push_back({node_at(p), path_at(p)});
  return out;
}

std::vector<IndexedFormula> ClosureContext::cl() const {
  std::vector<IndexedFormula> out;
  out.reserve(elementPositions_.size());
  for (int p : elementPositions_) out.push_back({closed_at(p), path_at(p)});
  return out;
}

std::vector<IndexedFormula> sub(const Formula& phi) { return ClosureContext(phi).sub(); }

std::vector<IndexedFormula> sub_plus(const Formula& phi) {
  auto all = sub(phi);
  all.erase(all.begin());
  return all;
}

IndexedFormula closure_at(const Formula& phi, const IndexedFormula& occ) {
  ClosureContext ctx(phi);
  int pos = ctx.pos_of_path(occ.position);
  if (pos < 0 || ctx.is_var_position(pos)) throw_invalid("position is not a subformula occurrence");
  if (!formula_equal(ctx.node_at(pos), occ.formula)) {
    throw_invalid("indexed formula does not match the occurrence at its position");
  }
  return {ctx.closed_at(pos), occ.position};
}

std::vector<IndexedFormula> cl(const Formula& phi) { return ClosureContext(phi).cl(); }

std::vector<Formula> cl_plain(const Formula& phi) {
  return cl_plain(std::vector<Formula>{phi});
}

std::vector<Formula> cl_plain(const std::vector<Formula>& L) {
  std::vector<Formula> out;
  std::unordered_set<Formula, FormulaHash, FormulaEq> seen;
  for (const auto& phi : L) {
    ClosureContext ctx(phi);
    for (int p : ctx.element_positions()) {
      Formula c = ctx.closed_at(p);
      if (seen.insert(c).second) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Formula& a, const Formula& b) { return formula_compare(a, b) < 0; });
  return out;
}

// --- priority tracking variants ---------------------------------------------

namespace detail {

void enumerate_site_decorations(const Formula& f, const Markers& markers,
                                std::vector<MarkerSet>& out) {
  if (f->op == Op::Var || is_literal(f->op)) return;
  DecSplit d = split_decoration(f, markers);
  if (d.decorated || is_modal(f->op)) {
    out.push_back(d.decorated ? d.set : 0);
    enumerate_site_decorations(d.modal->lhs, markers, out);
    return;
  }
  for (int i = 0; i < child_count(f->op); ++i)
    enumerate_site_decorations(child_of(f, i), markers, out);
}

Formula rebuild_with_site_decorations(const Formula& f, const Markers& markers,
                                      const std::vector<MarkerSet>& assignment, size_t& cursor) {
  if (f->op == Op::Var || is_literal(f->op)) return f;
  DecSplit d = split_decoration(f, markers);
  if (d.decorated || is_modal(f->op)) {
    MarkerSet set = assignment[cursor++];
    Formula body = rebuild_with_site_decorations(d.modal->lhs, markers, assignment, cursor);
    Formula modal = d.modal->op == Op::Diamond ? f_diamond(body) : f_box(body);
    return make_decoration(set, modal, markers);
  }
  switch (f->op) {
    case Op::And: {
      Formula a = rebuild_with_site_decorations(f->lhs, markers, assignment, cursor);
      Formula b = rebuild_with_site_decorations(f->rhs, markers, assignment, cursor);
      return f_and(a, b);
    }
    case Op::Or: {
      Formula a = rebuild_with_site_decorations(f->lhs, markers, assignment, cursor);
      Formula b = rebuild_with_site_decorations(f->rhs, markers, assignment, cursor);
      return f_or(a, b);
    }
    case Op::Mu:
    case Op::Nu: {
      Formula body = rebuild_with_site_decorations(f->lhs, markers, assignment, cursor);
      return f->op == Op::Mu ? f_mu(f->name, body) : f_nu(f->name, body);
    }
    default: throw_internal("rebuild_with_site_decorations: unexpected op");
  }
}

} // namespace detail

std::vector<Formula> pt_variants(const Formula& phi, const Markers& markers, size_t guard) {
  std::vector<MarkerSet> sites;
  detail::enumerate_site_decorations(phi, markers, sites);

  const MarkerSet full = markers.count() >= 32 ? ~MarkerSet(0)
                                               : (MarkerSet(1) << markers.count()) - 1;
  // count = product over sites of supersets of the intrinsic decoration
  size_t count = 1;
  for (MarkerSet s : sites) {
    size_t opts = size_t(1) << __builtin_popcount(full & ~s);
    if (count > guard / opts + 1) throw_size_guard("pt_variants: too many variants");
    count *= opts;
  }
  if (count > guard) throw_size_guard("pt_variants: too many variants");

  std::vector<Formula> out;
  std::unordered_set<Formula, FormulaHash, FormulaEq> seen;
  std::vector<MarkerSet> assignment(sites.size(), 0);
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == sites.size()) {
      size_t cursor = 0;
      Formula v = detail::rebuild_with_site_decorations(phi, markers, assignment, cursor);
      if (seen.insert(v).second) out.push_back(v);
      return;
    }
    MarkerSet freeMask = full & ~sites[i];
    MarkerSet sub = 0;
    while (true) {  // all submasks of freeMask, including 0
      assignment[i] = sites[i] | sub;
      rec(i + 1);
      if (sub == freeMask) break;
      sub = (sub - freeMask) & freeMask;
    }
  };
  rec(0);
  return out;
}

// --- dec-aware closure for the CL_P universe --------------------------------

namespace detail {

namespace {

void dec_aware_positions_rec(const ClosureContext& ctx, int pos, const Markers& markers,
                             std::vector<int>& out) {
  const Formula& f = ctx.node_at(pos);
  if (f->op == Op::Var) return;
  DecSplit d = split_decoration(f, markers);
  if (d.decorated) {
    out.push_back(pos);
    int pm = pos;
    while (!is_modal(ctx.node_at(pm)->op)) pm = ctx.raw_child(pm, 1);
    out.push_back(pm);
    dec_aware_positions_rec(ctx, ctx.raw_child(pm, 0), markers, out);
    return;
  }
  out.push_back(pos);
  for (int slot = 0; slot < child_count(f->op); ++slot) {
    dec_aware_positions_rec(ctx, ctx.raw_child(pos, slot), markers, out);
  }
}

} // namespace

std::vector<int> dec_aware_positions(const ClosureContext& ctx, const Markers& m) {
  std::vector<int> out;
  dec_aware_positions_rec(ctx, 0, m, out);
  return out;
}

} // namespace detail

std::vector<Formula> cl_p(const std::vector<Formula>& L, const Markers& markers, size_t guard) {
  std::vector<Formula> out;
  std::unordered_set<Formula, FormulaHash, FormulaEq> seen;
  for (const auto& phi : L) {
    if (!is_closed(phi)) throw_invalid("cl_p requires closed formulas");
    ClosureContext ctx(phi);
    for (int p : detail::dec_aware_positions(ctx, markers)) {
      Formula elem = ctx.closed_at(p);
      for (const auto& v : pt_variants(elem, markers, guard)) {
        if (seen.insert(v).second) {
          out.push_back(v);
          if (out.size() > guard) throw_size_guard("cl_p: universe exceeds size guard");
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Formula& a, const Formula& b) {
    return print_formula(a) < print_formula(b);
  });
  return out;
}

// --- shrink -----------------------------------------------------------------

int standard_marker_index(const std::string& name) {
  if (name.size() < 3 || name[0] != '_' || name[1] != 'P') return 0;
  int k = 0;
  for (size_t i = 2; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return 0;
    k = k * 10 + (name[i] - '0');
  }
  return k;
}

Formula shrink(const Formula& psi, int i) {
  switch (psi->op) {
    case Op::Prop:
    case Op::NegProp: {
      int j = standard_marker_index(psi->name);
      if (j == 0 || j < i) return psi;
      if (j == i) throw_invalid("shrink: marker _P" + std::to_string(i) + " occurs in the formula");
      std::string renamed = "_P" + std::to_string(j - 1);
      return psi->op == Op::Prop ? f_prop(renamed) : f_negprop(renamed);
    }
    case Op::And: return f_and(shrink(psi->lhs, i), shrink(psi->rhs, i));
    case Op::Or: return f_or(shrink(psi->lhs, i), shrink(psi->rhs, i));
    case Op::Diamond: return f_diamond(shrink(psi->lhs, i));
    case Op::Box: return f_box(shrink(psi->lhs, i));
    case Op::Mu: return f_mu(psi->name, shrink(psi->lhs, i));
    case Op::Nu: return f_nu(psi->name, shrink(psi->lhs, i));
    default: return psi;
  }
}

// --- prio -------------------------------------------------------------------

int prio_at(const AnnotatedFormula& phi, const Formula& psiClosed, const Path& chiPos) {
  int best = std::numeric_limits<int>::max();
  Formula cur = psiClosed;
  for (uint8_t slot : chiPos) {
    if (is_fixpoint(cur->op)) best = std::min(best, phi.priority_of_var(cur->name));
    if (slot >= child_count(cur->op)) throw_invalid("prio: position leaves the formula");
    cur = child_of(cur, slot);
  }
  return best == std::numeric_limits<int>::max() ? phi.maxPriority : best;
}

int prio(const AnnotatedFormula& phi, const IndexedFormula& psi, const IndexedFormula& chi) {
  Formula target = subformula_at(psi.formula, chi.position);
  if (!formula_equal(target, chi.formula)) {
    throw_invalid("prio: chi does not match the occurrence at its position");
  }
  return prio_at(phi, psi.formula, chi.position);
}

// --- profile transform --------------------------------------------------------

namespace {

struct TransformWalk {
  const AnnotatedFormula& ann;
  const ClosureContext& cphi;
  const Profile& y;
  int anchorCount;
  const Markers& markers;

  MarkerSet diamond_set(int keyPos, int sitePrio) const {
    MarkerSet n = 0;
    for (int i = 1; i <= anchorCount; ++i) {
      auto p = y.lookup(cphi.pack_key(i, keyPos));
      if (p && reward_leq(sitePrio, *p)) n |= MarkerSet(1) << (i - 1);
    }
    return n;
  }

  MarkerSet box_set(int keyPos, int sitePrio) const {
    // dual of the diamond rule: add the negated marker unless the profile
    // admits an exit here at least as bad as the visit's minimum priority
    MarkerSet n = 0;
    for (int i = 1; i <= markers.count(); ++i) {
      auto p = i <= anchorCount ? y.lookup(cphi.pack_key(i, keyPos)) : std::nullopt;
      if (!p || !reward_leq(sitePrio, *p)) n |= MarkerSet(1) << (i - 1);
    }
    return n;
  }

  // r: node of psi's closed tree; pos: the matching position of phi (tracked
  // through the substitutions that built the closed tree); minAbove: minimum
  // annotated priority of the fixpoints passed so far (INT_MAX if none).
  Formula rec(const Formula& r, int pos, int minAbove) const {
    if (r->op == Op::Var || is_literal(r->op)) return r;
    DecSplit d = split_decoration(r, markers);
    if (d.decorated || is_modal(r->op)) {
      int pm = pos;
      Formula rm = r;
      while (!is_modal(rm->op)) {
        rm = rm->rhs;
        pm = cphi.raw_child(pm, 1);
      }
      int sitePrio = minAbove == std::numeric_limits<int>::max() ? ann.maxPriority : minAbove;
      MarkerSet n = rm->op == Op::Diamond ? diamond_set(pm, sitePrio) : box_set(pm, sitePrio);
      Formula body = rec_child(rm->lhs, pm, 0, minAbove);
      Formula modal = rm->op == Op::Diamond ? f_diamond(body) : f_box(body);
      return make_decoration(d.set | n, modal, markers);
    }
    switch (r->op) {
      case Op::And: {
        Formula a = rec_child(r->lhs, pos, 0, minAbove);
        Formula b = rec_child(r->rhs, pos, 1, minAbove);
        return f_and(a, b);
      }
      case Op::Or: {
        Formula a = rec_child(r->lhs, pos, 0, minAbove);
        Formula b = rec_child(r->rhs, pos, 1, minAbove);
        return f_or(a, b);
      }
      case Op::Mu:
      case Op::Nu: {
        int m = std::min(minAbove, ann.priority_of_var(r->name));
        Formula body = rec_child(r->lhs, pos, 0, m);
        return r->op == Op::Mu ? f_mu(r->name, body) : f_nu(r->name, body);
      }
      default: throw_internal("profile_transform: unexpected op");
    }
  }

  Formula rec_child(const Formula& childReal, int pos, int slot, int minAbove) const {
    int rawPos = cphi.raw_child(pos, slot);
    if (cphi.is_var_position(rawPos) && childReal->op != Op::Var) {
      // the closed tree substituted the defining fixpoint here
      return rec(childReal, cphi.binder_of(rawPos), minAbove);
    }
    return rec(childReal, rawPos, minAbove);
  }
};

} // namespace

Formula profile_transform(const AnnotatedFormula& phi, const ClosureContext& cphi,
                          const IndexedFormula& psi, const Profile& y, int anchorCount,
                          const Markers& markers) {
  int pos = cphi.pos_of_path(psi.position);
  if (pos < 0 || cphi.is_var_position(pos)) {
    throw_invalid("profile_transform: psi's position is not a subformula occurrence");
  }
  if (!formula_equal(cphi.closed_at(pos), psi.formula)) {
    throw_invalid("profile_transform: psi is not the closure element at its position");
  }
  TransformWalk w{phi, cphi, y, anchorCount, markers};
  return w.rec(psi.formula, pos, std::numeric_limits<int>::max());
}

} // namespace mucalc
