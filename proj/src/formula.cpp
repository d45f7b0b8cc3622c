#include "mucalc/formula.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "mucalc/error.hpp"

namespace mucalc {

namespace {

size_t mix(size_t h, size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

Formula make(Op op, std::string name, Formula lhs, Formula rhs) {
  auto n = std::make_shared<FormulaNode>();
  n->op = op;
  n->name = std::move(name);
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  size_t h = static_cast<size_t>(op) * 0x100000001b3ULL;
  h = mix(h, std::hash<std::string>{}(n->name));
  uint32_t sz = 1;
  if (n->lhs) {
    h = mix(h, n->lhs->hash);
    sz += n->lhs->size;
  }
  if (n->rhs) {
    h = mix(h, n->rhs->hash);
    sz += n->rhs->size;
  }
  n->hash = h;
  n->size = sz;
  return n;
}

} // namespace

Formula f_top() {
  static const Formula t = make(Op::Top, "", nullptr, nullptr);
  return t;
}
Formula f_bottom() {
  static const Formula b = make(Op::Bottom, "", nullptr, nullptr);
  return b;
}
Formula f_prop(std::string name) { return make(Op::Prop, std::move(name), nullptr, nullptr); }
Formula f_negprop(std::string name) { return make(Op::NegProp, std::move(name), nullptr, nullptr); }
Formula f_var(std::string name) { return make(Op::Var, std::move(name), nullptr, nullptr); }
Formula f_and(Formula a, Formula b) { return make(Op::And, "", std::move(a), std::move(b)); }
Formula f_or(Formula a, Formula b) { return make(Op::Or, "", std::move(a), std::move(b)); }
Formula f_diamond(Formula a) { return make(Op::Diamond, "", std::move(a), nullptr); }
Formula f_box(Formula a) { return make(Op::Box, "", std::move(a), nullptr); }
Formula f_mu(std::string var, Formula body) { return make(Op::Mu, std::move(var), std::move(body), nullptr); }
Formula f_nu(std::string var, Formula body) { return make(Op::Nu, std::move(var), std::move(body), nullptr); }

bool formula_equal(const Formula& a, const Formula& b) {
  if (a.get() == b.get()) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->op != b->op || a->size != b->size || a->name != b->name) return false;
  if (a->lhs && !formula_equal(a->lhs, b->lhs)) return false;
  if (a->rhs && !formula_equal(a->rhs, b->rhs)) return false;
  return true;
}

int formula_compare(const Formula& a, const Formula& b) {
  if (a.get() == b.get()) return 0;
  if (a->op != b->op) return a->op < b->op ? -1 : 1;
  if (int c = a->name.compare(b->name)) return c < 0 ? -1 : 1;
  int n = child_count(a->op);
  for (int i = 0; i < n; ++i) {
    if (int c = formula_compare(child_of(a, i), child_of(b, i))) return c;
  }
  return 0;
}

bool indexed_equal(const IndexedFormula& a, const IndexedFormula& b) {
  return a.position == b.position && formula_equal(a.formula, b.formula);
}

Formula subformula_at(const Formula& root, const Path& pos) {
  Formula cur = root;
  for (uint8_t step : pos) {
    if (step >= child_count(cur->op)) throw_invalid("path leaves the formula tree");
    cur = child_of(cur, step);
  }
  return cur;
}

// --- printing -------------------------------------------------------------

namespace {

// Precedence levels: 0 = or, 1 = and, 2 = atom/prefix operand. The binary
// operators parse left-associatively, so right operands print one level up.
// A fixpoint body extends maximally to the right; a fixpoint prints bare only
// in tail position (nothing of the enclosing scope follows it).
void print_rec(const Formula& f, int minPrec, bool tail, std::ostringstream& out) {
  switch (f->op) {
    case Op::Top: out << "tt"; return;
    case Op::Bottom: out << "ff"; return;
    case Op::Prop: out << f->name; return;
    case Op::NegProp: out << '!' << f->name; return;
    case Op::Var: out << f->name; return;
    case Op::Or:
      if (minPrec > 0) {
        out << '(';
        print_rec(f->lhs, 0, false, out);
        out << " | ";
        print_rec(f->rhs, 1, true, out);
        out << ')';
      } else {
        print_rec(f->lhs, 0, false, out);
        out << " | ";
        print_rec(f->rhs, 1, tail, out);
      }
      return;
    case Op::And:
      if (minPrec > 1) {
        out << '(';
        print_rec(f->lhs, 1, false, out);
        out << " & ";
        print_rec(f->rhs, 2, true, out);
        out << ')';
      } else {
        print_rec(f->lhs, 1, false, out);
        out << " & ";
        print_rec(f->rhs, 2, tail, out);
      }
      return;
    case Op::Diamond:
    case Op::Box:
      out << (f->op == Op::Diamond ? "<>" : "[]");
      print_rec(f->lhs, 2, tail, out);
      return;
    case Op::Mu:
    case Op::Nu:
      if (!tail) {
        out << '(';
        out << (f->op == Op::Mu ? "mu " : "nu ") << f->name << ". ";
        print_rec(f->lhs, 0, true, out);
        out << ')';
      } else {
        out << (f->op == Op::Mu ? "mu " : "nu ") << f->name << ". ";
        print_rec(f->lhs, 0, true, out);
      }
      return;
  }
}

} // namespace

std::string print_formula(const Formula& f) {
  std::ostringstream out;
  print_rec(f, 0, true, out);
  return out.str();
}

// --- parsing --------------------------------------------------------------

namespace {

struct Parser {
  const std::string& text;
  size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) {
    throw_parse(msg + " at position " + std::to_string(pos));
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(const std::string& tok) {
    skip_ws();
    if (text.compare(pos, tok.size(), tok) == 0) {
      pos += tok.size();
      return true;
    }
    return false;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string ident() {
    skip_ws();
    if (pos >= text.size() || !ident_start(text[pos])) fail("expected identifier");
    size_t start = pos;
    while (pos < text.size() && ident_char(text[pos])) ++pos;
    return text.substr(start, pos - start);
  }

  // keyword match with word boundary
  bool eat_kw(const std::string& kw) {
    skip_ws();
    if (text.compare(pos, kw.size(), kw) != 0) return false;
    size_t end = pos + kw.size();
    if (end < text.size() && ident_char(text[end])) return false;
    pos = end;
    return true;
  }

  Formula parse_or() {
    Formula f = parse_and();
    while (true) {
      skip_ws();
      if (pos < text.size() && text[pos] == '|') {
        ++pos;
        f = f_or(f, parse_and());
      } else {
        return f;
      }
    }
  }

  Formula parse_and() {
    Formula f = parse_prefix();
    while (true) {
      skip_ws();
      if (pos < text.size() && text[pos] == '&') {
        ++pos;
        f = f_and(f, parse_prefix());
      } else {
        return f;
      }
    }
  }

  Formula parse_prefix() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    if (eat("<>")) return f_diamond(parse_prefix());
    if (eat("[]")) return f_box(parse_prefix());
    if (eat_kw("mu")) {
      std::string v = ident();
      skip_ws();
      if (!eat(".")) fail("expected '.' after fixpoint variable");
      return f_mu(v, parse_or());
    }
    if (eat_kw("nu")) {
      std::string v = ident();
      skip_ws();
      if (!eat(".")) fail("expected '.' after fixpoint variable");
      return f_nu(v, parse_or());
    }
    if (eat_kw("tt")) return f_top();
    if (eat_kw("ff")) return f_bottom();
    if (peek_is('(')) {
      ++pos;
      Formula f = parse_or();
      skip_ws();
      if (!eat(")")) fail("expected ')'");
      return f;
    }
    if (peek_is('!')) {
      ++pos;
      return f_negprop(ident());
    }
    return f_prop(ident());
  }
};

// Atoms parse as Prop; occurrences bound by an enclosing fixpoint become Var.
Formula resolve_vars(const Formula& f, std::set<std::string>& bound) {
  switch (f->op) {
    case Op::Prop:
      if (bound.count(f->name)) return f_var(f->name);
      return f;
    case Op::NegProp:
      if (bound.count(f->name)) throw_parse("negation applied to fixpoint variable " + f->name);
      return f;
    case Op::And: {
      Formula a = resolve_vars(f->lhs, bound);
      Formula b = resolve_vars(f->rhs, bound);
      return f_and(a, b);
    }
    case Op::Or: {
      Formula a = resolve_vars(f->lhs, bound);
      Formula b = resolve_vars(f->rhs, bound);
      return f_or(a, b);
    }
    case Op::Diamond: return f_diamond(resolve_vars(f->lhs, bound));
    case Op::Box: return f_box(resolve_vars(f->lhs, bound));
    case Op::Mu:
    case Op::Nu: {
      bool fresh = bound.insert(f->name).second;
      Formula body = resolve_vars(f->lhs, bound);
      if (fresh) bound.erase(f->name);
      return f->op == Op::Mu ? f_mu(f->name, body) : f_nu(f->name, body);
    }
    default: return f;
  }
}

} // namespace

Formula parse_formula(const std::string& text) {
  Parser p(text);
  Formula raw = p.parse_or();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  std::set<std::string> bound;
  return resolve_vars(raw, bound);
}

// --- variables and substitution -------------------------------------------

namespace {

void free_vars_rec(const Formula& f, std::set<std::string>& bound, std::set<std::string>& out) {
  switch (f->op) {
    case Op::Var:
      if (!bound.count(f->name)) out.insert(f->name);
      return;
    case Op::Mu:
    case Op::Nu: {
      bool fresh = bound.insert(f->name).second;
      free_vars_rec(f->lhs, bound, out);
      if (fresh) bound.erase(f->name);
      return;
    }
    default:
      for (int i = 0; i < child_count(f->op); ++i) free_vars_rec(child_of(f, i), bound, out);
  }
}

} // namespace

std::set<std::string> free_vars(const Formula& f) {
  std::set<std::string> bound, out;
  free_vars_rec(f, bound, out);
  return out;
}

std::set<std::string> propositions_of(const Formula& f) {
  std::set<std::string> out;
  std::function<void(const Formula&)> rec = [&](const Formula& g) {
    if (g->op == Op::Prop || g->op == Op::NegProp) out.insert(g->name);
    for (int i = 0; i < child_count(g->op); ++i) rec(child_of(g, i));
  };
  rec(f);
  return out;
}

bool is_closed(const Formula& f) { return free_vars(f).empty(); }

Formula substitute_var(const Formula& f, const std::string& var, const Formula& def) {
  switch (f->op) {
    case Op::Var: return f->name == var ? def : f;
    case Op::Mu:
    case Op::Nu: {
      if (f->name == var) return f;  // rebound below; occurrences inside are not free
      Formula body = substitute_var(f->lhs, var, def);
      return f->op == Op::Mu ? f_mu(f->name, body) : f_nu(f->name, body);
    }
    case Op::And: return f_and(substitute_var(f->lhs, var, def), substitute_var(f->rhs, var, def));
    case Op::Or: return f_or(substitute_var(f->lhs, var, def), substitute_var(f->rhs, var, def));
    case Op::Diamond: return f_diamond(substitute_var(f->lhs, var, def));
    case Op::Box: return f_box(substitute_var(f->lhs, var, def));
    default: return f;
  }
}

// --- markers and decorations ----------------------------------------------

Markers Markers::standard(int k) {
  Markers m;
  m.names.reserve(static_cast<size_t>(k));
  for (int i = 1; i <= k; ++i) m.names.push_back("_P" + std::to_string(i));
  return m;
}

int Markers::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i) + 1;
  }
  return 0;
}

DecSplit split_decoration(const Formula& f, const Markers& markers) {
  DecSplit out;
  if (is_modal(f->op)) {
    out.decorated = false;
    out.set = 0;
    out.modal = f;
    return out;
  }
  // diamond chain: Or(P_i, rest); box chain: And(!P_i, rest)
  Op chainOp;
  Op leafOp;
  if (f->op == Op::Or) {
    chainOp = Op::Or;
    leafOp = Op::Prop;
  } else if (f->op == Op::And) {
    chainOp = Op::And;
    leafOp = Op::NegProp;
  } else {
    return out;
  }
  Op modalWanted = (chainOp == Op::Or) ? Op::Diamond : Op::Box;
  MarkerSet set = 0;
  int prev = 0;
  Formula cur = f;
  while (cur->op == chainOp) {
    const Formula& leaf = cur->lhs;
    if (leaf->op != leafOp) return DecSplit{};
    int idx = markers.index_of(leaf->name);
    if (idx == 0 || idx <= prev) return DecSplit{};
    set |= MarkerSet(1) << (idx - 1);
    prev = idx;
    cur = cur->rhs;
  }
  if (cur->op != modalWanted) return DecSplit{};
  out.decorated = true;
  out.set = set;
  out.modal = cur;
  return out;
}

Formula make_decoration(MarkerSet set, const Formula& modal, const Markers& markers) {
  if (!is_modal(modal->op)) throw_internal("make_decoration on non-modal node");
  Formula out = modal;
  bool dia = modal->op == Op::Diamond;
  for (int i = markers.count(); i >= 1; --i) {
    if (set & (MarkerSet(1) << (i - 1))) {
      Formula leaf = dia ? f_prop(markers.name(i)) : f_negprop(markers.name(i));
      out = dia ? f_or(leaf, out) : f_and(leaf, out);
    }
  }
  return out;
}

} // namespace mucalc
