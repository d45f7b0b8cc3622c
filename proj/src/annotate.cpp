#include "mucalc/annotate.hpp"

#include <algorithm>
#include <functional>

#include "mucalc/error.hpp"

namespace mucalc {

int VarSequence::index_of(const std::string& v) const {
  for (size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] == v) return static_cast<int>(i) + 1;
  }
  return 0;
}

VarSequence VarSequence::make(std::initializer_list<std::pair<const char*, Polarity>> items) {
  VarSequence zs;
  for (const auto& [name, pol] : items) {
    zs.vars.emplace_back(name);
    zs.polarity.push_back(pol);
  }
  return zs;
}

std::vector<std::string> binding_order(const Formula& f) {
  std::vector<std::string> order;
  std::function<void(const Formula&)> rec = [&](const Formula& g) {
    if (is_fixpoint(g->op) && std::find(order.begin(), order.end(), g->name) == order.end()) {
      order.push_back(g->name);
    }
    for (int i = 0; i < child_count(g->op); ++i) rec(child_of(g, i));
  };
  rec(f);
  return order;
}

VarSequence var_sequence_for(const Formula& f, const std::vector<std::string>& order) {
  VarSequence zs;
  for (const auto& v : order) {
    Polarity pol = Polarity::MuOnly;
    bool found = false;
    std::function<void(const Formula&)> rec = [&](const Formula& g) {
      if (found) return;
      if (is_fixpoint(g->op) && g->name == v) {
        pol = g->op == Op::Mu ? Polarity::MuOnly : Polarity::NuOnly;
        found = true;
        return;
      }
      for (int i = 0; i < child_count(g->op); ++i) rec(child_of(g, i));
    };
    rec(f);
    zs.vars.push_back(v);
    zs.polarity.push_back(pol);
  }
  return zs;
}

bool check_consistent(const Formula& phi, const VarSequence& zs) {
  bool ok = true;
  std::function<void(const Formula&)> rec = [&](const Formula& g) {
    if (!ok) return;
    if (is_fixpoint(g->op)) {
      int j = zs.index_of(g->name);
      if (j == 0) {
        ok = false;
        return;
      }
      Polarity want = g->op == Op::Mu ? Polarity::MuOnly : Polarity::NuOnly;
      if (zs.polarity[static_cast<size_t>(j - 1)] != want) {
        ok = false;
        return;
      }
      for (const auto& v : free_vars(g)) {
        int i = zs.index_of(v);
        if (i == 0 || i >= j) {
          ok = false;
          return;
        }
      }
    }
    for (int i = 0; i < child_count(g->op); ++i) rec(child_of(g, i));
  };
  rec(phi);
  return ok;
}

AnnotatedFormula annotate(const Formula& phi, const VarSequence& zs) {
  if (!check_consistent(phi, zs)) {
    throw_invalid("formula is not consistent with the given variable sequence");
  }
  AnnotatedFormula ann;
  ann.formula = phi;
  ann.vars = zs;
  int prev = -1;
  for (size_t i = 0; i < zs.vars.size(); ++i) {
    int p = prev + 1;
    bool wantOdd = zs.polarity[i] == Polarity::MuOnly;
    if ((p % 2 == 1) != wantOdd) ++p;
    ann.priorities.push_back(p);
    prev = p;
  }
  ann.maxPriority = ann.priorities.empty() ? 0 : ann.priorities.back();
  return ann;
}

int AnnotatedFormula::priority_of_var(const std::string& v) const {
  int i = vars.index_of(v);
  if (i == 0) throw_invalid("variable " + v + " is not in the annotation sequence");
  return priorities[static_cast<size_t>(i - 1)];
}

int AnnotatedFormula::node_priority(const Formula& f) const {
  if (is_fixpoint(f->op)) return priority_of_var(f->name);
  return maxPriority;
}

std::vector<int> AnnotatedFormula::distinct_priorities() const {
  std::vector<int> out = priorities;
  out.push_back(maxPriority);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

} // namespace mucalc
