#include "teamlog/rewrite.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <map>
#include <set>

namespace teamlog {

namespace {

Formula map_atoms(const Formula& f, const std::function<Formula(const Atom&)>& fn) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return fn(f.atom_ref());
    case Formula::Kind::NegAtom:
      return f;
    case Formula::Kind::Conj: {
      Formula l = map_atoms(f.left(), fn);
      return Formula::conj(std::move(l), map_atoms(f.right(), fn));
    }
    case Formula::Kind::Disj: {
      Formula l = map_atoms(f.left(), fn);
      return Formula::disj(std::move(l), map_atoms(f.right(), fn));
    }
    case Formula::Kind::Exists:
      return Formula::exists(f.quant_var(), map_atoms(f.body(), fn));
    case Formula::Kind::Forall:
      return Formula::forall(f.quant_var(), map_atoms(f.body(), fn));
  }
  return f;
}

bool contains(const std::vector<Variable>& vs, const Variable& v) {
  return std::find(vs.begin(), vs.end(), v) != vs.end();
}

// Variables of `from` not occurring in any `excluded` tuple, deduplicated,
// in first-occurrence order.
std::vector<Variable> list_minus(const std::vector<Variable>& from,
                                 const std::vector<const std::vector<Variable>*>& excluded) {
  std::vector<Variable> out;
  for (const Variable& v : from) {
    bool skip = contains(out, v);
    for (const auto* ex : excluded) skip = skip || contains(*ex, v);
    if (!skip) out.push_back(v);
  }
  return out;
}

std::vector<Variable> list_intersect_minus(const std::vector<Variable>& a,
                                           const std::vector<Variable>& b,
                                           const std::vector<Variable>& minus) {
  std::vector<Variable> out;
  for (const Variable& v : a) {
    if (!contains(out, v) && contains(b, v) && !contains(minus, v)) out.push_back(v);
  }
  return out;
}

}  // namespace

Formula dep_to_ind(const Formula& f) {
  return map_atoms(f, [](const Atom& a) -> Formula {
    if (auto* d = std::get_if<DepAtom>(&a))
      return Formula::atom(IndAtom{d->determinants, {d->determined}, {d->determined}});
    return Formula::atom(a);
  });
}

Formula split_independence_atom(const IndAtom& atom) {
  std::vector<Variable> b0 = list_minus(atom.left, {&atom.condition, &atom.right});
  std::vector<Variable> c0 = list_minus(atom.right, {&atom.condition, &atom.left});
  std::vector<Variable> shared = list_intersect_minus(atom.left, atom.right, atom.condition);
  if (shared.empty() && b0 == atom.left && c0 == atom.right) return Formula::atom(atom);
  Formula out = Formula::atom(IndAtom{atom.condition, std::move(b0), std::move(c0)});
  for (const Variable& d : shared)
    out = Formula::conj(out, Formula::atom(DepAtom{atom.condition, d}));
  return out;
}

Formula split_independence_atoms(const Formula& f) {
  return map_atoms(f, [](const Atom& a) -> Formula {
    if (auto* i = std::get_if<IndAtom>(&a)) return split_independence_atom(*i);
    return Formula::atom(a);
  });
}

Formula inc_to_pure_ind(const IncAtom& atom, FreshNames& fresh) {
  Variable v1 = fresh.fresh("v1");
  Variable v2 = fresh.fresh("v2");
  std::vector<Variable> zs;
  zs.reserve(atom.left.size());
  for (std::size_t i = 0; i < atom.left.size(); ++i)
    zs.push_back(fresh.fresh("z" + std::to_string(i + 1)));

  Formula z_neq_x = make_tuple_disequality(zs, atom.left);
  Formula z_eq_y = make_tuple_equality(zs, atom.right);
  Formula z_neq_y = make_tuple_disequality(zs, atom.right);
  Formula v_eq = Formula::atom(EqualityAtom{v1, v2});
  Formula v_neq = Formula::neg_atom(EqualityAtom{v1, v2});

  // First disjunct: rows whose z-tuple matches neither side of the inclusion.
  // (Pinning both conjuncts to x, as sometimes printed, breaks the
  // equivalence: the exhaustive oracle finds a two-row counterexample.)
  Formula d1 = Formula::conj(z_neq_x, z_neq_y);
  Formula d2 = Formula::conj(v_neq, z_neq_y);
  Formula d3 =
      Formula::conj(Formula::disj(v_eq, z_eq_y), Formula::atom(IndAtom{{}, zs, {v1, v2}}));
  Formula body = Formula::disj(Formula::disj(d1, d2), d3);
  for (auto it = zs.rbegin(); it != zs.rend(); ++it) body = Formula::forall(*it, body);
  body = Formula::forall(v2, std::move(body));
  body = Formula::forall(v1, std::move(body));
  return body;
}

Formula inc_to_pure_ind(const Formula& f) {
  FreshNames fresh = FreshNames::for_formula(f);
  return map_atoms(f, [&fresh](const Atom& a) -> Formula {
    if (auto* i = std::get_if<IncAtom>(&a)) return inc_to_pure_ind(*i, fresh);
    return Formula::atom(a);
  });
}

Formula dep_to_pure_ind(const DepAtom& atom, FreshNames& fresh) {
  std::vector<Variable> zs;
  zs.reserve(atom.determinants.size());
  for (std::size_t i = 0; i < atom.determinants.size(); ++i)
    zs.push_back(fresh.fresh("z" + std::to_string(i + 1)));
  Variable w = fresh.fresh("w");

  Formula w_eq_y = Formula::atom(EqualityAtom{w, atom.determined});
  Formula guard = zs.empty()
                      ? w_eq_y
                      : Formula::disj(make_tuple_disequality(zs, atom.determinants), w_eq_y);
  std::vector<Variable> lhs = atom.determinants;
  lhs.push_back(atom.determined);
  std::vector<Variable> rhs = zs;
  rhs.push_back(w);
  Formula body = Formula::conj(std::move(guard), Formula::atom(IndAtom{{}, lhs, rhs}));
  body = Formula::exists(w, std::move(body));
  for (auto it = zs.rbegin(); it != zs.rend(); ++it) body = Formula::forall(*it, body);
  return body;
}

Formula dep_to_pure_ind(const Formula& f) {
  FreshNames fresh = FreshNames::for_formula(f);
  return map_atoms(f, [&fresh](const Atom& a) -> Formula {
    if (auto* d = std::get_if<DepAtom>(&a)) return dep_to_pure_ind(*d, fresh);
    return Formula::atom(a);
  });
}

// ---------------------------------------------------------------------------
// Prenex normal form

namespace {

struct Quant {
  bool universal;
  Variable var;
};

struct Prenexed {
  std::vector<Quant> prefix;
  Formula matrix;
};

Atom rename_atom(const Atom& a, const std::map<Variable, Variable>& sub) {
  auto ren = [&sub](const Variable& v) {
    auto it = sub.find(v);
    return it == sub.end() ? v : it->second;
  };
  Atom out = a;
  if (auto* r = std::get_if<RelationAtom>(&out)) {
    for (auto& v : r->args) v = ren(v);
  } else if (auto* e = std::get_if<EqualityAtom>(&out)) {
    e->lhs = ren(e->lhs);
    e->rhs = ren(e->rhs);
  } else if (auto* d = std::get_if<DepAtom>(&out)) {
    for (auto& v : d->determinants) v = ren(v);
    d->determined = ren(d->determined);
  } else if (auto* i = std::get_if<IndAtom>(&out)) {
    for (auto& v : i->condition) v = ren(v);
    for (auto& v : i->left) v = ren(v);
    for (auto& v : i->right) v = ren(v);
  } else if (auto* c = std::get_if<IncAtom>(&out)) {
    for (auto& v : c->left) v = ren(v);
    for (auto& v : c->right) v = ren(v);
  }
  return out;
}

// Renames bound variables so no name is quantified twice or collides with a
// free variable; only colliding binders are touched.
Formula rename_apart(const Formula& f, std::map<Variable, Variable>& sub, std::set<Variable>& used,
                     FreshNames& fresh) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return Formula::atom(rename_atom(f.atom_ref(), sub));
    case Formula::Kind::NegAtom:
      return Formula::neg_atom(rename_atom(f.atom_ref(), sub));
    case Formula::Kind::Conj: {
      Formula l = rename_apart(f.left(), sub, used, fresh);
      return Formula::conj(std::move(l), rename_apart(f.right(), sub, used, fresh));
    }
    case Formula::Kind::Disj: {
      Formula l = rename_apart(f.left(), sub, used, fresh);
      return Formula::disj(std::move(l), rename_apart(f.right(), sub, used, fresh));
    }
    case Formula::Kind::Exists:
    case Formula::Kind::Forall: {
      Variable v = f.quant_var();
      Variable target = v;
      if (used.count(v)) target = fresh.fresh(v.name);
      used.insert(target);
      auto it = sub.find(v);
      std::optional<Variable> saved;
      if (it != sub.end()) saved = it->second;
      sub[v] = target;
      Formula body = rename_apart(f.body(), sub, used, fresh);
      if (saved)
        sub[v] = *saved;
      else
        sub.erase(v);
      if (f.kind() == Formula::Kind::Exists) return Formula::exists(target, std::move(body));
      return Formula::forall(target, std::move(body));
    }
  }
  throw std::logic_error("unreachable");
}

Prenexed prenex_rec(const Formula& f, FreshNames& fresh);

Prenexed prenex_disj(Prenexed l, Prenexed r, FreshNames& fresh) {
  std::vector<Quant> prefix;
  std::size_t li = 0, ri = 0;
  for (;;) {
    if (li < l.prefix.size() && !l.prefix[li].universal) {
      prefix.push_back(l.prefix[li++]);
      continue;
    }
    if (ri < r.prefix.size() && !r.prefix[ri].universal) {
      prefix.push_back(r.prefix[ri++]);
      continue;
    }
    // Only universal quantifiers remain: ∀xφ ∨ ψ ≡ ∃a∃b∀x((φ∧a=b) ∨ (ψ∧a≠b)),
    // tagging whichever side carries the universal.
    if (li < l.prefix.size() || ri < r.prefix.size()) {
      bool from_left = li < l.prefix.size();
      Variable a = fresh.fresh("a");
      Variable b = fresh.fresh("b");
      prefix.push_back({false, a});
      prefix.push_back({false, b});
      prefix.push_back({true, from_left ? l.prefix[li].var : r.prefix[ri].var});
      if (from_left)
        ++li;
      else
        ++ri;
      l.matrix = Formula::conj(l.matrix, Formula::atom(EqualityAtom{a, b}));
      r.matrix = Formula::conj(r.matrix, Formula::neg_atom(EqualityAtom{a, b}));
      continue;
    }
    break;
  }
  return {std::move(prefix), Formula::disj(l.matrix, r.matrix)};
}

Prenexed prenex_rec(const Formula& f, FreshNames& fresh) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      return {{}, f};
    case Formula::Kind::Conj: {
      Prenexed l = prenex_rec(f.left(), fresh);
      Prenexed r = prenex_rec(f.right(), fresh);
      std::vector<Quant> prefix = std::move(l.prefix);
      prefix.insert(prefix.end(), r.prefix.begin(), r.prefix.end());
      return {std::move(prefix), Formula::conj(l.matrix, r.matrix)};
    }
    case Formula::Kind::Disj: {
      Prenexed l = prenex_rec(f.left(), fresh);
      Prenexed r = prenex_rec(f.right(), fresh);
      return prenex_disj(std::move(l), std::move(r), fresh);
    }
    case Formula::Kind::Exists: {
      Prenexed b = prenex_rec(f.body(), fresh);
      b.prefix.insert(b.prefix.begin(), Quant{false, f.quant_var()});
      return b;
    }
    case Formula::Kind::Forall: {
      Prenexed b = prenex_rec(f.body(), fresh);
      b.prefix.insert(b.prefix.begin(), Quant{true, f.quant_var()});
      return b;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

Formula to_prenex(const Formula& f) {
  FreshNames fresh = FreshNames::for_formula(f);
  std::map<Variable, Variable> sub;
  std::set<Variable> used = free_vars(f);
  Formula renamed = rename_apart(f, sub, used, fresh);
  Prenexed p = prenex_rec(renamed, fresh);
  Formula out = p.matrix;
  for (auto it = p.prefix.rbegin(); it != p.prefix.rend(); ++it)
    out = it->universal ? Formula::forall(it->var, std::move(out))
                        : Formula::exists(it->var, std::move(out));
  return out;
}

namespace {

bool quantifier_free(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      return true;
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      return quantifier_free(f.left()) && quantifier_free(f.right());
    default:
      return false;
  }
}

}  // namespace

bool is_prenex(const Formula& f) {
  Formula cur = f;
  while (cur.kind() == Formula::Kind::Exists || cur.kind() == Formula::Kind::Forall)
    cur = cur.body();
  return quantifier_free(cur);
}

Formula counting_sentence(int n) {
  if (n < 1) throw std::invalid_argument("counting_sentence requires n >= 1");
  if (n == 1) {
    Variable t("t");
    return Formula::exists(t, Formula::atom(EqualityAtom{t, t}));
  }
  int width = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))));
  std::vector<std::vector<Variable>> tuples(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < width; ++j) {
      std::string name = "x" + std::to_string(i);
      if (width > 1) name += "_" + std::to_string(j);
      tuples[i].emplace_back(std::move(name));
    }
  }
  std::vector<Formula> parts;
  for (int i = 0; i < n; ++i) parts.push_back(Formula::atom(IncAtom{tuples[i], tuples[0]}));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) parts.push_back(make_tuple_disequality(tuples[i], tuples[j]));
  Formula body = conj_fold(parts);
  for (int i = n - 1; i >= 0; --i)
    for (int j = width - 1; j >= 0; --j) body = Formula::exists(tuples[i][j], std::move(body));
  return body;
}

// ---------------------------------------------------------------------------
// Normal forms

namespace {

void peel_prefix(Formula& f, std::vector<Variable>& universals,
                 std::vector<Variable>& existentials) {
  while (f.kind() == Formula::Kind::Forall) {
    universals.push_back(f.quant_var());
    f = f.body();
  }
  while (f.kind() == Formula::Kind::Exists) {
    existentials.push_back(f.quant_var());
    f = f.body();
  }
}

void require_distinct(const std::vector<Variable>& vs, const char* what) {
  std::set<Variable> s(vs.begin(), vs.end());
  if (s.size() != vs.size()) throw ShapeError(std::string(what) + " repeats a variable");
}

void collect_conj(const Formula& f, std::vector<Formula>& out) {
  if (f.kind() == Formula::Kind::Conj) {
    collect_conj(f.left(), out);
    collect_conj(f.right(), out);
  } else {
    out.push_back(f);
  }
}

}  // namespace

DLNormalForm DLNormalForm::from_formula(const Formula& f) {
  DLNormalForm nf;
  Formula cur = f;
  peel_prefix(cur, nf.universals, nf.existentials);
  if (cur.kind() == Formula::Kind::Forall)
    throw ShapeError("universal quantifier after the existential block");
  require_distinct(nf.universals, "universal prefix");
  require_distinct(nf.existentials, "existential prefix");
  for (const Variable& y : nf.existentials)
    if (contains(nf.universals, y)) throw ShapeError("variable quantified twice");

  std::vector<Formula> conjuncts;
  collect_conj(cur, conjuncts);
  std::map<Variable, DepSpec> by_target;
  std::vector<Formula> theta_parts;
  for (const Formula& g : conjuncts) {
    if (g.kind() == Formula::Kind::Atom) {
      if (auto* d = std::get_if<DepAtom>(&g.atom_ref())) {
        if (!contains(nf.existentials, d->determined))
          throw ShapeError("dependence atom does not target an existential variable");
        if (by_target.count(d->determined))
          throw ShapeError("two dependence atoms target '" + d->determined.name + "'");
        for (const Variable& v : d->determinants)
          if (!contains(nf.universals, v))
            throw ShapeError("dependence-atom determinant '" + v.name +
                             "' is not universally quantified");
        by_target.emplace(d->determined, DepSpec{d->determinants, d->determined});
        continue;
      }
    }
    if (!first_order(g) || !quantifier_free(g))
      throw ShapeError("matrix part is not quantifier-free first order");
    theta_parts.push_back(g);
  }
  for (const Variable& y : nf.existentials) {
    auto it = by_target.find(y);
    if (it == by_target.end())
      throw ShapeError("missing dependence atom for existential '" + y.name + "'");
    nf.dep_atoms.push_back(it->second);
  }
  if (!theta_parts.empty()) nf.matrix = conj_fold(theta_parts);
  return nf;
}

Formula DLNormalForm::to_formula() const {
  std::vector<Formula> parts;
  parts.reserve(dep_atoms.size() + 1);
  for (const auto& d : dep_atoms)
    parts.push_back(Formula::atom(DepAtom{d.determinants, d.determined}));
  if (matrix) parts.push_back(*matrix);
  if (parts.empty()) throw ShapeError("empty normal-form matrix");
  Formula body = conj_fold(parts);
  for (auto it = existentials.rbegin(); it != existentials.rend(); ++it)
    body = Formula::exists(*it, std::move(body));
  for (auto it = universals.rbegin(); it != universals.rend(); ++it)
    body = Formula::forall(*it, std::move(body));
  return body;
}

Formula strict_inclusion_translation(const DLNormalForm& nf) {
  FreshNames fresh = FreshNames::for_formula(nf.to_formula());
  std::vector<Formula> parts;
  for (const auto& d : nf.dep_atoms) {
    std::vector<Variable> w = list_minus(nf.universals, {&d.determinants});
    std::vector<Variable> qs;
    qs.reserve(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
      qs.push_back(fresh.fresh("q" + std::to_string(i + 1)));

    std::vector<Variable> lhs = qs;
    lhs.insert(lhs.end(), d.determinants.begin(), d.determinants.end());
    lhs.push_back(d.determined);
    std::vector<Variable> rhs = w;
    rhs.insert(rhs.end(), d.determinants.begin(), d.determinants.end());
    rhs.push_back(d.determined);
    Formula part = Formula::atom(IncAtom{std::move(lhs), std::move(rhs)});
    for (auto it = qs.rbegin(); it != qs.rend(); ++it) part = Formula::forall(*it, std::move(part));
    parts.push_back(std::move(part));
  }
  if (nf.matrix) parts.push_back(*nf.matrix);
  if (parts.empty()) throw ShapeError("empty normal-form matrix");
  Formula body = conj_fold(parts);
  for (auto it = nf.existentials.rbegin(); it != nf.existentials.rend(); ++it)
    body = Formula::exists(*it, std::move(body));
  for (auto it = nf.universals.rbegin(); it != nf.universals.rend(); ++it)
    body = Formula::forall(*it, std::move(body));
  return body;
}

PureIndNormalForm PureIndNormalForm::from_formula(const Formula& f) {
  PureIndNormalForm nf;
  Formula cur = f;
  peel_prefix(cur, nf.universals, nf.existentials);
  if (cur.kind() == Formula::Kind::Forall)
    throw ShapeError("universal quantifier after the existential block");
  require_distinct(nf.universals, "universal prefix");
  require_distinct(nf.existentials, "existential prefix");
  for (const Variable& y : nf.existentials)
    if (contains(nf.universals, y)) throw ShapeError("variable quantified twice");

  std::vector<Formula> conjuncts;
  collect_conj(cur, conjuncts);
  std::vector<Formula> chi_parts;
  for (const Formula& g : conjuncts) {
    if (g.kind() == Formula::Kind::Atom) {
      if (auto* i = std::get_if<IndAtom>(&g.atom_ref())) {
        if (!i->condition.empty())
          throw ShapeError("conditional independence atom in pure-independence matrix");
        nf.pure_ind_atoms.push_back(*i);
        continue;
      }
      if (std::holds_alternative<DepAtom>(g.atom_ref()) ||
          std::holds_alternative<IncAtom>(g.atom_ref()))
        throw ShapeError("matrix must mix only pure independence atoms with first-order parts");
    }
    if (!first_order(g) || !quantifier_free(g))
      throw ShapeError("matrix part is not quantifier-free first order");
    chi_parts.push_back(g);
  }
  if (!chi_parts.empty()) nf.matrix = conj_fold(chi_parts);
  return nf;
}

Formula PureIndNormalForm::to_formula() const {
  std::vector<Formula> parts;
  parts.reserve(pure_ind_atoms.size() + 1);
  for (const auto& a : pure_ind_atoms) parts.push_back(Formula::atom(a));
  if (matrix) parts.push_back(*matrix);
  if (parts.empty()) throw ShapeError("empty normal-form matrix");
  Formula body = conj_fold(parts);
  for (auto it = existentials.rbegin(); it != existentials.rend(); ++it)
    body = Formula::exists(*it, std::move(body));
  for (auto it = universals.rbegin(); it != universals.rend(); ++it)
    body = Formula::forall(*it, std::move(body));
  return body;
}

Formula collapse_to_one_forall(const PureIndNormalForm& nf) {
  if (nf.universals.empty())
    throw ShapeError("collapse requires at least one universal quantifier");
  const std::vector<Variable>& xs = nf.universals;

  std::vector<Formula> parts;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    std::vector<Variable> earlier(xs.begin(), xs.begin() + i);
    parts.push_back(Formula::conj(Formula::atom(IncAtom{{xs[0]}, {xs[i]}}),
                                  Formula::atom(IndAtom{{}, std::move(earlier), {xs[i]}})));
  }
  for (const auto& a : nf.pure_ind_atoms) parts.push_back(Formula::atom(a));
  if (nf.matrix) parts.push_back(*nf.matrix);
  if (parts.empty()) throw ShapeError("empty normal-form matrix");
  Formula body = conj_fold(parts);

  for (auto it = nf.existentials.rbegin(); it != nf.existentials.rend(); ++it)
    body = Formula::exists(*it, std::move(body));
  for (std::size_t i = xs.size(); i-- > 1;) body = Formula::exists(xs[i], std::move(body));
  return Formula::forall(xs[0], std::move(body));
}

Formula collapse_to_two_forall(const PureIndNormalForm& nf) {
  if (nf.universals.empty())
    throw ShapeError("collapse requires at least one universal quantifier");
  const std::vector<Variable>& xs = nf.universals;

  FreshNames fresh = FreshNames::for_formula(nf.to_formula());
  Variable p = fresh.fresh("p");
  Variable q = fresh.fresh("q");

  std::vector<Formula> eqs;
  eqs.reserve(xs.size());
  for (const Variable& x : xs) eqs.push_back(Formula::atom(EqualityAtom{x, p}));
  Formula impl = make_implication(Formula::atom(EqualityAtom{p, q}), conj_fold(eqs));

  std::vector<Formula> parts{std::move(impl)};
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    std::vector<Variable> earlier(xs.begin(), xs.begin() + i + 1);
    parts.push_back(Formula::atom(IndAtom{{}, std::move(earlier), {xs[i + 1]}}));
  }

  // ψ is the whole post-universal part, carried into the conjunction whole.
  std::vector<Formula> psi_parts;
  for (const auto& a : nf.pure_ind_atoms) psi_parts.push_back(Formula::atom(a));
  if (nf.matrix) psi_parts.push_back(*nf.matrix);
  if (psi_parts.empty()) throw ShapeError("empty normal-form matrix");
  Formula psi = conj_fold(psi_parts);
  for (auto it = nf.existentials.rbegin(); it != nf.existentials.rend(); ++it)
    psi = Formula::exists(*it, std::move(psi));
  parts.push_back(std::move(psi));

  Formula body = conj_fold(parts);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = Formula::exists(*it, std::move(body));
  return Formula::forall(p, Formula::forall(q, std::move(body)));
}

}  // namespace teamlog
