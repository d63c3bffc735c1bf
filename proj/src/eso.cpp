#include "teamlog/eso.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>

#include "teamlog/rewrite.hpp"

namespace teamlog {

struct CFormula::Node {
  Kind kind;
  std::string name;           // Rel / Exists / Forall
  std::vector<CTerm> terms;   // Rel args; {lhs, rhs} for Eq
  std::shared_ptr<const Node> a, b;
};

CFormula CFormula::rel(std::string name, std::vector<CTerm> args) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Rel;
  n->name = std::move(name);
  n->terms = std::move(args);
  return CFormula(std::move(n));
}

CFormula CFormula::eq(CTerm l, CTerm r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Eq;
  n->terms = {std::move(l), std::move(r)};
  return CFormula(std::move(n));
}

CFormula CFormula::negate(CFormula f) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->a = std::move(f.node_);
  return CFormula(std::move(n));
}

CFormula CFormula::conj(CFormula l, CFormula r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::And;
  n->a = std::move(l.node_);
  n->b = std::move(r.node_);
  return CFormula(std::move(n));
}

CFormula CFormula::disj(CFormula l, CFormula r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->a = std::move(l.node_);
  n->b = std::move(r.node_);
  return CFormula(std::move(n));
}

CFormula CFormula::implies(CFormula l, CFormula r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Implies;
  n->a = std::move(l.node_);
  n->b = std::move(r.node_);
  return CFormula(std::move(n));
}

CFormula CFormula::exists(std::string v, CFormula body) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Exists;
  n->name = std::move(v);
  n->a = std::move(body.node_);
  return CFormula(std::move(n));
}

CFormula CFormula::forall(std::string v, CFormula body) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Forall;
  n->name = std::move(v);
  n->a = std::move(body.node_);
  return CFormula(std::move(n));
}

CFormula::Kind CFormula::kind() const { return node_->kind; }
const std::string& CFormula::rel_name() const { return node_->name; }
const std::vector<CTerm>& CFormula::terms() const { return node_->terms; }
CFormula CFormula::left() const { return CFormula(node_->a); }
CFormula CFormula::right() const { return CFormula(node_->b); }
const std::string& CFormula::quant_var() const { return node_->name; }
CFormula CFormula::body() const { return CFormula(node_->a); }

CFormula CFormula::conj_fold(const std::vector<CFormula>& fs) {
  assert(!fs.empty());
  CFormula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = conj(acc, fs[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_term(std::ostringstream& os, const CTerm& t) {
  os << t.head;
  if (!t.args.empty()) {
    os << '(';
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (i) os << ", ";
      print_term(os, t.args[i]);
    }
    os << ')';
  }
}

void print_c(std::ostringstream& os, const CFormula& f) {
  switch (f.kind()) {
    case CFormula::Kind::Rel: {
      os << f.rel_name() << '(';
      for (std::size_t i = 0; i < f.terms().size(); ++i) {
        if (i) os << ", ";
        print_term(os, f.terms()[i]);
      }
      os << ')';
      return;
    }
    case CFormula::Kind::Eq:
      print_term(os, f.terms()[0]);
      os << " = ";
      print_term(os, f.terms()[1]);
      return;
    case CFormula::Kind::Not:
      os << '~';
      if (f.body().kind() == CFormula::Kind::Rel || f.body().kind() == CFormula::Kind::Eq) {
        os << '(';
        print_c(os, f.body());
        os << ')';
      } else {
        print_c(os, f.body());
      }
      return;
    case CFormula::Kind::And:
      os << '(';
      print_c(os, f.left());
      os << " & ";
      print_c(os, f.right());
      os << ')';
      return;
    case CFormula::Kind::Or:
      os << '(';
      print_c(os, f.left());
      os << " | ";
      print_c(os, f.right());
      os << ')';
      return;
    case CFormula::Kind::Implies:
      os << '(';
      print_c(os, f.left());
      os << " -> ";
      print_c(os, f.right());
      os << ')';
      return;
    case CFormula::Kind::Exists:
      os << "E " << f.quant_var() << ". ";
      print_c(os, f.body());
      return;
    case CFormula::Kind::Forall:
      os << "A " << f.quant_var() << ". ";
      print_c(os, f.body());
      return;
  }
}

}  // namespace

std::string print_cformula(const CFormula& f) {
  std::ostringstream os;
  print_c(os, f);
  return os.str();
}

std::string print_eso(const ESOSentence& phi) {
  std::ostringstream os;
  os << "exists";
  for (const auto& r : phi.rel_vars) os << ' ' << r.name << '/' << r.arity;
  for (const auto& f : phi.fun_vars) os << ' ' << f.name << '/' << f.arity;
  os << " . " << print_cformula(phi.matrix);
  return os.str();
}

// ---------------------------------------------------------------------------
// Second-order evaluation

namespace {

struct FunInterp {
  int arity = 0;
  std::vector<int> values;  // indexed by tuple rank, lexicographic
};

struct SOInterp {
  std::map<std::string, Relation> rels;
  std::map<std::string, FunInterp> funs;
};

std::size_t pow_size(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

struct CEnv {
  std::vector<std::pair<std::string, int>> entries;
  const int* lookup(const std::string& v) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
      if (it->first == v) return &it->second;
    return nullptr;
  }
};

int eval_term(const Structure& m, const SOInterp& so, const CEnv& env, const CTerm& t) {
  if (t.args.empty()) {
    if (const int* v = env.lookup(t.head)) return *v;
    if (auto fit = so.funs.find(t.head); fit != so.funs.end() && fit->second.arity == 0)
      return fit->second.values[0];
    if (auto c = m.constant(t.head)) return *c;
    throw EvalError("unbound term '" + t.head + "'");
  }
  auto fit = so.funs.find(t.head);
  if (fit == so.funs.end()) throw EvalError("unknown function '" + t.head + "'");
  const FunInterp& fn = fit->second;
  if (static_cast<int>(t.args.size()) != fn.arity)
    throw EvalError("arity mismatch for function '" + t.head + "'");
  std::size_t rank = 0;
  for (const CTerm& a : t.args)
    rank = rank * static_cast<std::size_t>(m.size()) +
           static_cast<std::size_t>(eval_term(m, so, env, a));
  return fn.values[rank];
}

bool eval_c(const Structure& m, const SOInterp& so, CEnv& env, const CFormula& f) {
  switch (f.kind()) {
    case CFormula::Kind::Rel: {
      std::vector<int> tuple;
      tuple.reserve(f.terms().size());
      for (const CTerm& t : f.terms()) tuple.push_back(eval_term(m, so, env, t));
      if (auto rit = so.rels.find(f.rel_name()); rit != so.rels.end()) {
        if (static_cast<int>(tuple.size()) != rit->second.arity)
          throw EvalError("arity mismatch for relation variable '" + f.rel_name() + "'");
        return rit->second.contains(tuple);
      }
      const Relation* rel = m.relation(f.rel_name());
      if (!rel) throw EvalError("unknown relation '" + f.rel_name() + "'");
      if (static_cast<int>(tuple.size()) != rel->arity)
        throw EvalError("arity mismatch for relation '" + f.rel_name() + "'");
      return rel->contains(tuple);
    }
    case CFormula::Kind::Eq:
      return eval_term(m, so, env, f.terms()[0]) == eval_term(m, so, env, f.terms()[1]);
    case CFormula::Kind::Not:
      return !eval_c(m, so, env, f.body());
    case CFormula::Kind::And:
      return eval_c(m, so, env, f.left()) && eval_c(m, so, env, f.right());
    case CFormula::Kind::Or:
      return eval_c(m, so, env, f.left()) || eval_c(m, so, env, f.right());
    case CFormula::Kind::Implies:
      return !eval_c(m, so, env, f.left()) || eval_c(m, so, env, f.right());
    case CFormula::Kind::Exists:
    case CFormula::Kind::Forall: {
      bool universal = f.kind() == CFormula::Kind::Forall;
      env.entries.emplace_back(f.quant_var(), 0);
      bool result = universal;
      for (int e = 0; e < m.size(); ++e) {
        env.entries.back().second = e;
        bool sub = eval_c(m, so, env, f.body());
        if (universal && !sub) { result = false; break; }
        if (!universal && sub) { result = true; break; }
      }
      env.entries.pop_back();
      return result;
    }
  }
  return false;
}

}  // namespace

bool eval_eso(const Structure& m, const ESOSentence& phi, const EvalBudget& budget) {
  const std::size_t n = static_cast<std::size_t>(m.size());

  // Candidate spaces per quantified variable, relations before functions.
  std::vector<std::size_t> spaces;
  for (const auto& r : phi.rel_vars) {
    std::size_t tuples = pow_size(n, r.arity);
    if (tuples > 24) throw BudgetExceededError("relation variable space too large");
    spaces.push_back(std::size_t{1} << tuples);
  }
  for (const auto& f : phi.fun_vars) {
    std::size_t tuples = pow_size(n, f.arity);
    double total = 1;
    for (std::size_t i = 0; i < tuples; ++i) total *= static_cast<double>(n);
    if (total > 1e18) throw BudgetExceededError("function variable space too large");
    spaces.push_back(pow_size(n, static_cast<int>(tuples)));
  }

  std::vector<std::size_t> pick(spaces.size(), 0);
  std::size_t count = 0;
  for (;;) {
    if (++count > budget.max_branching)
      throw BudgetExceededError("second-order interpretation budget exhausted");

    SOInterp so;
    std::size_t slot = 0;
    for (const auto& r : phi.rel_vars) {
      std::size_t tuples = pow_size(n, r.arity);
      Relation rel;
      rel.arity = r.arity;
      for (std::size_t rank = 0; rank < tuples; ++rank) {
        if (!(pick[slot] >> rank & 1)) continue;
        std::vector<int> tuple(r.arity);
        std::size_t rest = rank;
        for (int i = r.arity - 1; i >= 0; --i) {
          tuple[i] = static_cast<int>(rest % n);
          rest /= n;
        }
        rel.tuples.insert(std::move(tuple));
      }
      so.rels.emplace(r.name, std::move(rel));
      ++slot;
    }
    for (const auto& f : phi.fun_vars) {
      std::size_t tuples = pow_size(n, f.arity);
      FunInterp fn;
      fn.arity = f.arity;
      fn.values.resize(tuples);
      std::size_t rest = pick[slot];
      for (std::size_t i = tuples; i-- > 0;) {
        fn.values[i] = static_cast<int>(rest % n);
        rest /= n;
      }
      so.funs.emplace(f.name, std::move(fn));
      ++slot;
    }

    CEnv env;
    if (eval_c(m, so, env, phi.matrix)) return true;

    std::size_t k = spaces.size();
    while (k > 0) {
      --k;
      if (++pick[k] < spaces[k]) break;
      pick[k] = 0;
      if (k == 0) return false;
    }
    if (spaces.empty()) return false;
  }
}

// ---------------------------------------------------------------------------
// Translation from prenex FO(⊥_c)

namespace {

struct LeafAtom {
  std::string path;  // binary location in the connective tree; "" = root
  Atom atom;
};

void index_leaves(const Formula& f, const std::string& path, std::vector<LeafAtom>& ind_leaves,
                  std::vector<LeafAtom>& dep_leaves) {
  switch (f.kind()) {
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      index_leaves(f.left(), path + "0", ind_leaves, dep_leaves);
      index_leaves(f.right(), path + "1", ind_leaves, dep_leaves);
      return;
    case Formula::Kind::Atom: {
      const Atom& a = f.atom_ref();
      if (std::holds_alternative<IncAtom>(a))
        throw ShapeError("inclusion atoms are outside the translated fragment");
      if (std::holds_alternative<IndAtom>(a)) ind_leaves.push_back({path, a});
      if (std::holds_alternative<DepAtom>(a)) dep_leaves.push_back({path, a});
      return;
    }
    case Formula::Kind::NegAtom:
      return;
    default:
      throw ShapeError("matrix is not quantifier-free");
  }
}

CTerm term_of(const Variable& v) { return CTerm::var(v.name); }

std::vector<CTerm> terms_of(const std::vector<Variable>& vs) {
  std::vector<CTerm> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(term_of(v));
  return out;
}

bool dupe_free(const std::vector<Variable>& vs) {
  std::set<Variable> s(vs.begin(), vs.end());
  return s.size() == vs.size();
}

bool share(const std::vector<Variable>& a, const std::vector<Variable>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y) return true;
  return false;
}

// The classical image φ_p of the subformula at `path`; dependency atoms are
// replaced through the S/T relation and f function variables.
CFormula classical_image(const Formula& f, const std::string& path) {
  switch (f.kind()) {
    case Formula::Kind::Conj:
      return CFormula::conj(classical_image(f.left(), path + "0"),
                            classical_image(f.right(), path + "1"));
    case Formula::Kind::Disj:
      return CFormula::disj(classical_image(f.left(), path + "0"),
                            classical_image(f.right(), path + "1"));
    case Formula::Kind::NegAtom: {
      const Atom& a = f.atom_ref();
      if (auto* r = std::get_if<RelationAtom>(&a))
        return CFormula::negate(CFormula::rel(r->name, terms_of(r->args)));
      auto* e = std::get_if<EqualityAtom>(&a);
      return CFormula::negate(CFormula::eq(term_of(e->lhs), term_of(e->rhs)));
    }
    case Formula::Kind::Atom: {
      const Atom& a = f.atom_ref();
      if (auto* r = std::get_if<RelationAtom>(&a))
        return CFormula::rel(r->name, terms_of(r->args));
      if (auto* e = std::get_if<EqualityAtom>(&a))
        return CFormula::eq(term_of(e->lhs), term_of(e->rhs));
      if (auto* d = std::get_if<DepAtom>(&a)) {
        CTerm app = CTerm::app("f" + path, terms_of(d->determinants));
        return CFormula::eq(std::move(app), term_of(d->determined));
      }
      auto* i = std::get_if<IndAtom>(&a);
      std::vector<Variable> ab = i->condition;
      ab.insert(ab.end(), i->left.begin(), i->left.end());
      std::vector<Variable> ac = i->condition;
      ac.insert(ac.end(), i->right.begin(), i->right.end());
      return CFormula::conj(CFormula::rel("S" + path, terms_of(ab)),
                            CFormula::rel("T" + path, terms_of(ac)));
    }
    default:
      throw ShapeError("matrix is not quantifier-free");
  }
}

}  // namespace

ESOSentence translate_ind_to_eso(const Formula& sentence) {
  // Peel and record the quantifier prefix.
  struct PrefixEntry {
    bool universal;
    Variable var;
  };
  std::vector<PrefixEntry> prefix;
  Formula matrix = sentence;
  while (matrix.kind() == Formula::Kind::Exists || matrix.kind() == Formula::Kind::Forall) {
    prefix.push_back({matrix.kind() == Formula::Kind::Forall, matrix.quant_var()});
    matrix = matrix.body();
  }
  if (!is_prenex(sentence)) throw ShapeError("input is not in prenex normal form");
  if (!free_vars(sentence).empty()) throw ShapeError("input is not a sentence");
  {
    std::set<Variable> seen;
    for (const auto& e : prefix)
      if (!seen.insert(e.var).second) throw ShapeError("prefix quantifies a variable twice");
  }

  std::vector<LeafAtom> ind_leaves, dep_leaves;
  index_leaves(matrix, "", ind_leaves, dep_leaves);
  for (const auto& leaf : dep_leaves) {
    const auto& d = std::get<DepAtom>(leaf.atom);
    if (!dupe_free(d.determinants) || share(d.determinants, {d.determined}))
      throw ShapeError("dependence atom not in preprocessed shape (y must not occur in z)");
  }
  for (const auto& leaf : ind_leaves) {
    const auto& i = std::get<IndAtom>(leaf.atom);
    if (i.left.empty() || i.right.empty())
      throw ShapeError("independence atom with an empty side is not translatable");
    if (!dupe_free(i.condition) || !dupe_free(i.left) || !dupe_free(i.right) ||
        share(i.condition, i.left) || share(i.condition, i.right) || share(i.left, i.right))
      throw ShapeError("independence atom not in preprocessed shape (run the split rewrite)");
  }

  ESOSentence out{{}, {}, CFormula::eq(CTerm::var("x"), CTerm::var("x"))};
  for (const auto& leaf : ind_leaves) {
    const auto& i = std::get<IndAtom>(leaf.atom);
    out.rel_vars.push_back({"S" + leaf.path, static_cast<int>(i.condition.size() + i.left.size())});
    out.rel_vars.push_back({"T" + leaf.path, static_cast<int>(i.condition.size() + i.right.size())});
  }
  for (const auto& leaf : dep_leaves) {
    const auto& d = std::get<DepAtom>(leaf.atom);
    out.fun_vars.push_back({"f" + leaf.path, static_cast<int>(d.determinants.size())});
  }

  CFormula phi = classical_image(matrix, "");
  CFormula first = phi;
  for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
    first = it->universal ? CFormula::forall(it->var.name, std::move(first))
                          : CFormula::exists(it->var.name, std::move(first));
  }

  // Ω: one conjunct per independence atom.
  std::vector<CFormula> omega_parts;
  for (const auto& leaf : ind_leaves) {
    const auto& atom = std::get<IndAtom>(leaf.atom);

    // ⋀_{p ≤ path} φ_p over the ancestors of the atom, root first.
    std::vector<CFormula> chain;
    for (std::size_t len = 0; len <= leaf.path.size(); ++len) {
      std::string p = leaf.path.substr(0, len);
      Formula sub = matrix;
      for (char c : p) sub = (c == '0') ? sub.left() : sub.right();
      chain.push_back(classical_image(sub, p));
    }

    // Primed re-quantification Q¹x′₁…Qⁿx′ₙ(φ′ ∧ χ); χ pins each existential
    // position to its unprimed value once all earlier positions agree.
    std::map<Variable, Variable> primed;
    for (const auto& e : prefix) primed.emplace(e.var, Variable(e.var.name + "'"));
    std::function<CFormula(const Formula&, const std::string&)> primed_image =
        [&](const Formula& f, const std::string& path) -> CFormula {
      switch (f.kind()) {
        case Formula::Kind::Conj:
          return CFormula::conj(primed_image(f.left(), path + "0"),
                                primed_image(f.right(), path + "1"));
        case Formula::Kind::Disj:
          return CFormula::disj(primed_image(f.left(), path + "0"),
                                primed_image(f.right(), path + "1"));
        default: {
          // Rebuild the leaf with primed variables, then take its image.
          Atom a = f.atom_ref();
          auto ren = [&primed](Variable& v) {
            auto it = primed.find(v);
            if (it != primed.end()) v = it->second;
          };
          if (auto* r = std::get_if<RelationAtom>(&a)) {
            for (auto& v : r->args) ren(v);
          } else if (auto* e = std::get_if<EqualityAtom>(&a)) {
            ren(e->lhs);
            ren(e->rhs);
          } else if (auto* d = std::get_if<DepAtom>(&a)) {
            for (auto& v : d->determinants) ren(v);
            ren(d->determined);
          } else if (auto* i = std::get_if<IndAtom>(&a)) {
            for (auto& v : i->condition) ren(v);
            for (auto& v : i->left) ren(v);
            for (auto& v : i->right) ren(v);
          }
          Formula renamed =
              (f.kind() == Formula::Kind::NegAtom) ? Formula::neg_atom(a) : Formula::atom(a);
          return classical_image(renamed, path);
        }
      }
    };
    CFormula phi_primed = primed_image(matrix, "");

    std::vector<CFormula> chi_parts;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
      if (prefix[k].universal) continue;
      CFormula eq_k = CFormula::eq(term_of(prefix[k].var), CTerm::var(primed.at(prefix[k].var).name));
      if (k == 0) {
        chi_parts.push_back(std::move(eq_k));
        continue;
      }
      std::vector<CFormula> ante;
      for (std::size_t j = 0; j < k; ++j)
        ante.push_back(
            CFormula::eq(term_of(prefix[j].var), CTerm::var(primed.at(prefix[j].var).name)));
      chi_parts.push_back(CFormula::implies(CFormula::conj_fold(ante), std::move(eq_k)));
    }
    CFormula primed_block = chi_parts.empty()
                                ? phi_primed
                                : CFormula::conj(phi_primed, CFormula::conj_fold(chi_parts));
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
      const std::string pname = primed.at(it->var).name;
      primed_block = it->universal ? CFormula::forall(pname, std::move(primed_block))
                                   : CFormula::exists(pname, std::move(primed_block));
    }

    CFormula inner = CFormula::conj(CFormula::conj_fold(chain), std::move(primed_block));

    // ∃ z⃗ over the prefix variables not free in the atom.
    std::set<Variable> atom_vars;
    for (const auto& v : atom.condition) atom_vars.insert(v);
    for (const auto& v : atom.left) atom_vars.insert(v);
    for (const auto& v : atom.right) atom_vars.insert(v);
    std::vector<Variable> zs;
    for (const auto& e : prefix)
      if (!atom_vars.count(e.var)) zs.push_back(e.var);
    for (auto it = zs.rbegin(); it != zs.rend(); ++it)
      inner = CFormula::exists(it->name, std::move(inner));

    std::vector<Variable> ab = atom.condition;
    ab.insert(ab.end(), atom.left.begin(), atom.left.end());
    std::vector<Variable> ac = atom.condition;
    ac.insert(ac.end(), atom.right.begin(), atom.right.end());
    CFormula guard = CFormula::conj(CFormula::rel("S" + leaf.path, terms_of(ab)),
                                    CFormula::rel("T" + leaf.path, terms_of(ac)));
    CFormula part = CFormula::implies(std::move(guard), std::move(inner));

    // ∀ a⃗ b⃗ c⃗ binds exactly the atom's variables (shadowing the outer prefix).
    std::vector<Variable> abc = atom.condition;
    abc.insert(abc.end(), atom.left.begin(), atom.left.end());
    abc.insert(abc.end(), atom.right.begin(), atom.right.end());
    for (auto it = abc.rbegin(); it != abc.rend(); ++it)
      part = CFormula::forall(it->name, std::move(part));
    omega_parts.push_back(std::move(part));
  }

  out.matrix = omega_parts.empty()
                   ? first
                   : CFormula::conj(std::move(first), CFormula::conj_fold(omega_parts));
  return out;
}

int max_so_arity(const ESOSentence& phi) {
  int k = 0;
  for (const auto& r : phi.rel_vars) k = std::max(k, r.arity);
  for (const auto& f : phi.fun_vars) k = std::max(k, f.arity);
  return k;
}

}  // namespace teamlog
