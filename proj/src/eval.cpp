#include "teamlog/eval.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace teamlog {

namespace {

// ---------------------------------------------------------------------------
// Tarski satisfaction

struct EnvStack {
  std::vector<std::pair<Variable, int>> entries;

  void push(const Variable& v, int val) { entries.emplace_back(v, val); }
  void pop() { entries.pop_back(); }
  void set_top(int val) { entries.back().second = val; }

  const int* lookup(const Variable& v) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
      if (it->first == v) return &it->second;
    return nullptr;
  }
};

int resolve_token(const Structure& m, const EnvStack& env, const Variable& v) {
  if (const int* val = env.lookup(v)) return *val;
  if (auto c = m.constant(v.name)) return *c;
  throw EvalError("unbound token '" + v.name + "'");
}

bool tarski_atom(const Structure& m, const EnvStack& env, const Atom& a) {
  if (auto* r = std::get_if<RelationAtom>(&a)) {
    const Relation* rel = m.relation(r->name);
    if (!rel) throw EvalError("unknown relation '" + r->name + "'");
    if (static_cast<int>(r->args.size()) != rel->arity)
      throw EvalError("arity mismatch for relation '" + r->name + "'");
    std::vector<int> tuple(r->args.size());
    for (std::size_t i = 0; i < r->args.size(); ++i) tuple[i] = resolve_token(m, env, r->args[i]);
    return rel->contains(tuple);
  }
  if (auto* e = std::get_if<EqualityAtom>(&a)) {
    return resolve_token(m, env, e->lhs) == resolve_token(m, env, e->rhs);
  }
  throw EvalError("dependency atom in a first-order context");
}

// Projection-keyed memo for quantified first-order subformulas; the filter
// formulas built for pruning get re-evaluated across many rows, and their
// truth only depends on the values of their free variables.
struct TarskiMemo {
  std::unordered_map<const void*, std::vector<Variable>> frees;
  struct Key {
    const void* node;
    std::vector<int> vals;
    bool operator==(const Key& o) const { return node == o.node && vals == o.vals; }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = std::hash<const void*>{}(k.node);
      for (int v : k.vals) h = h * 1099511628211ull + static_cast<std::size_t>(v) + 0x9e3779b9;
      return h;
    }
  };
  std::unordered_map<Key, bool, KeyHash> cache;
};

bool tarski_rec(const Structure& m, EnvStack& env, const Formula& f, TarskiMemo* memo) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return tarski_atom(m, env, f.atom_ref());
    case Formula::Kind::NegAtom:
      return !tarski_atom(m, env, f.atom_ref());
    case Formula::Kind::Conj:
      return tarski_rec(m, env, f.left(), memo) && tarski_rec(m, env, f.right(), memo);
    case Formula::Kind::Disj:
      return tarski_rec(m, env, f.left(), memo) || tarski_rec(m, env, f.right(), memo);
    case Formula::Kind::Exists:
    case Formula::Kind::Forall: {
      TarskiMemo::Key key;
      if (memo) {
        auto it = memo->frees.find(f.id());
        if (it == memo->frees.end()) {
          auto fv = free_vars(f);
          it = memo->frees.emplace(f.id(), std::vector<Variable>(fv.begin(), fv.end())).first;
        }
        key.node = f.id();
        key.vals.reserve(it->second.size());
        bool complete = true;
        for (const Variable& v : it->second) {
          if (const int* val = env.lookup(v)) {
            key.vals.push_back(*val);
          } else if (auto c = m.constant(v.name)) {
            key.vals.push_back(*c);
          } else {
            complete = false;
            break;
          }
        }
        if (complete) {
          auto hit = memo->cache.find(key);
          if (hit != memo->cache.end()) return hit->second;
        } else {
          memo = nullptr;
        }
      }
      bool universal = f.kind() == Formula::Kind::Forall;
      bool result = universal;
      env.push(f.quant_var(), 0);
      for (int e = 0; e < m.size(); ++e) {
        env.set_top(e);
        bool sub = tarski_rec(m, env, f.body(), memo);
        if (universal && !sub) { result = false; break; }
        if (!universal && sub) { result = true; break; }
      }
      env.pop();
      if (memo) memo->cache.emplace(std::move(key), result);
      return result;
    }
  }
  return false;
}

void collect_conjuncts(const Formula& f, std::vector<Formula>& out) {
  if (f.kind() == Formula::Kind::Conj) {
    collect_conjuncts(f.left(), out);
    collect_conjuncts(f.right(), out);
  } else {
    out.push_back(f);
  }
}

// Dependence-logic material (no independence or inclusion atoms) is
// downward closed, which several search shortcuts rely on.
bool downward_closed(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom: {
      const Atom& a = f.atom_ref();
      return !std::holds_alternative<IndAtom>(a) && !std::holds_alternative<IncAtom>(a);
    }
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      return downward_closed(f.left()) && downward_closed(f.right());
    case Formula::Kind::Exists:
    case Formula::Kind::Forall:
      return downward_closed(f.body());
  }
  return false;
}

bool duplicate_free(const std::vector<Variable>& vs) {
  std::set<Variable> s(vs.begin(), vs.end());
  return s.size() == vs.size();
}

bool disjoint(const std::vector<Variable>& a, const std::vector<Variable>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y) return false;
  return true;
}

bool contains_var(const std::vector<Variable>& vs, const Variable& v) {
  return std::find(vs.begin(), vs.end(), v) != vs.end();
}

// Inserts or overwrites one variable in a team's row layout.
struct RowExtender {
  std::vector<Variable> ext_vars;
  std::size_t pos = 0;
  bool overwrite = false;

  static RowExtender over(const std::vector<Variable>& vars, const Variable& v) {
    RowExtender ex;
    auto it = std::lower_bound(vars.begin(), vars.end(), v);
    ex.pos = static_cast<std::size_t>(it - vars.begin());
    ex.overwrite = (it != vars.end() && *it == v);
    ex.ext_vars = vars;
    if (!ex.overwrite) ex.ext_vars.insert(ex.ext_vars.begin() + ex.pos, v);
    return ex;
  }

  std::vector<int> extend(const std::vector<int>& row, int val) const {
    std::vector<int> out = row;
    if (overwrite)
      out[pos] = val;
    else
      out.insert(out.begin() + pos, val);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Evaluator

class Evaluator {
 public:
  Evaluator(const Structure& m, Semantics sem, const EvalBudget& budget, const EvalOptions& opt)
      : m_(m), sem_(sem), budget_(budget), opt_(opt) {
    if (budget_.max_team_rows == 0 || budget_.max_branching == 0)
      throw std::invalid_argument("evaluation budget fields must be positive");
  }

  bool decide(const Formula& f, const Team& x) {
    if (x.rows().empty()) return true;  // empty team property
    if (opt_.flatness_fast_path && is_fo(f)) return all_rows_hold(f, x);

    switch (f.kind()) {
      case Formula::Kind::Atom:
        return decide_atom(f.atom_ref(), x);
      case Formula::Kind::NegAtom:
        return all_rows_hold(f, x);
      case Formula::Kind::Conj:
        return decide(f.left(), x) && decide(f.right(), x);
      default:
        break;
    }

    // Only the search nodes are worth a memo entry; atom checks are cheaper
    // than the key they would store.
    MemoKey key{f.id(), x};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    bool result = false;
    switch (f.kind()) {
      case Formula::Kind::Disj:
        result = decide_disj(f, x);
        break;
      case Formula::Kind::Exists:
        result = decide_exists(f, x);
        break;
      case Formula::Kind::Forall: {
        Team ext = x.universal_extension(f.quant_var(), m_);
        check_rows(ext.size());
        result = decide(f.body(), ext);
        break;
      }
      default:
        break;
    }
    memo_.emplace(std::move(key), result);
    return result;
  }

 private:
  const Structure& m_;
  Semantics sem_;
  EvalBudget budget_;
  EvalOptions opt_;

  struct MemoKey {
    const void* node;
    Team team;
    bool operator==(const MemoKey& o) const { return node == o.node && team == o.team; }
  };
  struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const {
      return std::hash<const void*>{}(k.node) * 31 ^ k.team.hash();
    }
  };
  std::unordered_map<MemoKey, bool, MemoKeyHash> memo_;
  std::unordered_map<const void*, bool> fo_cache_;
  std::unordered_map<const void*, std::optional<Formula>> filter_cache_;
  TarskiMemo tarski_memo_;

  void check_rows(std::size_t n) {
    if (n > budget_.max_team_rows)
      throw BudgetExceededError("team row budget exhausted (" + std::to_string(n) + " rows)");
  }

  struct BranchCounter {
    Evaluator* ev;
    std::size_t count = 0;
    void tick() {
      if (++count > ev->budget_.max_branching)
        throw BudgetExceededError("branching budget exhausted");
    }
  };

  bool is_fo(const Formula& f) {
    auto it = fo_cache_.find(f.id());
    if (it != fo_cache_.end()) return it->second;
    bool r = first_order(f);
    fo_cache_.emplace(f.id(), r);
    return r;
  }

  // The flat filter F(f): a first-order formula every assignment of a
  // satisfying team necessarily satisfies. nullopt means no constraint.
  // Returned by value: cache references do not survive later insertions.
  std::optional<Formula> filter_of(const Formula& f) {
    auto it = filter_cache_.find(f.id());
    if (it != filter_cache_.end()) return it->second;
    std::optional<Formula> result;
    switch (f.kind()) {
      case Formula::Kind::Atom:
        if (is_first_order(f.atom_ref())) result = f;
        break;
      case Formula::Kind::NegAtom:
        result = f;
        break;
      case Formula::Kind::Conj: {
        auto l = filter_of(f.left());
        auto r = filter_of(f.right());
        if (l && r)
          result = Formula::conj(*l, *r);
        else
          result = l ? l : r;
        break;
      }
      case Formula::Kind::Disj: {
        auto l = filter_of(f.left());
        auto r = filter_of(f.right());
        if (l && r) result = Formula::disj(*l, *r);
        break;
      }
      case Formula::Kind::Exists: {
        auto b = filter_of(f.body());
        if (b) result = Formula::exists(f.quant_var(), *b);
        break;
      }
      case Formula::Kind::Forall: {
        auto b = filter_of(f.body());
        if (b) result = Formula::forall(f.quant_var(), *b);
        break;
      }
    }
    filter_cache_.emplace(f.id(), result);
    return result;
  }

  bool tarski_row(const Formula& fo, const std::vector<Variable>& vars,
                  const std::vector<int>& row) {
    EnvStack env;
    env.entries.reserve(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) env.push(vars[i], row[i]);
    return tarski_rec(m_, env, fo, &tarski_memo_);
  }

  bool row_passes(const std::optional<Formula>& filter, const std::vector<Variable>& vars,
                  const std::vector<int>& row) {
    return !filter || tarski_row(*filter, vars, row);
  }

  bool all_rows_hold(const Formula& fo, const Team& x) {
    for (const auto& row : x.rows())
      if (!tarski_row(fo, x.vars(), row)) return false;
    return true;
  }

  // ---- dependency atoms -----------------------------------------------

  static std::vector<std::size_t> column_indices(const Team& x, const std::vector<Variable>& vs) {
    std::vector<std::size_t> cols;
    cols.reserve(vs.size());
    for (const Variable& v : vs) {
      auto idx = x.var_index(v);
      if (!idx) throw EvalError("free variable '" + v.name + "' missing from team");
      cols.push_back(*idx);
    }
    return cols;
  }

  static std::vector<int> project(const std::vector<int>& row, const std::vector<std::size_t>& cols) {
    std::vector<int> out(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) out[i] = row[cols[i]];
    return out;
  }

  bool decide_atom(const Atom& a, const Team& x) {
    if (auto* d = std::get_if<DepAtom>(&a)) {
      auto det = column_indices(x, d->determinants);
      auto y = column_indices(x, {d->determined});
      std::map<std::vector<int>, int> fn;
      for (const auto& row : x.rows()) {
        auto [it, fresh] = fn.emplace(project(row, det), row[y[0]]);
        if (!fresh && it->second != row[y[0]]) return false;
      }
      return true;
    }
    if (auto* i = std::get_if<IndAtom>(&a)) {
      auto cc = column_indices(x, i->condition);
      auto lc = column_indices(x, i->left);
      auto rc = column_indices(x, i->right);
      struct Group {
        std::set<std::vector<int>> lefts, rights;
        std::set<std::pair<std::vector<int>, std::vector<int>>> pairs;
      };
      std::map<std::vector<int>, Group> groups;
      for (const auto& row : x.rows()) {
        Group& g = groups[project(row, cc)];
        auto l = project(row, lc);
        auto r = project(row, rc);
        g.lefts.insert(l);
        g.rights.insert(r);
        g.pairs.emplace(std::move(l), std::move(r));
      }
      for (const auto& [cond, g] : groups)
        if (g.pairs.size() != g.lefts.size() * g.rights.size()) return false;
      return true;
    }
    if (auto* c = std::get_if<IncAtom>(&a)) {
      auto rights = x.values(c->right);
      for (const auto& t : x.values(c->left))
        if (!rights.count(t)) return false;
      return true;
    }
    // First-order atom evaluated team-wise (flatness fast path disabled).
    for (const auto& row : x.rows()) {
      EnvStack env;
      for (std::size_t i = 0; i < x.vars().size(); ++i) env.push(x.vars()[i], row[i]);
      if (!tarski_atom(m_, env, a)) return false;
    }
    return true;
  }

  // ---- disjunction ------------------------------------------------------

  bool decide_disj(const Formula& f, const Team& x) {
    Formula psi = f.left(), theta = f.right();
    const std::size_t n = x.rows().size();

    std::vector<char> can_l(n, 1), can_r(n, 1);
    if (opt_.flatness_fast_path) {
      std::optional<Formula> fl = filter_of(psi);
      std::optional<Formula> fr = filter_of(theta);
      for (std::size_t i = 0; i < n; ++i) {
        can_l[i] = row_passes(fl, x.vars(), x.rows()[i]);
        can_r[i] = row_passes(fr, x.vars(), x.rows()[i]);
        if (!can_l[i] && !can_r[i]) return false;
      }
    }

    if (opt_.structured_search && opt_.flatness_fast_path) {
      if (is_fo(psi)) {
        std::vector<char> lower(n), upper(n);
        for (std::size_t i = 0; i < n; ++i) {
          lower[i] = !can_l[i];
          upper[i] = can_r[i];
        }
        return sandwich_exists(theta, x, lower, upper);
      }
      if (is_fo(theta)) {
        std::vector<char> lower(n), upper(n);
        for (std::size_t i = 0; i < n; ++i) {
          lower[i] = !can_r[i];
          upper[i] = can_l[i];
        }
        return sandwich_exists(psi, x, lower, upper);
      }
    }

    // Generic cover search. Free rows pass both filters; forced rows have
    // only one side available. Codes per free row: 0 = left, 1 = both (lax
    // only), 2 = right; enumeration starts at the greedy all-left split and
    // proceeds by increasing deviation from it when the space is small.
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
      if (can_l[i] && can_r[i]) free.push_back(i);

    const bool lax = sem_ == Semantics::Lax;
    const std::size_t options = lax ? 3 : 2;
    BranchCounter counter{this};

    std::vector<std::size_t> code(free.size(), 0);
    auto run_candidate = [&](const std::vector<std::size_t>& c) -> bool {
      std::vector<std::vector<int>> yrows, zrows;
      for (std::size_t i = 0; i < n; ++i) {
        if (can_l[i] && !can_r[i]) {
          yrows.push_back(x.rows()[i]);
        } else if (!can_l[i] && can_r[i]) {
          zrows.push_back(x.rows()[i]);
        }
      }
      for (std::size_t k = 0; k < free.size(); ++k) {
        std::size_t choice = c[k];
        if (!lax && choice == 1) choice = 2;  // strict codes: 0 = left, 1 = right
        const auto& row = x.rows()[free[k]];
        if (choice == 0) {
          yrows.push_back(row);
        } else if (choice == 1) {
          yrows.push_back(row);
          zrows.push_back(row);
        } else {
          zrows.push_back(row);
        }
      }
      Team y = x.with_rows(std::move(yrows));
      Team z = x.with_rows(std::move(zrows));
      return decide(psi, y) && decide(theta, z);
    };

    // Candidate order: by deviation from the greedy all-left code when the
    // space is small enough to materialize, else plain odometer order.
    double total = 1;
    for (std::size_t k = 0; k < free.size(); ++k) total *= static_cast<double>(options);
    if (total <= 65536.0) {
      std::vector<std::vector<std::size_t>> codes;
      codes.reserve(static_cast<std::size_t>(total));
      std::vector<std::size_t> cur(free.size(), 0);
      bool done = false;
      while (!done) {
        codes.push_back(cur);
        done = true;
        for (std::size_t k = free.size(); k-- > 0;) {
          if (++cur[k] < options) {
            done = false;
            break;
          }
          cur[k] = 0;
        }
      }
      std::stable_sort(codes.begin(), codes.end(),
                       [lax](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
                         auto dist = [lax](const std::vector<std::size_t>& c) {
                           std::size_t d = 0;
                           for (std::size_t v : c) d += lax ? v : 2 * v;
                           return d;
                         };
                         return dist(a) < dist(b);
                       });
      for (const auto& c : codes) {
        counter.tick();
        if (run_candidate(c)) return true;
      }
      return false;
    }
    for (;;) {
      counter.tick();
      if (run_candidate(code)) return true;
      std::size_t k = free.size();
      while (k > 0) {
        --k;
        if (++code[k] < options) break;
        code[k] = 0;
        if (k == 0) return false;
      }
      if (free.empty()) return false;
    }
  }

  // ---- sandwich search: exists Z with L ⊆ Z ⊆ W and Z |= theta ----------

  bool sandwich_exists(const Formula& theta, const Team& x, std::vector<char> lower,
                       std::vector<char> upper) {
    const std::size_t n = x.rows().size();
    std::optional<Formula> filt = filter_of(theta);
    for (std::size_t i = 0; i < n; ++i) {
      if (upper[i] && !row_passes(filt, x.vars(), x.rows()[i])) upper[i] = 0;
      if (lower[i] && !upper[i]) return false;
    }

    std::vector<Formula> conjuncts;
    collect_conjuncts(theta, conjuncts);
    std::vector<Formula> nonfo;
    for (const auto& g : conjuncts)
      if (!is_fo(g)) nonfo.push_back(g);

    auto lower_team = [&]() {
      std::vector<std::vector<int>> rows;
      for (std::size_t i = 0; i < n; ++i)
        if (lower[i]) rows.push_back(x.rows()[i]);
      return x.with_rows(std::move(rows));
    };

    if (nonfo.empty()) return true;  // Z := L; its rows pass every conjunct

    bool all_dc = std::all_of(nonfo.begin(), nonfo.end(),
                              [](const Formula& g) { return downward_closed(g); });
    if (all_dc) {
      Team l = lower_team();
      for (const auto& g : nonfo)
        if (!decide(g, l)) return false;
      return true;
    }

    if (nonfo.size() == 1 && nonfo[0].kind() == Formula::Kind::Atom) {
      const Atom& a = nonfo[0].atom_ref();
      if (auto* ind = std::get_if<IndAtom>(&a)) {
        if (duplicate_free(ind->condition) && duplicate_free(ind->left) &&
            duplicate_free(ind->right) && disjoint(ind->condition, ind->left) &&
            disjoint(ind->condition, ind->right) && disjoint(ind->left, ind->right)) {
          return sandwich_ind(*ind, x, lower, upper);
        }
      }
      if (auto* inc = std::get_if<IncAtom>(&a)) return sandwich_inc(*inc, x, lower, upper);
    }

    // Generic: enumerate additions from W \ L.
    std::vector<std::size_t> delta;
    for (std::size_t i = 0; i < n; ++i)
      if (upper[i] && !lower[i]) delta.push_back(i);
    BranchCounter counter{this};
    std::vector<char> take(delta.size(), 0);
    for (;;) {
      counter.tick();
      std::vector<std::vector<int>> rows;
      for (std::size_t i = 0; i < n; ++i)
        if (lower[i]) rows.push_back(x.rows()[i]);
      for (std::size_t k = 0; k < delta.size(); ++k)
        if (take[k]) rows.push_back(x.rows()[delta[k]]);
      Team z = x.with_rows(std::move(rows));
      bool ok = true;
      for (const auto& g : nonfo)
        if (!decide(g, z)) { ok = false; break; }
      if (ok) return true;
      std::size_t k = delta.size();
      while (k > 0) {
        --k;
        if (!take[k]) { take[k] = 1; break; }
        take[k] = 0;
        if (k == 0) return false;
      }
      if (delta.empty()) return false;
    }
  }

  // Independence atom with pairwise-disjoint duplicate-free tuples: per
  // condition class the selected types must form a product block between the
  // types forced by L and those available in W. The smallest block covering
  // L's types is optimal, so one check per class suffices.
  bool sandwich_ind(const IndAtom& ind, const Team& x, const std::vector<char>& lower,
                    const std::vector<char>& upper) {
    auto cc = column_indices(x, ind.condition);
    auto lc = column_indices(x, ind.left);
    auto rc = column_indices(x, ind.right);
    struct Class {
      std::set<std::vector<int>> lb, lr;                                   // from L
      std::set<std::pair<std::vector<int>, std::vector<int>>> wpairs;      // from W
    };
    std::map<std::vector<int>, Class> classes;
    for (std::size_t i = 0; i < x.rows().size(); ++i) {
      if (!upper[i]) continue;
      const auto& row = x.rows()[i];
      Class& cl = classes[project(row, cc)];
      auto b = project(row, lc);
      auto c = project(row, rc);
      if (lower[i]) {
        cl.lb.insert(b);
        cl.lr.insert(c);
      }
      cl.wpairs.emplace(std::move(b), std::move(c));
    }
    for (const auto& [cond, cl] : classes) {
      for (const auto& b : cl.lb)
        for (const auto& c : cl.lr)
          if (!cl.wpairs.count({b, c})) return false;
    }
    return true;
  }

  // Inclusion atoms are union closed: the largest satisfying subteam of W is
  // the greatest fixpoint of discarding unsupported rows.
  bool sandwich_inc(const IncAtom& inc, const Team& x, const std::vector<char>& lower,
                    std::vector<char> upper) {
    auto lc = column_indices(x, inc.left);
    auto rc = column_indices(x, inc.right);
    bool changed = true;
    while (changed) {
      changed = false;
      std::set<std::vector<int>> rights;
      for (std::size_t i = 0; i < x.rows().size(); ++i)
        if (upper[i]) rights.insert(project(x.rows()[i], rc));
      for (std::size_t i = 0; i < x.rows().size(); ++i) {
        if (upper[i] && !rights.count(project(x.rows()[i], lc))) {
          upper[i] = 0;
          changed = true;
        }
      }
    }
    for (std::size_t i = 0; i < x.rows().size(); ++i)
      if (lower[i] && !upper[i]) return false;
    return true;
  }

  // ---- existential quantification ----------------------------------------

  bool decide_exists(const Formula& f, const Team& x) {
    const Variable& v = f.quant_var();
    Formula body = f.body();

    if (sem_ == Semantics::Strict) return exists_strict(v, body, x);

    // Lax: one nonempty value set per row of X with v removed.
    Team base = x.has_var(v) ? x.drop_var(v) : x;
    RowExtender ex = RowExtender::over(base.vars(), v);
    std::optional<Formula> filt;
    if (opt_.flatness_fast_path) filt = filter_of(body);

    std::vector<std::vector<int>> viable(base.rows().size());
    for (std::size_t r = 0; r < base.rows().size(); ++r) {
      for (int e = 0; e < m_.size(); ++e) {
        if (row_passes(filt, ex.ext_vars, ex.extend(base.rows()[r], e)))
          viable[r].push_back(e);
      }
      if (viable[r].empty()) return false;
    }

    if (opt_.structured_search && opt_.flatness_fast_path) {
      std::vector<Formula> conjuncts;
      collect_conjuncts(body, conjuncts);
      std::vector<Formula> nonfo;
      for (const auto& g : conjuncts)
        if (!is_fo(g)) nonfo.push_back(g);

      if (nonfo.empty()) return true;  // flat body with a witness per row

      if (nonfo.size() == 1 && nonfo[0].kind() == Formula::Kind::Atom) {
        const Atom& a = nonfo[0].atom_ref();
        if (auto* dep = std::get_if<DepAtom>(&a)) {
          if (dep->determined == v && !contains_var(dep->determinants, v)) {
            bool ok = true;
            auto det = column_indices(base, dep->determinants);
            std::map<std::vector<int>, std::vector<int>> class_common;
            for (std::size_t r = 0; r < base.rows().size(); ++r) {
              auto kv = project(base.rows()[r], det);
              auto it = class_common.find(kv);
              if (it == class_common.end()) {
                class_common.emplace(std::move(kv), viable[r]);
              } else {
                std::vector<int> merged;
                std::set_intersection(it->second.begin(), it->second.end(), viable[r].begin(),
                                      viable[r].end(), std::back_inserter(merged));
                it->second = std::move(merged);
              }
            }
            for (const auto& [kv, common] : class_common)
              if (common.empty()) { ok = false; break; }
            return ok;
          }
        }
        if (auto* ind = std::get_if<IndAtom>(&a)) {
          if (duplicate_free(ind->condition) && duplicate_free(ind->left) &&
              duplicate_free(ind->right) && disjoint(ind->condition, ind->left) &&
              disjoint(ind->condition, ind->right) && disjoint(ind->left, ind->right) &&
              !contains_var(ind->condition, v)) {
            bool v_left = contains_var(ind->left, v);
            bool v_right = contains_var(ind->right, v);
            if (v_left != v_right) {
              // Orient so the quantified variable sits on the right tuple.
              IndAtom oriented = *ind;
              if (v_left) std::swap(oriented.left, oriented.right);
              if (auto res = exists_ind(oriented, v, base, ex, viable)) return *res;
            }
          }
        }
      }

      bool all_dc = std::all_of(nonfo.begin(), nonfo.end(),
                                [](const Formula& g) { return downward_closed(g); });
      if (all_dc) return exists_single_valued(body, base, ex, viable);
    }

    // Generic lax search: odometer over nonempty value subsets per row.
    const std::size_t nrows = base.rows().size();
    std::vector<std::size_t> mask(nrows, 1);  // nonempty subsets: 1 .. 2^k-1
    BranchCounter counter{this};
    for (;;) {
      counter.tick();
      std::vector<std::vector<int>> rows;
      std::size_t total = 0;
      for (std::size_t r = 0; r < nrows; ++r) {
        for (std::size_t b = 0; b < viable[r].size(); ++b)
          if (mask[r] >> b & 1) ++total;
      }
      check_rows(total);
      for (std::size_t r = 0; r < nrows; ++r)
        for (std::size_t b = 0; b < viable[r].size(); ++b)
          if (mask[r] >> b & 1) rows.push_back(ex.extend(base.rows()[r], viable[r][b]));
      Team y = Team::make(ex.ext_vars, std::move(rows));
      if (decide(body, y)) return true;
      std::size_t k = nrows;
      while (k > 0) {
        --k;
        std::size_t limit = (std::size_t{1} << viable[k].size()) - 1;
        if (mask[k] < limit) { ++mask[k]; break; }
        mask[k] = 1;
        if (k == 0) return false;
      }
      if (nrows == 0) return false;
    }
  }

  // Downward-closed bodies: single-valued choices per row suffice.
  bool exists_single_valued(const Formula& body, const Team& base, const RowExtender& ex,
                            const std::vector<std::vector<int>>& viable) {
    const std::size_t nrows = base.rows().size();
    std::vector<std::size_t> pick(nrows, 0);
    BranchCounter counter{this};
    for (;;) {
      counter.tick();
      std::vector<std::vector<int>> rows;
      rows.reserve(nrows);
      for (std::size_t r = 0; r < nrows; ++r)
        rows.push_back(ex.extend(base.rows()[r], viable[r][pick[r]]));
      check_rows(rows.size());
      Team y = Team::make(ex.ext_vars, std::move(rows));
      if (decide(body, y)) return true;
      std::size_t k = nrows;
      while (k > 0) {
        --k;
        if (++pick[k] < viable[k].size()) break;
        pick[k] = 0;
        if (k == 0) return false;
      }
      if (nrows == 0) return false;
    }
  }

  // Lax exists whose only non-flat content is one disjoint independence atom
  // with the quantified variable on its right tuple. Works per condition
  // class over candidate right-hand value sets; the left side is forced by
  // the rows themselves. Returns nullopt to fall back to the generic search.
  std::optional<bool> exists_ind(const IndAtom& ind, const Variable& v, const Team& base,
                                 const RowExtender& ex, const std::vector<std::vector<int>>& viable) {
    for (const Variable& w : ind.condition)
      if (!base.has_var(w)) return std::nullopt;
    for (const Variable& w : ind.left)
      if (!base.has_var(w)) return std::nullopt;
    for (const Variable& w : ind.right)
      if (!(w == v) && !base.has_var(w)) return std::nullopt;

    auto cc = column_indices(base, ind.condition);
    auto lc = column_indices(base, ind.left);
    std::vector<std::size_t> rc_ext;  // right columns in the extended layout
    {
      std::vector<Variable> ext = ex.ext_vars;
      for (const Variable& w : ind.right) {
        auto it = std::lower_bound(ext.begin(), ext.end(), w);
        assert(it != ext.end() && *it == w);
        rc_ext.push_back(static_cast<std::size_t>(it - ext.begin()));
      }
    }

    struct RowInfo {
      std::size_t row;
      std::vector<int> bval;
      std::vector<std::pair<int, std::vector<int>>> choices;  // (value of v, right tuple)
    };
    std::map<std::vector<int>, std::vector<RowInfo>> classes;
    for (std::size_t r = 0; r < base.rows().size(); ++r) {
      RowInfo info;
      info.row = r;
      info.bval = project(base.rows()[r], lc);
      for (int e : viable[r]) {
        auto extended = ex.extend(base.rows()[r], e);
        info.choices.emplace_back(e, project(extended, rc_ext));
      }
      classes[project(base.rows()[r], cc)].push_back(std::move(info));
    }

    for (const auto& [cond, infos] : classes) {
      std::vector<std::vector<int>> cvals;  // realized right tuples, deduped
      auto cindex = [&cvals](const std::vector<int>& t) -> std::size_t {
        for (std::size_t i = 0; i < cvals.size(); ++i)
          if (cvals[i] == t) return i;
        cvals.push_back(t);
        return cvals.size() - 1;
      };
      std::vector<std::vector<std::size_t>> row_choices(infos.size());
      std::set<std::vector<int>> bvals;
      for (std::size_t i = 0; i < infos.size(); ++i) {
        bvals.insert(infos[i].bval);
        for (const auto& [e, t] : infos[i].choices) row_choices[i].push_back(cindex(t));
      }
      if (cvals.size() > 20) return std::nullopt;

      BranchCounter counter{this};
      bool class_ok = false;
      const std::size_t space = std::size_t{1} << cvals.size();
      for (std::size_t cset = 1; cset < space && !class_ok; ++cset) {
        counter.tick();
        bool covers = true;
        for (const auto& choices : row_choices) {
          bool any = false;
          for (std::size_t ci : choices)
            if (cset >> ci & 1) { any = true; break; }
          if (!any) { covers = false; break; }
        }
        if (!covers) continue;
        // Every (left value, selected right value) pair must be realizable.
        bool product_ok = true;
        for (const auto& b : bvals) {
          for (std::size_t ci = 0; ci < cvals.size() && product_ok; ++ci) {
            if (!(cset >> ci & 1)) continue;
            bool realized = false;
            for (std::size_t i = 0; i < infos.size() && !realized; ++i) {
              if (infos[i].bval != b) continue;
              for (std::size_t cj : row_choices[i])
                if (cj == ci) { realized = true; break; }
            }
            if (!realized) product_ok = false;
          }
          if (!product_ok) break;
        }
        if (product_ok) class_ok = true;
      }
      if (!class_ok) return false;
    }
    return true;
  }

  bool exists_strict(const Variable& v, const Formula& body, const Team& x) {
    // A chain of strict quantifiers over fresh distinct variables is one
    // choice of a value tuple per row; searching whole tuples lets the flat
    // filter prune complete rows and avoids building intermediate teams.
    if (opt_.structured_search && opt_.flatness_fast_path && !x.has_var(v)) {
      std::vector<Variable> block{v};
      Formula rest = body;
      while (rest.kind() == Formula::Kind::Exists) {
        const Variable& w = rest.quant_var();
        if (x.has_var(w) || std::find(block.begin(), block.end(), w) != block.end()) break;
        block.push_back(w);
        rest = rest.body();
      }
      if (block.size() >= 2) return exists_strict_block(block, rest, x);
    }

    RowExtender ex = RowExtender::over(x.vars(), v);
    std::optional<Formula> filt;
    if (opt_.flatness_fast_path) filt = filter_of(body);
    const std::size_t nrows = x.rows().size();
    std::vector<std::vector<int>> viable(nrows);
    for (std::size_t r = 0; r < nrows; ++r) {
      for (int e = 0; e < m_.size(); ++e)
        if (row_passes(filt, ex.ext_vars, ex.extend(x.rows()[r], e))) viable[r].push_back(e);
      if (viable[r].empty()) return false;
    }
    std::vector<std::size_t> pick(nrows, 0);
    BranchCounter counter{this};
    for (;;) {
      counter.tick();
      std::vector<std::vector<int>> rows;
      rows.reserve(nrows);
      for (std::size_t r = 0; r < nrows; ++r)
        rows.push_back(ex.extend(x.rows()[r], viable[r][pick[r]]));
      check_rows(rows.size());
      Team y = Team::make(ex.ext_vars, std::move(rows));
      if (decide(body, y)) return true;
      std::size_t k = nrows;
      while (k > 0) {
        --k;
        if (++pick[k] < viable[k].size()) break;
        pick[k] = 0;
        if (k == 0) return false;
      }
      if (nrows == 0) return false;
    }
  }

  bool exists_strict_block(const std::vector<Variable>& block, const Formula& matrix,
                           const Team& x) {
    const std::size_t k = block.size();
    std::size_t tuple_space = 1;
    for (std::size_t i = 0; i < k; ++i) {
      tuple_space *= static_cast<std::size_t>(m_.size());
      if (tuple_space > 65536) throw BudgetExceededError("existential block space too large");
    }

    // Target layout and a per-position source map (old column or tuple slot).
    std::vector<Variable> target = x.vars();
    for (const Variable& w : block) {
      auto it = std::lower_bound(target.begin(), target.end(), w);
      target.insert(it, w);
    }
    struct Source {
      bool from_tuple;
      std::size_t index;
    };
    std::vector<Source> sources(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      auto bit = std::find(block.begin(), block.end(), target[i]);
      if (bit != block.end()) {
        sources[i] = {true, static_cast<std::size_t>(bit - block.begin())};
      } else {
        sources[i] = {false, *x.var_index(target[i])};
      }
    }
    auto build_row = [&](const std::vector<int>& row, const std::vector<int>& tuple) {
      std::vector<int> out(target.size());
      for (std::size_t i = 0; i < target.size(); ++i)
        out[i] = sources[i].from_tuple ? tuple[sources[i].index] : row[sources[i].index];
      return out;
    };

    std::optional<Formula> filt = filter_of(matrix);
    const std::size_t nrows = x.rows().size();
    std::vector<std::vector<std::vector<int>>> cand(nrows);
    {
      std::vector<int> tuple(k, 0);
      for (std::size_t rank = 0; rank < tuple_space; ++rank) {
        std::size_t rest = rank;
        for (std::size_t i = k; i-- > 0;) {
          tuple[i] = static_cast<int>(rest % m_.size());
          rest /= m_.size();
        }
        for (std::size_t r = 0; r < nrows; ++r) {
          if (row_passes(filt, target, build_row(x.rows()[r], tuple))) cand[r].push_back(tuple);
        }
      }
    }
    for (std::size_t r = 0; r < nrows; ++r)
      if (cand[r].empty()) return false;

    check_rows(nrows);
    std::vector<std::size_t> pick(nrows, 0);
    BranchCounter counter{this};
    for (;;) {
      counter.tick();
      std::vector<std::vector<int>> rows;
      rows.reserve(nrows);
      for (std::size_t r = 0; r < nrows; ++r)
        rows.push_back(build_row(x.rows()[r], cand[r][pick[r]]));
      Team y = Team::make(target, std::move(rows));
      if (decide(matrix, y)) return true;
      std::size_t j = nrows;
      while (j > 0) {
        --j;
        if (++pick[j] < cand[j].size()) break;
        pick[j] = 0;
        if (j == 0) return false;
      }
      if (nrows == 0) return false;
    }
  }
};

}  // namespace

bool eval(const Structure& m, const Team& x, const Formula& f, Semantics sem,
          const EvalBudget& budget, const EvalOptions& options) {
  for (const Variable& v : free_vars(f)) {
    if (!x.has_var(v) && !m.constant(v.name))
      throw EvalError("free variable '" + v.name + "' missing from team");
  }
  Evaluator ev(m, sem, budget, options);
  return ev.decide(f, x);
}

bool eval_flat(const Structure& m, const Team& x, const Formula& fo) {
  if (!first_order(fo)) throw EvalError("eval_flat requires a first-order formula");
  for (const Variable& v : free_vars(fo)) {
    if (!x.has_var(v) && !m.constant(v.name))
      throw EvalError("free variable '" + v.name + "' missing from team");
  }
  for (const auto& row : x.rows()) {
    EnvStack env;
    for (std::size_t i = 0; i < x.vars().size(); ++i) env.push(x.vars()[i], row[i]);
    if (!tarski_rec(m, env, fo, nullptr)) return false;
  }
  return true;
}

bool tarski_holds(const Structure& m, const std::map<Variable, int>& assignment, const Formula& fo) {
  if (!first_order(fo)) throw EvalError("tarski_holds requires a first-order formula");
  EnvStack env;
  for (const auto& [v, val] : assignment) env.push(v, val);
  return tarski_rec(m, env, fo, nullptr);
}

bool is_x_universal(const Team& x, const std::vector<Variable>& xs, const Structure& m) {
  std::size_t space = 1;
  for (std::size_t i = 0; i < xs.size(); ++i) space *= static_cast<std::size_t>(m.size());
  auto projections = x.values(xs);
  return projections.size() == x.rows().size() && projections.size() == space;
}

}  // namespace teamlog
