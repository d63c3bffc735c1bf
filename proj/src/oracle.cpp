#include "teamlog/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include "teamlog/eso.hpp"
#include "teamlog/rewrite.hpp"

namespace teamlog {

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Budget: return "BUDGET";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Structure enumeration

namespace {

std::size_t pow_size(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

StructureEnumerator::StructureEnumerator(Signature sig, int max_domain)
    : sig_(std::move(sig)), max_domain_(max_domain), domain_size_(2) {
  if (max_domain_ < 2) throw std::invalid_argument("max_domain must be at least 2");
}

bool StructureEnumerator::start_size() {
  state_.clear();
  limits_.clear();
  std::size_t n = static_cast<std::size_t>(domain_size_);
  for (const auto& [name, arity] : sig_.relations) {
    (void)name;
    std::size_t tuples = pow_size(n, arity);
    if (tuples > 20) throw BudgetExceededError("relation tuple space too large to enumerate");
    limits_.push_back(std::size_t{1} << tuples);
    state_.push_back(0);
  }
  for (const auto& c : sig_.constants) {
    (void)c;
    limits_.push_back(n);
    state_.push_back(0);
  }
  return true;
}

Structure StructureEnumerator::materialize() const {
  std::size_t n = static_cast<std::size_t>(domain_size_);
  std::vector<std::string> domain;
  for (std::size_t e = 0; e < n; ++e) domain.push_back(std::to_string(e));

  std::map<std::string, Relation> rels;
  std::size_t slot = 0;
  for (const auto& [name, arity] : sig_.relations) {
    std::size_t tuples = pow_size(n, arity);
    Relation rel;
    rel.arity = arity;
    for (std::size_t rank = 0; rank < tuples; ++rank) {
      if (!(state_[slot] >> rank & 1)) continue;
      std::vector<int> tuple(arity);
      std::size_t rest = rank;
      for (int i = arity - 1; i >= 0; --i) {
        tuple[i] = static_cast<int>(rest % n);
        rest /= n;
      }
      rel.tuples.insert(std::move(tuple));
    }
    rels.emplace(name, std::move(rel));
    ++slot;
  }
  std::map<std::string, int> consts;
  for (const auto& c : sig_.constants) consts.emplace(c, static_cast<int>(state_[slot++]));
  return Structure(std::move(domain), std::move(rels), std::move(consts));
}

std::optional<Structure> StructureEnumerator::next() {
  if (domain_size_ > max_domain_) return std::nullopt;
  if (fresh_size_) {
    start_size();
    fresh_size_ = false;
    return materialize();
  }
  std::size_t k = state_.size();
  while (k > 0) {
    --k;
    if (++state_[k] < limits_[k]) return materialize();
    state_[k] = 0;
    if (k == 0) break;
  }
  ++domain_size_;
  if (domain_size_ > max_domain_) return std::nullopt;
  start_size();
  return materialize();
}

// ---------------------------------------------------------------------------
// Team enumeration

TeamEnumerator::TeamEnumerator(const Structure& m, std::vector<Variable> vars,
                               std::optional<std::size_t> max_rows)
    : m_(m), vars_(std::move(vars)) {
  std::sort(vars_.begin(), vars_.end());
  vars_.erase(std::unique(vars_.begin(), vars_.end()), vars_.end());
  std::size_t n = static_cast<std::size_t>(m_.size());
  std::size_t count = pow_size(n, static_cast<int>(vars_.size()));
  if (count > 4096) throw BudgetExceededError("assignment space too large to enumerate teams");
  for (std::size_t rank = 0; rank < count; ++rank) {
    std::vector<int> row(vars_.size());
    std::size_t rest = rank;
    for (std::size_t i = vars_.size(); i-- > 0;) {
      row[i] = static_cast<int>(rest % n);
      rest /= n;
    }
    space_.push_back(std::move(row));
  }
  cap_ = std::min(max_rows.value_or(space_.size()), space_.size());
}

std::optional<Team> TeamEnumerator::next() {
  auto materialize = [this]() {
    std::vector<std::vector<int>> rows;
    rows.reserve(combo_.size());
    for (std::size_t idx : combo_) rows.push_back(space_[idx]);
    return Team::make(vars_, std::move(rows));
  };
  for (;;) {
    if (size_ > cap_) return std::nullopt;
    if (fresh_size_) {
      fresh_size_ = false;
      combo_.resize(size_);
      for (std::size_t i = 0; i < size_; ++i) combo_[i] = i;
      return materialize();
    }
    bool advanced = false;
    for (std::size_t i = size_; i-- > 0;) {
      if (combo_[i] < space_.size() - (size_ - i)) {
        ++combo_[i];
        for (std::size_t j = i + 1; j < size_; ++j) combo_[j] = combo_[j - 1] + 1;
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      ++size_;
      fresh_size_ = true;
      continue;
    }
    return materialize();
  }
}

// ---------------------------------------------------------------------------
// Equivalence checking

std::optional<Counterexample> check_equivalence(const EquivalenceTask& task) {
  if (!task.sentence_mode) {
    std::set<Variable> allowed(task.team_vars.begin(), task.team_vars.end());
    for (const Variable& v : free_vars(task.left))
      if (!allowed.count(v)) throw std::invalid_argument("free variable not in team_vars: " + v.name);
    for (const Variable& v : free_vars(task.right))
      if (!allowed.count(v)) throw std::invalid_argument("free variable not in team_vars: " + v.name);
  } else {
    if (!free_vars(task.left).empty() || !free_vars(task.right).empty())
      throw std::invalid_argument("sentence_mode requires sentences");
  }

  StructureEnumerator structures(task.signature, task.max_domain);
  while (auto m = structures.next()) {
    if (task.sentence_mode) {
      Team x = Team::singleton_empty();
      bool l = eval(*m, x, task.left, task.semantics_left, task.budget);
      bool r = eval(*m, x, task.right, task.semantics_right, task.budget);
      if (l != r) return Counterexample{*m, x, l, r};
      continue;
    }
    TeamEnumerator teams(*m, task.team_vars, task.max_team_rows);
    while (auto x = teams.next()) {
      bool l = eval(*m, *x, task.left, task.semantics_left, task.budget);
      bool r = eval(*m, *x, task.right, task.semantics_right, task.budget);
      if (l != r) return Counterexample{*m, *x, l, r};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Property suites

namespace {

Signature sig_r1() {
  Signature s;
  s.relations.emplace_back("R", 1);
  return s;
}

std::vector<Formula> parse_all(const std::vector<std::string>& texts) {
  std::vector<Formula> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse_formula(t));
  return out;
}

std::string describe(const Structure& m, const Team& x) {
  std::ostringstream os;
  os << "structure:\n" << m.to_file_string() << "team:\n" << x.to_csv_string(m);
  return os.str();
}

std::vector<Variable> sorted_free_vars(const Formula& f) {
  auto fv = free_vars(f);
  return std::vector<Variable>(fv.begin(), fv.end());
}

// All teams {∅}[M/xs][F1/y1]..[Fk/yk] for every tuple of strict functions.
std::vector<Team> strict_function_extensions(const Structure& m, const std::vector<Variable>& xs,
                                             const std::vector<Variable>& ys) {
  Team base = Team::singleton_empty();
  for (const Variable& x : xs) base = base.universal_extension(x, m);
  std::vector<Team> out{base};
  for (const Variable& y : ys) {
    std::vector<Team> grown;
    for (const Team& t : out) {
      const std::size_t nrows = t.rows().size();
      std::vector<std::size_t> pick(nrows, 0);
      for (;;) {
        std::vector<Variable> vars = t.vars();
        vars.push_back(y);
        std::vector<std::vector<int>> rows;
        rows.reserve(nrows);
        for (std::size_t r = 0; r < nrows; ++r) {
          std::vector<int> row = t.rows()[r];
          row.push_back(static_cast<int>(pick[r]));
          rows.push_back(std::move(row));
        }
        grown.push_back(Team::make(vars, std::move(rows)));
        std::size_t k = nrows;
        bool done = true;
        while (k-- > 0) {
          if (++pick[k] < static_cast<std::size_t>(m.size())) {
            done = false;
            break;
          }
          pick[k] = 0;
        }
        if (done) break;
      }
    }
    out = std::move(grown);
  }
  return out;
}

using PropertyFn = std::function<CheckReport(const std::vector<Formula>&, const PropertyBounds&)>;

CheckReport prop_empty_team(const std::vector<Formula>& corpus, const PropertyBounds& bounds) {
  CheckReport report{"empty-team", CheckStatus::Pass, {}, {}};
  StructureEnumerator structures(sig_r1(), bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Formula& f : corpus) {
      Team empty = Team::make(sorted_free_vars(f), {});
      for (Semantics sem : {Semantics::Lax, Semantics::Strict}) {
        if (!eval(*m, empty, f, sem, bounds.budget)) {
          report.status = CheckStatus::Fail;
          report.details.push_back("empty team rejected: " + print_formula(f) + " [" +
                                   to_string(sem) + "]");
          return report;
        }
      }
    }
  }
  return report;
}

CheckReport prop_lax_locality(const std::vector<Formula>& corpus, const PropertyBounds& bounds) {
  CheckReport report{"lax-locality", CheckStatus::Pass, {}, {}};
  Variable dummy("u0");
  StructureEnumerator structures(sig_r1(), bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Formula& f : corpus) {
      std::set<Variable> fv = free_vars(f);
      std::vector<Variable> team_vars(fv.begin(), fv.end());
      team_vars.push_back(dummy);
      TeamEnumerator teams(*m, team_vars, bounds.max_team_rows);
      while (auto x = teams.next()) {
        bool wide = eval(*m, *x, f, Semantics::Lax, bounds.budget);
        bool narrow = eval(*m, x->restrict_to(fv), f, Semantics::Lax, bounds.budget);
        if (wide != narrow) {
          report.status = CheckStatus::Fail;
          report.details.push_back("locality violated by " + print_formula(f) + "\n" +
                                   describe(*m, *x));
          return report;
        }
      }
    }
  }
  return report;
}

// Must FIND a strict-semantics locality violation; the counting sentence on a
// team over variables foreign to it is the designated witness family.
CheckReport prop_strict_locality_counterexample(const std::vector<Formula>&,
                                                const PropertyBounds& bounds) {
  CheckReport report{"strict-locality-counterexample", CheckStatus::Fail, {}, {}};
  Formula counting = counting_sentence(2);
  StructureEnumerator structures(Signature{}, bounds.max_domain);
  while (auto m = structures.next()) {
    TeamEnumerator teams(*m, {Variable("u")}, bounds.max_team_rows);
    while (auto x = teams.next()) {
      if (x->rows().empty()) continue;
      bool wide = eval(*m, *x, counting, Semantics::Strict, bounds.budget);
      bool narrow = eval(*m, x->restrict_to({}), counting, Semantics::Strict, bounds.budget);
      if (wide != narrow) {
        report.status = CheckStatus::Pass;
        report.details.push_back("violation found (as required):\n" + describe(*m, *x));
        return report;
      }
    }
  }
  report.details.push_back("no strict-locality violation found; counting sentences should break it");
  return report;
}

CheckReport prop_downward_closure_dep(const std::vector<Formula>& corpus,
                                      const PropertyBounds& bounds) {
  CheckReport report{"downward-closure-dep", CheckStatus::Pass, {}, {}};
  StructureEnumerator structures(sig_r1(), bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Formula& f : corpus) {
      TeamEnumerator teams(*m, sorted_free_vars(f), bounds.max_team_rows);
      while (auto x = teams.next()) {
        if (!eval(*m, *x, f, Semantics::Lax, bounds.budget)) continue;
        const std::size_t n = x->rows().size();
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
          std::vector<std::vector<int>> rows;
          for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) rows.push_back(x->rows()[i]);
          Team sub = x->with_rows(std::move(rows));
          if (!eval(*m, sub, f, Semantics::Lax, bounds.budget)) {
            report.status = CheckStatus::Fail;
            report.details.push_back("downward closure violated by " + print_formula(f) + "\n" +
                                     describe(*m, *x));
            return report;
          }
        }
      }
    }
  }
  return report;
}

CheckReport prop_strict_implies_lax(const std::vector<Formula>& corpus,
                                    const PropertyBounds& bounds) {
  CheckReport report{"strict-implies-lax", CheckStatus::Pass, {}, {}};
  StructureEnumerator structures(sig_r1(), bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Formula& f : corpus) {
      TeamEnumerator teams(*m, sorted_free_vars(f), bounds.max_team_rows);
      while (auto x = teams.next()) {
        if (eval(*m, *x, f, Semantics::Strict, bounds.budget) &&
            !eval(*m, *x, f, Semantics::Lax, bounds.budget)) {
          report.status = CheckStatus::Fail;
          report.details.push_back("strict true but lax false: " + print_formula(f) + "\n" +
                                   describe(*m, *x));
          return report;
        }
      }
    }
  }
  return report;
}

CheckReport prop_flatness(const std::vector<Formula>& corpus, const PropertyBounds& bounds) {
  CheckReport report{"flatness", CheckStatus::Pass, {}, {}};
  // The fast path would make this vacuous, so the team evaluator runs with
  // flatness disabled here and is compared against per-assignment truth.
  EvalOptions raw;
  raw.flatness_fast_path = false;
  raw.structured_search = false;
  StructureEnumerator structures(sig_r1(), bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Formula& f : corpus) {
      TeamEnumerator teams(*m, sorted_free_vars(f), bounds.max_team_rows);
      while (auto x = teams.next()) {
        bool flat = eval_flat(*m, *x, f);
        bool lax = eval(*m, *x, f, Semantics::Lax, bounds.budget, raw);
        bool strict = eval(*m, *x, f, Semantics::Strict, bounds.budget, raw);
        if (flat != lax || flat != strict) {
          report.status = CheckStatus::Fail;
          report.details.push_back("flatness violated by " + print_formula(f) + "\n" +
                                   describe(*m, *x));
          return report;
        }
      }
    }
  }
  return report;
}

CheckReport prop_strict_eq_lax_dep(const std::vector<Formula>& corpus,
                                   const PropertyBounds& bounds) {
  CheckReport report{"strict-eq-lax-dep", CheckStatus::Pass, {}, {}};
  StructureEnumerator structures(sig_r1(), bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Formula& f : corpus) {
      TeamEnumerator teams(*m, sorted_free_vars(f), bounds.max_team_rows);
      while (auto x = teams.next()) {
        bool lax = eval(*m, *x, f, Semantics::Lax, bounds.budget);
        bool strict = eval(*m, *x, f, Semantics::Strict, bounds.budget);
        if (lax != strict) {
          report.status = CheckStatus::Fail;
          report.details.push_back("strict/lax disagree on dependence formula " +
                                   print_formula(f) + "\n" + describe(*m, *x));
          return report;
        }
      }
    }
  }
  return report;
}

CheckReport prop_x_universal(const std::vector<Formula>&, const PropertyBounds& bounds) {
  CheckReport report{"x-universal-strict-extensions", CheckStatus::Pass, {}, {}};
  struct Case {
    std::vector<Variable> xs, ys;
    int domain;
  };
  std::vector<Case> cases = {
      {{Variable("x")}, {Variable("y")}, 2},
      {{Variable("x1"), Variable("x2")}, {Variable("y")}, 2},
      {{Variable("x")}, {Variable("y")}, std::max(2, bounds.max_domain)},
      {{Variable("x")}, {Variable("y1"), Variable("y2")}, 2},
  };
  for (const auto& c : cases) {
    StructureEnumerator structures(Signature{}, c.domain);
    std::optional<Structure> m, last;
    while ((m = structures.next())) last = m;  // pure structure of the largest size
    for (const Team& t : strict_function_extensions(*last, c.xs, c.ys)) {
      if (!is_x_universal(t, c.xs, *last)) {
        report.status = CheckStatus::Fail;
        report.details.push_back("strict extension lost universality:\n" + describe(*last, t));
        return report;
      }
    }
  }
  return report;
}

CheckReport prop_this_on_universal_teams(const std::vector<Formula>&,
                                         const PropertyBounds& bounds) {
  CheckReport report{"prop-this-on-universal-teams", CheckStatus::Pass, {}, {}};
  struct Case {
    const char* dep;
    const char* inc;
  };
  // x⃗ = (x1,x2); v⃗ = (x1) with w⃗ = (x2), and v⃗ = (x1,x2) with w⃗ empty.
  std::vector<Case> cases = {
      {"dep(x1; y)", "A q. inc(q x1 y; x2 x1 y)"},
      {"dep(x1 x2; y)", "inc(x1 x2 y; x1 x2 y)"},
  };
  StructureEnumerator structures(Signature{}, bounds.max_domain);
  while (auto m = structures.next()) {
    for (const Team& t :
         strict_function_extensions(*m, {Variable("x1"), Variable("x2")}, {Variable("y")})) {
      for (const auto& c : cases) {
        Formula dep = parse_formula(c.dep);
        Formula inc = parse_formula(c.inc);
        bool l = eval(*m, t, dep, Semantics::Lax, bounds.budget);
        bool r = eval(*m, t, inc, Semantics::Lax, bounds.budget);
        if (l != r) {
          report.status = CheckStatus::Fail;
          report.details.push_back(std::string("disagreement between ") + c.dep + " and " + c.inc +
                                   " on a universal team:\n" + describe(*m, t));
          return report;
        }
      }
    }
  }
  return report;
}

const std::vector<std::string>& default_corpus(const std::string& name) {
  static const std::vector<std::string> atoms = {
      "R(x)",          "~R(x)",          "x = y",        "x != y",
      "dep(x; y)",     "dep(; y)",       "ind(x; y; y)", "pind(x; y)",
      "inc(x; y)",     "E z. (R(z) & dep(x; z))",        "A z. (R(z) | pind(x; z))",
      "(R(x) & x = y) | inc(x; y)"};
  static const std::vector<std::string> local = {
      "dep(x; y)", "inc(x; y)", "pind(x; y)", "E z. (z = x & R(z))", "R(x) | dep(x; y)"};
  static const std::vector<std::string> dep_only = {
      "dep(x; y)", "dep(; y)", "dep(x; y) | dep(y; x)", "E z. (dep(z; x) & R(z))",
      "A z. (R(z) | dep(z; x))"};
  static const std::vector<std::string> mixed = {
      "dep(x; y)", "inc(x; y)", "pind(x; y)", "inc(x; y) | pind(x; y)",
      "E z. (R(z) & inc(x; z))"};
  static const std::vector<std::string> fo = {
      "R(x)", "~R(x) | x = y", "E z. (R(z) & z = x)", "A z. (R(z) | z != x)",
      "(x = y & R(x)) | ~R(y)"};
  static const std::vector<std::string> none = {};
  if (name == "empty-team") return atoms;
  if (name == "lax-locality") return local;
  if (name == "downward-closure-dep") return dep_only;
  if (name == "strict-implies-lax") return mixed;
  if (name == "flatness") return fo;
  if (name == "strict-eq-lax-dep") return dep_only;
  return none;
}

}  // namespace

std::vector<std::string> property_names() {
  return {"empty-team",
          "lax-locality",
          "strict-locality-counterexample",
          "downward-closure-dep",
          "strict-implies-lax",
          "flatness",
          "strict-eq-lax-dep",
          "x-universal-strict-extensions",
          "prop-this-on-universal-teams"};
}

CheckReport check_property(const std::string& name, const std::vector<Formula>& corpus,
                           const PropertyBounds& bounds) {
  std::vector<Formula> formulas = corpus;
  if (formulas.empty()) formulas = parse_all(default_corpus(name));

  if (name == "empty-team") return prop_empty_team(formulas, bounds);
  if (name == "lax-locality") return prop_lax_locality(formulas, bounds);
  if (name == "strict-locality-counterexample")
    return prop_strict_locality_counterexample(formulas, bounds);
  if (name == "downward-closure-dep") return prop_downward_closure_dep(formulas, bounds);
  if (name == "strict-implies-lax") return prop_strict_implies_lax(formulas, bounds);
  if (name == "flatness") return prop_flatness(formulas, bounds);
  if (name == "strict-eq-lax-dep") return prop_strict_eq_lax_dep(formulas, bounds);
  if (name == "x-universal-strict-extensions") return prop_x_universal(formulas, bounds);
  if (name == "prop-this-on-universal-teams")
    return prop_this_on_universal_teams(formulas, bounds);
  throw std::invalid_argument("unknown property name: " + name);
}

// ---------------------------------------------------------------------------
// Registry

namespace {

EquivalenceTask rewrite_task(std::string name, const std::string& input, Formula output,
                             Signature sig, int max_domain,
                             std::optional<std::size_t> row_cap = std::nullopt) {
  Formula left = parse_formula(input);
  std::vector<Variable> vars = sorted_free_vars(left);
  return EquivalenceTask{std::move(name), left,       std::move(output), Semantics::Lax,
                         Semantics::Lax,  std::move(sig), max_domain,    std::move(vars),
                         row_cap,         false,          EvalBudget{}};
}

Signature sig_of(std::initializer_list<std::pair<const char*, int>> rels) {
  Signature s;
  for (const auto& [n, a] : rels) s.relations.emplace_back(n, a);
  return s;
}

}  // namespace

std::vector<EquivalenceTask> equivalence_registry() {
  std::vector<EquivalenceTask> tasks;
  auto add = [&tasks](EquivalenceTask t) { tasks.push_back(std::move(t)); };

  auto from = [](const std::string& text) { return parse_formula(text); };

  // Dependence atoms as conditional independence atoms.
  add(rewrite_task("rw-dep-to-ind-unary", "dep(x; y)", dep_to_ind(from("dep(x; y)")), {}, 3));
  add(rewrite_task("rw-dep-to-ind-constancy", "dep(; y)", dep_to_ind(from("dep(; y)")), {}, 3));

  // Splitting overlapping independence atoms.
  add(rewrite_task("rw-split-ind-basic", "ind(x; y; y)",
                   split_independence_atoms(from("ind(x; y; y)")), {}, 3));
  add(rewrite_task("rw-split-ind-overlap-m2", "ind(x; y z; z w)",
                   split_independence_atoms(from("ind(x; y z; z w)")), {}, 2));
  add(rewrite_task("rw-split-ind-overlap-m3", "ind(x; y z; z w)",
                   split_independence_atoms(from("ind(x; y z; z w)")), {}, 3, 3));

  // Inclusion atoms as pure independence.
  add(rewrite_task("rw-inc-to-pind-unary", "inc(x; y)", inc_to_pure_ind(from("inc(x; y)")), {}, 2));
  add(rewrite_task("rw-inc-to-pind-unary-m3", "inc(x; y)", inc_to_pure_ind(from("inc(x; y)")), {},
                   3, 3));
  add(rewrite_task("rw-inc-to-pind-binary", "inc(x1 x2; y1 y2)",
                   inc_to_pure_ind(from("inc(x1 x2; y1 y2)")), {}, 2));

  // Dependence atoms as pure independence.
  add(rewrite_task("rw-dep-to-pind-unary", "dep(x; y)", dep_to_pure_ind(from("dep(x; y)")), {}, 2));
  add(rewrite_task("rw-dep-to-pind-binary", "dep(x1 x2; y)", dep_to_pure_ind(from("dep(x1 x2; y)")),
                   {}, 2));

  // Prenexing rules and two nested compositions.
  for (const auto& [name, text] : std::initializer_list<std::pair<const char*, const char*>>{
           {"rw-prenex-rule1", "(E x. R(x)) & S(y)"},
           {"rw-prenex-rule2", "(E x. R(x)) | S(y)"},
           {"rw-prenex-rule3", "(A x. R(x)) & S(y)"},
           {"rw-prenex-rule4", "(A x. R(x)) | S(y)"}}) {
    add(rewrite_task(name, text, to_prenex(parse_formula(text)), sig_of({{"R", 1}, {"S", 1}}), 2));
  }
  {
    const char* text = "((E x. R(x)) | S(y)) & (A z. T(z))";
    add(rewrite_task("rw-prenex-nested-1", text, to_prenex(parse_formula(text)),
                     sig_of({{"R", 1}, {"S", 1}, {"T", 1}}), 2));
  }
  {
    const char* text = "(A x. dep(x; y)) | S(y)";
    add(rewrite_task("rw-prenex-nested-2", text, to_prenex(parse_formula(text)),
                     sig_of({{"S", 1}}), 2));
  }

  // Strict-semantics inclusion translation of Eq-(1)-shaped sentences.
  {
    const char* text = "A x. E y. (dep(x; y) & R(x))";  // w empty
    EquivalenceTask t = rewrite_task(
        "rw-strict-inc-w0", text,
        strict_inclusion_translation(DLNormalForm::from_formula(parse_formula(text))),
        sig_of({{"R", 1}}), 2);
    t.semantics_left = t.semantics_right = Semantics::Strict;
    t.sentence_mode = true;
    add(std::move(t));
  }
  {
    const char* text = "A x1. A x2. E y. (dep(x1; y) & R(x2))";  // |w| = 1
    EquivalenceTask t = rewrite_task(
        "rw-strict-inc-w1", text,
        strict_inclusion_translation(DLNormalForm::from_formula(parse_formula(text))),
        sig_of({{"R", 1}}), 2);
    t.semantics_left = t.semantics_right = Semantics::Strict;
    t.sentence_mode = true;
    add(std::move(t));
  }

  // Universal-quantifier collapses.
  {
    const char* text = "A x1. A x2. E(x1, x2)";
    EquivalenceTask t = rewrite_task(
        "rw-collapse-1forall-basic", text,
        collapse_to_one_forall(PureIndNormalForm::from_formula(parse_formula(text))),
        sig_of({{"E", 2}}), 2);
    t.sentence_mode = true;
    add(std::move(t));
  }
  {
    const char* text = "A x1. A x2. E x3. (pind(x1; x3) & E(x1, x2))";
    EquivalenceTask t = rewrite_task(
        "rw-collapse-1forall-ind", text,
        collapse_to_one_forall(PureIndNormalForm::from_formula(parse_formula(text))),
        sig_of({{"E", 2}}), 2);
    t.sentence_mode = true;
    add(std::move(t));
  }
  {
    const char* text = "A x1. E(x1, x1)";
    EquivalenceTask t = rewrite_task(
        "rw-collapse-2forall-n1", text,
        collapse_to_two_forall(PureIndNormalForm::from_formula(parse_formula(text))),
        sig_of({{"E", 2}}), 2);
    t.sentence_mode = true;
    add(std::move(t));
  }
  {
    const char* text = "A x1. A x2. E(x1, x2)";
    EquivalenceTask t = rewrite_task(
        "rw-collapse-2forall-n2", text,
        collapse_to_two_forall(PureIndNormalForm::from_formula(parse_formula(text))),
        sig_of({{"E", 2}}), 2);
    t.sentence_mode = true;
    add(std::move(t));
  }

  return tasks;
}

namespace {

CheckReport run_equivalence(const EquivalenceTask& task) {
  CheckReport report{task.name, CheckStatus::Pass, {}, {}};
  try {
    if (auto cex = check_equivalence(task)) {
      report.status = CheckStatus::Fail;
      std::ostringstream os;
      os << "left=" << (cex->verdict_left ? "true" : "false")
         << " right=" << (cex->verdict_right ? "true" : "false") << "\n"
         << describe(cex->structure, cex->team);
      report.details.push_back(os.str());
      report.counterexample = std::move(cex);
    }
  } catch (const BudgetExceededError& e) {
    report.status = CheckStatus::Budget;
    report.details.push_back(e.what());
  }
  return report;
}

CheckReport run_counting_strict(int n) {
  CheckReport report{"counting-strict-n" + std::to_string(n), CheckStatus::Pass, {}, {}};
  Formula phi = counting_sentence(n);
  std::size_t cases = 0;
  try {
    for (int dom = 2; dom <= 3; ++dom) {
      StructureEnumerator structures(Signature{}, dom);
      std::optional<Structure> m, last;
      while ((m = structures.next())) last = m;

      // Teams over one dummy variable (sizes 1..|M|).
      TeamEnumerator teams(*last, {Variable("u")}, std::nullopt);
      while (auto x = teams.next()) {
        if (x->rows().empty()) continue;
        bool got = eval(*last, *x, phi, Semantics::Strict);
        bool want = x->rows().size() >= static_cast<std::size_t>(n);
        ++cases;
        if (got != want) {
          report.status = CheckStatus::Fail;
          report.details.push_back("counting mismatch at |X|=" + std::to_string(x->rows().size()) +
                                   " |M|=" + std::to_string(dom) + "\n" + describe(*last, *x));
          return report;
        }
      }
    }
    // A size-4 team over two dummy variables (|M| = 2).
    StructureEnumerator structures(Signature{}, 2);
    Structure m2 = *structures.next();
    Team full = Team::singleton_empty()
                    .universal_extension(Variable("u1"), m2)
                    .universal_extension(Variable("u2"), m2);
    bool got = eval(m2, full, phi, Semantics::Strict);
    bool want = full.rows().size() >= static_cast<std::size_t>(n);
    ++cases;
    if (got != want) {
      report.status = CheckStatus::Fail;
      report.details.push_back("counting mismatch on the 4-row dummy team");
      return report;
    }
  } catch (const BudgetExceededError& e) {
    report.status = CheckStatus::Budget;
    report.details.push_back(e.what());
    return report;
  }
  report.details.push_back(std::to_string(cases) + " cases agree with |X| >= " + std::to_string(n));
  return report;
}

CheckReport run_counting_divergence() {
  CheckReport report{"counting-lax-divergence", CheckStatus::Pass, {}, {}};
  Formula phi = counting_sentence(2);
  StructureEnumerator structures(Signature{}, 2);
  Structure m2 = *structures.next();
  Team singleton = Team::make({Variable("u")}, {{0}});
  bool lax = eval(m2, singleton, phi, Semantics::Lax);
  bool strict = eval(m2, singleton, phi, Semantics::Strict);
  if (!(lax && !strict)) {
    report.status = CheckStatus::Fail;
    report.details.push_back(std::string("expected lax=true strict=false, got lax=") +
                             (lax ? "true" : "false") + " strict=" + (strict ? "true" : "false"));
  }
  return report;
}

CheckReport run_eso_agreement() {
  CheckReport report{"eso-translation-agreement", CheckStatus::Pass, {}, {}};
  const std::vector<std::string> corpus = {
      "A x. E y. dep(x; y)",              // I = ∅ degenerate case
      "A x. E y. E z. ind(x; y; z)",      // one conditional independence atom
      "A x. E y. (R(y) | dep(x; y))",     // dependence under a disjunction
      "A x. E y. (pind(x; y) & R(x))",    // pure independence atom
  };
  try {
    for (const auto& text : corpus) {
      Formula phi = parse_formula(text);
      ESOSentence translated = translate_ind_to_eso(phi);
      FragmentProfile profile = classify_fragment(phi);
      int k = std::max(profile.max_dep_arity.value_or(0), profile.max_ind_measure.value_or(0));
      if (max_so_arity(translated) > k) {
        report.status = CheckStatus::Fail;
        report.details.push_back("arity bound violated for " + text);
        return report;
      }
      StructureEnumerator structures(sig_of({{"R", 1}}), 2);
      while (auto m = structures.next()) {
        bool team_truth = eval(*m, Team::singleton_empty(), phi, Semantics::Lax);
        bool eso_truth = eval_eso(*m, translated);
        if (team_truth != eso_truth) {
          report.status = CheckStatus::Fail;
          report.details.push_back("translation disagrees for " + text + "\n" +
                                   m->to_file_string());
          return report;
        }
      }
    }
  } catch (const BudgetExceededError& e) {
    report.status = CheckStatus::Budget;
    report.details.push_back(e.what());
  }
  return report;
}

}  // namespace

std::vector<CheckReport> run_registry() {
  std::vector<CheckReport> reports;
  for (const auto& task : equivalence_registry()) reports.push_back(run_equivalence(task));
  reports.push_back(run_counting_strict(2));
  reports.push_back(run_counting_strict(3));
  reports.push_back(run_counting_divergence());
  reports.push_back(run_eso_agreement());
  for (const auto& name : property_names())
    reports.push_back(check_property(name, {}, PropertyBounds{}));
  return reports;
}

}  // namespace teamlog
