#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/naive_eval.hpp"
#include "teamlog/eval.hpp"
#include "teamlog/rewrite.hpp"

using namespace teamlog;

namespace {

Structure m2() { return load_structure("domain = 0 1\n"); }

std::vector<Structure> structures_r1(int domain) {
  std::vector<Structure> out;
  std::string base = domain == 2 ? "domain = 0 1\n" : "domain = 0 1 2\n";
  std::vector<std::string> elems = {"0", "1", "2"};
  for (int mask = 0; mask < (1 << domain); ++mask) {
    std::string rel = "R/1 = {";
    bool first = true;
    for (int e = 0; e < domain; ++e) {
      if (!(mask >> e & 1)) continue;
      if (!first) rel += ",";
      rel += elems[e];
      first = false;
    }
    rel += "}\n";
    out.push_back(load_structure(base + rel));
  }
  return out;
}

std::vector<Team> all_teams(const Structure& m, const std::vector<Variable>& vars) {
  std::vector<std::vector<int>> space;
  std::size_t count = 1;
  for (std::size_t i = 0; i < vars.size(); ++i) count *= m.size();
  for (std::size_t rank = 0; rank < count; ++rank) {
    std::vector<int> row(vars.size());
    std::size_t rest = rank;
    for (std::size_t i = vars.size(); i-- > 0;) {
      row[i] = static_cast<int>(rest % m.size());
      rest /= m.size();
    }
    space.push_back(std::move(row));
  }
  std::vector<Team> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << space.size()); ++mask) {
    std::vector<std::vector<int>> rows;
    for (std::size_t i = 0; i < space.size(); ++i)
      if (mask >> i & 1) rows.push_back(space[i]);
    out.push_back(Team::make(vars, std::move(rows)));
  }
  return out;
}

}  // namespace

TEST_CASE("every formula is satisfied by the empty team") {
  const char* corpus[] = {"R(x)",       "~R(x)",      "x = y",         "dep(x; y)",
                          "dep(; y)",   "pind(x; y)", "ind(x; y; y)",  "inc(x; y)",
                          "E z. dep(z; x)", "A z. (R(z) | inc(x; z))"};
  for (const Structure& m : structures_r1(2)) {
    for (const char* text : corpus) {
      Formula f = parse_formula(text);
      auto fv = free_vars(f);
      Team empty = Team::make({fv.begin(), fv.end()}, {});
      CHECK(eval(m, empty, f, Semantics::Lax));
      CHECK(eval(m, empty, f, Semantics::Strict));
    }
  }
}

TEST_CASE("dependence atom spec example") {
  Structure m = m2();
  Team x = Team::make({Variable("x"), Variable("y")}, {{0, 0}, {0, 1}});
  Formula f = parse_formula("dep(x; y)");
  CHECK_FALSE(eval(m, x, f, Semantics::Lax));
  CHECK_FALSE(eval(m, x, f, Semantics::Strict));
}

TEST_CASE("inclusion atom spec example") {
  Structure m = m2();
  Team x = Team::make({Variable("x"), Variable("y")}, {{0, 1}, {1, 0}});
  Formula f = parse_formula("inc(x; y)");
  CHECK(eval(m, x, f, Semantics::Lax));
  CHECK(eval(m, x, f, Semantics::Strict));
}

TEST_CASE("counting sentence diverges between strict and lax") {
  Structure m = m2();
  Team singleton = Team::make({Variable("u")}, {{0}});
  Formula two = counting_sentence(2);
  CHECK_FALSE(eval(m, singleton, two, Semantics::Strict));
  CHECK(eval(m, singleton, two, Semantics::Lax));
}

TEST_CASE("eval_flat agrees with per-row truth") {
  Structure m = m2();
  Team x = Team::make({Variable("x")}, {{0}, {1}});
  CHECK(eval_flat(m, x, parse_formula("x = x")));

  Structure mc = load_structure("domain = 0 1\nconst zero = 0\n");
  CHECK_FALSE(eval_flat(mc, x, parse_formula("x = zero")));
  Team lo = Team::make({Variable("x")}, {{0}});
  CHECK(eval_flat(mc, lo, parse_formula("x = zero")));

  CHECK_THROWS_AS(eval_flat(m, x, parse_formula("dep(x; x)")), EvalError);
}

TEST_CASE("flatness: first-order formulas evaluate per assignment") {
  const char* corpus[] = {"R(x)", "~R(x) | x = y", "E z. (R(z) & z = x)",
                          "A z. (R(z) | z != x)", "(x = y & R(x)) | ~R(y)"};
  EvalOptions raw{false, false};
  for (const Structure& m : structures_r1(2)) {
    for (const char* text : corpus) {
      Formula f = parse_formula(text);
      auto fv = free_vars(f);
      std::vector<Variable> vars(fv.begin(), fv.end());
      for (const Team& x : all_teams(m, vars)) {
        bool flat = eval_flat(m, x, f);
        CHECK(eval(m, x, f, Semantics::Lax) == flat);
        CHECK(eval(m, x, f, Semantics::Strict) == flat);
        CHECK(eval(m, x, f, Semantics::Lax, {}, raw) == flat);
        CHECK(eval(m, x, f, Semantics::Strict, {}, raw) == flat);
      }
    }
  }
}

TEST_CASE("search engine agrees with the naive reference on a mixed corpus") {
  const char* corpus[] = {
      "dep(x; y)",
      "inc(x; y)",
      "pind(x; y)",
      "ind(x; y; y)",
      "inc(x; y) | pind(x; y)",
      "(~R(x) & R(y)) | inc(y; x)",
      "E z. (R(z) & dep(x; z))",
      "E z. dep(z; x)",
      "A z. (R(z) | dep(z; x))",
      "A z. E w. (z = w & inc(x; w))",
      // chains of fresh existentials, the block-search shape
      "E z. E w. ((R(z) | z = x) & dep(z; w))",
      "E z. E w. (inc(z; w) & z != x)",
      "E z. E w. (pind(z; w) & inc(x; z))",
  };
  EvalOptions structured{true, true};
  EvalOptions generic{true, false};
  for (const Structure& m : structures_r1(2)) {
    for (const char* text : corpus) {
      Formula f = parse_formula(text);
      auto fv = free_vars(f);
      std::vector<Variable> vars(fv.begin(), fv.end());
      for (const Team& x : all_teams(m, vars)) {
        for (Semantics sem : {Semantics::Lax, Semantics::Strict}) {
          bool expected = testsupport::naive_eval(m, x, f, sem);
          CHECK(eval(m, x, f, sem, {}, structured) == expected);
          CHECK(eval(m, x, f, sem, {}, generic) == expected);
        }
      }
    }
  }
}

TEST_CASE("quantifier shadowing follows the overwrite rule") {
  Structure m = m2();
  Team x0 = Team::make({Variable("x")}, {{0}});

  // {x=0}[M/x] covers both values, so A x. R(x) needs R to be total.
  Formula all = parse_formula("A x. R(x)");
  CHECK_FALSE(eval(load_structure("domain = 0 1\nR/1 = {0}\n"), x0, all, Semantics::Lax));
  CHECK(eval(load_structure("domain = 0 1\nR/1 = {0,1}\n"), x0, all, Semantics::Lax));

  // E x. R(x) can move the single row anywhere.
  Formula some = parse_formula("E x. R(x)");
  CHECK(eval(load_structure("domain = 0 1\nR/1 = {1}\n"), x0, some, Semantics::Lax));
  CHECK_FALSE(eval(load_structure("domain = 0 1\nR/1 = {}\n"), x0, some, Semantics::Strict));
}

TEST_CASE("shadowed quantifiers agree with the naive reference") {
  Formula f = parse_formula("E x. (dep(x; y) & R(x))");
  Formula g = parse_formula("A x. (R(x) | dep(x; y))");
  for (const Structure& m : structures_r1(2)) {
    for (const Team& x : all_teams(m, {Variable("x"), Variable("y")})) {
      for (Semantics sem : {Semantics::Lax, Semantics::Strict}) {
        CHECK(eval(m, x, f, sem) == testsupport::naive_eval(m, x, f, sem));
        CHECK(eval(m, x, g, sem) == testsupport::naive_eval(m, x, g, sem));
      }
    }
  }
}

TEST_CASE("strict satisfaction implies lax satisfaction") {
  const char* corpus[] = {"inc(x; y) | pind(x; y)", "E z. (R(z) & inc(x; z))",
                          "counting", "A z. (R(z) | pind(x; z))"};
  Formula counting = counting_sentence(2);
  for (const Structure& m : structures_r1(2)) {
    for (const char* text : corpus) {
      Formula f = std::string(text) == "counting" ? counting : parse_formula(text);
      std::set<Variable> fv = free_vars(f);
      std::vector<Variable> vars(fv.begin(), fv.end());
      if (vars.empty()) vars = {Variable("u")};
      for (const Team& x : all_teams(m, vars)) {
        if (eval(m, x, f, Semantics::Strict)) CHECK(eval(m, x, f, Semantics::Lax));
      }
    }
  }
}

TEST_CASE("x-universal teams") {
  Structure m = m2();
  Variable x("x"), y("y");
  Team grid = Team::singleton_empty().universal_extension(x, m);
  CHECK(is_x_universal(grid, {x}, m));

  Team dup = Team::make({x, y}, {{0, 0}, {0, 1}, {1, 0}});
  CHECK_FALSE(is_x_universal(dup, {x}, m));

  // Every strict function extension of {∅}[M/x] stays x-universal.
  for (int f0 = 0; f0 < 2; ++f0) {
    for (int f1 = 0; f1 < 2; ++f1) {
      Team ext = Team::make({x, y}, {{0, f0}, {1, f1}});
      CHECK(is_x_universal(ext, {x}, m));
      CHECK(is_x_universal(ext, {x, y}, m) == false);
    }
  }
}

TEST_CASE("budget exhaustion is a distinct outcome") {
  Structure m = m2();
  Team x = Team::make({Variable("x"), Variable("y")},
                      {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  // A disjunction of two non-flat sides forces the generic cover search.
  Formula f = parse_formula("dep(x; y) | inc(x; y)");
  EvalBudget tiny;
  tiny.max_branching = 3;
  CHECK_THROWS_AS(eval(m, x, f, Semantics::Lax, tiny), BudgetExceededError);

  EvalBudget rows;
  rows.max_team_rows = 2;
  CHECK_THROWS_AS(eval(m, x, parse_formula("A z. inc(x; z)"), Semantics::Lax, rows),
                  BudgetExceededError);

  EvalBudget zero;
  zero.max_branching = 0;
  CHECK_THROWS_AS(eval(m, x, f, Semantics::Lax, zero), std::invalid_argument);
}

TEST_CASE("missing team variables are reported") {
  Structure m = m2();
  Team x = Team::make({Variable("x")}, {{0}});
  CHECK_THROWS_AS(eval(m, x, parse_formula("dep(x; y)"), Semantics::Lax), EvalError);
  // Constants resolve instead of failing.
  Structure mc = load_structure("domain = 0 1\nconst c = 1\n");
  CHECK_FALSE(eval(mc, x, parse_formula("x = c"), Semantics::Lax));
}

TEST_CASE("lax locality on teams with a dummy variable") {
  Formula f = parse_formula("dep(x; y) | inc(y; x)");
  std::set<Variable> fv = free_vars(f);
  for (const Structure& m : structures_r1(2)) {
    for (const Team& x : all_teams(m, {Variable("u"), Variable("x"), Variable("y")})) {
      CHECK(eval(m, x, f, Semantics::Lax) ==
            eval(m, x.restrict_to(fv), f, Semantics::Lax));
    }
  }
}

TEST_CASE("random formulas: structured, generic, and naive searches agree") {
  std::mt19937 rng(424242);
  std::vector<Variable> pool = {Variable("x"), Variable("y")};
  // Scope-aware generation: atoms draw from the free pool plus whatever the
  // enclosing quantifiers bound, so the quantified columns matter.
  std::vector<Variable> scope = pool;
  auto var = [&]() { return scope[rng() % scope.size()]; };
  auto tuple = [&](std::size_t max_len, bool allow_empty) {
    std::size_t len = rng() % (max_len + 1);
    if (!allow_empty && len == 0) len = 1;
    std::vector<Variable> t;
    for (std::size_t i = 0; i < len; ++i) t.push_back(var());
    return t;
  };
  std::function<Formula(int)> gen = [&](int depth) -> Formula {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 5 : 9);
    switch (pick(rng)) {
      case 0: return Formula::atom(RelationAtom{"R", {var()}});
      case 1: return Formula::neg_atom(EqualityAtom{var(), var()});
      case 2: return Formula::atom(EqualityAtom{var(), var()});
      case 3: return Formula::atom(DepAtom{tuple(1, true), var()});
      case 4: return Formula::atom(IndAtom{tuple(1, true), tuple(1, false), tuple(1, false)});
      case 5: {
        auto l = tuple(1, false);
        return Formula::atom(IncAtom{l, {var()}});
      }
      case 6: return Formula::conj(gen(depth - 1), gen(depth - 1));
      case 7: return Formula::disj(gen(depth - 1), gen(depth - 1));
      case 8:
      default: {
        Variable v = rng() % 2 ? Variable("z") : Variable("w");
        bool fresh = std::find(scope.begin(), scope.end(), v) == scope.end();
        if (fresh) scope.push_back(v);
        Formula body = gen(depth - 1);
        if (fresh) scope.pop_back();
        return pick(rng) % 2 ? Formula::exists(v, std::move(body))
                             : Formula::forall(v, std::move(body));
      }
    }
  };
  std::vector<Structure> ms = structures_r1(2);
  EvalOptions structured{true, true};
  EvalOptions generic{true, false};
  // Up to two base rows: three nested quantifiers still keep the naive
  // reference's choice spaces manageable.
  std::vector<Team> teams;
  for (const Team& t : all_teams(ms[0], pool))
    if (t.size() <= 2) teams.push_back(t);
  for (int i = 0; i < 200; ++i) {
    Formula f = gen(3);
    // Quantified-but-unbound leftovers would escape the team domain.
    bool closed = true;
    for (const Variable& v : free_vars(f))
      closed = closed && (v == Variable("x") || v == Variable("y"));
    if (!closed) continue;
    const Structure& m = ms[rng() % ms.size()];
    const Team& x = teams[rng() % teams.size()];
    for (Semantics sem : {Semantics::Lax, Semantics::Strict}) {
      bool expected = testsupport::naive_eval(m, x, f, sem);
      CHECK(eval(m, x, f, sem, {}, structured) == expected);
      CHECK(eval(m, x, f, sem, {}, generic) == expected);
    }
  }
}
