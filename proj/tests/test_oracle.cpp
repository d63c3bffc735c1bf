#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "teamlog/oracle.hpp"
#include "teamlog/rewrite.hpp"

using namespace teamlog;

namespace {

std::size_t count_structures(Signature sig, int max_domain) {
  StructureEnumerator e(std::move(sig), max_domain);
  std::size_t n = 0;
  while (e.next()) ++n;
  return n;
}

Signature sig_r1() {
  Signature s;
  s.relations.emplace_back("R", 1);
  return s;
}

}  // namespace

TEST_CASE("structure enumeration counts") {
  CHECK(count_structures(Signature{}, 2) == 1);
  CHECK(count_structures(sig_r1(), 2) == 4);    // 2^2 subsets
  CHECK(count_structures(sig_r1(), 3) == 12);   // 4 + 8
  Signature with_const = sig_r1();
  with_const.constants.push_back("c");
  CHECK(count_structures(with_const, 2) == 8);  // 4 subsets x 2 constants
}

TEST_CASE("structure enumeration is deterministic and duplicate-free") {
  auto run = [] {
    StructureEnumerator e(sig_r1(), 3);
    std::vector<std::string> out;
    while (auto m = e.next()) out.push_back(m->to_file_string());
    return out;
  };
  std::vector<std::string> a = run(), b = run();
  CHECK(a == b);
  std::set<std::string> uniq(a.begin(), a.end());
  CHECK(uniq.size() == a.size());
}

TEST_CASE("team enumeration counts") {
  Structure m2 = load_structure("domain = 0 1\n");
  {
    TeamEnumerator e(m2, {Variable("x")}, 4);
    std::size_t n = 0;
    while (e.next()) ++n;
    CHECK(n == 4);  // ∅, {0}, {1}, {0,1}
  }
  {
    TeamEnumerator e(m2, {}, std::nullopt);
    std::vector<Team> teams;
    while (auto t = e.next()) teams.push_back(*t);
    REQUIRE(teams.size() == 2);
    CHECK(teams[0].rows().empty());
    CHECK(teams[1] == Team::singleton_empty());
  }
  {
    TeamEnumerator e(m2, {Variable("x"), Variable("y")}, std::nullopt);
    std::size_t n = 0;
    while (e.next()) ++n;
    CHECK(n == 16);  // 2^(2^2)
  }
  {
    TeamEnumerator e(m2, {Variable("x"), Variable("y")}, 1);
    std::size_t n = 0;
    while (e.next()) ++n;
    CHECK(n == 5);  // empty team + 4 singletons
  }
}

TEST_CASE("check_equivalence finds no counterexample for a sound rewrite") {
  EquivalenceTask task{"dep-vs-ind",
                       parse_formula("dep(x; y)"),
                       parse_formula("ind(x; y; y)"),
                       Semantics::Lax,
                       Semantics::Lax,
                       sig_r1(),
                       2,
                       {Variable("x"), Variable("y")},
                       std::nullopt,
                       false,
                       EvalBudget{}};
  CHECK_FALSE(check_equivalence(task).has_value());
}

TEST_CASE("check_equivalence reports the first counterexample deterministically") {
  // The counting sentence distinguishes lax from strict already on {∅}.
  EquivalenceTask task{"counting-lax-vs-strict",
                       counting_sentence(2),
                       counting_sentence(2),
                       Semantics::Lax,
                       Semantics::Strict,
                       Signature{},
                       2,
                       {},
                       std::nullopt,
                       true,
                       EvalBudget{}};
  auto cex = check_equivalence(task);
  REQUIRE(cex.has_value());
  CHECK(cex->team.size() == 1);
  CHECK(cex->verdict_left);
  CHECK_FALSE(cex->verdict_right);

  // Swapping sides finds the same witness with verdicts swapped.
  std::swap(task.semantics_left, task.semantics_right);
  auto swapped = check_equivalence(task);
  REQUIRE(swapped.has_value());
  CHECK(swapped->team == cex->team);
  CHECK(swapped->verdict_right);
  CHECK_FALSE(swapped->verdict_left);
}

TEST_CASE("identical formulas are never distinguished") {
  Formula f = parse_formula("inc(x; y) | dep(x; y)");
  EquivalenceTask task{"self",
                       f,
                       f,
                       Semantics::Lax,
                       Semantics::Lax,
                       sig_r1(),
                       2,
                       {Variable("x"), Variable("y")},
                       std::nullopt,
                       false,
                       EvalBudget{}};
  CHECK_FALSE(check_equivalence(task).has_value());
}

TEST_CASE("check_equivalence validates its precondition") {
  EquivalenceTask bad{"free-var-escape",
                      parse_formula("dep(x; y)"),
                      parse_formula("dep(x; y)"),
                      Semantics::Lax,
                      Semantics::Lax,
                      Signature{},
                      2,
                      {Variable("x")},
                      std::nullopt,
                      false,
                      EvalBudget{}};
  CHECK_THROWS_AS(check_equivalence(bad), std::invalid_argument);
}

TEST_CASE("property suites run and pass at small bounds") {
  PropertyBounds bounds;
  for (const std::string& name :
       {"empty-team", "strict-implies-lax", "flatness", "strict-eq-lax-dep",
        "x-universal-strict-extensions", "prop-this-on-universal-teams"}) {
    CheckReport report = check_property(name, {}, bounds);
    CAPTURE(name);
    CAPTURE(report.details.empty() ? "" : report.details.front());
    CHECK(report.status == CheckStatus::Pass);
  }
  CHECK_THROWS_AS(check_property("no-such-property", {}, bounds), std::invalid_argument);
}

TEST_CASE("the strict-locality check finds its counterexample") {
  CheckReport report = check_property("strict-locality-counterexample", {}, PropertyBounds{});
  CHECK(report.status == CheckStatus::Pass);
  REQUIRE_FALSE(report.details.empty());
}

TEST_CASE("a custom corpus feeds a property") {
  std::vector<Formula> corpus = {parse_formula("dep(x; y)")};
  CheckReport report = check_property("empty-team", corpus, PropertyBounds{});
  CHECK(report.status == CheckStatus::Pass);
}

TEST_CASE("the registry names every rewrite pass family") {
  std::vector<EquivalenceTask> tasks = equivalence_registry();
  std::set<std::string> names;
  for (const auto& t : tasks) names.insert(t.name);
  for (const char* expected :
       {"rw-dep-to-ind-unary", "rw-split-ind-basic", "rw-inc-to-pind-unary",
        "rw-inc-to-pind-binary", "rw-dep-to-pind-unary", "rw-dep-to-pind-binary",
        "rw-prenex-rule1", "rw-prenex-rule2", "rw-prenex-rule3", "rw-prenex-rule4",
        "rw-prenex-nested-1", "rw-prenex-nested-2", "rw-strict-inc-w0", "rw-strict-inc-w1",
        "rw-collapse-1forall-basic", "rw-collapse-2forall-n2"}) {
    CAPTURE(expected);
    CHECK(names.count(expected) == 1);
  }
}

TEST_CASE("a cheap slice of the registry passes") {
  for (const auto& task : equivalence_registry()) {
    if (task.name != "rw-dep-to-ind-unary" && task.name != "rw-prenex-rule4" &&
        task.name != "rw-strict-inc-w0" && task.name != "rw-collapse-2forall-n1")
      continue;
    CAPTURE(task.name);
    CHECK_FALSE(check_equivalence(task).has_value());
  }
}
