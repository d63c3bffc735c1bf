#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "support/naive_eval.hpp"
#include "teamlog/eval.hpp"
#include "teamlog/rewrite.hpp"

using namespace teamlog;

namespace {

std::vector<Structure> structures_r1() {
  std::vector<Structure> out;
  for (int mask = 0; mask < 4; ++mask) {
    std::string rel = "R/1 = {";
    if (mask & 1) rel += "0";
    if ((mask & 3) == 3) rel += ",";
    if (mask & 2) rel += "1";
    out.push_back(load_structure("domain = 0 1\n" + rel + "}\n"));
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

// Equivalence over all two-element structures with R/1 and all teams over the
// union of the free variables.
void check_lax_equivalent(const Formula& a, const Formula& b) {
  std::set<Variable> fv = free_vars(a);
  for (const Variable& v : free_vars(b)) fv.insert(v);
  std::vector<Variable> vars(fv.begin(), fv.end());
  for (const Structure& m : structures_r1()) {
    for (const Team& x : all_teams(m, vars)) {
      CAPTURE(print_formula(a));
      CAPTURE(print_formula(b));
      CAPTURE(x.to_csv_string(m));
      CHECK(eval(m, x, a, Semantics::Lax) == eval(m, x, b, Semantics::Lax));
    }
  }
}

}  // namespace

TEST_CASE("dep_to_ind rewrites dependence atoms in place") {
  CHECK(dep_to_ind(parse_formula("dep(x; y)")) == parse_formula("ind(x; y; y)"));
  CHECK(dep_to_ind(parse_formula("dep(; y)")) == parse_formula("ind(; y; y)"));
  CHECK(dep_to_ind(parse_formula("A x. (dep(x; y) | R(x))")) ==
        parse_formula("A x. (ind(x; y; y) | R(x))"));
  check_lax_equivalent(parse_formula("dep(x; y)"), dep_to_ind(parse_formula("dep(x; y)")));
}

TEST_CASE("split_independence_atom follows the shared-variable analysis") {
  // y ⊥_x y: both sides collapse, y is functionally determined by x.
  Formula split1 =
      split_independence_atom(IndAtom{{Variable("x")}, {Variable("y")}, {Variable("y")}});
  CHECK(split1 == Formula::conj(Formula::atom(IndAtom{{Variable("x")}, {}, {}}),
                                Formula::atom(DepAtom{{Variable("x")}, Variable("y")})));

  // yz ⊥_x zw -> y ⊥_x w ∧ =(x,z).
  Formula split2 = split_independence_atom(
      IndAtom{{Variable("x")}, {Variable("y"), Variable("z")}, {Variable("z"), Variable("w")}});
  CHECK(split2 ==
        Formula::conj(Formula::atom(IndAtom{{Variable("x")}, {Variable("y")}, {Variable("w")}}),
                      Formula::atom(DepAtom{{Variable("x")}, Variable("z")})));

  // Already disjoint tuples come back untouched.
  IndAtom disjoint{{Variable("x")}, {Variable("y")}, {Variable("z")}};
  CHECK(split_independence_atom(disjoint) == Formula::atom(disjoint));

  check_lax_equivalent(parse_formula("ind(x; y; y)"),
                       split_independence_atoms(parse_formula("ind(x; y; y)")));
  check_lax_equivalent(parse_formula("ind(x; y z; z y)"),
                       split_independence_atoms(parse_formula("ind(x; y z; z y)")));
}

TEST_CASE("inc_to_pure_ind produces the universal three-way disjunction") {
  Formula out = inc_to_pure_ind(parse_formula("inc(x; y)"));
  Formula expected = parse_formula(
      "A v1. A v2. A z1. ((z1 != x & z1 != y) | (v1 != v2 & z1 != y) |"
      " ((v1 = v2 | z1 = y) & pind(z1; v1 v2)))");
  CHECK(out == expected);

  FragmentProfile p = classify_fragment(out);
  CHECK(p.universal_count == 3);  // |x| + 2
  CHECK_FALSE(p.max_inc_width.has_value());

  check_lax_equivalent(parse_formula("inc(x; y)"), out);

  // Introduced variables avoid names already present.
  Formula clash = inc_to_pure_ind(parse_formula("inc(v1; z1)"));
  std::set<Variable> inner = all_variables(clash);
  CHECK(inner.count(Variable("v11")));
  CHECK(inner.count(Variable("z11")));
}

TEST_CASE("dep_to_pure_ind produces the guarded pure-independence form") {
  Formula out = dep_to_pure_ind(parse_formula("dep(x; y)"));
  CHECK(out == parse_formula("A z1. E w. ((z1 != x | w = y) & pind(x y; z1 w))"));

  FragmentProfile p = classify_fragment(out);
  CHECK_FALSE(p.max_dep_arity.has_value());
  CHECK(p.max_ind_measure == 3);  // x, y, z1, w distinct

  check_lax_equivalent(parse_formula("dep(x; y)"), out);

  // Constancy atoms lose the universal block entirely.
  Formula constancy = dep_to_pure_ind(parse_formula("dep(; y)"));
  CHECK(constancy == parse_formula("E w. (w = y & pind(y; w))"));
  check_lax_equivalent(parse_formula("dep(; y)"), constancy);
}

TEST_CASE("prenexing: the four pull rules") {
  CHECK(to_prenex(parse_formula("(E x. R(x)) & S(y)")) == parse_formula("E x. (R(x) & S(y))"));
  CHECK(to_prenex(parse_formula("(E x. R(x)) | S(y)")) == parse_formula("E x. (R(x) | S(y))"));
  CHECK(to_prenex(parse_formula("(A x. R(x)) & S(y)")) == parse_formula("A x. (R(x) & S(y))"));
  CHECK(to_prenex(parse_formula("(A x. R(x)) | S(y)")) ==
        parse_formula("E a. E b. A x. ((R(x) & a = b) | (S(y) & a != b))"));
}

namespace {

void collect_non_fo_atoms(const Formula& f, std::vector<Atom>& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      if (!is_first_order(f.atom_ref())) out.push_back(f.atom_ref());
      return;
    case Formula::Kind::NegAtom:
      return;
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      collect_non_fo_atoms(f.left(), out);
      collect_non_fo_atoms(f.right(), out);
      return;
    case Formula::Kind::Exists:
    case Formula::Kind::Forall:
      collect_non_fo_atoms(f.body(), out);
      return;
  }
}

}  // namespace

TEST_CASE("prenexing preserves shape invariants") {
  const char* inputs[] = {
      "(E x. R(x)) & S(y)",
      "(A x. R(x)) | S(y)",
      "((E x. R(x)) | S(y)) & (A z. R(z))",
      "(A x. dep(x; y)) | S(y)",
      "(E x. dep(x; y)) & ((E z. R(z)) | S(y))",
      "(A x. R(x)) | (A z. S(z))",
  };
  for (const char* text : inputs) {
    Formula in = parse_formula(text);
    Formula out = to_prenex(in);
    CAPTURE(text);
    CAPTURE(print_formula(out));
    CHECK(is_prenex(out));
    CHECK(classify_fragment(out).universal_count == classify_fragment(in).universal_count);
    std::vector<Atom> in_atoms, out_atoms;
    collect_non_fo_atoms(in, in_atoms);
    collect_non_fo_atoms(out, out_atoms);
    REQUIRE(in_atoms.size() == out_atoms.size());
    for (std::size_t i = 0; i < in_atoms.size(); ++i) CHECK(in_atoms[i] == out_atoms[i]);
  }
}

TEST_CASE("prenexing renames apart only on collision") {
  CHECK(to_prenex(parse_formula("(E x. R(x)) & (E x. S(x))")) ==
        parse_formula("E x. E x1. (R(x) & S(x1))"));
}

TEST_CASE("prenex outputs are equivalent to their inputs") {
  const char* inputs[] = {
      "(E x. R(x)) & S(y)",
      "(E x. R(x)) | S(y)",
      "(A x. R(x)) & S(y)",
      "(A x. R(x)) | S(y)",
      "(A x. dep(x; y)) | S(y)",
  };
  // Vary R and S independently over a two-element domain.
  for (int rmask = 0; rmask < 4; ++rmask) {
    for (int smask = 0; smask < 4; ++smask) {
      std::string text = "domain = 0 1\nR/1 = {";
      if (rmask & 1) text += "0";
      if ((rmask & 3) == 3) text += ",";
      if (rmask & 2) text += "1";
      text += "}\nS/1 = {";
      if (smask & 1) text += "0";
      if ((smask & 3) == 3) text += ",";
      if (smask & 2) text += "1";
      text += "}\n";
      Structure m = load_structure(text);
      for (const char* in_text : inputs) {
        Formula in = parse_formula(in_text);
        Formula out = to_prenex(in);
        std::set<Variable> fv = free_vars(in);
        std::vector<Variable> vars(fv.begin(), fv.end());
        for (const Team& x : all_teams(m, vars)) {
          CAPTURE(in_text);
          CHECK(eval(m, x, in, Semantics::Lax) == eval(m, x, out, Semantics::Lax));
        }
      }
    }
  }
}

TEST_CASE("counting sentences have the stated shape") {
  Formula one = counting_sentence(1);
  CHECK(one == parse_formula("E t. t = t"));

  Formula two = counting_sentence(2);
  CHECK(two == parse_formula("E x0. E x1. ((inc(x0; x0) & inc(x1; x0)) & x0 != x1)"));
  CHECK(classify_fragment(two).max_inc_width == 1);

  Formula three = counting_sentence(3);
  CHECK(classify_fragment(three).max_inc_width == 2);  // width = ceil(log2 3)
  CHECK(free_vars(three).empty());
  CHECK_THROWS_AS(counting_sentence(0), std::invalid_argument);
}

TEST_CASE("counting sentences count under strict semantics") {
  for (int n : {2, 3}) {
    Formula phi = counting_sentence(n);
    for (int dom : {2, 3}) {
      Structure m =
          dom == 2 ? load_structure("domain = 0 1\n") : load_structure("domain = 0 1 2\n");
      for (const Team& x : all_teams(m, {Variable("u")})) {
        if (x.rows().empty()) continue;
        CAPTURE(n);
        CAPTURE(dom);
        CAPTURE(x.to_csv_string(m));
        CHECK(eval(m, x, phi, Semantics::Strict) ==
              (x.rows().size() >= static_cast<std::size_t>(n)));
      }
    }
  }
}

TEST_CASE("DLNormalForm validation") {
  Formula good = parse_formula("A x1. A x2. E y. (dep(x1; y) & R(x2))");
  DLNormalForm nf = DLNormalForm::from_formula(good);
  CHECK(nf.universals.size() == 2);
  CHECK(nf.existentials.size() == 1);
  CHECK(nf.dep_atoms.size() == 1);
  CHECK(nf.to_formula() == good);

  // Missing dependence atom for an existential.
  CHECK_THROWS_AS(DLNormalForm::from_formula(parse_formula("A x. E y. R(x)")), ShapeError);
  // Determinant outside the universal block.
  CHECK_THROWS_AS(DLNormalForm::from_formula(parse_formula("A x. E y. (dep(y; y) & R(x))")),
                  ShapeError);
  // Non-first-order leftovers in the matrix.
  CHECK_THROWS_AS(DLNormalForm::from_formula(parse_formula("A x. E y. (dep(x; y) & inc(x; y))")),
                  ShapeError);
  // Quantifiers inside the matrix.
  CHECK_THROWS_AS(
      DLNormalForm::from_formula(parse_formula("A x. E y. (dep(x; y) & (A z. R(z)))")),
      ShapeError);
}

TEST_CASE("strict inclusion translation") {
  // w empty: the dependence atom becomes a trivial inclusion conjunct.
  Formula in0 = parse_formula("A x. E y. (dep(x; y) & R(x))");
  Formula out0 = strict_inclusion_translation(DLNormalForm::from_formula(in0));
  CHECK(out0 == parse_formula("A x. E y. (inc(x y; x y) & R(x))"));

  // |w| = 1: one universally quantified fresh variable per atom.
  Formula in1 = parse_formula("A x1. A x2. E y. (dep(x1; y) & R(x2))");
  Formula out1 = strict_inclusion_translation(DLNormalForm::from_formula(in1));
  CHECK(out1 == parse_formula("A x1. A x2. E y. ((A q1. inc(q1 x1 y; x2 x1 y)) & R(x2))"));

  // Strict sentence equivalence over the four R/1 structures.
  for (const Structure& m : structures_r1()) {
    Team unit = Team::singleton_empty();
    CHECK(eval(m, unit, in0, Semantics::Strict) == eval(m, unit, out0, Semantics::Strict));
    CHECK(eval(m, unit, in1, Semantics::Strict) == eval(m, unit, out1, Semantics::Strict));
  }
}

TEST_CASE("PureIndNormalForm validation") {
  Formula good = parse_formula("A x1. A x2. E x3. (pind(x1; x3) & E(x1, x2))");
  PureIndNormalForm nf = PureIndNormalForm::from_formula(good);
  CHECK(nf.universals.size() == 2);
  CHECK(nf.existentials.size() == 1);
  CHECK(nf.pure_ind_atoms.size() == 1);
  CHECK(nf.to_formula() == good);

  CHECK_THROWS_AS(PureIndNormalForm::from_formula(parse_formula("A x. ind(x; x; x)")), ShapeError);
  CHECK_THROWS_AS(PureIndNormalForm::from_formula(parse_formula("A x. dep(x; x)")), ShapeError);
  CHECK_THROWS_AS(PureIndNormalForm::from_formula(parse_formula("A x. E y. (A z. E(y, z))")),
                  ShapeError);
}

TEST_CASE("universal collapse to one quantifier") {
  Formula in = parse_formula("A x1. A x2. E(x1, x2)");
  Formula out = collapse_to_one_forall(PureIndNormalForm::from_formula(in));
  CHECK(out == parse_formula("A x1. E x2. ((inc(x1; x2) & pind(x1; x2)) & E(x1, x2))"));
  CHECK(classify_fragment(out).universal_count == 1);

  // m = 1 leaves the prefix alone.
  Formula single = parse_formula("A x1. E y. (pind(x1; y) & E(x1, y))");
  Formula collapsed = collapse_to_one_forall(PureIndNormalForm::from_formula(single));
  CHECK(collapsed == single);

  CHECK_THROWS_AS(
      collapse_to_one_forall(PureIndNormalForm::from_formula(parse_formula("E y. E(y, y)"))),
      ShapeError);
}

TEST_CASE("universal collapse to two quantifiers") {
  Formula in1 = parse_formula("A x1. E(x1, x1)");
  Formula out1 = collapse_to_two_forall(PureIndNormalForm::from_formula(in1));
  CHECK(out1 == parse_formula("A p. A q. E x1. ((p != q | x1 = p) & E(x1, x1))"));
  CHECK(classify_fragment(out1).universal_count == 2);

  Formula in2 = parse_formula("A x1. A x2. E(x1, x2)");
  Formula out2 = collapse_to_two_forall(PureIndNormalForm::from_formula(in2));
  CHECK(out2 == parse_formula("A p. A q. E x1. E x2. (((p != q | (x1 = p & x2 = p)) &"
                              " pind(x1; x2)) & E(x1, x2))"));
  CHECK(classify_fragment(out2).universal_count == 2);

  // Fresh markers avoid clashing with existing p/q.
  Formula clash = parse_formula("A p. E(p, p)");
  Formula out3 = collapse_to_two_forall(PureIndNormalForm::from_formula(clash));
  std::set<Variable> vars = all_variables(out3);
  CHECK(vars.count(Variable("p1")));
  CHECK(vars.count(Variable("q")));
}

TEST_CASE("collapse outputs are equivalent over all E/2 structures") {
  const char* inputs_one[] = {"A x1. A x2. E(x1, x2)",
                              "A x1. A x2. E x3. (pind(x1; x3) & E(x1, x2))"};
  const char* inputs_two[] = {"A x1. E(x1, x1)", "A x1. A x2. E(x1, x2)"};
  for (int mask = 0; mask < 16; ++mask) {
    std::string text = "domain = 0 1\nE/2 = {";
    bool first = true;
    for (int i = 0; i < 4; ++i) {
      if (!(mask >> i & 1)) continue;
      if (!first) text += ", ";
      text += "(" + std::to_string(i / 2) + "," + std::to_string(i % 2) + ")";
      first = false;
    }
    text += "}\n";
    Structure m = load_structure(text);
    Team unit = Team::singleton_empty();
    for (const char* in_text : inputs_one) {
      Formula in = parse_formula(in_text);
      Formula out = collapse_to_one_forall(PureIndNormalForm::from_formula(in));
      CAPTURE(in_text);
      CHECK(eval(m, unit, in, Semantics::Lax) == eval(m, unit, out, Semantics::Lax));
    }
    for (const char* in_text : inputs_two) {
      Formula in = parse_formula(in_text);
      Formula out = collapse_to_two_forall(PureIndNormalForm::from_formula(in));
      CAPTURE(in_text);
      CHECK(eval(m, unit, in, Semantics::Lax) == eval(m, unit, out, Semantics::Lax));
    }
  }
}

TEST_CASE("rewrites bind only fresh variables") {
  Formula in = parse_formula("inc(x; y) & dep(x; y)");
  std::set<Variable> before = all_variables(in);
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    switch (g.kind()) {
      case Formula::Kind::Exists:
      case Formula::Kind::Forall:
        CHECK_FALSE(before.count(g.quant_var()));
        walk(g.body());
        break;
      case Formula::Kind::Conj:
      case Formula::Kind::Disj:
        walk(g.left());
        walk(g.right());
        break;
      default:
        break;
    }
  };
  walk(inc_to_pure_ind(in));
  walk(dep_to_pure_ind(in));
}
