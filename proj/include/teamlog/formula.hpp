#pragma once

#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace teamlog {

/// A variable (or constant) token. Compared by exact token equality.
struct Variable {
  std::string name;

  Variable() = default;
  explicit Variable(std::string n) : name(std::move(n)) {}

  bool operator==(const Variable& o) const { return name == o.name; }
  bool operator!=(const Variable& o) const { return name != o.name; }
  bool operator<(const Variable& o) const { return name < o.name; }
};

struct RelationAtom {
  std::string name;
  std::vector<Variable> args;
  bool operator==(const RelationAtom&) const = default;
};

struct EqualityAtom {
  Variable lhs, rhs;
  bool operator==(const EqualityAtom&) const = default;
};

/// =(determinants, determined); empty determinants is the constancy atom.
struct DepAtom {
  std::vector<Variable> determinants;
  Variable determined;
  bool operator==(const DepAtom&) const = default;
};

/// left ⊥_{condition} right; empty condition is the pure independence atom.
struct IndAtom {
  std::vector<Variable> condition;
  std::vector<Variable> left;
  std::vector<Variable> right;
  bool operator==(const IndAtom&) const = default;
};

/// left ⊆ right; tuples of equal nonzero length.
struct IncAtom {
  std::vector<Variable> left;
  std::vector<Variable> right;
  bool operator==(const IncAtom&) const = default;
};

using Atom = std::variant<RelationAtom, EqualityAtom, DepAtom, IndAtom, IncAtom>;

bool is_first_order(const Atom& a);
/// All variable occurrences, in order, with repeats.
std::vector<Variable> atom_variables(const Atom& a);
bool atoms_equal(const Atom& a, const Atom& b);

/// Immutable NNF formula tree. Negation occurs only on first-order atoms.
/// Cheap to copy; a Formula is a shared handle to an immutable node.
class Formula {
 public:
  enum class Kind { Atom, NegAtom, Conj, Disj, Exists, Forall };

  static Formula atom(Atom a);
  static Formula neg_atom(Atom a);  // throws std::invalid_argument on non-FO atoms
  static Formula conj(Formula l, Formula r);
  static Formula disj(Formula l, Formula r);
  static Formula exists(Variable v, Formula body);
  static Formula forall(Variable v, Formula body);

  Kind kind() const;
  const Atom& atom_ref() const;
  Formula left() const;
  Formula right() const;
  const Variable& quant_var() const;
  Formula body() const;

  /// Node identity; stable for subformulas of one tree. Used as a memo key.
  const void* id() const { return node_.get(); }

  bool operator==(const Formula& o) const;  // structural equality
  bool operator!=(const Formula& o) const { return !(*this == o); }

 private:
  struct Node;
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct FragmentProfile {
  std::optional<int> max_dep_arity;
  std::optional<int> max_ind_measure;
  std::optional<int> max_inc_width;
  int universal_count = 0;

  bool operator==(const FragmentProfile&) const = default;
  std::string to_string() const;  // "dep=2 ind=- inc=- forall=2"
};

struct ParseError : std::runtime_error {
  std::size_t position;
  ParseError(std::size_t pos, const std::string& what)
      : std::runtime_error("parse error at " + std::to_string(pos) + ": " + what),
        position(pos) {}
};

/// Parses the ASCII grammar: `A x.` / `E x.` quantifiers, `&` over `|`,
/// `~` on first-order material, `->` sugar over first-order material,
/// atoms R(x,y), x = y, x != y (tuples allowed on both sides of = and !=),
/// dep(x1 .. xn ; y), ind(a.. ; b.. ; c..), pind(b.. ; c..), inc(a.. ; b..).
Formula parse_formula(std::string_view text);

/// Prints a formula so that parse_formula(print_formula(f)) == f.
std::string print_formula(const Formula& f);
std::string print_atom(const Atom& a);

std::set<Variable> free_vars(const Formula& f);
/// Every variable occurring anywhere, bound or free.
std::set<Variable> all_variables(const Formula& f);

FragmentProfile classify_fragment(const Formula& f);

/// True iff the formula contains no dependency atoms.
bool first_order(const Formula& f);

/// Classical NNF negation; throws std::invalid_argument on dependency atoms.
Formula negate_first_order(const Formula& f);

/// (l1..ln) = (r1..rn) as a conjunction of equalities; component disequalities
/// for the negated version, as used by counting sentences and `!=` desugaring.
Formula make_tuple_equality(const std::vector<Variable>& l, const std::vector<Variable>& r);
Formula make_tuple_disequality(const std::vector<Variable>& l, const std::vector<Variable>& r);
/// a -> b over first-order material, desugared to NNF(~a) | b.
Formula make_implication(const Formula& antecedent, const Formula& consequent);

/// Left-associative folds; the list must be nonempty.
Formula conj_fold(const std::vector<Formula>& fs);
Formula disj_fold(const std::vector<Formula>& fs);

/// Deterministic supply of names disjoint from a recorded used set.
class FreshNames {
 public:
  explicit FreshNames(std::set<std::string> used) : used_(std::move(used)) {}
  static FreshNames for_formula(const Formula& f);

  /// Returns `base` if unused, otherwise base1, base2, ...; records the result.
  Variable fresh(const std::string& base);
  void mark_used(const std::string& name) { used_.insert(name); }
  bool is_used(const std::string& name) const { return used_.count(name) > 0; }

 private:
  std::set<std::string> used_;
};

}  // namespace teamlog
