#pragma once

#include <memory>
#include <string>
#include <vector>

#include "teamlog/eval.hpp"
#include "teamlog/formula.hpp"
#include "teamlog/model.hpp"

namespace teamlog {

/// Classical first-order term: a variable/constant token, or a function
/// application over terms.
struct CTerm {
  std::string head;
  std::vector<CTerm> args;

  static CTerm var(std::string name) { return {std::move(name), {}}; }
  static CTerm app(std::string fn, std::vector<CTerm> as) { return {std::move(fn), std::move(as)}; }
};

/// Classical first-order formula with unrestricted negation and implication.
class CFormula {
 public:
  enum class Kind { Rel, Eq, Not, And, Or, Implies, Exists, Forall };

  static CFormula rel(std::string name, std::vector<CTerm> args);
  static CFormula eq(CTerm l, CTerm r);
  static CFormula negate(CFormula f);
  static CFormula conj(CFormula l, CFormula r);
  static CFormula disj(CFormula l, CFormula r);
  static CFormula implies(CFormula l, CFormula r);
  static CFormula exists(std::string v, CFormula body);
  static CFormula forall(std::string v, CFormula body);

  Kind kind() const;
  const std::string& rel_name() const;
  const std::vector<CTerm>& terms() const;  // Rel args or {lhs, rhs} for Eq
  CFormula left() const;
  CFormula right() const;
  const std::string& quant_var() const;
  CFormula body() const;

  static CFormula conj_fold(const std::vector<CFormula>& fs);

 private:
  struct Node;
  explicit CFormula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct SOVar {
  std::string name;
  int arity = 0;  // arity-0 function variables act as constants
};

/// ∃R⃗ ∃f⃗ . matrix — an existential second-order sentence over the base
/// signature extended by the quantified relation and function variables.
struct ESOSentence {
  std::vector<SOVar> rel_vars;
  std::vector<SOVar> fun_vars;
  CFormula matrix;
};

std::string print_cformula(const CFormula& f);
std::string print_eso(const ESOSentence& phi);

/// Second-order satisfaction by enumeration: all subsets of M^arity for each
/// relation variable, all maps M^arity -> M for each function variable,
/// relations before functions, lexicographic by tuple order.
bool eval_eso(const Structure& m, const ESOSentence& phi, const EvalBudget& budget = {});

/// The arity-preserving translation of a prenex FO(⊥_c) sentence into ESO.
/// The input must be Q¹x₁…Qⁿxₙ θ with θ quantifier-free and every atom either
/// =(z⃗,y) with y ∉ z⃗ or b⃗ ⊥_{a⃗} c⃗ with pairwise-disjoint duplicate-free
/// tuples (run split_independence_atoms / to_prenex first).
ESOSentence translate_ind_to_eso(const Formula& sentence);

/// Largest arity among the quantified relation/function variables; 0 if none.
int max_so_arity(const ESOSentence& phi);

}  // namespace teamlog
