#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "teamlog/formula.hpp"
#include "teamlog/model.hpp"

namespace teamlog {

enum class Semantics { Lax, Strict };

inline const char* to_string(Semantics s) { return s == Semantics::Lax ? "lax" : "strict"; }

/// Caps on the exponential search. Exhaustion is reported as a distinct
/// outcome (BudgetExceededError), never as `false`.
struct EvalBudget {
  std::size_t max_team_rows = 4096;
  std::size_t max_branching = 2'000'000;  // enumerated candidates per search node
};

/// Internal switches, mainly for cross-checking one search strategy against
/// another in tests. Defaults give the fast evaluator.
struct EvalOptions {
  bool flatness_fast_path = true;   // evaluate first-order subformulas per row
  bool structured_search = true;    // atom-aware disjunction/exists solvers
};

struct BudgetExceededError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Decides M |=_X f under the requested semantics by complete search.
/// Requires Fr(f) ⊆ Dom(X) (tokens naming constants of M are resolved as
/// constants instead). Throws BudgetExceededError when a cap is hit.
bool eval(const Structure& m, const Team& x, const Formula& f, Semantics sem,
          const EvalBudget& budget = {}, const EvalOptions& options = {});

/// Flatness fast path as a public operation: true iff every assignment of X
/// satisfies the first-order formula in Tarski semantics.
bool eval_flat(const Structure& m, const Team& x, const Formula& fo);

/// Tarski satisfaction of a first-order formula under a single assignment.
bool tarski_holds(const Structure& m, const std::map<Variable, int>& assignment, const Formula& fo);

/// True iff for every |xs|-tuple of elements there is exactly one row of X
/// taking those values on xs.
bool is_x_universal(const Team& x, const std::vector<Variable>& xs, const Structure& m);

}  // namespace teamlog
