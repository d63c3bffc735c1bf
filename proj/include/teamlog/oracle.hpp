#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "teamlog/eval.hpp"
#include "teamlog/formula.hpp"
#include "teamlog/model.hpp"

namespace teamlog {

/// One claimed equivalence, checked exhaustively over all structures up to
/// max_domain and all teams over team_vars (row-capped when max_team_rows is
/// set). sentence_mode restricts to the team {∅}.
struct EquivalenceTask {
  std::string name;
  Formula left;
  Formula right;
  Semantics semantics_left = Semantics::Lax;
  Semantics semantics_right = Semantics::Lax;
  Signature signature;
  int max_domain = 2;
  std::vector<Variable> team_vars;
  std::optional<std::size_t> max_team_rows;
  bool sentence_mode = false;
  EvalBudget budget;
};

struct Counterexample {
  Structure structure;
  Team team;
  bool verdict_left = false;
  bool verdict_right = false;
};

/// Deterministic stream of all structures over a signature with domain sizes
/// 2..max_domain: every subset of tuples per relation, every element per
/// constant, sizes ascending, relation subsets cycling fastest last.
class StructureEnumerator {
 public:
  StructureEnumerator(Signature sig, int max_domain);
  std::optional<Structure> next();

 private:
  Signature sig_;
  int max_domain_;
  int domain_size_;
  bool fresh_size_ = true;
  std::vector<std::size_t> state_;
  std::vector<std::size_t> limits_;
  bool start_size();
  Structure materialize() const;
};

/// Deterministic stream of all teams over the given variables with at most
/// max_rows rows (all subsets when unset), by size then lexicographically.
/// For an empty variable set the stream is ∅ then {∅}.
class TeamEnumerator {
 public:
  TeamEnumerator(const Structure& m, std::vector<Variable> vars,
                 std::optional<std::size_t> max_rows);
  std::optional<Team> next();

 private:
  const Structure& m_;
  std::vector<Variable> vars_;
  std::vector<std::vector<int>> space_;  // all assignments, lexicographic
  std::size_t size_ = 0, cap_ = 0;
  std::vector<std::size_t> combo_;
  bool fresh_size_ = true;
};

/// First counterexample in enumeration order, or nullopt when the claimed
/// equivalence survives the bounds. Budget exhaustion propagates.
std::optional<Counterexample> check_equivalence(const EquivalenceTask& task);

enum class CheckStatus { Pass, Fail, Budget };

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::vector<std::string> details;               // human-readable witness lines
  std::optional<Counterexample> counterexample;   // for failed equivalences
};

struct PropertyBounds {
  int max_domain = 2;
  std::optional<std::size_t> max_team_rows;
  EvalBudget budget;
};

/// Named executable property suites. An empty corpus selects the built-in
/// corpus of the property. Throws std::invalid_argument on unknown names.
CheckReport check_property(const std::string& name, const std::vector<Formula>& corpus,
                           const PropertyBounds& bounds);
std::vector<std::string> property_names();

/// The full registry: rewrite-equivalence tasks, counting checks, ESO
/// translation agreement, and every property suite, with pinned bounds.
std::vector<EquivalenceTask> equivalence_registry();
std::vector<CheckReport> run_registry();

std::string to_string(CheckStatus s);

}  // namespace teamlog
