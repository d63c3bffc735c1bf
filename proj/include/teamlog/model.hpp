#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "teamlog/formula.hpp"

namespace teamlog {

struct FileFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Signature {
  std::vector<std::pair<std::string, int>> relations;  // (name, arity >= 1)
  std::vector<std::string> constants;
};

struct Relation {
  int arity = 1;
  std::set<std::vector<int>> tuples;

  bool contains(const std::vector<int>& t) const { return tuples.count(t) > 0; }
};

/// A finite relational structure. Domain elements are opaque tokens in file
/// order; everything downstream works with their indices. At least two
/// elements are required.
class Structure {
 public:
  Structure(std::vector<std::string> domain, std::map<std::string, Relation> relations,
            std::map<std::string, int> constants);

  int size() const { return static_cast<int>(domain_.size()); }
  const std::vector<std::string>& domain() const { return domain_; }
  const std::map<std::string, Relation>& relations() const { return relations_; }
  const std::map<std::string, int>& constants() const { return constants_; }

  const Relation* relation(const std::string& name) const;
  std::optional<int> constant(const std::string& name) const;
  std::optional<int> element_index(const std::string& token) const;

  Signature signature() const;
  std::string to_file_string() const;

 private:
  std::vector<std::string> domain_;
  std::map<std::string, Relation> relations_;
  std::map<std::string, int> constants_;
};

/// Parses the structure file format:
///   domain = e1 e2 ...
///   NAME/ARITY = {(a,b), (c,d)}       (braces and tuple parens optional for arity 1)
///   const NAME = e
/// with '#' line comments.
Structure load_structure(std::string_view text);

/// A team: a duplicate-free set of assignments sharing one variable domain.
/// Variables are kept sorted by name and rows sorted lexicographically, so
/// equality and hashing are structural and iteration is deterministic.
class Team {
 public:
  Team() = default;  // the empty team over no variables

  /// Rows are given aligned with `vars` (any order); everything is canonicalized.
  static Team make(std::vector<Variable> vars, std::vector<std::vector<int>> rows);
  static Team empty(std::vector<Variable> vars);
  /// {∅}: the team containing just the empty assignment.
  static Team singleton_empty();

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<std::vector<int>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool has_var(const Variable& v) const;
  std::optional<std::size_t> var_index(const Variable& v) const;

  /// Replaces the row set (same variable domain); canonicalizes.
  Team with_rows(std::vector<std::vector<int>> rows) const;

  Team restrict_to(const std::set<Variable>& keep) const;
  Team drop_var(const Variable& v) const;
  Team universal_extension(const Variable& v, const Structure& m) const;

  /// {s(v1..vk) : s in team}; tuple entries may repeat variables.
  std::set<std::vector<int>> values(const std::vector<Variable>& tuple) const;

  bool operator==(const Team& o) const { return vars_ == o.vars_ && rows_ == o.rows_; }
  bool operator!=(const Team& o) const { return !(*this == o); }
  std::size_t hash() const;

  std::string to_csv_string(const Structure& m) const;

 private:
  std::vector<Variable> vars_;            // sorted by name
  std::vector<std::vector<int>> rows_;    // sorted, unique
};

struct TeamHash {
  std::size_t operator()(const Team& t) const { return t.hash(); }
};

/// Parses the team file format: a header line of comma-separated variable
/// names (possibly empty, meaning the team {∅}), then one CSV row per
/// assignment. A nonempty header with no rows is the empty team.
Team load_team(std::string_view text, const Structure& m);

std::set<std::vector<int>> team_values(const Team& x, const std::vector<Variable>& tuple);
Team team_restrict(const Team& x, const std::set<Variable>& keep);
Team team_universal_extension(const Team& x, const Variable& v, const Structure& m);

}  // namespace teamlog
