#pragma once

// Reference evaluator: a direct recursive implementation of the lax/strict
// team-semantics rules with no memoization, no filtering, and no flatness
// shortcuts. The cover and choice-function searches below enumerate the full
// definitional spaces; only the atom checks use indexed columns for speed.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "teamlog/eval.hpp"
#include "teamlog/formula.hpp"
#include "teamlog/model.hpp"

namespace testsupport {

using teamlog::Atom;
using teamlog::DepAtom;
using teamlog::EqualityAtom;
using teamlog::Formula;
using teamlog::IncAtom;
using teamlog::IndAtom;
using teamlog::RelationAtom;
using teamlog::Semantics;
using teamlog::Structure;
using teamlog::Team;
using teamlog::Variable;

inline int naive_value(const Structure& m, const std::map<Variable, int>& env, const Variable& v) {
  auto it = env.find(v);
  if (it != env.end()) return it->second;
  if (auto c = m.constant(v.name)) return *c;
  throw std::runtime_error("naive: unbound token " + v.name);
}

inline bool naive_atom(const Structure& m, const std::map<Variable, int>& env, const Atom& a) {
  if (auto* r = std::get_if<RelationAtom>(&a)) {
    const teamlog::Relation* rel = m.relation(r->name);
    if (!rel) throw std::runtime_error("naive: unknown relation " + r->name);
    std::vector<int> tuple;
    for (const auto& v : r->args) tuple.push_back(naive_value(m, env, v));
    return rel->contains(tuple);
  }
  auto* e = std::get_if<EqualityAtom>(&a);
  if (!e) throw std::runtime_error("naive: dependency atom in first-order position");
  return naive_value(m, env, e->lhs) == naive_value(m, env, e->rhs);
}

inline bool naive_tarski(const Structure& m, std::map<Variable, int>& env, const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return naive_atom(m, env, f.atom_ref());
    case Formula::Kind::NegAtom:
      return !naive_atom(m, env, f.atom_ref());
    case Formula::Kind::Conj:
      return naive_tarski(m, env, f.left()) && naive_tarski(m, env, f.right());
    case Formula::Kind::Disj:
      return naive_tarski(m, env, f.left()) || naive_tarski(m, env, f.right());
    case Formula::Kind::Exists:
    case Formula::Kind::Forall: {
      bool universal = f.kind() == Formula::Kind::Forall;
      auto found = env.find(f.quant_var());
      std::optional<int> saved;
      if (found != env.end()) saved = found->second;
      bool result = universal;
      for (int e = 0; e < m.size(); ++e) {
        env[f.quant_var()] = e;
        bool sub = naive_tarski(m, env, f.body());
        if (universal && !sub) { result = false; break; }
        if (!universal && sub) { result = true; break; }
      }
      if (saved)
        env[f.quant_var()] = *saved;
      else
        env.erase(f.quant_var());
      return result;
    }
  }
  return false;
}

inline std::map<Variable, int> row_env(const Team& x, const std::vector<int>& row) {
  std::map<Variable, int> env;
  for (std::size_t i = 0; i < x.vars().size(); ++i) env[x.vars()[i]] = row[i];
  return env;
}

inline std::vector<std::size_t> naive_columns(const Team& x, const std::vector<Variable>& vs) {
  std::vector<std::size_t> cols;
  for (const Variable& v : vs) {
    auto idx = x.var_index(v);
    if (!idx) throw std::runtime_error("naive: variable missing from team: " + v.name);
    cols.push_back(*idx);
  }
  return cols;
}

inline std::vector<int> naive_project(const std::vector<int>& row,
                                      const std::vector<std::size_t>& cols) {
  std::vector<int> out(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) out[i] = row[cols[i]];
  return out;
}

// s[val/v] over the row layout of x.
inline void extended_layout(const Team& x, const Variable& v, std::vector<Variable>& vars_out,
                            std::size_t& pos_out, bool& overwrite_out) {
  vars_out = x.vars();
  auto it = std::lower_bound(vars_out.begin(), vars_out.end(), v);
  pos_out = static_cast<std::size_t>(it - vars_out.begin());
  overwrite_out = it != vars_out.end() && *it == v;
  if (!overwrite_out) vars_out.insert(vars_out.begin() + pos_out, v);
}

inline std::vector<int> extend_row(const std::vector<int>& row, std::size_t pos, bool overwrite,
                                   int val) {
  std::vector<int> out = row;
  if (overwrite)
    out[pos] = val;
  else
    out.insert(out.begin() + pos, val);
  return out;
}

inline bool naive_eval(const Structure& m, const Team& x, const Formula& f, Semantics sem) {
  // Every rule below holds vacuously on the empty team.
  if (x.rows().empty()) return true;
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const Atom& a = f.atom_ref();
      if (auto* d = std::get_if<DepAtom>(&a)) {
        auto det = naive_columns(x, d->determinants);
        auto tgt = naive_columns(x, {d->determined});
        for (const auto& s : x.rows())
          for (const auto& s2 : x.rows())
            if (naive_project(s, det) == naive_project(s2, det) && s[tgt[0]] != s2[tgt[0]])
              return false;
        return true;
      }
      if (auto* i = std::get_if<IndAtom>(&a)) {
        auto cc = naive_columns(x, i->condition);
        auto lc = naive_columns(x, i->left);
        auto rc = naive_columns(x, i->right);
        for (const auto& s : x.rows()) {
          for (const auto& s2 : x.rows()) {
            if (naive_project(s, cc) != naive_project(s2, cc)) continue;
            bool witness = false;
            for (const auto& s3 : x.rows()) {
              if (naive_project(s3, cc) == naive_project(s, cc) &&
                  naive_project(s3, lc) == naive_project(s, lc) &&
                  naive_project(s3, rc) == naive_project(s2, rc)) {
                witness = true;
                break;
              }
            }
            if (!witness) return false;
          }
        }
        return true;
      }
      if (auto* c = std::get_if<IncAtom>(&a)) {
        auto lc = naive_columns(x, c->left);
        auto rc = naive_columns(x, c->right);
        for (const auto& s : x.rows()) {
          bool found = false;
          for (const auto& s2 : x.rows()) {
            if (naive_project(s2, rc) == naive_project(s, lc)) {
              found = true;
              break;
            }
          }
          if (!found) return false;
        }
        return true;
      }
      for (const auto& s : x.rows()) {
        auto env = row_env(x, s);
        if (!naive_atom(m, env, a)) return false;
      }
      return true;
    }
    case Formula::Kind::NegAtom:
      for (const auto& s : x.rows()) {
        auto env = row_env(x, s);
        if (naive_atom(m, env, f.atom_ref())) return false;
      }
      return true;
    case Formula::Kind::Conj:
      return naive_eval(m, x, f.left(), sem) && naive_eval(m, x, f.right(), sem);
    case Formula::Kind::Disj: {
      const std::size_t n = x.rows().size();
      if (sem == Semantics::Strict) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
          std::vector<std::vector<int>> ys, zs;
          for (std::size_t i = 0; i < n; ++i) (mask >> i & 1 ? ys : zs).push_back(x.rows()[i]);
          if (naive_eval(m, x.with_rows(ys), f.left(), sem) &&
              naive_eval(m, x.with_rows(zs), f.right(), sem))
            return true;
        }
        return false;
      }
      std::vector<std::size_t> trit(n, 0);  // 0: Y only, 1: Z only, 2: both
      for (;;) {
        std::vector<std::vector<int>> ys, zs;
        for (std::size_t i = 0; i < n; ++i) {
          if (trit[i] != 1) ys.push_back(x.rows()[i]);
          if (trit[i] != 0) zs.push_back(x.rows()[i]);
        }
        if (naive_eval(m, x.with_rows(ys), f.left(), sem) &&
            naive_eval(m, x.with_rows(zs), f.right(), sem))
          return true;
        std::size_t k = n;
        while (k > 0) {
          --k;
          if (++trit[k] < 3) break;
          trit[k] = 0;
          if (k == 0) return false;
        }
        if (n == 0) return false;
      }
    }
    case Formula::Kind::Exists: {
      const std::size_t n = x.rows().size();
      std::vector<Variable> vars;
      std::size_t pos;
      bool overwrite;
      extended_layout(x, f.quant_var(), vars, pos, overwrite);
      if (n == 0) return naive_eval(m, x, f.body(), sem);
      if (sem == Semantics::Strict) {
        std::vector<int> pick(n, 0);
        for (;;) {
          std::vector<std::vector<int>> rows;
          for (std::size_t i = 0; i < n; ++i)
            rows.push_back(extend_row(x.rows()[i], pos, overwrite, pick[i]));
          if (naive_eval(m, Team::make(vars, rows), f.body(), sem)) return true;
          std::size_t k = n;
          while (k > 0) {
            --k;
            if (++pick[k] < m.size()) break;
            pick[k] = 0;
            if (k == 0) return false;
          }
        }
      }
      // Lax: one nonempty subset of M per assignment.
      const std::size_t full = (std::size_t{1} << m.size()) - 1;
      std::vector<std::size_t> mask(n, 1);
      for (;;) {
        std::vector<std::vector<int>> rows;
        for (std::size_t i = 0; i < n; ++i)
          for (int e = 0; e < m.size(); ++e)
            if (mask[i] >> e & 1) rows.push_back(extend_row(x.rows()[i], pos, overwrite, e));
        if (naive_eval(m, Team::make(vars, rows), f.body(), sem)) return true;
        std::size_t k = n;
        while (k > 0) {
          --k;
          if (++mask[k] <= full) break;
          mask[k] = 1;
          if (k == 0) return false;
        }
      }
    }
    case Formula::Kind::Forall:
      return naive_eval(m, x.universal_extension(f.quant_var(), m), f.body(), sem);
  }
  return false;
}

}  // namespace testsupport
