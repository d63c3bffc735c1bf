#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "teamlog/formula.hpp"

namespace teamlog {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Replaces every dependence atom =(x⃗,y) by the independence atom y ⊥_{x⃗} y.
Formula dep_to_ind(const Formula& f);

/// Rewrites b⃗ ⊥_{a⃗} c⃗ into b⃗₀ ⊥_{a⃗} c⃗₀ ∧ ⋀_{d} =(a⃗,d) where b⃗₀, c⃗₀ drop the
/// shared variables and d⃗ lists b⃗ ∩ c⃗ − a⃗. Returns the atom unchanged when the
/// three tuples are already pairwise disjoint.
Formula split_independence_atom(const IndAtom& atom);
Formula split_independence_atoms(const Formula& f);

/// Rewrites x⃗ ⊆ y⃗ into the pure-independence form
///   ∀v₁v₂z⃗((z⃗≠x⃗ ∧ z⃗≠x⃗) ∨ (v₁≠v₂ ∧ z⃗≠y⃗) ∨ ((v₁=v₂ ∨ z⃗=y⃗) ∧ z⃗ ⊥ v₁v₂))
/// with fresh v₁, v₂ and z⃗ of width |x⃗|.
Formula inc_to_pure_ind(const IncAtom& atom, FreshNames& fresh);
Formula inc_to_pure_ind(const Formula& f);

/// Rewrites =(x⃗,y) into ∀z⃗∃w((z⃗=x⃗ → w=y) ∧ x⃗y ⊥ z⃗w) with fresh z⃗, w and the
/// implication desugared.
Formula dep_to_pure_ind(const DepAtom& atom, FreshNames& fresh);
Formula dep_to_pure_ind(const Formula& f);

/// Prenex normal form. Bound variables are renamed apart only on collision;
/// universal quantifiers passing a disjunction introduce two fresh
/// existentially quantified markers a, b. The universal-quantifier count and
/// the non-first-order atoms are preserved.
Formula to_prenex(const Formula& f);

/// True iff the formula is a quantifier prefix over a quantifier-free matrix.
bool is_prenex(const Formula& f);

/// Sentence that is strict-satisfiable by X exactly when |X| >= n (for teams
/// over variables not occurring in it). n = 1 yields E t. t = t.
Formula counting_sentence(int n);

/// ∀x⃗∃y⃗(⋀_i =(v⃗_i,y_i) ∧ θ) with every v⃗_i drawn from x⃗ and θ quantifier-free
/// first order.
struct DLNormalForm {
  struct DepSpec {
    std::vector<Variable> determinants;
    Variable determined;
  };
  std::vector<Variable> universals;
  std::vector<Variable> existentials;
  std::vector<DepSpec> dep_atoms;       // one per existential, in order
  std::optional<Formula> matrix;        // θ; absent when the input had none

  static DLNormalForm from_formula(const Formula& f);
  Formula to_formula() const;
};

/// Replaces each dependence conjunct of an Eq-(1)-shaped sentence by
/// ∀q⃗(q⃗ v⃗ y ⊆ w⃗ v⃗ y) with w⃗ = x⃗ ∖ v⃗; sound under strict semantics.
Formula strict_inclusion_translation(const DLNormalForm& nf);

/// ∀x₁…x_m∃x_{m+1}…x_{m+n}(θ ∧ χ) with θ a conjunction of pure independence
/// atoms and χ quantifier-free first order.
struct PureIndNormalForm {
  std::vector<Variable> universals;
  std::vector<Variable> existentials;
  std::vector<IndAtom> pure_ind_atoms;
  std::optional<Formula> matrix;  // χ

  static PureIndNormalForm from_formula(const Formula& f);
  Formula to_formula() const;
};

/// Collapses the universal block to one quantifier:
/// ∀x₁∃x₂…∃x_{m+n}(⋀_{2≤i≤m}(x₁ ⊆ x_i ∧ x₁…x_{i−1} ⊥ x_i) ∧ θ ∧ χ).
Formula collapse_to_one_forall(const PureIndNormalForm& nf);

/// Collapses the universal block to two quantifiers:
/// ∀p∀q∃x⃗((p=q → ⋀ x_i=p) ∧ ⋀(x₁…x_i ⊥ x_{i+1}) ∧ ψ) with fresh p, q.
/// The input matrix must be pure-independence material (no inclusion atoms).
Formula collapse_to_two_forall(const PureIndNormalForm& nf);

}  // namespace teamlog
