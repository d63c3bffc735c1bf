// Command-line front end: evaluate formulas on teams, run rewrite passes,
// classify fragments, and drive the exhaustive equivalence/property oracle.
//
// Exit codes: 0 pass/true, 1 fail/false, 2 usage error, 3 budget exhausted.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "teamlog/eso.hpp"
#include "teamlog/eval.hpp"
#include "teamlog/oracle.hpp"
#include "teamlog/rewrite.hpp"

using namespace teamlog;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Formula input; the pseudo-formula "counting N" names a generated sentence.
Formula read_formula(const std::string& text) {
  std::istringstream is(text);
  std::string head;
  if (is >> head && head == "counting") {
    int n = 0;
    if (is >> n && n >= 1) {
      std::string rest;
      if (!(is >> rest)) return counting_sentence(n);
    }
    throw std::runtime_error("usage of the counting pseudo-formula: counting N (N >= 1)");
  }
  return parse_formula(text);
}

Formula formula_from_options(const std::string& text, const std::string& path) {
  if (!text.empty() && !path.empty())
    throw std::runtime_error("give --formula or --formula-file, not both");
  if (!text.empty()) return read_formula(text);
  if (!path.empty()) return read_formula(slurp(path));
  throw std::runtime_error("a formula is required (--formula or --formula-file)");
}

Signature parse_signature(const std::string& text) {
  Signature sig;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    auto slash = item.find('/');
    if (slash == std::string::npos)
      throw std::runtime_error("signature items look like NAME/ARITY: " + item);
    sig.relations.emplace_back(item.substr(0, slash), std::stoi(item.substr(slash + 1)));
  }
  return sig;
}

void infer_relations(const Formula& f, std::map<std::string, int>& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom: {
      if (auto* r = std::get_if<RelationAtom>(&f.atom_ref())) {
        auto [it, fresh] = out.emplace(r->name, static_cast<int>(r->args.size()));
        if (!fresh && it->second != static_cast<int>(r->args.size()))
          throw std::runtime_error("relation '" + r->name + "' used with two arities");
      }
      return;
    }
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      infer_relations(f.left(), out);
      infer_relations(f.right(), out);
      return;
    case Formula::Kind::Exists:
    case Formula::Kind::Forall:
      infer_relations(f.body(), out);
      return;
  }
}

std::vector<Variable> parse_vars(const std::string& text) {
  std::vector<Variable> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) {
    std::string name;
    for (char c : item)
      if (!std::isspace(static_cast<unsigned char>(c))) name += c;
    if (!name.empty()) out.emplace_back(name);
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"team-semantics model checker, rewriter, and equivalence oracle"};
  app.require_subcommand(1);

  // --- eval -----------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("eval", "decide M |=_X formula");
  std::string eval_structure, eval_team, eval_formula, eval_formula_file;
  std::string eval_sem = "lax";
  EvalBudget eval_budget;
  bool eval_machine = false;
  cmd_eval->add_option("--structure", eval_structure, "structure file")->required();
  cmd_eval->add_option("--team", eval_team, "team file")->required();
  cmd_eval->add_option("--formula", eval_formula, "formula text (or 'counting N')");
  cmd_eval->add_option("--formula-file", eval_formula_file, "file holding the formula");
  cmd_eval->add_option("--sem", eval_sem, "lax|strict")->check(CLI::IsMember({"lax", "strict"}));
  cmd_eval->add_option("--max-rows", eval_budget.max_team_rows, "team row budget");
  cmd_eval->add_option("--max-branching", eval_budget.max_branching,
                       "per-node branching budget");
  cmd_eval->add_flag("--machine", eval_machine, "key=value output");

  // --- rewrite ----------------------------------------------------------------
  auto* cmd_rewrite = app.add_subcommand("rewrite", "run a formula-to-formula pass");
  std::string rw_pass, rw_formula, rw_formula_file;
  int rw_n = 0;
  bool rw_list = false;
  cmd_rewrite->add_option("--pass", rw_pass, "pass name (see --list)");
  cmd_rewrite->add_option("--formula", rw_formula, "formula text");
  cmd_rewrite->add_option("--formula-file", rw_formula_file, "file holding the formula");
  cmd_rewrite->add_option("--n", rw_n, "parameter for the counting pass");
  cmd_rewrite->add_flag("--list", rw_list, "list pass names");

  // --- classify ---------------------------------------------------------------
  auto* cmd_classify = app.add_subcommand("classify", "fragment measures of a formula");
  std::string cl_formula, cl_formula_file;
  bool cl_machine = false;
  cmd_classify->add_option("--formula", cl_formula, "formula text");
  cmd_classify->add_option("--formula-file", cl_formula_file, "file holding the formula");
  cmd_classify->add_flag("--machine", cl_machine, "key=value output");

  // --- equiv ------------------------------------------------------------------
  auto* cmd_equiv = app.add_subcommand("equiv", "exhaustive equivalence check");
  std::string eq_left, eq_right, eq_sig, eq_team_vars, eq_witness_dir = ".";
  std::string eq_sem_left = "lax", eq_sem_right = "lax";
  int eq_max_domain = 2;
  std::size_t eq_max_rows = 0;
  bool eq_sentence = false, eq_machine = false;
  cmd_equiv->add_option("--left", eq_left, "left formula")->required();
  cmd_equiv->add_option("--right", eq_right, "right formula")->required();
  cmd_equiv->add_option("--sem-left", eq_sem_left, "lax|strict")
      ->check(CLI::IsMember({"lax", "strict"}));
  cmd_equiv->add_option("--sem-right", eq_sem_right, "lax|strict")
      ->check(CLI::IsMember({"lax", "strict"}));
  cmd_equiv->add_option("--sig", eq_sig, "signature, e.g. R/1,E/2 (inferred when omitted)");
  cmd_equiv->add_option("--max-domain", eq_max_domain, "largest domain size (default 2)");
  cmd_equiv->add_option("--team-vars", eq_team_vars, "comma-separated team variables");
  cmd_equiv->add_option("--max-rows", eq_max_rows, "cap on team rows (0 = all teams)");
  cmd_equiv->add_flag("--sentence", eq_sentence, "compare as sentences on {empty assignment}");
  cmd_equiv->add_option("--witness-dir", eq_witness_dir, "where to write counterexample files");
  cmd_equiv->add_flag("--machine", eq_machine, "key=value output");

  // --- check ------------------------------------------------------------------
  auto* cmd_check = app.add_subcommand("check", "run named property suites or the registry");
  std::string ck_property, ck_witness_dir = ".";
  bool ck_all = false, ck_machine = false;
  cmd_check->add_option("--property", ck_property, "property name");
  cmd_check->add_flag("--all", ck_all, "run the whole registry");
  cmd_check->add_option("--witness-dir", ck_witness_dir, "where to write counterexample files");
  cmd_check->add_flag("--machine", ck_machine, "key=value output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cmd_eval->parsed()) {
      Structure m = load_structure(slurp(eval_structure));
      Team x = load_team(slurp(eval_team), m);
      Formula f = formula_from_options(eval_formula, eval_formula_file);
      Semantics sem = eval_sem == "strict" ? Semantics::Strict : Semantics::Lax;
      try {
        bool verdict = eval(m, x, f, sem, eval_budget);
        std::cout << (eval_machine ? (verdict ? "result=true" : "result=false")
                                   : (verdict ? "true" : "false"))
                  << "\n";
        return verdict ? kExitPass : kExitFail;
      } catch (const BudgetExceededError&) {
        std::cout << (eval_machine ? "result=budget-exhausted" : "budget-exhausted") << "\n";
        return kExitBudget;
      }
    }

    if (cmd_rewrite->parsed()) {
      const std::vector<std::string> passes = {
          "dep-to-ind",       "split-ind", "inc-to-pind",   "dep-to-pind",      "prenex",
          "counting",         "strict-inc-nf", "collapse-1forall", "collapse-2forall",
          "ind-to-eso"};
      if (rw_list) {
        for (const auto& p : passes) std::cout << p << "\n";
        return kExitPass;
      }
      if (rw_pass.empty()) throw std::runtime_error("--pass is required (see --list)");
      if (rw_pass == "counting") {
        if (rw_n < 1) throw std::runtime_error("the counting pass needs --n N with N >= 1");
        std::cout << print_formula(counting_sentence(rw_n)) << "\n";
        return kExitPass;
      }
      Formula f = formula_from_options(rw_formula, rw_formula_file);
      if (rw_pass == "dep-to-ind") {
        std::cout << print_formula(dep_to_ind(f)) << "\n";
      } else if (rw_pass == "split-ind") {
        std::cout << print_formula(split_independence_atoms(f)) << "\n";
      } else if (rw_pass == "inc-to-pind") {
        std::cout << print_formula(inc_to_pure_ind(f)) << "\n";
      } else if (rw_pass == "dep-to-pind") {
        std::cout << print_formula(dep_to_pure_ind(f)) << "\n";
      } else if (rw_pass == "prenex") {
        std::cout << print_formula(to_prenex(f)) << "\n";
      } else if (rw_pass == "strict-inc-nf") {
        std::cout << print_formula(strict_inclusion_translation(DLNormalForm::from_formula(f)))
                  << "\n";
      } else if (rw_pass == "collapse-1forall") {
        std::cout << print_formula(collapse_to_one_forall(PureIndNormalForm::from_formula(f)))
                  << "\n";
      } else if (rw_pass == "collapse-2forall") {
        std::cout << print_formula(collapse_to_two_forall(PureIndNormalForm::from_formula(f)))
                  << "\n";
      } else if (rw_pass == "ind-to-eso") {
        std::cout << print_eso(translate_ind_to_eso(f)) << "\n";
      } else {
        throw std::runtime_error("unknown pass '" + rw_pass + "' (see rewrite --list)");
      }
      return kExitPass;
    }

    if (cmd_classify->parsed()) {
      Formula f = formula_from_options(cl_formula, cl_formula_file);
      FragmentProfile p = classify_fragment(f);
      if (cl_machine) {
        auto show = [](const std::optional<int>& v) {
          return v ? std::to_string(*v) : std::string("-");
        };
        std::cout << "dep=" << show(p.max_dep_arity) << "\n"
                  << "ind=" << show(p.max_ind_measure) << "\n"
                  << "inc=" << show(p.max_inc_width) << "\n"
                  << "forall=" << p.universal_count << "\n";
      } else {
        std::cout << p.to_string() << "\n";
      }
      return kExitPass;
    }

    if (cmd_equiv->parsed()) {
      Formula left = read_formula(eq_left);
      Formula right = read_formula(eq_right);
      Signature sig;
      if (!eq_sig.empty()) {
        sig = parse_signature(eq_sig);
      } else {
        std::map<std::string, int> rels;
        infer_relations(left, rels);
        infer_relations(right, rels);
        for (const auto& [name, arity] : rels) sig.relations.emplace_back(name, arity);
      }
      std::vector<Variable> team_vars = parse_vars(eq_team_vars);
      if (team_vars.empty() && !eq_sentence) {
        std::set<Variable> fv = free_vars(left);
        for (const Variable& v : free_vars(right)) fv.insert(v);
        team_vars.assign(fv.begin(), fv.end());
      }
      EquivalenceTask task{"equiv",
                           left,
                           right,
                           eq_sem_left == "strict" ? Semantics::Strict : Semantics::Lax,
                           eq_sem_right == "strict" ? Semantics::Strict : Semantics::Lax,
                           std::move(sig),
                           eq_max_domain,
                           std::move(team_vars),
                           eq_max_rows == 0 ? std::nullopt
                                            : std::optional<std::size_t>(eq_max_rows),
                           eq_sentence,
                           EvalBudget{}};
      try {
        auto cex = check_equivalence(task);
        if (!cex) {
          std::cout << (eq_machine ? "result=pass" : "PASS") << "\n";
          return kExitPass;
        }
        std::string spath = eq_witness_dir + "/equiv-structure.txt";
        std::string tpath = eq_witness_dir + "/equiv-team.csv";
        write_file(spath, cex->structure.to_file_string());
        write_file(tpath, cex->team.to_csv_string(cex->structure));
        if (eq_machine) {
          std::cout << "result=fail\n"
                    << "left=" << (cex->verdict_left ? "true" : "false") << "\n"
                    << "right=" << (cex->verdict_right ? "true" : "false") << "\n"
                    << "witness_structure=" << spath << "\n"
                    << "witness_team=" << tpath << "\n";
        } else {
          std::cout << "FAIL left=" << (cex->verdict_left ? "true" : "false")
                    << " right=" << (cex->verdict_right ? "true" : "false") << " witness "
                    << spath << " " << tpath << "\n";
        }
        return kExitFail;
      } catch (const BudgetExceededError&) {
        std::cout << (eq_machine ? "result=budget-exhausted" : "BUDGET") << "\n";
        return kExitBudget;
      }
    }

    if (cmd_check->parsed()) {
      std::vector<CheckReport> reports;
      if (ck_all) {
        reports = run_registry();
      } else if (!ck_property.empty()) {
        reports.push_back(check_property(ck_property, {}, PropertyBounds{}));
      } else {
        throw std::runtime_error("check needs --property NAME or --all");
      }
      bool any_fail = false, any_budget = false;
      for (const auto& r : reports) {
        any_fail = any_fail || r.status == CheckStatus::Fail;
        any_budget = any_budget || r.status == CheckStatus::Budget;
        std::string witness;
        if (r.counterexample) {
          std::string spath = ck_witness_dir + "/" + r.name + "-structure.txt";
          std::string tpath = ck_witness_dir + "/" + r.name + "-team.csv";
          write_file(spath, r.counterexample->structure.to_file_string());
          write_file(tpath, r.counterexample->team.to_csv_string(r.counterexample->structure));
          witness = " " + spath + " " + tpath;
        }
        if (ck_machine) {
          std::cout << r.name << "=" << to_string(r.status) << "\n";
        } else {
          std::cout << r.name << ": " << to_string(r.status) << witness << "\n";
        }
      }
      if (any_fail) return kExitFail;
      if (any_budget) return kExitBudget;
      return kExitPass;
    }
  } catch (const BudgetExceededError& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
