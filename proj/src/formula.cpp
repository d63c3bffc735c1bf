#include "teamlog/formula.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <sstream>

namespace teamlog {

struct Formula::Node {
  Kind kind;
  std::optional<Atom> atom;     // Atom / NegAtom
  std::optional<Variable> var;  // Exists / Forall
  std::shared_ptr<const Node> a, b;
};

Formula Formula::atom(Atom a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Atom;
  n->atom = std::move(a);
  return Formula(std::move(n));
}

Formula Formula::neg_atom(Atom a) {
  if (!is_first_order(a))
    throw std::invalid_argument("negation applied to a non-first-order atom");
  auto n = std::make_shared<Node>();
  n->kind = Kind::NegAtom;
  n->atom = std::move(a);
  return Formula(std::move(n));
}

Formula Formula::conj(Formula l, Formula r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Conj;
  n->a = std::move(l.node_);
  n->b = std::move(r.node_);
  return Formula(std::move(n));
}

Formula Formula::disj(Formula l, Formula r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Disj;
  n->a = std::move(l.node_);
  n->b = std::move(r.node_);
  return Formula(std::move(n));
}

Formula Formula::exists(Variable v, Formula body) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Exists;
  n->var = std::move(v);
  n->a = std::move(body.node_);
  return Formula(std::move(n));
}

Formula Formula::forall(Variable v, Formula body) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Forall;
  n->var = std::move(v);
  n->a = std::move(body.node_);
  return Formula(std::move(n));
}

Formula::Kind Formula::kind() const { return node_->kind; }

const Atom& Formula::atom_ref() const {
  assert(node_->atom.has_value());
  return *node_->atom;
}

Formula Formula::left() const {
  assert(node_->a);
  return Formula(node_->a);
}

Formula Formula::right() const {
  assert(node_->b);
  return Formula(node_->b);
}

const Variable& Formula::quant_var() const {
  assert(node_->var.has_value());
  return *node_->var;
}

Formula Formula::body() const {
  assert(node_->a);
  return Formula(node_->a);
}

bool atoms_equal(const Atom& a, const Atom& b) { return a == b; }

bool Formula::operator==(const Formula& o) const {
  if (node_ == o.node_) return true;
  if (kind() != o.kind()) return false;
  switch (kind()) {
    case Kind::Atom:
    case Kind::NegAtom:
      return atom_ref() == o.atom_ref();
    case Kind::Conj:
    case Kind::Disj:
      return left() == o.left() && right() == o.right();
    case Kind::Exists:
    case Kind::Forall:
      return quant_var() == o.quant_var() && body() == o.body();
  }
  return false;
}

bool is_first_order(const Atom& a) {
  return std::holds_alternative<RelationAtom>(a) || std::holds_alternative<EqualityAtom>(a);
}

std::vector<Variable> atom_variables(const Atom& a) {
  std::vector<Variable> out;
  auto add = [&out](const std::vector<Variable>& vs) {
    out.insert(out.end(), vs.begin(), vs.end());
  };
  if (auto* r = std::get_if<RelationAtom>(&a)) {
    add(r->args);
  } else if (auto* e = std::get_if<EqualityAtom>(&a)) {
    out.push_back(e->lhs);
    out.push_back(e->rhs);
  } else if (auto* d = std::get_if<DepAtom>(&a)) {
    add(d->determinants);
    out.push_back(d->determined);
  } else if (auto* i = std::get_if<IndAtom>(&a)) {
    add(i->condition);
    add(i->left);
    add(i->right);
  } else if (auto* c = std::get_if<IncAtom>(&a)) {
    add(c->left);
    add(c->right);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum class Type { Ident, LParen, RParen, Comma, Semi, Dot, Amp, Bar, Tilde, Eq, Neq, Arrow, End };
  Type type;
  std::string text;
  std::size_t pos;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      out.push_back({Token::Type::Ident, std::string(text.substr(i, j - i)), start});
      i = j;
      continue;
    }
    switch (c) {
      case '(': out.push_back({Token::Type::LParen, "(", start}); ++i; break;
      case ')': out.push_back({Token::Type::RParen, ")", start}); ++i; break;
      case ',': out.push_back({Token::Type::Comma, ",", start}); ++i; break;
      case ';': out.push_back({Token::Type::Semi, ";", start}); ++i; break;
      case '.': out.push_back({Token::Type::Dot, ".", start}); ++i; break;
      case '&': out.push_back({Token::Type::Amp, "&", start}); ++i; break;
      case '|': out.push_back({Token::Type::Bar, "|", start}); ++i; break;
      case '~': out.push_back({Token::Type::Tilde, "~", start}); ++i; break;
      case '=': out.push_back({Token::Type::Eq, "=", start}); ++i; break;
      case '!':
        if (i + 1 < text.size() && text[i + 1] == '=') {
          out.push_back({Token::Type::Neq, "!=", start});
          i += 2;
        } else {
          throw ParseError(start, "unexpected '!'");
        }
        break;
      case '-':
        if (i + 1 < text.size() && text[i + 1] == '>') {
          out.push_back({Token::Type::Arrow, "->", start});
          i += 2;
        } else {
          throw ParseError(start, "unexpected '-'");
        }
        break;
      default:
        // Digits are legal inside identifiers but elements like "0" also
        // occur as variable-ish tokens in formulas; accept bare digit runs.
        if (std::isdigit(static_cast<unsigned char>(c))) {
          std::size_t j = i;
          while (j < text.size() && ident_char(text[j])) ++j;
          out.push_back({Token::Type::Ident, std::string(text.substr(i, j - i)), start});
          i = j;
          break;
        }
        throw ParseError(start, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Token::Type::End, "", text.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  Formula parse() {
    Formula f = parse_implication();
    expect(Token::Type::End, "end of input");
    return f;
  }

 private:
  std::vector<Token> toks_;
  std::size_t at_ = 0;

  const Token& cur() const { return toks_[at_]; }
  const Token& peek(std::size_t k = 1) const {
    return toks_[std::min(at_ + k, toks_.size() - 1)];
  }
  void advance() { ++at_; }
  bool accept(Token::Type t) {
    if (cur().type == t) { advance(); return true; }
    return false;
  }
  void expect(Token::Type t, const char* what) {
    if (cur().type != t) throw ParseError(cur().pos, std::string("expected ") + what);
    advance();
  }

  Formula parse_implication() {
    Formula lhs = parse_disjunction();
    if (accept(Token::Type::Arrow)) {
      std::size_t pos = cur().pos;
      Formula rhs = parse_implication();
      if (!first_order(lhs) || !first_order(rhs))
        throw ParseError(pos, "'->' is only allowed over first-order material");
      return make_implication(lhs, rhs);
    }
    return lhs;
  }

  Formula parse_disjunction() {
    Formula f = parse_conjunction();
    while (accept(Token::Type::Bar)) f = Formula::disj(f, parse_conjunction());
    return f;
  }

  Formula parse_conjunction() {
    Formula f = parse_unary();
    while (accept(Token::Type::Amp)) f = Formula::conj(f, parse_unary());
    return f;
  }

  bool at_quantifier() const {
    return cur().type == Token::Type::Ident && (cur().text == "A" || cur().text == "E") &&
           peek(1).type == Token::Type::Ident && peek(2).type == Token::Type::Dot;
  }

  Formula parse_unary() {
    if (at_quantifier()) {
      bool universal = cur().text == "A";
      advance();
      Variable v(cur().text);
      advance();
      expect(Token::Type::Dot, "'.'");
      Formula body = parse_implication();
      return universal ? Formula::forall(std::move(v), std::move(body))
                       : Formula::exists(std::move(v), std::move(body));
    }
    if (cur().type == Token::Type::Tilde) {
      std::size_t pos = cur().pos;
      advance();
      Formula f = parse_unary();
      if (!first_order(f))
        throw ParseError(pos, "negation applied to a non-first-order atom");
      return negate_first_order(f);
    }
    if (accept(Token::Type::LParen)) {
      Formula f = parse_implication();
      expect(Token::Type::RParen, "')'");
      return f;
    }
    return parse_atom();
  }

  std::vector<Variable> parse_space_list() {
    std::vector<Variable> vs;
    while (cur().type == Token::Type::Ident && !at_quantifier()) {
      vs.emplace_back(cur().text);
      advance();
    }
    return vs;
  }

  std::vector<Variable> parse_comma_list() {
    std::vector<Variable> vs;
    if (cur().type != Token::Type::Ident) throw ParseError(cur().pos, "expected a variable");
    vs.emplace_back(cur().text);
    advance();
    while (accept(Token::Type::Comma)) {
      if (cur().type != Token::Type::Ident) throw ParseError(cur().pos, "expected a variable");
      vs.emplace_back(cur().text);
      advance();
    }
    return vs;
  }

  Formula parse_atom() {
    if (cur().type != Token::Type::Ident) throw ParseError(cur().pos, "expected an atom");
    std::size_t pos = cur().pos;
    const std::string head = cur().text;

    if (peek(1).type == Token::Type::LParen &&
        (head == "dep" || head == "ind" || head == "pind" || head == "inc")) {
      advance();
      advance();  // '('
      if (head == "dep") {
        std::vector<Variable> det = parse_space_list();
        expect(Token::Type::Semi, "';'");
        if (cur().type != Token::Type::Ident) throw ParseError(cur().pos, "expected a variable");
        Variable y(cur().text);
        advance();
        expect(Token::Type::RParen, "')'");
        return Formula::atom(DepAtom{std::move(det), std::move(y)});
      }
      if (head == "ind") {
        std::vector<Variable> cond = parse_space_list();
        expect(Token::Type::Semi, "';'");
        std::vector<Variable> lhs = parse_space_list();
        expect(Token::Type::Semi, "';'");
        std::vector<Variable> rhs = parse_space_list();
        expect(Token::Type::RParen, "')'");
        return Formula::atom(IndAtom{std::move(cond), std::move(lhs), std::move(rhs)});
      }
      if (head == "pind") {
        std::vector<Variable> lhs = parse_space_list();
        expect(Token::Type::Semi, "';'");
        std::vector<Variable> rhs = parse_space_list();
        expect(Token::Type::RParen, "')'");
        return Formula::atom(IndAtom{{}, std::move(lhs), std::move(rhs)});
      }
      // inc
      std::vector<Variable> lhs = parse_space_list();
      expect(Token::Type::Semi, "';'");
      std::vector<Variable> rhs = parse_space_list();
      expect(Token::Type::RParen, "')'");
      if (lhs.empty() || lhs.size() != rhs.size())
        throw ParseError(pos, "inclusion atom tuples must have equal nonzero length");
      return Formula::atom(IncAtom{std::move(lhs), std::move(rhs)});
    }

    if (peek(1).type == Token::Type::LParen) {
      advance();
      advance();  // '('
      std::vector<Variable> args = parse_comma_list();
      expect(Token::Type::RParen, "')'");
      return Formula::atom(RelationAtom{head, std::move(args)});
    }

    // Tuple (dis)equality: v1 .. vn = w1 .. wn  /  v1 .. vn != w1 .. wn.
    std::vector<Variable> lhs = parse_space_list();
    if (lhs.empty()) throw ParseError(pos, "expected an atom");
    bool negated;
    if (accept(Token::Type::Eq)) {
      negated = false;
    } else if (accept(Token::Type::Neq)) {
      negated = true;
    } else {
      throw ParseError(cur().pos, "expected '=' or '!='");
    }
    std::vector<Variable> rhs = parse_space_list();
    if (rhs.size() != lhs.size())
      throw ParseError(pos, "tuple lengths differ around '" + std::string(negated ? "!=" : "=") + "'");
    return negated ? make_tuple_disequality(lhs, rhs) : make_tuple_equality(lhs, rhs);
  }
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

Formula make_tuple_equality(const std::vector<Variable>& l, const std::vector<Variable>& r) {
  assert(!l.empty() && l.size() == r.size());
  std::vector<Formula> parts;
  parts.reserve(l.size());
  for (std::size_t i = 0; i < l.size(); ++i)
    parts.push_back(Formula::atom(EqualityAtom{l[i], r[i]}));
  return conj_fold(parts);
}

Formula make_tuple_disequality(const std::vector<Variable>& l, const std::vector<Variable>& r) {
  assert(!l.empty() && l.size() == r.size());
  std::vector<Formula> parts;
  parts.reserve(l.size());
  for (std::size_t i = 0; i < l.size(); ++i)
    parts.push_back(Formula::neg_atom(EqualityAtom{l[i], r[i]}));
  return disj_fold(parts);
}

Formula make_implication(const Formula& antecedent, const Formula& consequent) {
  return Formula::disj(negate_first_order(antecedent), consequent);
}

Formula conj_fold(const std::vector<Formula>& fs) {
  assert(!fs.empty());
  Formula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = Formula::conj(acc, fs[i]);
  return acc;
}

Formula disj_fold(const std::vector<Formula>& fs) {
  assert(!fs.empty());
  Formula acc = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) acc = Formula::disj(acc, fs[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void join_names(std::ostringstream& os, const std::vector<Variable>& vs, const char* sep) {
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) os << sep;
    os << vs[i].name;
  }
}

void print_rec(std::ostringstream& os, const Formula& f) {
  // A quantifier's body extends as far as possible, so quantified children
  // of binary connectives need their own parentheses.
  auto print_child = [&os](const Formula& g) {
    bool wrap = g.kind() == Formula::Kind::Exists || g.kind() == Formula::Kind::Forall;
    if (wrap) os << '(';
    print_rec(os, g);
    if (wrap) os << ')';
  };
  switch (f.kind()) {
    case Formula::Kind::Atom:
      os << print_atom(f.atom_ref());
      return;
    case Formula::Kind::NegAtom: {
      const Atom& a = f.atom_ref();
      if (auto* e = std::get_if<EqualityAtom>(&a)) {
        os << e->lhs.name << " != " << e->rhs.name;
      } else {
        os << '~' << print_atom(a);
      }
      return;
    }
    case Formula::Kind::Conj:
      os << '(';
      print_child(f.left());
      os << " & ";
      print_child(f.right());
      os << ')';
      return;
    case Formula::Kind::Disj:
      os << '(';
      print_child(f.left());
      os << " | ";
      print_child(f.right());
      os << ')';
      return;
    case Formula::Kind::Exists:
      os << "E " << f.quant_var().name << ". ";
      print_rec(os, f.body());
      return;
    case Formula::Kind::Forall:
      os << "A " << f.quant_var().name << ". ";
      print_rec(os, f.body());
      return;
  }
}

}  // namespace

std::string print_atom(const Atom& a) {
  std::ostringstream os;
  if (auto* r = std::get_if<RelationAtom>(&a)) {
    os << r->name << '(';
    join_names(os, r->args, ", ");
    os << ')';
  } else if (auto* e = std::get_if<EqualityAtom>(&a)) {
    os << e->lhs.name << " = " << e->rhs.name;
  } else if (auto* d = std::get_if<DepAtom>(&a)) {
    os << "dep(";
    join_names(os, d->determinants, " ");
    os << "; " << d->determined.name << ')';
  } else if (auto* i = std::get_if<IndAtom>(&a)) {
    if (i->condition.empty()) {
      os << "pind(";
      join_names(os, i->left, " ");
      os << "; ";
      join_names(os, i->right, " ");
      os << ')';
    } else {
      os << "ind(";
      join_names(os, i->condition, " ");
      os << "; ";
      join_names(os, i->left, " ");
      os << "; ";
      join_names(os, i->right, " ");
      os << ')';
    }
  } else if (auto* c = std::get_if<IncAtom>(&a)) {
    os << "inc(";
    join_names(os, c->left, " ");
    os << "; ";
    join_names(os, c->right, " ");
    os << ')';
  }
  return os.str();
}

std::string print_formula(const Formula& f) {
  std::ostringstream os;
  print_rec(os, f);
  return os.str();
}

// ---------------------------------------------------------------------------
// Structural queries

namespace {

void free_vars_rec(const Formula& f, std::set<Variable>& bound, std::set<Variable>& out) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      for (const Variable& v : atom_variables(f.atom_ref()))
        if (!bound.count(v)) out.insert(v);
      return;
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      free_vars_rec(f.left(), bound, out);
      free_vars_rec(f.right(), bound, out);
      return;
    case Formula::Kind::Exists:
    case Formula::Kind::Forall: {
      bool fresh = bound.insert(f.quant_var()).second;
      free_vars_rec(f.body(), bound, out);
      if (fresh) bound.erase(f.quant_var());
      return;
    }
  }
}

}  // namespace

std::set<Variable> free_vars(const Formula& f) {
  std::set<Variable> bound, out;
  free_vars_rec(f, bound, out);
  return out;
}

std::set<Variable> all_variables(const Formula& f) {
  std::set<Variable> out;
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      for (const Variable& v : atom_variables(f.atom_ref())) out.insert(v);
      return out;
    case Formula::Kind::Conj:
    case Formula::Kind::Disj: {
      out = all_variables(f.left());
      auto r = all_variables(f.right());
      out.insert(r.begin(), r.end());
      return out;
    }
    case Formula::Kind::Exists:
    case Formula::Kind::Forall: {
      out = all_variables(f.body());
      out.insert(f.quant_var());
      return out;
    }
  }
  return out;
}

bool first_order(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom:
      return is_first_order(f.atom_ref());
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      return first_order(f.left()) && first_order(f.right());
    case Formula::Kind::Exists:
    case Formula::Kind::Forall:
      return first_order(f.body());
  }
  return false;
}

Formula negate_first_order(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
      return Formula::neg_atom(f.atom_ref());
    case Formula::Kind::NegAtom:
      return Formula::atom(f.atom_ref());
    case Formula::Kind::Conj:
      return Formula::disj(negate_first_order(f.left()), negate_first_order(f.right()));
    case Formula::Kind::Disj:
      return Formula::conj(negate_first_order(f.left()), negate_first_order(f.right()));
    case Formula::Kind::Exists:
      return Formula::forall(f.quant_var(), negate_first_order(f.body()));
    case Formula::Kind::Forall:
      return Formula::exists(f.quant_var(), negate_first_order(f.body()));
  }
  throw std::invalid_argument("unreachable");
}

namespace {

int distinct_count(const std::vector<Variable>& vs) {
  std::set<Variable> s(vs.begin(), vs.end());
  return static_cast<int>(s.size());
}

void take_max(std::optional<int>& slot, int value) {
  if (!slot || *slot < value) slot = value;
}

void classify_rec(const Formula& f, FragmentProfile& p) {
  switch (f.kind()) {
    case Formula::Kind::Atom:
    case Formula::Kind::NegAtom: {
      const Atom& a = f.atom_ref();
      if (auto* d = std::get_if<DepAtom>(&a)) {
        take_max(p.max_dep_arity, static_cast<int>(d->determinants.size()));
      } else if (auto* i = std::get_if<IndAtom>(&a)) {
        std::vector<Variable> all = i->condition;
        all.insert(all.end(), i->left.begin(), i->left.end());
        all.insert(all.end(), i->right.begin(), i->right.end());
        take_max(p.max_ind_measure, std::max(0, distinct_count(all) - 1));
      } else if (auto* c = std::get_if<IncAtom>(&a)) {
        take_max(p.max_inc_width, static_cast<int>(c->left.size()));
      }
      return;
    }
    case Formula::Kind::Conj:
    case Formula::Kind::Disj:
      classify_rec(f.left(), p);
      classify_rec(f.right(), p);
      return;
    case Formula::Kind::Forall:
      ++p.universal_count;
      classify_rec(f.body(), p);
      return;
    case Formula::Kind::Exists:
      classify_rec(f.body(), p);
      return;
  }
}

}  // namespace

FragmentProfile classify_fragment(const Formula& f) {
  FragmentProfile p;
  classify_rec(f, p);
  return p;
}

std::string FragmentProfile::to_string() const {
  auto show = [](const std::optional<int>& v) {
    return v ? std::to_string(*v) : std::string("-");
  };
  std::ostringstream os;
  os << "dep=" << show(max_dep_arity) << " ind=" << show(max_ind_measure)
     << " inc=" << show(max_inc_width) << " forall=" << universal_count;
  return os.str();
}

FreshNames FreshNames::for_formula(const Formula& f) {
  std::set<std::string> used;
  for (const Variable& v : all_variables(f)) used.insert(v.name);
  return FreshNames(std::move(used));
}

Variable FreshNames::fresh(const std::string& base) {
  if (!used_.count(base)) {
    used_.insert(base);
    return Variable(base);
  }
  for (int k = 1;; ++k) {
    std::string cand = base + std::to_string(k);
    if (!used_.count(cand)) {
      used_.insert(cand);
      return Variable(cand);
    }
  }
}

}  // namespace teamlog
