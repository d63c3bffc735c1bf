#include "teamlog/model.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace teamlog {

Structure::Structure(std::vector<std::string> domain, std::map<std::string, Relation> relations,
                     std::map<std::string, int> constants)
    : domain_(std::move(domain)), relations_(std::move(relations)), constants_(std::move(constants)) {
  if (domain_.size() < 2) throw FileFormatError("structure domain must have at least two elements");
  std::set<std::string> seen;
  for (const auto& e : domain_) {
    if (e.empty()) throw FileFormatError("empty domain element token");
    if (!seen.insert(e).second) throw FileFormatError("duplicate domain element '" + e + "'");
  }
  int n = size();
  for (const auto& [name, rel] : relations_) {
    if (rel.arity < 1) throw FileFormatError("relation '" + name + "' must have arity >= 1");
    for (const auto& t : rel.tuples) {
      if (static_cast<int>(t.size()) != rel.arity)
        throw FileFormatError("arity mismatch in relation '" + name + "'");
      for (int e : t)
        if (e < 0 || e >= n) throw FileFormatError("tuple element out of range in '" + name + "'");
    }
    if (constants_.count(name)) throw FileFormatError("name '" + name + "' used twice");
  }
  for (const auto& [name, e] : constants_)
    if (e < 0 || e >= n) throw FileFormatError("constant '" + name + "' out of range");
}

const Relation* Structure::relation(const std::string& name) const {
  auto it = relations_.find(name);
  return it == relations_.end() ? nullptr : &it->second;
}

std::optional<int> Structure::constant(const std::string& name) const {
  auto it = constants_.find(name);
  if (it == constants_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Structure::element_index(const std::string& token) const {
  for (std::size_t i = 0; i < domain_.size(); ++i)
    if (domain_[i] == token) return static_cast<int>(i);
  return std::nullopt;
}

Signature Structure::signature() const {
  Signature sig;
  for (const auto& [name, rel] : relations_) sig.relations.emplace_back(name, rel.arity);
  for (const auto& [name, e] : constants_) {
    (void)e;
    sig.constants.push_back(name);
  }
  return sig;
}

std::string Structure::to_file_string() const {
  std::ostringstream os;
  os << "domain =";
  for (const auto& e : domain_) os << ' ' << e;
  os << '\n';
  for (const auto& [name, rel] : relations_) {
    os << name << '/' << rel.arity << " = {";
    bool first = true;
    for (const auto& t : rel.tuples) {
      if (!first) os << ", ";
      first = false;
      if (rel.arity == 1) {
        os << domain_[t[0]];
      } else {
        os << '(';
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (i) os << ',';
          os << domain_[t[i]];
        }
        os << ')';
      }
    }
    os << "}\n";
  }
  for (const auto& [name, e] : constants_) os << "const " << name << " = " << domain_[e] << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Structure file parsing

namespace {

std::string strip(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int lookup_element(const std::vector<std::string>& domain, const std::string& tok) {
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (domain[i] == tok) return static_cast<int>(i);
  throw FileFormatError("unknown element '" + tok + "'");
}

// Tuple section: "{(a,b), (c,d)}" / "{a, b}" / bare "a, b" for arity 1.
std::set<std::vector<int>> parse_tuples(const std::string& text, int arity,
                                        const std::vector<std::string>& domain) {
  std::string body = strip(text);
  if (!body.empty() && body.front() == '{') {
    if (body.back() != '}') throw FileFormatError("unterminated '{' in relation definition");
    body = strip(std::string_view(body).substr(1, body.size() - 2));
  }
  std::set<std::vector<int>> out;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && (std::isspace(static_cast<unsigned char>(body[i])) || body[i] == ','))
      ++i;
    if (i >= body.size()) break;
    std::vector<int> tuple;
    if (body[i] == '(') {
      std::size_t close = body.find(')', i);
      if (close == std::string::npos) throw FileFormatError("unterminated '(' in tuple");
      for (const std::string& part : split_on(body.substr(i + 1, close - i - 1), ',')) {
        std::string tok = strip(part);
        if (tok.empty()) throw FileFormatError("empty element in tuple");
        tuple.push_back(lookup_element(domain, tok));
      }
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < body.size() && body[j] != ',' && body[j] != '(' &&
             !std::isspace(static_cast<unsigned char>(body[j])))
        ++j;
      tuple.push_back(lookup_element(domain, body.substr(i, j - i)));
      i = j;
    }
    if (static_cast<int>(tuple.size()) != arity)
      throw FileFormatError("tuple arity mismatch in relation definition");
    out.insert(std::move(tuple));
  }
  return out;
}

}  // namespace

Structure load_structure(std::string_view text) {
  std::vector<std::string> domain;
  bool have_domain = false;
  struct PendingRel {
    int arity;
    std::string rhs;
  };
  std::vector<std::pair<std::string, PendingRel>> rel_lines;
  std::vector<std::pair<std::string, std::string>> const_lines;

  std::istringstream is{std::string(text)};
  std::string raw;
  while (std::getline(is, raw)) {
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FileFormatError("expected '=' in line: " + raw);
    std::string head = strip(line.substr(0, eq));
    std::string rhs = strip(line.substr(eq + 1));
    if (head == "domain") {
      domain = split_ws(rhs);
      have_domain = true;
    } else if (head.rfind("const ", 0) == 0) {
      const_lines.emplace_back(strip(head.substr(6)), rhs);
    } else {
      auto slash = head.find('/');
      if (slash == std::string::npos)
        throw FileFormatError("expected NAME/ARITY on left of '=': " + raw);
      std::string name = strip(head.substr(0, slash));
      int arity;
      try {
        arity = std::stoi(head.substr(slash + 1));
      } catch (...) {
        throw FileFormatError("bad arity in: " + raw);
      }
      rel_lines.emplace_back(name, PendingRel{arity, rhs});
    }
  }
  if (!have_domain) throw FileFormatError("missing 'domain =' line");

  std::map<std::string, Relation> relations;
  for (auto& [name, pend] : rel_lines) {
    if (relations.count(name)) throw FileFormatError("relation '" + name + "' defined twice");
    Relation r;
    r.arity = pend.arity;
    r.tuples = parse_tuples(pend.rhs, pend.arity, domain);
    relations.emplace(name, std::move(r));
  }
  std::map<std::string, int> constants;
  for (auto& [name, tok] : const_lines) {
    if (constants.count(name)) throw FileFormatError("constant '" + name + "' defined twice");
    constants.emplace(name, lookup_element(domain, strip(tok)));
  }
  return Structure(std::move(domain), std::move(relations), std::move(constants));
}

// ---------------------------------------------------------------------------
// Teams

Team Team::make(std::vector<Variable> vars, std::vector<std::vector<int>> rows) {
  for (const auto& r : rows)
    if (r.size() != vars.size()) throw std::invalid_argument("row width differs from team width");

  // Canonical column order is sorted by variable name.
  std::vector<std::size_t> perm(vars.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(),
            [&vars](std::size_t a, std::size_t b) { return vars[a] < vars[b]; });
  for (std::size_t i = 1; i < perm.size(); ++i)
    if (vars[perm[i - 1]] == vars[perm[i]])
      throw std::invalid_argument("duplicate variable in team domain");

  Team t;
  t.vars_.reserve(vars.size());
  for (std::size_t i : perm) t.vars_.push_back(vars[i]);
  t.rows_.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<int> canon(r.size());
    for (std::size_t i = 0; i < perm.size(); ++i) canon[i] = r[perm[i]];
    t.rows_.push_back(std::move(canon));
  }
  std::sort(t.rows_.begin(), t.rows_.end());
  t.rows_.erase(std::unique(t.rows_.begin(), t.rows_.end()), t.rows_.end());
  return t;
}

Team Team::empty(std::vector<Variable> vars) { return make(std::move(vars), {}); }

Team Team::singleton_empty() {
  Team t;
  t.rows_.push_back({});
  return t;
}

bool Team::has_var(const Variable& v) const { return var_index(v).has_value(); }

std::optional<std::size_t> Team::var_index(const Variable& v) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), v);
  if (it != vars_.end() && *it == v) return static_cast<std::size_t>(it - vars_.begin());
  return std::nullopt;
}

Team Team::with_rows(std::vector<std::vector<int>> rows) const {
  Team t;
  t.vars_ = vars_;
  t.rows_ = std::move(rows);
  std::sort(t.rows_.begin(), t.rows_.end());
  t.rows_.erase(std::unique(t.rows_.begin(), t.rows_.end()), t.rows_.end());
  return t;
}

Team Team::restrict_to(const std::set<Variable>& keep) const {
  std::vector<std::size_t> cols;
  std::vector<Variable> vars;
  for (const Variable& v : keep) {
    auto idx = var_index(v);
    if (!idx) throw std::invalid_argument("restriction to unknown variable '" + v.name + "'");
    cols.push_back(*idx);
    vars.push_back(v);
  }
  std::vector<std::vector<int>> rows;
  rows.reserve(rows_.size());
  for (const auto& r : rows_) {
    std::vector<int> nr(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) nr[i] = r[cols[i]];
    rows.push_back(std::move(nr));
  }
  return make(std::move(vars), std::move(rows));
}

Team Team::drop_var(const Variable& v) const {
  std::set<Variable> keep(vars_.begin(), vars_.end());
  keep.erase(v);
  return restrict_to(keep);
}

Team Team::universal_extension(const Variable& v, const Structure& m) const {
  const Team base = has_var(v) ? drop_var(v) : *this;
  auto pos = std::lower_bound(base.vars_.begin(), base.vars_.end(), v) - base.vars_.begin();
  std::vector<Variable> vars = base.vars_;
  vars.insert(vars.begin() + pos, v);
  std::vector<std::vector<int>> rows;
  rows.reserve(base.rows_.size() * m.size());
  for (const auto& r : base.rows_) {
    for (int e = 0; e < m.size(); ++e) {
      std::vector<int> nr = r;
      nr.insert(nr.begin() + pos, e);
      rows.push_back(std::move(nr));
    }
  }
  Team t;
  t.vars_ = std::move(vars);
  t.rows_ = std::move(rows);
  std::sort(t.rows_.begin(), t.rows_.end());
  t.rows_.erase(std::unique(t.rows_.begin(), t.rows_.end()), t.rows_.end());
  return t;
}

std::set<std::vector<int>> Team::values(const std::vector<Variable>& tuple) const {
  std::vector<std::size_t> cols;
  cols.reserve(tuple.size());
  for (const Variable& v : tuple) {
    auto idx = var_index(v);
    if (!idx) throw std::invalid_argument("unknown variable '" + v.name + "' in tuple");
    cols.push_back(*idx);
  }
  std::set<std::vector<int>> out;
  for (const auto& r : rows_) {
    std::vector<int> t(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) t[i] = r[cols[i]];
    out.insert(std::move(t));
  }
  return out;
}

std::size_t Team::hash() const {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&h](std::size_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  for (const auto& v : vars_) {
    mix(std::hash<std::string>{}(v.name));
  }
  mix(rows_.size());
  for (const auto& r : rows_)
    for (int e : r) mix(static_cast<std::size_t>(e) + 0x9e3779b9);
  return h;
}

std::string Team::to_csv_string(const Structure& m) const {
  std::ostringstream os;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (i) os << ',';
    os << vars_[i].name;
  }
  os << '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      os << m.domain()[r[i]];
    }
    if (!r.empty() || vars_.empty()) os << '\n';
  }
  return os.str();
}

Team load_team(std::string_view text, const Structure& m) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line)) line = "";
  std::string header = strip(line);

  std::vector<Variable> vars;
  if (!header.empty()) {
    for (const std::string& name : split_on(header, ',')) {
      std::string tok = strip(name);
      if (tok.empty()) throw FileFormatError("empty variable name in team header");
      vars.emplace_back(tok);
    }
  }

  std::vector<std::vector<int>> rows;
  while (std::getline(is, line)) {
    std::string body = strip(line);
    if (body.empty()) continue;
    if (vars.empty())
      throw FileFormatError("row given for a team with no variables");
    std::vector<int> row;
    for (const std::string& cell : split_on(body, ',')) {
      std::string tok = strip(cell);
      if (tok.empty()) throw FileFormatError("empty cell in team row");
      auto idx = m.element_index(tok);
      if (!idx) throw FileFormatError("unknown element '" + tok + "' in team row");
      row.push_back(*idx);
    }
    if (row.size() != vars.size()) throw FileFormatError("ragged team row: " + body);
    rows.push_back(std::move(row));
  }

  // A header with no variables denotes the team containing the empty assignment.
  if (vars.empty()) return Team::singleton_empty();
  return Team::make(std::move(vars), std::move(rows));
}

std::set<std::vector<int>> team_values(const Team& x, const std::vector<Variable>& tuple) {
  return x.values(tuple);
}

Team team_restrict(const Team& x, const std::set<Variable>& keep) { return x.restrict_to(keep); }

Team team_universal_extension(const Team& x, const Variable& v, const Structure& m) {
  return x.universal_extension(v, m);
}

}  // namespace teamlog
