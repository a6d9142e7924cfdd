#include "logichint/formula.hpp"

#include <array>
#include <functional>
#include <unordered_set>

namespace logichint {

struct FormulaNode {
  Connective kind;
  std::string name;
  std::array<Formula, 2> children;
  std::size_t arity = 0;
  std::size_t hash = 0;
  std::size_t length = 1;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

const FormulaNode& node_of(const std::shared_ptr<const FormulaNode>& p) { return *p; }

}  // namespace

Formula Formula::atom(std::string name) {
  if (!is_valid_atom_name(name)) {
    throw std::invalid_argument("invalid atom name '" + name + "'");
  }
  auto node = std::make_shared<FormulaNode>(FormulaNode{Connective::Atom, std::move(name), {}, 0, 0, 1});
  node->hash = mix(std::hash<std::string>{}(node->name), 1);
  return Formula(std::move(node));
}

Formula Formula::falsum() {
  static const Formula constant = [] {
    auto node = std::make_shared<FormulaNode>(FormulaNode{Connective::False, {}, {}, 0, 0, 1});
    node->hash = mix(0xfa15e, 2);
    return Formula(std::move(node));
  }();
  return constant;
}

Formula Formula::negation(Formula operand) {
  auto node = std::make_shared<FormulaNode>();
  node->kind = Connective::Not;
  node->hash = mix(operand.hash(), 3);
  node->length = operand.length() + 1;
  node->children[0] = std::move(operand);
  node->arity = 1;
  return Formula(std::move(node));
}

Formula Formula::binary(Connective op, Formula left, Formula right) {
  if (op != Connective::And && op != Connective::Or && op != Connective::Implies) {
    throw std::invalid_argument("binary() requires &, | or ->");
  }
  auto node = std::make_shared<FormulaNode>();
  node->kind = op;
  node->hash = mix(mix(left.hash(), static_cast<std::size_t>(op) + 16), right.hash());
  node->length = left.length() + right.length() + 1;
  node->children[0] = std::move(left);
  node->children[1] = std::move(right);
  node->arity = 2;
  return Formula(std::move(node));
}

Formula Formula::conjunction(Formula left, Formula right) {
  return binary(Connective::And, std::move(left), std::move(right));
}
Formula Formula::disjunction(Formula left, Formula right) {
  return binary(Connective::Or, std::move(left), std::move(right));
}
Formula Formula::implication(Formula antecedent, Formula consequent) {
  return binary(Connective::Implies, std::move(antecedent), std::move(consequent));
}

Connective Formula::kind() const { return node_of(node_).kind; }
bool Formula::is_binary() const {
  auto k = kind();
  return k == Connective::And || k == Connective::Or || k == Connective::Implies;
}
const std::string& Formula::name() const { return node_of(node_).name; }
const Formula& Formula::operand() const { return node_of(node_).children[0]; }
const Formula& Formula::left() const { return node_of(node_).children[0]; }
const Formula& Formula::right() const { return node_of(node_).children[1]; }
std::size_t Formula::arity() const { return node_of(node_).arity; }
const Formula& Formula::child(std::size_t i) const { return node_of(node_).children.at(i); }
std::size_t Formula::hash() const { return node_of(node_).hash; }
std::size_t Formula::length() const { return node_of(node_).length; }

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  const auto& x = *a.node_;
  const auto& y = *b.node_;
  if (x.hash != y.hash || x.kind != y.kind || x.length != y.length) return false;
  switch (x.kind) {
    case Connective::Atom:
      return x.name == y.name;
    case Connective::False:
      return true;
    case Connective::Not:
      return x.children[0] == y.children[0];
    default:
      return x.children[0] == y.children[0] && x.children[1] == y.children[1];
  }
}

bool structural_less(const Formula& a, const Formula& b) {
  if (a.kind() != b.kind()) return a.kind() < b.kind();
  switch (a.kind()) {
    case Connective::Atom:
      return a.name() < b.name();
    case Connective::False:
      return false;
    case Connective::Not:
      return structural_less(a.operand(), b.operand());
    default:
      if (a.left() != b.left()) return structural_less(a.left(), b.left());
      return structural_less(a.right(), b.right());
  }
}

bool is_valid_atom_name(std::string_view name) {
  if (name.empty() || name[0] < 'A' || name[0] > 'Z') return false;
  for (char c : name.substr(1)) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

ParseError::ParseError(std::size_t offset, const std::string& message)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + message), offset_(offset) {}

MissingVariable::MissingVariable(std::string atom)
    : std::runtime_error("no truth value assigned to atom '" + atom + "'"), atom_(std::move(atom)) {}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { Atom, False, Not, And, Or, Implies, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string text;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Atom: return "atom";
    case Tok::False: return "'0'";
    case Tok::Not: return "'~'";
    case Tok::And: return "'&'";
    case Tok::Or: return "'|'";
    case Tok::Implies: return "'->'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::End: return "end of input";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view s) {
  static constexpr std::string_view kNot = "\xC2\xAC";             // ¬
  static constexpr std::string_view kAnd = "\xE2\x88\xA7";         // ∧
  static constexpr std::string_view kOr = "\xE2\x88\xA8";          // ∨
  static constexpr std::string_view kArrow = "\xE2\x86\x92";       // →
  static constexpr std::string_view kBottom = "\xE2\x8A\xA5";      // ⊥

  std::vector<Token> out;
  std::size_t i = 0;
  auto starts = [&](std::string_view lit) { return s.substr(i, lit.size()) == lit; };
  while (i < s.size()) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    std::size_t at = i;
    if (c >= 'A' && c <= 'Z') {
      std::size_t j = i + 1;
      while (j < s.size() && ((s[j] >= 'A' && s[j] <= 'Z') || (s[j] >= 'a' && s[j] <= 'z') ||
                              (s[j] >= '0' && s[j] <= '9') || s[j] == '_')) {
        ++j;
      }
      out.push_back({Tok::Atom, at, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    switch (c) {
      case '~': out.push_back({Tok::Not, at, "~"}); ++i; continue;
      case '&': out.push_back({Tok::And, at, "&"}); ++i; continue;
      case '|': out.push_back({Tok::Or, at, "|"}); ++i; continue;
      case '(': out.push_back({Tok::LParen, at, "("}); ++i; continue;
      case ')': out.push_back({Tok::RParen, at, ")"}); ++i; continue;
      case '0': out.push_back({Tok::False, at, "0"}); ++i; continue;
      default: break;
    }
    if (starts("->")) {
      out.push_back({Tok::Implies, at, "->"});
      i += 2;
    } else if (starts(kNot)) {
      out.push_back({Tok::Not, at, "~"});
      i += kNot.size();
    } else if (starts(kAnd)) {
      out.push_back({Tok::And, at, "&"});
      i += kAnd.size();
    } else if (starts(kOr)) {
      out.push_back({Tok::Or, at, "|"});
      i += kOr.size();
    } else if (starts(kArrow)) {
      out.push_back({Tok::Implies, at, "->"});
      i += kArrow.size();
    } else if (starts(kBottom)) {
      out.push_back({Tok::False, at, "0"});
      i += kBottom.size();
    } else if (c == '-') {
      throw ParseError(at, "unknown operator '-', expected '->'");
    } else {
      std::string shown = (static_cast<unsigned char>(c) < 0x80) ? std::string(1, c) : std::string("non-ASCII byte");
      throw ParseError(at, "unknown operator or symbol '" + shown + "'");
    }
  }
  out.push_back({Tok::End, s.size(), ""});
  return out;
}

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse_all() {
    Formula f = implication();
    const Token& t = peek();
    if (t.kind == Tok::RParen) throw ParseError(t.offset, "unbalanced parentheses: unexpected ')'");
    if (t.kind != Tok::End) throw ParseError(t.offset, std::string("expected end of input, found ") + describe(t.kind));
    return f;
  }

private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  Formula implication() {
    Formula lhs = disjunction();
    if (peek().kind == Tok::Implies) {
      next();
      Formula rhs = implication();
      return Formula::implication(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula disjunction() {
    Formula lhs = conjunction();
    while (peek().kind == Tok::Or) {
      next();
      lhs = Formula::disjunction(std::move(lhs), conjunction());
    }
    return lhs;
  }

  Formula conjunction() {
    Formula lhs = unary();
    while (peek().kind == Tok::And) {
      next();
      lhs = Formula::conjunction(std::move(lhs), unary());
    }
    return lhs;
  }

  Formula unary() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Not:
        return Formula::negation(unary());
      case Tok::Atom:
        return Formula::atom(t.text);
      case Tok::False:
        return Formula::falsum();
      case Tok::LParen: {
        Formula inner = implication();
        const Token& close = next();
        if (close.kind != Tok::RParen) {
          if (close.kind == Tok::End) throw ParseError(close.offset, "unbalanced parentheses: missing ')'");
          throw ParseError(close.offset, std::string("expected ')', found ") + describe(close.kind));
        }
        return inner;
      }
      case Tok::RParen:
        throw ParseError(t.offset, "unbalanced parentheses: unexpected ')'");
      default:
        throw ParseError(t.offset, std::string("expected atom, '0', '~' or '(', found ") + describe(t.kind));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

int precedence(Connective k) {
  switch (k) {
    case Connective::Implies: return 1;
    case Connective::Or: return 2;
    case Connective::And: return 3;
    case Connective::Not: return 4;
    default: return 5;
  }
}

void print_into(const Formula& f, std::string& out);

void print_child(const Formula& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_into(child, out);
  if (parens) out += ')';
}

void print_into(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Connective::Atom:
      out += f.name();
      return;
    case Connective::False:
      out += '0';
      return;
    case Connective::Not:
      out += '~';
      print_child(f.operand(), precedence(f.operand().kind()) < precedence(Connective::Not), out);
      return;
    default: {
      int own = precedence(f.kind());
      int lp = precedence(f.left().kind());
      int rp = precedence(f.right().kind());
      bool right_assoc = f.is_implies();
      print_child(f.left(), right_assoc ? lp <= own : lp < own, out);
      out += f.is_and() ? " & " : f.is_or() ? " | " : " -> ";
      print_child(f.right(), right_assoc ? rp < own : rp <= own, out);
      return;
    }
  }
}

}  // namespace

Formula parse_formula(std::string_view text) {
  auto tokens = tokenize(text);
  if (tokens.size() == 1) throw ParseError(0, "empty formula");
  return Parser(std::move(tokens)).parse_all();
}

std::string to_string(const Formula& f) {
  std::string out;
  print_into(f, out);
  return out;
}

void collect_atoms(const Formula& f, std::set<std::string>& out) {
  switch (f.kind()) {
    case Connective::Atom: out.insert(f.name()); return;
    case Connective::False: return;
    case Connective::Not: collect_atoms(f.operand(), out); return;
    default:
      collect_atoms(f.left(), out);
      collect_atoms(f.right(), out);
  }
}

FormulaMetrics metrics(const Formula& f) {
  FormulaMetrics m;
  m.length = f.length();
  collect_atoms(f, m.varset);
  return m;
}

bool evaluate(const Formula& f, const Assignment& assignment) {
  switch (f.kind()) {
    case Connective::Atom: {
      auto it = assignment.find(f.name());
      if (it == assignment.end()) throw MissingVariable(f.name());
      return it->second;
    }
    case Connective::False: return false;
    case Connective::Not: return !evaluate(f.operand(), assignment);
    case Connective::And: return evaluate(f.left(), assignment) && evaluate(f.right(), assignment);
    case Connective::Or: return evaluate(f.left(), assignment) || evaluate(f.right(), assignment);
    case Connective::Implies: return !evaluate(f.left(), assignment) || evaluate(f.right(), assignment);
  }
  return false;
}

const Formula* subformula_at(const Formula& f, const SitePath& path) {
  const Formula* cur = &f;
  for (std::size_t idx : path) {
    if (idx >= cur->arity()) return nullptr;
    cur = &cur->child(idx);
  }
  return cur;
}

namespace {

Formula replace_from(const Formula& f, const SitePath& path, std::size_t depth, const Formula& replacement) {
  if (depth == path.size()) return replacement;
  std::size_t idx = path[depth];
  if (idx >= f.arity()) throw std::out_of_range("site path leaves the formula");
  if (f.is_not()) return Formula::negation(replace_from(f.operand(), path, depth + 1, replacement));
  if (idx == 0) return Formula::binary(f.kind(), replace_from(f.left(), path, depth + 1, replacement), f.right());
  return Formula::binary(f.kind(), f.left(), replace_from(f.right(), path, depth + 1, replacement));
}

void sites_into(const Formula& f, SitePath& prefix, std::vector<SitePath>& out) {
  out.push_back(prefix);
  for (std::size_t i = 0; i < f.arity(); ++i) {
    prefix.push_back(i);
    sites_into(f.child(i), prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

Formula replace_at(const Formula& f, const SitePath& path, const Formula& replacement) {
  return replace_from(f, path, 0, replacement);
}

std::vector<SitePath> all_sites(const Formula& f) {
  std::vector<SitePath> out;
  SitePath prefix;
  sites_into(f, prefix, out);
  return out;
}

std::vector<Formula> subformulas(const Formula& f) {
  std::vector<Formula> out;
  std::unordered_set<Formula, FormulaHash> seen;
  std::function<void(const Formula&)> walk = [&](const Formula& g) {
    if (seen.insert(g).second) out.push_back(g);
    for (std::size_t i = 0; i < g.arity(); ++i) walk(g.child(i));
  };
  walk(f);
  return out;
}

}  // namespace logichint
