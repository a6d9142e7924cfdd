#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace logichint {

enum class Connective : std::uint8_t { Atom, False, Not, And, Or, Implies };

struct FormulaNode;

/// Immutable propositional formula. Copies share structure; equality is
/// structural (hash-guarded), never semantic.
class Formula {
public:
  /// Empty placeholder; only assignment and comparison are meaningful on it.
  Formula() = default;

  static Formula atom(std::string name);
  static Formula falsum();
  static Formula negation(Formula operand);
  static Formula conjunction(Formula left, Formula right);
  static Formula disjunction(Formula left, Formula right);
  static Formula implication(Formula antecedent, Formula consequent);
  static Formula binary(Connective op, Formula left, Formula right);

  Connective kind() const;
  bool is_atom() const { return kind() == Connective::Atom; }
  bool is_false() const { return kind() == Connective::False; }
  bool is_not() const { return kind() == Connective::Not; }
  bool is_and() const { return kind() == Connective::And; }
  bool is_or() const { return kind() == Connective::Or; }
  bool is_implies() const { return kind() == Connective::Implies; }
  bool is_binary() const;

  /// Atom name; empty for non-atoms.
  const std::string& name() const;
  /// Child of a Not.
  const Formula& operand() const;
  const Formula& left() const;
  const Formula& right() const;
  std::size_t arity() const;
  const Formula& child(std::size_t i) const;

  std::size_t hash() const;
  /// Node count (atoms, constants and connectives).
  std::size_t length() const;
  bool empty() const { return node_ == nullptr; }

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

private:
  explicit Formula(std::shared_ptr<const FormulaNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const FormulaNode> node_;
};

/// Total structural order (kind, then name, then children). Used for
/// canonical sorting only.
bool structural_less(const Formula& a, const Formula& b);

struct FormulaHash {
  std::size_t operator()(const Formula& f) const { return f.hash(); }
};

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t offset, const std::string& message);
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

class MissingVariable : public std::runtime_error {
public:
  explicit MissingVariable(std::string atom);
  const std::string& atom() const { return atom_; }

private:
  std::string atom_;
};

/// Parses the ASCII surface syntax (`~ & | -> 0`) with the Unicode aliases
/// ¬ ∧ ∨ → ⊥. Precedence ~ > & > | > ->; & and | associate left, -> right.
Formula parse_formula(std::string_view text);

/// Canonical minimal-parentheses rendering.
std::string to_string(const Formula& f);

struct FormulaMetrics {
  std::size_t length = 0;
  std::set<std::string> varset;
};

FormulaMetrics metrics(const Formula& f);
void collect_atoms(const Formula& f, std::set<std::string>& out);

using Assignment = std::map<std::string, bool, std::less<>>;

/// Truth-functional evaluation; throws MissingVariable if an atom is unassigned.
bool evaluate(const Formula& f, const Assignment& assignment);

/// Child-index path from the root (0 = left/operand, 1 = right).
using SitePath = std::vector<std::size_t>;

/// Subformula at `path`, or nullptr when the path leaves the tree.
const Formula* subformula_at(const Formula& f, const SitePath& path);
/// Copy of `f` with the subformula at `path` replaced. Path must be valid.
Formula replace_at(const Formula& f, const SitePath& path, const Formula& replacement);

/// Every site in pre-order (root first, left before right).
std::vector<SitePath> all_sites(const Formula& f);
/// Distinct subformulas in pre-order of first occurrence.
std::vector<Formula> subformulas(const Formula& f);

bool is_valid_atom_name(std::string_view name);

}  // namespace logichint
