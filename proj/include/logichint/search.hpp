#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "logichint/proof.hpp"

namespace logichint {

struct SearchConfig {
  std::size_t max_depth = 15;
  std::size_t max_frontier = 50000;
  std::size_t max_formula_len = 25;
  bool indirect = false;
  /// Restrict Conjunction, Addition and length-increasing rewrites to
  /// statements built from the problem's own subformulas. When false the
  /// search expands every application the rule engine enumerates.
  bool relevance_filter = true;

  /// Throws std::invalid_argument when a bound is zero.
  void validate() const;
};

enum class SearchStatus : std::uint8_t { Found, Exhausted, Truncated };

std::string_view search_status_name(SearchStatus status);

struct SearchResult {
  SearchStatus status = SearchStatus::Exhausted;
  std::optional<Proof> proof;
  /// Distinct statements held when the search stopped, starting set included.
  std::size_t explored = 0;
  std::size_t depth_reached = 0;
};

/// Layered forward search: layer k holds the statements first derivable at
/// depth k. The returned proof is the ancestor set of the goal's first
/// derivation, ordered by depth then discovery.
SearchResult solve(const Problem& problem, const SearchConfig& cfg = {});

/// A correct next step lying on a shortest completion of the state, or
/// nullopt when the goal is already derived or unreachable within bounds.
std::optional<Hint> next_step_hint(const Pss& state, const SearchConfig& cfg = {});

/// Canned explanation naming the rule and the statements it uses.
std::string explain_step(const Pss& state, const ProofStep& step);

class TooManyVariables : public std::runtime_error {
public:
  explicit TooManyVariables(std::size_t count);
};

inline constexpr std::size_t kMaxEntailmentAtoms = 20;

/// Truth-table entailment check over the combined atoms (at most 20).
bool entails(const std::vector<Formula>& premises, const Formula& goal);

/// True when no assignment satisfies every formula.
bool jointly_unsatisfiable(const std::vector<Formula>& formulas);

}  // namespace logichint
