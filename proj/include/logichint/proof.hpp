#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "logichint/formula.hpp"
#include "logichint/rules.hpp"

namespace logichint {

enum class Level : std::uint8_t { Pretest, Train1, Train2, Train3, Train4, Train5, Posttest };

std::string_view level_name(Level level);
std::optional<Level> level_from_name(std::string_view name);
/// Hints are only served in the five training levels.
bool level_allows_hints(Level level);

struct Problem {
  std::string id;
  std::vector<Formula> premises;
  Formula conclusion;
  Level level = Level::Train1;

  /// Atoms of premises and conclusion.
  std::set<std::string> signature() const;
};

/// Throws std::invalid_argument when premises are empty or the conclusion is
/// itself a premise.
void check_problem_invariants(const Problem& problem);

/// Address of a statement: premise `P<n>` (1-based) or step `S<n>`.
/// `S0` is the indirect-proof assumption.
struct ParentRef {
  enum class Kind : std::uint8_t { Premise, Step };
  Kind kind = Kind::Premise;
  std::size_t index = 1;

  static ParentRef premise(std::size_t n) { return {Kind::Premise, n}; }
  static ParentRef step(std::size_t n) { return {Kind::Step, n}; }
  friend bool operator==(const ParentRef&, const ParentRef&) = default;
  friend auto operator<=>(const ParentRef&, const ParentRef&) = default;
};

std::string to_string(const ParentRef& ref);
/// Parses "P3" / "S12"; nullopt on malformed input.
std::optional<ParentRef> parse_parent_ref(std::string_view text);

struct ProofStep {
  /// 1-based position in its derivation.
  std::size_t index = 0;
  Formula formula;
  RuleId rule = RuleId::MP;
  std::vector<ParentRef> parents;
  std::optional<SitePath> site;
  std::optional<Direction> direction;
};

/// Same statement, rule and parents (site/direction ignored when either side
/// leaves them unspecified).
bool same_step_content(const ProofStep& a, const ProofStep& b);

enum class ProofMode : std::uint8_t { Direct, Indirect };

struct Proof {
  Problem problem;
  std::vector<ProofStep> steps;
  ProofMode mode = ProofMode::Direct;

  /// Conclusion in direct mode, the constant 0 in indirect mode.
  Formula goal() const;
};

struct Pss {
  Problem problem;
  std::vector<ProofStep> derived;
  /// Position of the snapshot in its source log.
  std::size_t order = 0;
  std::optional<double> timestamp;
};

struct Hint {
  ProofStep step;
  std::string explanation;
};

struct StepVerdict {
  enum class Code : std::uint8_t { Valid, ParentNotDerived, ArityMismatch, InvalidSite, SchemaMismatch };
  Code code = Code::Valid;
  std::string reason;

  bool valid() const { return code == Code::Valid; }
  static StepVerdict ok() { return {}; }
};

/// Statements available to a derivation: premises, the optional indirect
/// assumption, and every step that checked valid.
class Workspace {
public:
  explicit Workspace(const Problem& problem, ProofMode mode = ProofMode::Direct);

  const Problem& problem() const { return *problem_; }
  /// Resolves a reference, or nullptr when the statement is not derived.
  const Formula* lookup(const ParentRef& ref) const;
  /// Verdict for `step` against the current workspace. Does not mutate.
  StepVerdict check(const ProofStep& step) const;
  /// Records a step at position steps()+1; only valid steps become available.
  StepVerdict push(const ProofStep& step);

  std::size_t step_count() const { return steps_.size(); }
  const std::vector<StepVerdict>& verdicts() const { return verdicts_; }
  /// True if `f` equals a premise or any recorded step (valid or not).
  bool contains_statement(const Formula& f) const;
  /// Formulas of premises plus valid steps, in address order.
  std::vector<Formula> available_formulas() const;
  std::vector<ParentRef> available_refs() const;

private:
  const Problem* problem_;
  std::optional<Formula> assumption_;
  std::vector<Formula> steps_;
  std::vector<StepVerdict> verdicts_;
};

/// "valid", "parent_not_derived", "arity_mismatch", "invalid_site" or
/// "schema_mismatch".
std::string_view step_verdict_name(StepVerdict::Code code);

StepVerdict check_step(const Pss& state, const ProofStep& step);

struct ProofReport {
  std::vector<StepVerdict> verdicts;
  bool complete = false;
  std::size_t valid_steps = 0;
  /// valid / total; unset for an empty proof.
  std::optional<double> stepwise_accuracy;
};

ProofReport check_proof(const Proof& proof);

struct HintVerdict {
  enum class Reason : std::uint8_t { None, MissingParents, Illogical, Duplicate };
  Reason reason = Reason::None;
  std::string detail;

  bool correct() const { return reason == Reason::None; }
};

std::string_view hint_reason_name(HintVerdict::Reason reason);

/// Parents available, logically valid, and not already present, checked in
/// that order.
HintVerdict validate_hint(const Pss& state, const Hint& hint);

/// Indices (0-based) of derived steps that repeat a premise or an earlier step.
std::vector<std::size_t> redundant_steps(const Pss& state);

/// Per-step verdicts for the derived steps of a state.
std::vector<StepVerdict> check_state(const Pss& state);

}  // namespace logichint
