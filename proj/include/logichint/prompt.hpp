#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "logichint/json_io.hpp"
#include "logichint/proof.hpp"
#include "logichint/pss.hpp"

namespace logichint {

enum class Strategy : std::uint8_t { ZS, FS_CoT, FS_PlanAndSolve, FS_L_DCoT, FS_BL_DCoT, FS_ToT_CoT };
enum class Task : std::uint8_t { Prove, Hint, Grade };

inline constexpr std::array<Strategy, 6> kAllStrategies{Strategy::ZS,        Strategy::FS_CoT,
                                                        Strategy::FS_PlanAndSolve, Strategy::FS_L_DCoT,
                                                        Strategy::FS_BL_DCoT, Strategy::FS_ToT_CoT};

std::string_view strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);
bool is_few_shot(Strategy s);
std::string_view task_name(Task t);
std::optional<Task> task_from_name(std::string_view name);

inline constexpr std::array<const char*, 5> kSectionNames{"context", "instructions", "output_expectations",
                                                          "examples", "user_prompt"};

struct PromptBundle {
  Strategy strategy = Strategy::ZS;
  Task task = Task::Prove;
  std::string context;
  std::string instructions;
  std::string output_expectations;
  std::string examples;
  std::string user_prompt;
  /// Set when the input was empty (e.g. grading an empty explanation).
  bool degenerate = false;

  /// Sections in order, as (name, text) pairs.
  std::array<std::pair<const char*, const std::string*>, 5> sections() const;
  /// Non-empty sections joined by a blank line; this is the text sent to a
  /// backend and hashed.
  std::string text() const;
  Json to_json() const;
};

class TemplateError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InsufficientExamples : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One template file split into its five sections.
struct PromptTemplate {
  std::array<std::string, 5> sections;
};

/// Parses `[[section]]` markers; all five sections must appear exactly once
/// and in order.
PromptTemplate parse_template(std::string_view text, const std::string& origin = "template");

/// Replaces `{{name}}` with `vars[name]`; unknown names are an error.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& vars);

class TemplateSet {
public:
  /// Reads `<dir>/<task>/<strategy>.tmpl` for prove and hint, `<dir>/grade/rubric.tmpl`,
  /// the rubric criteria `<dir>/grade/rubric.json`, and every `<dir>/common/*.txt`
  /// fragment (available as `{{<stem>}}`).
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& get(Task task, Strategy strategy) const;
  const std::map<std::string, std::string>& fragments() const { return fragments_; }

  struct Criterion {
    std::string name;
    std::string definition;
  };
  const std::vector<Criterion>& criteria() const { return criteria_; }
  int scale_min() const { return scale_min_; }
  int scale_max() const { return scale_max_; }

private:
  std::map<std::pair<Task, Strategy>, PromptTemplate> templates_;
  std::map<std::string, std::string> fragments_;
  std::vector<Criterion> criteria_;
  int scale_min_ = 1;
  int scale_max_ = 4;
};

struct SplitConfig {
  std::set<std::string> training;
  std::set<std::string> validation;
  std::set<std::string> test;

  static SplitConfig from_json(const Json& j);
  static SplitConfig load(const std::filesystem::path& path);
  /// "training", "validation", "test" or "" when unassigned.
  std::string_view split_of(std::string_view problem_id) const;
};

struct WorkedExample {
  std::string id;
  std::string problem_id;
  Task task = Task::Prove;
  Strategy strategy = Strategy::FS_CoT;
  std::string text;
};

class ExampleBank {
public:
  static ExampleBank from_json(const Json& j);
  static ExampleBank load(const std::filesystem::path& path);

  /// Examples for a strategy and task, in bank order.
  std::vector<const WorkedExample*> select(Task task, Strategy strategy) const;
  const std::vector<WorkedExample>& all() const { return examples_; }
  /// Throws std::invalid_argument if any example comes from a problem outside
  /// the training split.
  void check_split(const SplitConfig& split) const;

private:
  std::vector<WorkedExample> examples_;
};

struct PromptOptions {
  /// Examples per few-shot strategy; missing entries use `default_examples`.
  std::map<Strategy, std::size_t> examples_per_strategy;
  std::size_t default_examples = 2;

  std::size_t examples_for(Strategy s) const;
};

/// Problem rendered as it appears in prove prompts.
std::string render_problem(const Problem& problem);

class PromptForge {
public:
  PromptForge(TemplateSet templates, ExampleBank bank, PromptOptions options = {});

  PromptBundle build_prove_prompt(const Problem& problem, Strategy strategy) const;
  PromptBundle build_hint_prompt(const PssText& state, Strategy strategy) const;
  PromptBundle build_grader_prompt(std::string_view explanation, const PssText& state) const;

  const TemplateSet& templates() const { return templates_; }
  const ExampleBank& bank() const { return bank_; }

private:
  PromptBundle build(Task task, Strategy strategy, std::map<std::string, std::string> vars) const;

  TemplateSet templates_;
  ExampleBank bank_;
  PromptOptions options_;
};

/// Fenced ``` blocks are preferred (the first one holding valid JSON);
/// otherwise the first balanced {...} or [...] that parses.
std::optional<Json> extract_json(std::string_view raw);

struct ProofResponse {
  std::string raw;
  std::vector<ProofStep> steps;
  ProofMode mode = ProofMode::Direct;
  bool parse_ok = false;
  std::string error;
};

struct HintResponse {
  std::string raw;
  std::optional<Hint> hint;
  bool parse_ok = false;
  std::string error;
};

inline constexpr std::array<const char*, 4> kRubricDimensions{"consistency", "clarity", "justification",
                                                              "subgoaling"};

struct RubricScores {
  std::string raw;
  std::array<int, 4> scores{};
  bool parse_ok = false;
  std::string error;
};

ProofResponse parse_proof_response(std::string_view raw);
HintResponse parse_hint_response(std::string_view raw);
RubricScores parse_rubric_response(std::string_view raw);

using ParsedResponse = std::variant<ProofResponse, HintResponse, RubricScores>;
ParsedResponse parse_response(std::string_view raw, Task task);

/// JSON documents a well-formed response of each kind would contain.
Json proof_response_json(const std::vector<ProofStep>& steps, ProofMode mode = ProofMode::Direct);
Json hint_response_json(const Hint& hint);
Json rubric_response_json(const std::array<int, 4>& scores);

}  // namespace logichint
