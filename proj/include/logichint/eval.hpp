#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "logichint/gateway.hpp"
#include "logichint/json_io.hpp"
#include "logichint/proof.hpp"
#include "logichint/prompt.hpp"

namespace logichint {

/// One evaluated proof step or hint.
struct EvalRecord {
  std::string record_id;
  /// "step" or "hint".
  std::string task;
  std::string problem_id;
  Level level = Level::Train1;
  /// Hint records: "<problem>#<order>" of the source state.
  std::string state;
  Strategy strategy = Strategy::ZS;
  std::string backend;
  /// Position within the proof for step records, 0 for hints.
  std::size_t step_number = 0;
  std::optional<ProofStep> payload;
  std::optional<RuleId> rule;
  /// step_verdict_name / "correct" / hint_reason_name.
  std::string verdict;
  bool correct = false;
  std::size_t parent_length_sum = 0;
  std::string explanation;
  std::optional<std::array<int, 4>> llm_scores;
};

enum class GroupKey : std::uint8_t { Rule, Level, Strategy, Backend };

std::string_view group_key_name(GroupKey key);
std::optional<GroupKey> group_key_from_name(std::string_view name);

struct AccuracyRow {
  std::string key;
  std::size_t n = 0;
  std::size_t correct = 0;
  /// Percent, rounded to two decimals.
  double accuracy = 0.0;
};

/// Groups come out in rule / level / strategy order, backends alphabetically.
/// Records without a rule are grouped under "unknown". Throws
/// std::invalid_argument on empty input.
std::vector<AccuracyRow> accuracy_by(const std::vector<EvalRecord>& records, GroupKey key);

/// Percent rounded to two decimals.
double percent(std::size_t correct, std::size_t n);
std::string format_percent(double value);

struct UniqueHints {
  std::vector<std::pair<std::string, std::size_t>> per_problem;
  double mean = 0.0;
};

/// Distinct (formula, rule, parents) hints per problem, over hint records
/// that carry a payload.
UniqueHints unique_hints_per_problem(const std::vector<EvalRecord>& records);

struct Correlation {
  std::size_t n = 0;
  std::optional<double> rho;
  std::optional<double> p_value;
  /// t-approximation used with fewer than 10 pairs.
  bool approximate = false;
  bool exact = false;
};

struct SpearmanOptions {
  /// Permutation p-value instead of the t-approximation when n <= 10.
  bool exact_permutation = false;
};

/// Pearson correlation of average ranks. Constant input gives rho = NA.
/// Throws std::invalid_argument when sizes differ or n < 2.
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y, SpearmanOptions options = {});

/// Average ranks, 1-based, ties share the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Quadratic weighted kappa over categories 1..K. NA when the expected
/// disagreement is zero. Throws std::invalid_argument on out-of-range input.
std::optional<double> qwk(const std::vector<int>& x, const std::vector<int>& y, int categories = 4);

struct WelchResult {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::optional<double> t;
  std::optional<double> df;
  std::optional<double> p_value;
};

/// Welch unequal-variance t-test, two-sided. Both variances zero gives NA.
/// Throws std::invalid_argument when either sample has fewer than 2 values.
WelchResult welch_t(const std::vector<double>& a, const std::vector<double>& b);

inline constexpr double kBonferroniThreshold = 0.05 / 4;

struct RubricScore {
  std::string item_id;
  std::string rater;
  std::array<int, 4> scores{};
};

class RatingsError : public std::runtime_error {
public:
  RatingsError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// CSV with header item_id,rater,consistency,clarity,justification,subgoaling.
std::vector<RubricScore> parse_ratings_csv(std::istream& in, const std::string& origin = "ratings");
std::vector<RubricScore> read_ratings_csv(const std::filesystem::path& path);
void write_ratings_csv(std::ostream& out, const std::vector<RubricScore>& scores);

struct AgreementStats {
  std::string dimension;
  std::size_t n = 0;
  Correlation spearman;
  std::optional<double> qwk;
  /// p below the Bonferroni threshold.
  bool significant = false;
};

/// Per-dimension agreement over items rated in both sets (matched by item id).
std::vector<AgreementStats> agreement(const std::vector<RubricScore>& a, const std::vector<RubricScore>& b,
                                      SpearmanOptions options = {});
Json agreement_json(const std::vector<AgreementStats>& stats);

struct PipelineConfig {
  std::vector<Problem> problems;
  SplitConfig split;
  /// States for hint evaluation; may be empty.
  std::vector<Pss> states;
  std::vector<Strategy> strategies{Strategy::FS_CoT};
  std::vector<std::string> backends;
  bool prove = true;
  bool grade = false;
  double human_fraction = 0.2;
  std::uint64_t seed = 20240;
  std::size_t threads = 4;
  /// Human ratings keyed by record id, compared with the grader's scores.
  std::vector<RubricScore> human_ratings;
};

struct PipelineFailure {
  std::string task_id;
  std::string problem_id;
  std::string strategy;
  std::string backend;
  std::string error;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<PipelineFailure> failures;
  std::vector<std::string> human_sample;
  Json summary;
  Json agreement;
};

EvalReport run_pipeline(const PipelineConfig& cfg, const PromptForge& forge, Gateway& gateway);

/// Builds summary.json from records (used by run_pipeline).
Json summarize(const std::vector<EvalRecord>& records, const std::vector<PipelineFailure>& failures,
               const PipelineConfig& cfg, const std::vector<std::string>& human_sample);

void write_report_csv(std::ostream& out, const std::vector<EvalRecord>& records);
/// Writes report.csv, summary.json and agreement.json into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace logichint
