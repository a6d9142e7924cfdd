#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "logichint/json_io.hpp"
#include "logichint/proof.hpp"

namespace logichint {

struct LogEvent {
  enum class Kind : std::uint8_t { Derive, Delete, HintRequest };
  Kind kind = Kind::Derive;
  double t = 0.0;
  /// Derive only. `step.index` is ignored; steps are numbered by position.
  ProofStep step;
  /// Delete only: 1-based step number at the time of the event.
  std::size_t target = 0;
  /// Extra fields carried through verbatim (e.g. the hint served).
  Json extra = Json::object();
};

struct InteractionLog {
  std::string problem_id;
  /// Embedded problem, when the log carries one in its start line.
  std::optional<Problem> problem;
  std::vector<LogEvent> events;
};

/// Malformed or inconsistent log. `event_index` is 0-based over events
/// (the start line is not counted); `line` is 1-based in the source text.
class LogError : public std::runtime_error {
public:
  LogError(const std::string& what, std::size_t event_index, std::size_t line = 0)
      : std::runtime_error(what), event_index_(event_index), line_(line) {}
  std::size_t event_index() const { return event_index_; }
  std::size_t line() const { return line_; }

private:
  std::size_t event_index_;
  std::size_t line_;
};

Json start_event_json(const Problem& problem, double t, bool embed_problem = true);
Json event_to_json(const LogEvent& event);
LogEvent event_from_json(const Json& j, std::size_t event_index);

InteractionLog parse_event_log(std::istream& in);
InteractionLog read_event_log(const std::filesystem::path& path);
void write_event_log(std::ostream& out, const InteractionLog& log);

/// Applies one event to a derivation. Deleting a step also removes every
/// later step that cites it (transitively); the survivors are renumbered and
/// their references rewritten.
void apply_event(std::vector<ProofStep>& derived, const Problem& problem, const LogEvent& event,
                 std::size_t event_index);

/// One state per event, duplicates dropped (first occurrence kept). An empty
/// log yields the single empty state.
std::vector<Pss> extract_states(const InteractionLog& log, const Problem& problem);
/// Uses the problem embedded in the log.
std::vector<Pss> extract_states(const InteractionLog& log);

/// Final derivation after replaying every event.
std::vector<ProofStep> replay(const InteractionLog& log, const Problem& problem);

struct PssText {
  std::string rendered;
  Pss state;
};

/// Fixed textual template:
///   Givens:
///   P1: A -> B
///   Derived:
///   S1: B [MP from P1, P2]
///   Goal: B
/// The Derived block is omitted when nothing has been derived.
std::string render(const Pss& state);
PssText render_text(const Pss& state);

/// Inverse of `render`. The problem id and level are not part of the text
/// and come back empty / defaulted.
Pss parse_pss_text(std::string_view text);

/// pss.json record: the state, its per-step verdicts and redundant steps,
/// and the rendered text.
Json pss_record_json(const Pss& state);
Pss pss_from_record_json(const Json& j);

/// pss.json: a JSON array of records.
std::vector<Pss> read_pss_file(const std::filesystem::path& path);
void write_pss_file(const std::filesystem::path& path, const std::vector<Pss>& states);

}  // namespace logichint
