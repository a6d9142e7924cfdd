#include "logichint/proof.hpp"

#include <charconv>
#include <stdexcept>

namespace logichint {

std::string_view level_name(Level level) {
  switch (level) {
    case Level::Pretest: return "pretest";
    case Level::Train1: return "train1";
    case Level::Train2: return "train2";
    case Level::Train3: return "train3";
    case Level::Train4: return "train4";
    case Level::Train5: return "train5";
    case Level::Posttest: return "posttest";
  }
  return "?";
}

std::optional<Level> level_from_name(std::string_view name) {
  for (Level l : {Level::Pretest, Level::Train1, Level::Train2, Level::Train3, Level::Train4, Level::Train5,
                  Level::Posttest}) {
    if (level_name(l) == name) return l;
  }
  return std::nullopt;
}

bool level_allows_hints(Level level) { return level != Level::Pretest && level != Level::Posttest; }

std::set<std::string> Problem::signature() const {
  std::set<std::string> out;
  for (const auto& p : premises) collect_atoms(p, out);
  collect_atoms(conclusion, out);
  return out;
}

void check_problem_invariants(const Problem& problem) {
  if (problem.premises.empty()) throw std::invalid_argument("problem '" + problem.id + "' has no premises");
  if (problem.conclusion.empty()) throw std::invalid_argument("problem '" + problem.id + "' has no conclusion");
  for (const auto& p : problem.premises) {
    if (p == problem.conclusion) {
      throw std::invalid_argument("problem '" + problem.id + "' lists its conclusion among the premises");
    }
  }
}

std::string to_string(const ParentRef& ref) {
  return (ref.kind == ParentRef::Kind::Premise ? "P" : "S") + std::to_string(ref.index);
}

std::optional<ParentRef> parse_parent_ref(std::string_view text) {
  if (text.size() < 2) return std::nullopt;
  ParentRef::Kind kind;
  if (text[0] == 'P' || text[0] == 'p') {
    kind = ParentRef::Kind::Premise;
  } else if (text[0] == 'S' || text[0] == 's') {
    kind = ParentRef::Kind::Step;
  } else {
    return std::nullopt;
  }
  std::size_t n = 0;
  auto digits = text.substr(1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  if (kind == ParentRef::Kind::Premise && n == 0) return std::nullopt;
  return ParentRef{kind, n};
}

bool same_step_content(const ProofStep& a, const ProofStep& b) {
  if (a.formula != b.formula || a.rule != b.rule || a.parents != b.parents) return false;
  if (a.site && b.site && *a.site != *b.site) return false;
  if (a.direction && b.direction && *a.direction != *b.direction) return false;
  return true;
}

Formula Proof::goal() const { return mode == ProofMode::Indirect ? Formula::falsum() : problem.conclusion; }

Workspace::Workspace(const Problem& problem, ProofMode mode) : problem_(&problem) {
  if (mode == ProofMode::Indirect) assumption_ = Formula::negation(problem.conclusion);
}

const Formula* Workspace::lookup(const ParentRef& ref) const {
  if (ref.kind == ParentRef::Kind::Premise) {
    if (ref.index == 0 || ref.index > problem_->premises.size()) return nullptr;
    return &problem_->premises[ref.index - 1];
  }
  if (ref.index == 0) return assumption_ ? &*assumption_ : nullptr;
  if (ref.index > steps_.size() || !verdicts_[ref.index - 1].valid()) return nullptr;
  return &steps_[ref.index - 1];
}

StepVerdict Workspace::check(const ProofStep& step) const {
  RuleApplication app;
  app.rule = step.rule;
  app.result = step.formula;
  app.site = step.site;
  app.direction = step.direction;
  for (const auto& ref : step.parents) {
    const Formula* f = lookup(ref);
    if (!f) return {StepVerdict::Code::ParentNotDerived, "parent not derived"};
    app.parents.push_back(*f);
  }
  auto v = validate_application(app);
  switch (v.code) {
    case ValidationResult::Code::Ok: return StepVerdict::ok();
    case ValidationResult::Code::ArityMismatch: return {StepVerdict::Code::ArityMismatch, v.diagnosis};
    case ValidationResult::Code::InvalidSite: return {StepVerdict::Code::InvalidSite, v.diagnosis};
    case ValidationResult::Code::SchemaMismatch: break;
  }
  return {StepVerdict::Code::SchemaMismatch, v.diagnosis};
}

StepVerdict Workspace::push(const ProofStep& step) {
  StepVerdict v = check(step);
  steps_.push_back(step.formula);
  verdicts_.push_back(v);
  return v;
}

bool Workspace::contains_statement(const Formula& f) const {
  for (const auto& p : problem_->premises) {
    if (p == f) return true;
  }
  for (const auto& s : steps_) {
    if (s == f) return true;
  }
  return false;
}

std::vector<Formula> Workspace::available_formulas() const {
  std::vector<Formula> out(problem_->premises.begin(), problem_->premises.end());
  if (assumption_) out.push_back(*assumption_);
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (verdicts_[i].valid()) out.push_back(steps_[i]);
  }
  return out;
}

std::vector<ParentRef> Workspace::available_refs() const {
  std::vector<ParentRef> out;
  for (std::size_t i = 1; i <= problem_->premises.size(); ++i) out.push_back(ParentRef::premise(i));
  if (assumption_) out.push_back(ParentRef::step(0));
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (verdicts_[i].valid()) out.push_back(ParentRef::step(i + 1));
  }
  return out;
}

namespace {

Workspace replay(const Pss& state) {
  Workspace ws(state.problem);
  for (const auto& s : state.derived) ws.push(s);
  return ws;
}

}  // namespace

std::vector<StepVerdict> check_state(const Pss& state) { return replay(state).verdicts(); }

StepVerdict check_step(const Pss& state, const ProofStep& step) { return replay(state).check(step); }

ProofReport check_proof(const Proof& proof) {
  ProofReport report;
  Workspace ws(proof.problem, proof.mode);
  const Formula goal = proof.goal();
  for (const auto& step : proof.steps) {
    StepVerdict v = ws.push(step);
    if (v.valid()) {
      ++report.valid_steps;
      if (step.formula == goal) report.complete = true;
    }
    report.verdicts.push_back(std::move(v));
  }
  if (!proof.steps.empty()) {
    report.stepwise_accuracy = static_cast<double>(report.valid_steps) / static_cast<double>(proof.steps.size());
  }
  return report;
}

std::string_view step_verdict_name(StepVerdict::Code code) {
  switch (code) {
    case StepVerdict::Code::Valid: return "valid";
    case StepVerdict::Code::ParentNotDerived: return "parent_not_derived";
    case StepVerdict::Code::ArityMismatch: return "arity_mismatch";
    case StepVerdict::Code::InvalidSite: return "invalid_site";
    case StepVerdict::Code::SchemaMismatch: return "schema_mismatch";
  }
  return "?";
}

std::string_view hint_reason_name(HintVerdict::Reason reason) {
  switch (reason) {
    case HintVerdict::Reason::None: return "correct";
    case HintVerdict::Reason::MissingParents: return "missing_parents";
    case HintVerdict::Reason::Illogical: return "illogical";
    case HintVerdict::Reason::Duplicate: return "duplicate";
  }
  return "?";
}

HintVerdict validate_hint(const Pss& state, const Hint& hint) {
  Workspace ws = replay(state);
  for (const auto& ref : hint.step.parents) {
    if (!ws.lookup(ref)) {
      return {HintVerdict::Reason::MissingParents, "parent " + to_string(ref) + " is not derived yet"};
    }
  }
  StepVerdict v = ws.check(hint.step);
  if (!v.valid()) return {HintVerdict::Reason::Illogical, v.reason};
  if (ws.contains_statement(hint.step.formula)) {
    return {HintVerdict::Reason::Duplicate, "'" + to_string(hint.step.formula) + "' is already present"};
  }
  return {};
}

std::vector<std::size_t> redundant_steps(const Pss& state) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < state.derived.size(); ++i) {
    const Formula& f = state.derived[i].formula;
    bool dup = false;
    for (const auto& p : state.problem.premises) dup = dup || p == f;
    for (std::size_t j = 0; j < i && !dup; ++j) dup = state.derived[j].formula == f;
    if (dup) out.push_back(i);
  }
  return out;
}

}  // namespace logichint
