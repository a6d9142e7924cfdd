#include <doctest.h>

#include "logichint/json_io.hpp"
#include "logichint/proof.hpp"
#include "support.hpp"

using namespace logichint;
using logichint::testing::F;

namespace {

Problem problem(std::vector<const char*> premises, const char* conclusion, Level level = Level::Train1) {
  Problem p;
  p.id = "t";
  for (auto s : premises) p.premises.push_back(F(s));
  p.conclusion = F(conclusion);
  p.level = level;
  return p;
}

ProofStep step(const char* formula, RuleId rule, std::vector<const char*> parents) {
  ProofStep s;
  s.formula = F(formula);
  s.rule = rule;
  for (auto r : parents) s.parents.push_back(*parse_parent_ref(r));
  return s;
}

}  // namespace

TEST_CASE("parent references") {
  CHECK(to_string(ParentRef::premise(3)) == "P3");
  CHECK(parse_parent_ref("S12") == ParentRef::step(12));
  CHECK(parse_parent_ref("S0") == ParentRef::step(0));
  CHECK_FALSE(parse_parent_ref("P0"));
  CHECK_FALSE(parse_parent_ref("X1"));
  CHECK_FALSE(parse_parent_ref("P1a"));
}

TEST_CASE("problem invariants") {
  CHECK_THROWS_AS(check_problem_invariants(problem({"P"}, "P")), std::invalid_argument);
  Problem empty = problem({"P"}, "Q");
  empty.premises.clear();
  CHECK_THROWS_AS(check_problem_invariants(empty), std::invalid_argument);
  CHECK(problem({"A -> B", "C"}, "B").signature() == std::set<std::string>{"A", "B", "C"});
  CHECK(level_allows_hints(Level::Train3));
  CHECK_FALSE(level_allows_hints(Level::Posttest));
  CHECK_FALSE(level_allows_hints(Level::Pretest));
}

TEST_CASE("check_step") {
  Pss s{problem({"P -> Q", "P"}, "Q"), {}, 0, {}};
  CHECK(check_step(s, step("Q", RuleId::MP, {"P1", "P2"})).valid());
  auto v = check_step(s, step("Q", RuleId::MP, {"S5", "P2"}));
  CHECK(v.code == StepVerdict::Code::ParentNotDerived);
  CHECK(v.reason == "parent not derived");
  Pss single{problem({"P"}, "Q"), {}, 0, {}};
  CHECK(check_step(single, step("Q", RuleId::MP, {"P1", "P1"})).code == StepVerdict::Code::SchemaMismatch);
  CHECK(check_step(s, step("Q", RuleId::MP, {"P1"})).code == StepVerdict::Code::ArityMismatch);
}

TEST_CASE("check_proof") {
  Proof proof{problem({"A -> B", "B -> C", "A"}, "C"),
              {step("B", RuleId::MP, {"P1", "P3"}), step("C", RuleId::MP, {"P2", "S1"})},
              ProofMode::Direct};
  auto r = check_proof(proof);
  CHECK(r.complete);
  REQUIRE(r.stepwise_accuracy);
  CHECK(*r.stepwise_accuracy == 1.0);
  // Every statement of the proof is entailed by the premises.
  for (const auto& s : proof.steps) CHECK(logichint::testing::oracle_entails(proof.problem.premises, s.formula));
  // Prefixes stay all-valid.
  Proof prefix = proof;
  prefix.steps.pop_back();
  auto pr = check_proof(prefix);
  CHECK(pr.valid_steps == 1);
  CHECK_FALSE(pr.complete);

  Proof empty{proof.problem, {}, ProofMode::Direct};
  auto er = check_proof(empty);
  CHECK_FALSE(er.stepwise_accuracy);
  CHECK_FALSE(er.complete);

  Proof half{proof.problem, {step("B", RuleId::MP, {"P1", "P3"}), step("A", RuleId::MP, {"P1", "S1"})},
             ProofMode::Direct};
  auto hr = check_proof(half);
  CHECK(*hr.stepwise_accuracy == doctest::Approx(0.5));
}

TEST_CASE("invalid steps do not become available") {
  Proof proof{problem({"A -> B", "B -> C", "A"}, "C"),
              {step("B", RuleId::MT, {"P1", "P3"}), step("C", RuleId::MP, {"P2", "S1"})},
              ProofMode::Direct};
  auto r = check_proof(proof);
  CHECK_FALSE(r.verdicts[0].valid());
  CHECK(r.verdicts[1].code == StepVerdict::Code::ParentNotDerived);
  // Self and forward references are never resolvable.
  Proof forward{proof.problem, {step("B", RuleId::MP, {"P1", "S1"})}, ProofMode::Direct};
  CHECK(check_proof(forward).verdicts[0].code == StepVerdict::Code::ParentNotDerived);
}

TEST_CASE("indirect proofs reach the contradiction constant") {
  Proof proof{problem({"A -> B", "A"}, "B"),
              {step("B", RuleId::MP, {"P1", "P2"}), step("0", RuleId::Contra, {"S1", "S0"})},
              ProofMode::Indirect};
  auto r = check_proof(proof);
  CHECK(r.complete);
  CHECK(r.valid_steps == 2);
  proof.mode = ProofMode::Direct;
  CHECK(check_proof(proof).verdicts[1].code == StepVerdict::Code::ParentNotDerived);
}

TEST_CASE("validate_hint applies the three criteria in order") {
  Problem p = problem({"A -> B", "A", "B -> C"}, "C");
  Pss s{p, {step("B", RuleId::MP, {"P1", "P2"})}, 1, {}};
  CHECK(validate_hint(s, Hint{step("B", RuleId::MP, {"P1", "P2"}), ""}).reason == HintVerdict::Reason::Duplicate);
  CHECK(validate_hint(s, Hint{step("A", RuleId::Simp, {"P2"}), ""}).reason == HintVerdict::Reason::Illogical);
  CHECK(validate_hint(s, Hint{step("C", RuleId::MP, {"P3", "S4"}), ""}).reason ==
        HintVerdict::Reason::MissingParents);
  // Missing parents wins over illogical, illogical over duplicate.
  CHECK(validate_hint(s, Hint{step("B", RuleId::DS, {"S9"}), ""}).reason == HintVerdict::Reason::MissingParents);
  CHECK(validate_hint(s, Hint{step("B", RuleId::DS, {"P1", "P2"}), ""}).reason == HintVerdict::Reason::Illogical);
  Hint good{step("C", RuleId::MP, {"P3", "S1"}), ""};
  CHECK(validate_hint(s, good).correct());
  CHECK(check_step(s, good.step).valid());

  // Monotonicity: extending the state with other statements keeps it correct.
  Pss extended = s;
  extended.derived.push_back(step("A | C", RuleId::Add, {"P2"}));
  CHECK(validate_hint(extended, good).correct());
}

TEST_CASE("redundant statements are flagged, not rejected") {
  Problem p = problem({"A -> B", "A"}, "B | C");
  Pss s{p, {step("B", RuleId::MP, {"P1", "P2"}), step("B", RuleId::MP, {"P1", "P2"})}, 2, {}};
  CHECK(redundant_steps(s) == std::vector<std::size_t>{1});
  auto verdicts = check_state(s);
  CHECK(verdicts[0].valid());
  CHECK(verdicts[1].valid());
}

TEST_CASE("json round trip") {
  Proof proof{problem({"A -> B", "~(A & C)"}, "B | C"),
              {step("B", RuleId::MP, {"P1", "S0"})},
              ProofMode::Indirect};
  proof.steps[0].index = 1;
  ProofStep dem = step("~A | ~C", RuleId::DeM, {"P2"});
  dem.index = 2;
  dem.site = SitePath{};
  dem.direction = Direction::Forward;
  proof.steps.push_back(dem);
  Json j = proof_to_json(proof);
  CHECK(j["schema"] == "logichint/v1");
  Proof back = proof_from_json(j);
  CHECK(proof_to_json(back) == j);
  CHECK(back.steps[1].site == SitePath{});

  CHECK_THROWS_AS(problem_from_json(Json{{"id", "x"}, {"level", "train1"}, {"premises", {"P"}}}), SchemaError);
  CHECK_THROWS_AS(problem_from_json(Json{{"id", "x"}, {"level", "train9"}, {"premises", {"P"}}, {"conclusion", "Q"}}),
                  SchemaError);
  CHECK_THROWS_AS(step_from_json(Json{{"formula", "P"}, {"rule", "Magic"}}, 1), SchemaError);
  CHECK_THROWS_AS(step_from_json(Json{{"formula", "P"}, {"rule", "MP"}, {"parents", {"Q1"}}}, 1), SchemaError);
  CHECK_THROWS_AS(step_from_json(Json{{"formula", "P &"}, {"rule", "MP"}}, 1), ParseError);
}
