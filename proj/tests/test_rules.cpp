#include <doctest.h>

#include <map>

#include "logichint/rules.hpp"
#include "support.hpp"

using namespace logichint;
using logichint::testing::F;

namespace {

RuleApplication app(RuleId rule, std::vector<Formula> parents, Formula result) {
  RuleApplication a;
  a.rule = rule;
  a.parents = std::move(parents);
  a.result = std::move(result);
  return a;
}

bool valid(RuleId rule, std::vector<const char*> parents, const char* result) {
  std::vector<Formula> ps;
  for (auto p : parents) ps.push_back(F(p));
  return validate_application(app(rule, std::move(ps), F(result))).ok();
}

}  // namespace

TEST_CASE("rule catalogue") {
  CHECK(kAllRules.size() == 14);
  std::size_t replacement = 0;
  for (RuleId r : kAllRules) {
    CHECK(rule_from_name(rule_name(r)) == r);
    if (rule_kind(r) == RuleKind::Replacement) ++replacement;
  }
  CHECK(replacement == 5);
  CHECK(rule_kind(RuleId::Contra) == RuleKind::Inference);
  CHECK(rule_arity(RuleId::CD) == 3);
  CHECK(rule_arity(RuleId::Contra) == 2);
  CHECK(rule_arity(RuleId::DN) == 1);
  CHECK_FALSE(rule_from_name("Taut"));
}

TEST_CASE("inference schemas") {
  CHECK(valid(RuleId::MP, {"P -> Q", "P"}, "Q"));
  CHECK(valid(RuleId::MP, {"P", "P -> Q"}, "Q"));
  CHECK_FALSE(valid(RuleId::MP, {"P -> Q", "Q"}, "P"));
  CHECK(valid(RuleId::MT, {"P -> Q", "~Q"}, "~P"));
  CHECK_FALSE(valid(RuleId::MT, {"P -> Q", "~P"}, "~Q"));
  CHECK(valid(RuleId::DS, {"P | Q", "~P"}, "Q"));
  CHECK_FALSE(valid(RuleId::DS, {"P | Q", "~Q"}, "P"));  // no implicit commutation
  CHECK(valid(RuleId::HS, {"P -> Q", "Q -> R"}, "P -> R"));
  CHECK(valid(RuleId::HS, {"Q -> R", "P -> Q"}, "P -> R"));
  CHECK_FALSE(valid(RuleId::HS, {"P -> Q", "Q -> R"}, "R -> P"));
  CHECK(valid(RuleId::Simp, {"P & Q"}, "P"));
  CHECK_FALSE(valid(RuleId::Simp, {"P & Q"}, "Q"));
  CHECK(valid(RuleId::Conj, {"P", "Q"}, "P & Q"));
  CHECK(valid(RuleId::Conj, {"P", "Q"}, "Q & P"));
  CHECK(valid(RuleId::Add, {"P"}, "P | Q"));
  CHECK(valid(RuleId::Add, {"P"}, "Q | P"));
  CHECK_FALSE(valid(RuleId::Add, {"P"}, "Q | R"));
  CHECK(valid(RuleId::CD, {"P -> Q", "R -> S", "P | R"}, "Q | S"));
  CHECK(valid(RuleId::CD, {"P | R", "R -> S", "P -> Q"}, "Q | S"));
  CHECK_FALSE(valid(RuleId::CD, {"P -> Q", "R -> S", "P | R"}, "S | Q & Q"));
  CHECK(valid(RuleId::Contra, {"P", "~P"}, "0"));
  CHECK(valid(RuleId::Contra, {"~(A & B)", "A & B"}, "0"));
  CHECK_FALSE(valid(RuleId::Contra, {"P", "~Q"}, "0"));
}

TEST_CASE("replacement schemas at any site, both directions") {
  CHECK(valid(RuleId::DeM, {"~(P & Q)"}, "~P | ~Q"));
  CHECK(valid(RuleId::DeM, {"~P | ~Q"}, "~(P & Q)"));
  CHECK(valid(RuleId::DeM, {"~(P | Q)"}, "~P & ~Q"));
  CHECK(valid(RuleId::DeM, {"R -> ~(P | Q)"}, "R -> ~P & ~Q"));
  CHECK(valid(RuleId::Com, {"A & (B | C)"}, "A & (C | B)"));
  CHECK(valid(RuleId::Impl, {"P -> Q"}, "~P | Q"));
  CHECK(valid(RuleId::Impl, {"~P | Q"}, "P -> Q"));
  CHECK(valid(RuleId::DN, {"~~P & Q"}, "P & Q"));
  CHECK(valid(RuleId::DN, {"P & Q"}, "P & ~~Q"));
  CHECK(valid(RuleId::CP, {"P -> Q"}, "~Q -> ~P"));
  CHECK(valid(RuleId::CP, {"~Q -> ~P"}, "P -> Q"));
  CHECK_FALSE(valid(RuleId::Impl, {"P -> Q"}, "P | ~Q"));
  CHECK_FALSE(valid(RuleId::DN, {"P & Q"}, "P & Q"));
}

TEST_CASE("explicit site and direction are honoured") {
  auto a = app(RuleId::DeM, {F("~(P & Q) & R")}, F("(~P | ~Q) & R"));
  a.site = SitePath{0};
  CHECK(validate_application(a).ok());
  a.site = SitePath{1};
  CHECK(validate_application(a).code == ValidationResult::Code::SchemaMismatch);
  a.site = SitePath{0, 0, 1, 1};
  CHECK(validate_application(a).code == ValidationResult::Code::InvalidSite);
  a.site = SitePath{0};
  a.direction = Direction::Backward;
  CHECK_FALSE(validate_application(a).ok());

  auto found = validate_application(app(RuleId::DeM, {F("~(P & Q) & R")}, F("(~P | ~Q) & R")));
  REQUIRE(found.ok());
  CHECK(found.matched_site == SitePath{0});
  CHECK(found.matched_direction == Direction::Forward);
}

TEST_CASE("errors and diagnoses") {
  auto r = validate_application(app(RuleId::MP, {F("P -> Q")}, F("Q")));
  CHECK(r.code == ValidationResult::Code::ArityMismatch);
  r = validate_application(app(RuleId::MP, {F("P -> Q"), F("Q")}, F("P")));
  CHECK(r.code == ValidationResult::Code::SchemaMismatch);
  CHECK(r.diagnosis.find("antecedent") != std::string::npos);
  auto contra_back = app(RuleId::Contra, {F("0"), F("0")}, F("P & ~P"));
  CHECK_FALSE(validate_application(contra_back).ok());
  auto inference_site = app(RuleId::Simp, {F("P & Q")}, F("P"));
  inference_site.site = SitePath{0};
  CHECK(validate_application(inference_site).code == ValidationResult::Code::InvalidSite);
}

TEST_CASE("enumeration over {P -> Q, P}") {
  // Expected tallies were scripted independently from the rule schemas.
  std::vector<Formula> known{F("P -> Q"), F("P")};
  AdditionPool pool;
  pool.signature = {"P", "Q"};
  auto e = enumerate_applications(known, pool);
  CHECK_FALSE(e.truncated);
  std::map<RuleId, int> counts;
  for (const auto& a : e.applications) ++counts[a.app.rule];
  CHECK(e.applications.size() == 19);
  CHECK(counts[RuleId::MP] == 1);
  CHECK(counts[RuleId::Conj] == 4);
  CHECK(counts[RuleId::Add] == 8);
  CHECK(counts[RuleId::Impl] == 1);
  CHECK(counts[RuleId::DN] == 4);
  CHECK(counts[RuleId::CP] == 1);
  CHECK(counts[RuleId::Com] == 0);
  CHECK(e.applications.front().app.rule == RuleId::MP);
  CHECK(e.applications.front().app.result == F("Q"));
  bool has_conj = false;
  for (const auto& a : e.applications) has_conj = has_conj || a.app.result == F("(P -> Q) & P");
  CHECK(has_conj);
}

TEST_CASE("enumeration finds Contra and conclusion-driven Addition") {
  auto e = enumerate_applications({F("P"), F("~P")}, AdditionPool{{"P"}, std::nullopt});
  bool contra = false;
  for (const auto& a : e.applications) contra = contra || (a.app.rule == RuleId::Contra && a.app.result.is_false());
  CHECK(contra);

  e = enumerate_applications({F("A")}, AdditionPool{{"A"}, F("A | B")});
  bool offered = false;
  for (const auto& a : e.applications) offered = offered || (a.app.rule == RuleId::Add && a.app.result == F("A | B"));
  CHECK(offered);
}

TEST_CASE("enumeration is ordered, limited and closed under validation") {
  std::vector<Formula> known{F("A -> B"), F("~B"), F("A | C"), F("~(A & ~C)"), F("C -> D")};
  AdditionPool pool{{"A", "B", "C", "D"}, F("~A & D")};
  auto e = enumerate_applications(known, pool);
  REQUIRE_FALSE(e.truncated);
  for (std::size_t i = 0; i < e.applications.size(); ++i) {
    const auto& a = e.applications[i];
    CHECK(validate_application(a.app).ok());
    CHECK(a.app.result.length() <= 25);
    if (i > 0) {
      const auto& prev = e.applications[i - 1];
      bool ordered = prev.app.rule < a.app.rule ||
                     (prev.app.rule == a.app.rule && prev.parent_indices <= a.parent_indices);
      CHECK(ordered);
    }
  }
  auto capped = enumerate_applications(known, pool, EnumLimits{25, 10});
  CHECK(capped.truncated);
  CHECK(capped.applications.size() == 10);
  auto short_only = enumerate_applications(known, pool, EnumLimits{3, 20000});
  for (const auto& a : short_only.applications) CHECK(a.app.result.length() <= 3);
}

TEST_CASE("property: random applications validate and are truth-table sound") {
  std::mt19937_64 rng(20241);
  for (RuleId rule : kAllRules) {
    for (int i = 0; i < 60; ++i) {
      auto a = logichint::testing::random_application(rng, rule);
      INFO(rule_name(rule), " ", to_string(a.result));
      REQUIRE(validate_application(a).ok());
      CHECK(logichint::testing::application_is_sound(a));
      if (rule_kind(rule) == RuleKind::Replacement) {
        CHECK(logichint::testing::oracle_equivalent(a.parents[0], a.result));
        // The reverse rewrite validates as the opposite direction.
        auto back = a;
        std::swap(back.parents[0], back.result);
        back.direction = *a.direction == Direction::Forward ? Direction::Backward : Direction::Forward;
        CHECK(validate_application(back).ok());
      }
    }
  }
}

TEST_CASE("property: enumerated applications validate") {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 30; ++round) {
    std::vector<Formula> known;
    for (int i = 0; i < 3; ++i) known.push_back(logichint::testing::random_formula(rng, 3, 3, false));
    auto e = enumerate_applications(known, AdditionPool{{"A", "B"}, known.back()});
    for (const auto& a : e.applications) {
      REQUIRE(validate_application(a.app).ok());
      CHECK(logichint::testing::application_is_sound(a.app));
    }
  }
}
