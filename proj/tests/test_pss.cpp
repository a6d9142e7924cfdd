#include <doctest.h>

#include <set>
#include <sstream>

#include "logichint/pss.hpp"
#include "logichint/search.hpp"
#include "support.hpp"

using namespace logichint;
using logichint::testing::F;

namespace {

Problem sample() {
  Problem p;
  p.id = "train1-01";
  p.premises = {F("A -> B"), F("B -> C"), F("A")};
  p.conclusion = F("C");
  return p;
}

InteractionLog parse(const std::string& text) {
  std::istringstream in(text);
  return parse_event_log(in);
}

std::string header() { return start_event_json(sample(), 0.0).dump() + "\n"; }

const char* kDeriveB = R"({"event":"derive","formula":"B","rule":"MP","parents":["P1","P3"],"t":1})";
const char* kDeriveC = R"({"event":"derive","formula":"C","rule":"MP","parents":["P2","S1"],"t":2})";

}  // namespace

TEST_CASE("extract_states: one state per derive") {
  auto log = parse(header() + kDeriveB + "\n" + kDeriveC + "\n" +
                   R"({"event":"derive","formula":"A | D","rule":"Add","parents":["P3"],"t":3})" + "\n");
  auto states = extract_states(log);
  REQUIRE(states.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(states[i].derived.size() == i + 1);
    CHECK(states[i].order == i + 1);
    for (const auto& v : check_state(states[i])) CHECK(v.valid());
  }
  CHECK(*states[2].timestamp == 3.0);
}

TEST_CASE("extract_states: deduplicates identical snapshots") {
  auto log = parse(header() + kDeriveB + "\n" + R"({"event":"delete","step":1,"t":1.5})" + "\n" +
                   R"({"event":"derive","formula":"B","rule":"MP","parents":["P1","P3"],"t":2})" + "\n" +
                   R"({"event":"hint_request","t":2.5})" + "\n");
  auto states = extract_states(log);
  REQUIRE(states.size() == 2);
  CHECK(states[0].derived.size() == 1);
  CHECK(states[1].derived.empty());
  CHECK(states.size() <= log.events.size() + 1);
}

TEST_CASE("extract_states: empty log gives the initial state") {
  auto states = extract_states(parse(header()));
  REQUIRE(states.size() == 1);
  CHECK(states[0].derived.empty());
  CHECK(states[0].order == 0);
}

TEST_CASE("delete cascades to dependants and renumbers") {
  auto log = parse(header() + kDeriveB + "\n" +
                   R"({"event":"derive","formula":"A & A","rule":"Conj","parents":["P3","P3"],"t":1.2})" + "\n" +
                   R"({"event":"derive","formula":"C","rule":"MP","parents":["P2","S1"],"t":2})" + "\n" +
                   R"({"event":"derive","formula":"C | A","rule":"Add","parents":["S3"],"t":2.1})" + "\n" +
                   R"({"event":"derive","formula":"A | B","rule":"Add","parents":["P3"],"t":2.2})" + "\n" +
                   R"({"event":"delete","step":1,"t":3})" + "\n");
  auto final_steps = replay(log, sample());
  REQUIRE(final_steps.size() == 2);
  CHECK(final_steps[0].formula == F("A & A"));
  CHECK(final_steps[1].formula == F("A | B"));
  CHECK(final_steps[1].index == 2);

  auto chained = parse(header() + kDeriveB + "\n" +
                       R"({"event":"derive","formula":"A & A","rule":"Conj","parents":["P3","P3"],"t":1.2})" + "\n" +
                       R"({"event":"derive","formula":"A & A & B","rule":"Conj","parents":["S2","S1"],"t":2})" +
                       "\n" + R"({"event":"delete","step":2,"t":3})" + "\n");
  auto left = replay(chained, sample());
  REQUIRE(left.size() == 1);
  CHECK(left[0].formula == F("B"));
}

TEST_CASE("unresolvable references carry the event index") {
  auto bad_parent = parse(header() + kDeriveB + "\n" +
                          R"({"event":"derive","formula":"C","rule":"MP","parents":["P2","S4"],"t":2})" + "\n");
  try {
    extract_states(bad_parent);
    FAIL("expected LogError");
  } catch (const LogError& e) {
    CHECK(e.event_index() == 1);
    CHECK(std::string(e.what()).find("S4") != std::string::npos);
  }
  auto bad_delete = parse(header() + R"({"event":"delete","step":1,"t":1})" + "\n");
  CHECK_THROWS_AS(extract_states(bad_delete), LogError);
  CHECK_THROWS_AS(parse(header() + R"({"event":"derive","formula":"B","rule":"MP","t":5})" + "\n" +
                        R"({"event":"hint_request","t":4})" + "\n"),
                  LogError);
  CHECK_THROWS_AS(parse(kDeriveB), LogError);
  try {
    parse(header() + "\n{oops\n");
    FAIL("expected LogError");
  } catch (const LogError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("invalid student steps are kept and marked") {
  auto log = parse(header() + R"({"event":"derive","formula":"C","rule":"MP","parents":["P1","P3"],"t":1})" + "\n");
  auto states = extract_states(log);
  REQUIRE(states.size() == 1);
  Json rec = pss_record_json(states[0]);
  CHECK(rec["verdicts"][0]["verdict"] == "schema_mismatch");
  CHECK(pss_from_record_json(rec).derived.size() == 1);
}

TEST_CASE("render template") {
  Pss empty{sample(), {}, 0, {}};
  CHECK(render(empty) == "Givens:\nP1: A -> B\nP2: B -> C\nP3: A\nGoal: C\n");
  auto states = extract_states(parse(header() + kDeriveB + "\n"));
  std::string text = render(states[0]);
  CHECK(text.find("Derived:\nS1: B [MP from P1, P3]\n") != std::string::npos);
  CHECK(text.find("Goal: C") != std::string::npos);

  ProofStep rewrite;
  rewrite.formula = F("~A | B");
  rewrite.rule = RuleId::Impl;
  rewrite.parents = {ParentRef::premise(1)};
  rewrite.site = SitePath{};
  rewrite.direction = Direction::Forward;
  Pss with_site{sample(), {rewrite}, 1, {}};
  CHECK(render(with_site).find("S1: ~A | B [Impl from P1; site root; forward]") != std::string::npos);
}

TEST_CASE("property: render is injective and parse-back is the identity") {
  std::mt19937_64 rng(404);
  Problem p = sample();
  std::vector<Pss> states;
  for (int i = 0; i < 400; ++i) {
    Pss s{p, {}, 0, {}};
    int n = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int k = 0; k < n; ++k) {
      ProofStep step;
      step.formula = logichint::testing::random_formula(rng, 3, 3);
      step.rule = kAllRules[std::uniform_int_distribution<std::size_t>(0, kAllRules.size() - 1)(rng)];
      int parents = std::uniform_int_distribution<int>(0, 2)(rng);
      for (int q = 0; q < parents; ++q) {
        bool prem = k == 0 || std::uniform_int_distribution<int>(0, 1)(rng) == 0;
        step.parents.push_back(prem ? ParentRef::premise(std::uniform_int_distribution<std::size_t>(1, 3)(rng))
                                    : ParentRef::step(std::uniform_int_distribution<std::size_t>(1, k)(rng)));
      }
      if (rule_kind(step.rule) == RuleKind::Replacement && std::uniform_int_distribution<int>(0, 1)(rng)) {
        auto sites = all_sites(step.formula);
        step.site = sites[std::uniform_int_distribution<std::size_t>(0, sites.size() - 1)(rng)];
        step.direction = std::uniform_int_distribution<int>(0, 1)(rng) ? Direction::Forward : Direction::Backward;
      }
      step.index = static_cast<std::size_t>(k) + 1;
      s.derived.push_back(step);
    }
    states.push_back(std::move(s));
  }
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::string text = render(states[i]);
    Pss back = parse_pss_text(text);
    CHECK(back.problem.premises == states[i].problem.premises);
    CHECK(back.problem.conclusion == states[i].problem.conclusion);
    REQUIRE(back.derived.size() == states[i].derived.size());
    for (std::size_t k = 0; k < back.derived.size(); ++k) {
      CHECK(back.derived[k].formula == states[i].derived[k].formula);
      CHECK(back.derived[k].rule == states[i].derived[k].rule);
      CHECK(back.derived[k].parents == states[i].derived[k].parents);
      CHECK(back.derived[k].site == states[i].derived[k].site);
      CHECK(back.derived[k].direction == states[i].derived[k].direction);
    }
    auto [it, fresh] = seen.emplace(text, i);
    if (!fresh) {
      // A collision is only allowed for states with identical content.
      CHECK(pss_to_json(states[it->second])["derived"] == pss_to_json(states[i])["derived"]);
    }
  }
  CHECK_THROWS_AS(parse_pss_text("Givens:\nP1: A\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_pss_text("Givens:\nP2: A\nGoal: B\n"), std::invalid_argument);
}

TEST_CASE("event log round trip") {
  auto log = parse(header() + kDeriveB + "\n" + R"({"event":"hint_request","t":1.5,"source":"search"})" + "\n" +
                   R"({"event":"delete","step":1,"t":2})" + "\n");
  std::ostringstream out;
  write_event_log(out, log);
  auto again = parse(out.str());
  REQUIRE(again.events.size() == 3);
  CHECK(again.events[1].extra["source"] == "search");
  CHECK(again.events[2].target == 1);
  std::ostringstream out2;
  write_event_log(out2, again);
  CHECK(out.str() == out2.str());
}

TEST_CASE("states along a search proof replay as valid prefixes") {
  auto r = solve(sample());
  REQUIRE(r.status == SearchStatus::Found);
  InteractionLog log{sample().id, sample(), {}};
  double t = 0;
  for (const auto& s : r.proof->steps) {
    LogEvent e;
    e.kind = LogEvent::Kind::Derive;
    e.step = s;
    e.t = ++t;
    log.events.push_back(e);
  }
  auto states = extract_states(log);
  CHECK(states.size() == r.proof->steps.size());
  for (const auto& st : states) {
    Proof prefix{st.problem, st.derived, ProofMode::Direct};
    CHECK(check_proof(prefix).valid_steps == st.derived.size());
  }
}
