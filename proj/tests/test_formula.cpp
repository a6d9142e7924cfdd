#include <doctest.h>

#include "logichint/formula.hpp"
#include "support.hpp"

using namespace logichint;
using logichint::testing::F;

namespace {
Formula A(const char* n) { return Formula::atom(n); }
}  // namespace

TEST_CASE("parse follows precedence and associativity") {
  CHECK(F("(P -> Q) & P") == Formula::conjunction(Formula::implication(A("P"), A("Q")), A("P")));
  CHECK(F("~~A") == Formula::negation(Formula::negation(A("A"))));
  CHECK(F("A -> B -> C") == Formula::implication(A("A"), Formula::implication(A("B"), A("C"))));
  CHECK(F("A & B & C") == Formula::conjunction(Formula::conjunction(A("A"), A("B")), A("C")));
  CHECK(F("A | B & C") == Formula::disjunction(A("A"), Formula::conjunction(A("B"), A("C"))));
  CHECK(F("~A & B") == Formula::conjunction(Formula::negation(A("A")), A("B")));
  CHECK(F("A | B -> C") == Formula::implication(Formula::disjunction(A("A"), A("B")), A("C")));
  CHECK(F("  P\t&\nQ ") == F("P & Q"));
}

TEST_CASE("unicode aliases parse to the same tree") {
  CHECK(F("\xC2\xAC(P \xE2\x88\xA7 Q) \xE2\x86\x92 R \xE2\x88\xA8 \xE2\x8A\xA5") == F("~(P & Q) -> R | 0"));
}

TEST_CASE("parse errors carry offsets") {
  auto offset_of = [](const char* text) -> std::size_t {
    try {
      parse_formula(text);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return static_cast<std::size_t>(-1);
  };
  CHECK(offset_of("(P & Q") == 6);
  CHECK(offset_of("P & Q)") == 5);
  CHECK(offset_of("P $ Q") == 2);
  CHECK(offset_of("P - Q") == 2);
  CHECK(offset_of("P &") == 3);
  CHECK(offset_of("p") == 0);
  CHECK_THROWS_AS(parse_formula(""), ParseError);
  CHECK_THROWS_AS(parse_formula("   "), ParseError);
  CHECK_THROWS_WITH_AS(parse_formula("(P"), doctest::Contains("unbalanced"), ParseError);
  CHECK_THROWS_WITH_AS(parse_formula("P Q"), doctest::Contains("expected end of input"), ParseError);
}

TEST_CASE("print uses minimal parentheses") {
  CHECK(to_string(Formula::conjunction(A("P"), A("Q"))) == "P & Q");
  CHECK(to_string(Formula::negation(Formula::conjunction(A("P"), A("Q")))) == "~(P & Q)");
  CHECK(to_string(Formula::falsum()) == "0");
  CHECK(to_string(F("(A -> B) -> C")) == "(A -> B) -> C");
  CHECK(to_string(F("A -> (B -> C)")) == "A -> B -> C");
  CHECK(to_string(F("A & (B & C)")) == "A & (B & C)");
  CHECK(to_string(F("(A & B) & C")) == "A & B & C");
  CHECK(to_string(F("(A | B) & ~~C")) == "(A | B) & ~~C");
  CHECK(to_string(F("~(A -> B)")) == "~(A -> B)");
}

TEST_CASE("metrics count nodes and atoms") {
  auto m = metrics(A("P"));
  CHECK(m.length == 1);
  CHECK(m.varset == std::set<std::string>{"P"});
  m = metrics(Formula::implication(A("P"), A("Q")));
  CHECK(m.length == 3);
  CHECK(m.varset == std::set<std::string>{"P", "Q"});
  m = metrics(Formula::negation(Formula::conjunction(A("A"), A("B"))));
  CHECK(m.length == 4);
  CHECK(m.varset == std::set<std::string>{"A", "B"});
  m = metrics(F("0 & ~0"));
  CHECK(m.varset.empty());
}

TEST_CASE("evaluate") {
  CHECK_FALSE(evaluate(F("P -> Q"), {{"P", true}, {"Q", false}}));
  CHECK_FALSE(evaluate(Formula::falsum(), {}));
  CHECK(evaluate(F("P | ~P"), {{"P", false}}));
  CHECK_THROWS_WITH_AS(evaluate(F("P & Q"), {{"P", true}}), doctest::Contains("'Q'"), MissingVariable);
}

TEST_CASE("atom names are validated") {
  CHECK(is_valid_atom_name("Rain_2"));
  CHECK_FALSE(is_valid_atom_name("rain"));
  CHECK_FALSE(is_valid_atom_name(""));
  CHECK_THROWS_AS(Formula::atom("x"), std::invalid_argument);
}

TEST_CASE("sites and replacement") {
  Formula f = F("~(A & B) -> C");
  auto sites = all_sites(f);
  CHECK(sites.size() == f.length());
  CHECK(*subformula_at(f, {0, 0}) == F("A & B"));
  CHECK(subformula_at(f, {1, 0}) == nullptr);
  CHECK(replace_at(f, {0, 0}, F("D")) == F("~D -> C"));
  CHECK(subformulas(F("A & A")).size() == 2);
}

TEST_CASE("property: print/parse round trip, node count recursion, De Morgan semantics") {
  std::mt19937_64 rng(0x5eed);
  for (int i = 0; i < 2000; ++i) {
    Formula f = logichint::testing::random_formula(rng, 8, 6);
    REQUIRE(parse_formula(to_string(f)) == f);
    if (f.arity() > 0) {
      std::size_t sum = 1;
      for (std::size_t c = 0; c < f.arity(); ++c) sum += metrics(f.child(c)).length;
      CHECK(metrics(f).length == sum);
    }
  }
  for (int i = 0; i < 200; ++i) {
    Formula a = logichint::testing::random_formula(rng, 3, 3);
    Formula b = logichint::testing::random_formula(rng, 3, 3);
    Formula lhs = Formula::negation(Formula::conjunction(a, b));
    Formula rhs = Formula::disjunction(Formula::negation(a), Formula::negation(b));
    for (const auto& sigma : logichint::testing::all_assignments(logichint::testing::atoms_of({lhs}))) {
      CHECK(evaluate(lhs, sigma) == evaluate(rhs, sigma));
    }
  }
}
