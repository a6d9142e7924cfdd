#pragma once

// Test-only generators and oracles. The truth-table oracle here walks
// assignments through `evaluate` and never touches the search module.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "logichint/formula.hpp"

namespace logichint::testing {

inline Formula F(const char* text) { return parse_formula(text); }

inline Formula random_formula(std::mt19937_64& rng, int max_depth, int atom_count, bool allow_false = true) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> atom(0, atom_count - 1);
  auto leaf = [&] {
    if (allow_false && pick(rng) == 0) return Formula::falsum();
    return Formula::atom(std::string(1, static_cast<char>('A' + atom(rng))));
  };
  if (max_depth <= 1) return leaf();
  switch (pick(rng)) {
    case 0:
    case 1: return leaf();
    case 2:
    case 3: return Formula::negation(random_formula(rng, max_depth - 1, atom_count, allow_false));
    case 4:
    case 5:
      return Formula::conjunction(random_formula(rng, max_depth - 1, atom_count, allow_false),
                                  random_formula(rng, max_depth - 1, atom_count, allow_false));
    case 6:
    case 7:
      return Formula::disjunction(random_formula(rng, max_depth - 1, atom_count, allow_false),
                                  random_formula(rng, max_depth - 1, atom_count, allow_false));
    default:
      return Formula::implication(random_formula(rng, max_depth - 1, atom_count, allow_false),
                                  random_formula(rng, max_depth - 1, atom_count, allow_false));
  }
}

inline std::vector<Assignment> all_assignments(const std::set<std::string>& atoms) {
  std::vector<std::string> names(atoms.begin(), atoms.end());
  std::vector<Assignment> out;
  for (unsigned long mask = 0; mask < (1UL << names.size()); ++mask) {
    Assignment a;
    for (std::size_t i = 0; i < names.size(); ++i) a[names[i]] = (mask >> i) & 1UL;
    out.push_back(std::move(a));
  }
  return out;
}

inline std::set<std::string> atoms_of(const std::vector<Formula>& fs) {
  std::set<std::string> out;
  for (const auto& f : fs) collect_atoms(f, out);
  return out;
}

/// Every assignment satisfying all premises satisfies the goal.
inline bool oracle_entails(const std::vector<Formula>& premises, const Formula& goal) {
  auto atoms = atoms_of(premises);
  collect_atoms(goal, atoms);
  for (const auto& a : all_assignments(atoms)) {
    bool all = true;
    for (const auto& p : premises) all = all && evaluate(p, a);
    if (all && !evaluate(goal, a)) return false;
  }
  return true;
}

inline bool oracle_unsat(const std::vector<Formula>& fs) {
  for (const auto& a : all_assignments(atoms_of(fs))) {
    bool all = true;
    for (const auto& p : fs) all = all && evaluate(p, a);
    if (all) return false;
  }
  return true;
}

inline bool oracle_equivalent(const Formula& a, const Formula& b) {
  return oracle_entails({a}, b) && oracle_entails({b}, a);
}

}  // namespace logichint::testing

#include "logichint/rules.hpp"

namespace logichint::testing {

/// Builds a schema instance of `rule` from random metavariable bindings.
/// Replacement rules are embedded at a random site of a random host.
inline RuleApplication random_application(std::mt19937_64& rng, RuleId rule) {
  auto meta = [&] { return random_formula(rng, 3, 4, false); };
  Formula p = meta(), q = meta(), r = meta(), s = meta();
  RuleApplication app;
  app.rule = rule;
  auto N = [](const Formula& f) { return Formula::negation(f); };
  auto I = [](const Formula& a, const Formula& b) { return Formula::implication(a, b); };
  auto O = [](const Formula& a, const Formula& b) { return Formula::disjunction(a, b); };
  auto C = [](const Formula& a, const Formula& b) { return Formula::conjunction(a, b); };
  bool flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  switch (rule) {
    case RuleId::MP: app.parents = {I(p, q), p}; app.result = q; break;
    case RuleId::MT: app.parents = {I(p, q), N(q)}; app.result = N(p); break;
    case RuleId::DS: app.parents = {O(p, q), N(p)}; app.result = q; break;
    case RuleId::HS: app.parents = {I(p, q), I(q, r)}; app.result = I(p, r); break;
    case RuleId::Simp: app.parents = {C(p, q)}; app.result = p; break;
    case RuleId::Conj: app.parents = {p, q}; app.result = C(p, q); break;
    case RuleId::Add: app.parents = {p}; app.result = flip ? O(q, p) : O(p, q); break;
    case RuleId::CD: app.parents = {I(p, q), I(r, s), O(p, r)}; app.result = O(q, s); break;
    case RuleId::Contra: app.parents = {p, N(p)}; app.result = Formula::falsum(); break;
    default: {
      Formula before, after;
      switch (rule) {
        case RuleId::Com: before = flip ? C(p, q) : O(p, q); after = flip ? C(q, p) : O(q, p); break;
        case RuleId::DeM:
          before = flip ? N(C(p, q)) : N(O(p, q));
          after = flip ? O(N(p), N(q)) : C(N(p), N(q));
          break;
        case RuleId::Impl: before = I(p, q); after = O(N(p), q); break;
        case RuleId::DN: before = N(N(p)); after = p; break;
        default: before = I(p, q); after = I(N(q), N(p)); break;  // CP
      }
      bool backward = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
      if (backward) std::swap(before, after);
      Formula host = random_formula(rng, 3, 4, false);
      auto sites = all_sites(host);
      SitePath site = sites[std::uniform_int_distribution<std::size_t>(0, sites.size() - 1)(rng)];
      app.parents = {replace_at(host, site, before)};
      app.result = replace_at(host, site, after);
      app.site = site;
      app.direction = backward ? Direction::Backward : Direction::Forward;
      break;
    }
  }
  if (rule_kind(rule) == RuleKind::Inference && app.parents.size() > 1) {
    std::shuffle(app.parents.begin(), app.parents.end(), rng);
  }
  return app;
}

/// Truth-table soundness check of one application. Contra is sound when its
/// parents are jointly unsatisfiable.
inline bool application_is_sound(const RuleApplication& app) {
  if (app.rule == RuleId::Contra) return oracle_unsat(app.parents);
  return oracle_entails(app.parents, app.result);
}

}  // namespace logichint::testing
